"""Command-line entry point.

Exit codes: 0 success, 1 failed assertion, 2 usage, parse, configuration or
other simulator error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from neurocortex import __version__
from neurocortex.config import Settings, load_settings
from neurocortex.exceptions import NeurocortexError, ScenarioAssertionError
from neurocortex.harness.repl import InteractiveRepl
from neurocortex.harness.services import SimulationService
from neurocortex.harness.snapshot import describe, read_snapshot, save_snapshot, session_from_snapshot
from neurocortex.harness.trace import TRACE_FORMATS, TraceWriter
from neurocortex.logic import RuleBase, compile_rules, parse_rules, run_inference, truth_table
from neurocortex.models import TraceRow
from neurocortex.netcore import Network, step_network
from neurocortex.topology import build_sandglass_layers, find_kernel, parse_sandglass

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_ERROR = 2


def assertion_error_handler(exc: ScenarioAssertionError) -> int:
    print(f"FAILED: {exc.message}", file=sys.stderr)
    return EXIT_ASSERTION


def neurocortex_error_handler(exc: NeurocortexError) -> int:
    print(json.dumps(exc.to_dict(), default=str), file=sys.stderr)
    return EXIT_ERROR


def os_error_handler(exc: OSError) -> int:
    print(json.dumps({"error": {"type": "OSError", "message": str(exc), "details": {"path": exc.filename}}}), file=sys.stderr)
    return EXIT_ERROR


# most specific first
_HANDLERS: List[tuple] = [
    (ScenarioAssertionError, assertion_error_handler),
    (NeurocortexError, neurocortex_error_handler),
    (OSError, os_error_handler),
]


def handle_error(exc: BaseException) -> int:
    for kind, handler in _HANDLERS:
        if isinstance(exc, kind):
            return handler(exc)
    raise exc


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _settings(args: argparse.Namespace) -> Settings:
    overrides: Dict[str, object] = {}
    if args.seed is not None:
        overrides["net.rng_seed"] = args.seed
    if args.trace_format is not None:
        overrides["trace_format"] = args.trace_format
    if args.out_dir is not None:
        overrides["out_dir"] = args.out_dir
    if args.log_level is not None:
        overrides["log_level"] = args.log_level
    return load_settings(Path(args.config) if args.config else None, overrides)


# -- subcommands ----------------------------------------------------------------


def cmd_simulate(args: argparse.Namespace, settings: Settings) -> int:
    service = SimulationService(settings)
    summary = service.run_scenario(args.scenario)
    for line in summary.outputs:
        print(line)
    if summary.failure:
        print(f"FAILED: {summary.failure}" if summary.exit_code == EXIT_ASSERTION else f"error: {summary.failure}", file=sys.stderr)
    print(f"{summary.scenario}: {summary.status} ({summary.steps_executed} steps, trace {summary.trace_path})")
    return summary.exit_code


def cmd_repl(args: argparse.Namespace, settings: Settings) -> int:
    service = SimulationService(settings)
    if args.snapshot:
        service.load_session("repl", args.snapshot)
    repl = InteractiveRepl(service, "repl", transcript=Path(args.transcript) if args.transcript else None)
    return repl.start()


def cmd_snapshot_save(args: argparse.Namespace, settings: Settings) -> int:
    service = SimulationService(settings)
    summary = service.run_scenario(args.scenario, session_id="snapshot")
    if summary.exit_code != EXIT_OK:
        print(f"scenario did not pass: {summary.failure}", file=sys.stderr)
        return summary.exit_code
    session = service.get_or_create_session("snapshot")
    path = save_snapshot(session.net, args.output, session)
    print(f"saved {path} (edge hash {session.net.edge_set_hash()})")
    return EXIT_OK


def cmd_snapshot_load(args: argparse.Namespace, settings: Settings) -> int:
    snapshot = read_snapshot(args.snapshot)
    session = session_from_snapshot(snapshot, "load", settings)
    neurons, synapses, tick = describe(snapshot)
    print(f"format {snapshot.format_version}: {neurons} neurons, {synapses} synapses, tick {tick}")
    print(f"edge hash {session.net.edge_set_hash()}")
    if args.ticks:
        out = Path(settings.out_dir) / f"trace.{settings.trace_format}"
        with TraceWriter(out, settings.trace_format) as writer:
            for _ in range(args.ticks):
                report = step_network(session.net)
                writer.write(TraceRow(tick=report.tick, fired=list(report.fired)))
        print(f"ran {args.ticks} ticks, trace {out}")
    return EXIT_OK


def cmd_rules(args: argparse.Namespace, settings: Settings) -> int:
    text = Path(args.rulefile).read_text(encoding="utf-8")
    net, rb = Network(settings.net), RuleBase()
    compile_rules(net, rb, parse_rules(text), settings.logic)
    facts = [f for f in (args.facts or "").split(",") if f]
    result = run_inference(net, rb, facts, args.horizon, settings.logic)
    for atom in sorted(result.derived, key=lambda a: (result.first_fire[a], a)):
        print(f"{atom}\t{result.first_fire[atom]}")
    if args.truth:
        table = truth_table(net, rb, args.truth.split(","), args.output, horizon=args.horizon, logic=settings.logic)
        print(table.render())
    return EXIT_OK


def cmd_topo(args: argparse.Namespace, settings: Settings) -> int:
    spec = parse_sandglass(Path(args.specfile).read_text(encoding="utf-8"), args.specfile)
    sandglass = build_sandglass_layers(spec, settings.net)
    ranking = find_kernel(sandglass.net, sandglass.inputs, sandglass.outputs)
    print(f"{len(sandglass.net)} neurons, {len(sandglass.net.synapses)} synapses, waist layer {spec.waist}")
    for entry in ranking[: args.top]:
        print(f"{sandglass.net.label_of(entry.neuron)}\t{entry.score:.4f}\tautonomy={entry.autonomy:.3f}\tpower={entry.power:.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="neurocortex", description="Deterministic self-organizing neural network simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--seed", type=int, help="RNG seed (net.rng_seed)")
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--trace-format", choices=TRACE_FORMATS, help="Trace file format (default: csv)")
    parser.add_argument("--out-dir", help="Directory for traces and summaries (default: out)")
    parser.add_argument("--log-level", help="Logging level (default: WARNING)")
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="Run a scenario file")
    simulate.add_argument("scenario")
    simulate.set_defaults(func=cmd_simulate)

    repl = sub.add_parser("repl", help="Interactive session, optionally from a snapshot")
    repl.add_argument("snapshot", nargs="?")
    repl.add_argument("--transcript", help="Write the executed lines to this file")
    repl.set_defaults(func=cmd_repl)

    snapshot = sub.add_parser("snapshot", help="Save or inspect snapshots")
    snap_sub = snapshot.add_subparsers(dest="action", required=True)
    save = snap_sub.add_parser("save", help="Run a scenario and snapshot the resulting network")
    save.add_argument("scenario")
    save.add_argument("output")
    save.set_defaults(func=cmd_snapshot_save)
    load = snap_sub.add_parser("load", help="Verify a snapshot and optionally continue it")
    load.add_argument("snapshot")
    load.add_argument("--ticks", type=int, default=0, help="Ticks to run after loading")
    load.set_defaults(func=cmd_snapshot_load)

    rules = sub.add_parser("rules", help="Compile a rule file and run inference")
    rules.add_argument("rulefile")
    rules.add_argument("--facts", default="", help="Comma-separated fact atoms")
    rules.add_argument("--horizon", type=int, default=None)
    rules.add_argument("--truth", help="Comma-separated input atoms for a truth table")
    rules.add_argument("--output", default="out", help="Output atom for --truth")
    rules.set_defaults(func=cmd_rules)

    topo = sub.add_parser("topo", help="Build a sandglass and rank kernel candidates")
    topo.add_argument("specfile")
    topo.add_argument("--top", type=int, default=10)
    topo.set_defaults(func=cmd_topo)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = _settings(args)
        configure_logging(settings.log_level)
        return args.func(args, settings)
    except (NeurocortexError, OSError) as exc:
        return handle_error(exc)


if __name__ == "__main__":
    sys.exit(main())
