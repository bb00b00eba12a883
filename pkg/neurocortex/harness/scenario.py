"""Line-oriented scenario scripts and the runner that executes them.

One statement per line, ``#`` starts a comment, options are ``key=value``::

    name cat_demo
    set language.ground_weight = 0.5
    neuron animal furry barks meows moos horns
    word this is dog cat cow
    ground dog animal furry barks
    learn this is dog reps=20
    generate animal furry meows
    assert sentence == "this is cat"

``name`` and ``set`` lines are scenario metadata and must precede the
executable steps. The REPL feeds single lines through the same parser and
runner, so a REPL transcript replays as a scenario with identical output.
"""

import logging
import operator
import shlex
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from neurocortex.competition import attach_groups, build_groups
from neurocortex.config import Settings, load_settings
from neurocortex.exceptions import (
    NeurocortexError,
    ScenarioAssertionError,
    ScenarioParseError,
    ScenarioRuntimeError,
)
from neurocortex.harness.session import Session
from neurocortex.harness.snapshot import save_snapshot
from neurocortex.harness.trace import TraceWriter
from neurocortex.language import generate_sentence, ground_word, learn_sentence, render
from neurocortex.logic import Rule, RuleKind, compile_rule, compile_rules, consolidate_transitive, infer, parse_rules
from neurocortex.models import RunSummary, Scenario, ScenarioStep, TraceRow
from neurocortex.netcore import NeuronKind, TickReport, inject_pattern, step_network
from neurocortex.plasticity import consolidate
from neurocortex.sequence import SequenceSpec, encode_object, recall_sequence, train_sequence

logger = logging.getLogger(__name__)

# command -> (min args, max args or None, option types)
_GRAMMAR: Dict[str, Tuple[int, Optional[int], Dict[str, type]]] = {
    "neuron": (1, None, {"kind": str}),
    "synapse": (2, 2, {"weight": float, "delay": int}),
    "word": (1, None, {}),
    "ground": (2, None, {"weight": float}),
    "inject": (1, None, {"strength": float, "duration": int}),
    "step": (1, 1, {}),
    "train": (2, None, {"gap": int, "reps": int, "strength": float}),
    "recall": (1, 1, {"max_len": int}),
    "object": (2, None, {"order": str}),
    "learn": (1, None, {"reps": int, "name": str}),
    "generate": (0, None, {"pattern": str}),
    "rule": (2, 3, {}),
    "rules": (1, 1, {}),
    "infer": (0, None, {"horizon": int}),
    "consolidate": (0, 0, {"rate": float}),
    "transitive": (0, 0, {"replays": int}),
    "groups": (0, 0, {"threshold": int, "strength": float}),
    "measure": (1, 3, {}),
    "probe": (2, 3, {}),
    "save": (1, 1, {}),
    "assert": (1, None, {}),
}

_OPERATORS: Dict[str, Callable[[float, float], bool]] = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "==": operator.eq,
    "!=": operator.ne,
}


def _strip_comment(raw: str) -> str:
    quoted = False
    for i, char in enumerate(raw):
        if char == '"':
            quoted = not quoted
        elif char == "#" and not quoted:
            return raw[:i].strip()
    return raw.strip()


@dataclass(frozen=True)
class Assertion:
    kind: str
    args: Tuple[str, ...]
    op: Optional[str] = None
    value: Optional[str] = None


def parse_assertion(expression: str, line: int) -> Assertion:
    try:
        tokens = shlex.split(expression)
    except ValueError as exc:
        raise ScenarioParseError(f"cannot parse assertion: {exc}", line) from None
    if not tokens:
        raise ScenarioParseError("empty assertion", line)
    head = tokens[0]
    if head == "sentence" and len(tokens) == 3 and tokens[1] == "==":
        return Assertion("sentence", (), "==", tokens[2])
    if head == "derived" and len(tokens) == 3 and tokens[1] in ("has", "lacks"):
        return Assertion("derived", (tokens[2],), tokens[1])
    if head == "recalled" and len(tokens) == 3 and tokens[1] == "==":
        return Assertion("recalled", (), "==", tokens[2])
    if head in ("fired", "silent") and len(tokens) == 2:
        return Assertion(head, (tokens[1],))
    if head == "rate" and len(tokens) == 4 and tokens[2] in _OPERATORS:
        _number(tokens[3], line)
        return Assertion("rate", (tokens[1],), tokens[2], tokens[3])
    if head == "weight" and len(tokens) == 5 and tokens[3] in _OPERATORS:
        _number(tokens[4], line)
        return Assertion("weight", (tokens[1], tokens[2]), tokens[3], tokens[4])
    raise ScenarioParseError(f"unsupported assertion '{expression}'", line)


def _number(text: str, line: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise ScenarioParseError(f"expected a number, got '{text}'", line) from None


def parse_line(raw: str, line: int, index: int) -> Optional[Union[ScenarioStep, Tuple[str, str, str]]]:
    """Parse one statement.

    Returns ``None`` for blank lines, a ``("name", value, "")`` or
    ``("set", key, value)`` tuple for metadata, otherwise a step.
    """
    text = _strip_comment(raw)
    if not text:
        return None
    command, _, rest = text.partition(" ")
    rest = rest.strip()

    if command == "name":
        if not rest:
            raise ScenarioParseError("name needs a value", line)
        return ("name", rest, "")
    if command == "set":
        key, eq, value = rest.partition("=")
        if not eq or not key.strip() or not value.strip():
            raise ScenarioParseError("expected 'set key = value'", line)
        return ("set", key.strip(), value.strip())
    if command not in _GRAMMAR:
        raise ScenarioParseError(f"unknown command '{command}'", line)

    low, high, option_types = _GRAMMAR[command]
    if command == "assert":
        if not rest:
            raise ScenarioParseError("assert needs an expression", line)
        parse_assertion(rest, line)
        return ScenarioStep(index=index, line=line, command="assert", args=[rest], text=text)

    try:
        tokens = shlex.split(rest)
    except ValueError as exc:
        raise ScenarioParseError(str(exc), line) from None
    args: List[str] = []
    options: Dict[str, str] = {}
    for token in tokens:
        key, eq, value = token.partition("=")
        if eq and key.isidentifier():
            if key not in option_types:
                raise ScenarioParseError(f"'{command}' does not accept option '{key}'", line)
            try:
                option_types[key](value)
            except ValueError:
                raise ScenarioParseError(f"bad value for {key}: '{value}'", line) from None
            options[key] = value
        else:
            args.append(token)
    if len(args) < low or (high is not None and len(args) > high):
        raise ScenarioParseError(f"wrong number of arguments for '{command}'", line, {"args": args})
    if command == "step" and not args[0].isdigit():
        raise ScenarioParseError("step needs a tick count", line)
    if command == "rule":
        try:
            Rule(RuleKind(args[0].upper()), tuple(args[1:]))
        except (ValueError, NeurocortexError) as exc:
            raise ScenarioParseError(f"bad rule: {exc}", line) from None
    if command in ("measure", "probe") and args[0] not in ("rate", "weight", "sentence", "derived", "recalled"):
        raise ScenarioParseError(f"cannot {command} '{args[0]}'", line)
    if command == "probe" and args[0] not in ("rate", "weight"):
        raise ScenarioParseError("only rate and weight can be probed", line)
    return ScenarioStep(index=index, line=line, command=command, args=args, options=options, text=text)


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    scenario = Scenario(name=Path(source).stem if source != "<scenario>" else "scenario")
    for number, raw in enumerate(text.splitlines(), start=1):
        parsed = parse_line(raw, number, len(scenario.steps))
        if parsed is None:
            continue
        if isinstance(parsed, tuple):
            if scenario.steps:
                raise ScenarioParseError(f"'{parsed[0]}' must come before the first step", number)
            kind, key, value = parsed
            if kind == "name":
                scenario.name = key
            else:
                scenario.overrides[key] = value
            continue
        scenario.steps.append(parsed)
    return scenario


def probe_columns(steps: Sequence[ScenarioStep]) -> List[str]:
    columns: List[str] = []
    for step in steps:
        if step.command == "probe":
            name = f"{step.args[0]}:" + ">".join(step.args[1:])
            if name not in columns:
                columns.append(name)
    return columns


class ScenarioRunner:
    """Executes steps against one session and collects printed output."""

    def __init__(self, session: Session, base_dir: Optional[Path] = None, writer: Optional[TraceWriter] = None):
        self.session = session
        self.base_dir = base_dir or Path.cwd()
        self.writer = writer
        self.outputs: List[str] = []
        self.steps_executed = 0

    @property
    def settings(self) -> Settings:
        return self.session.settings

    def run(self, steps: Sequence[ScenarioStep]) -> None:
        for step in steps:
            self.execute(step)

    def execute(self, step: ScenarioStep) -> List[str]:
        """Run one step; returns the lines it printed."""
        handler = getattr(self, f"_do_{step.command}")
        before = len(self.outputs)
        logger.info("step %d (line %d): %s", step.index, step.line, step.text)
        net = self.session.net
        net.listeners.append(self._record_tick)
        try:
            handler(step)
        except (ScenarioAssertionError, ScenarioRuntimeError):
            raise
        except NeurocortexError as exc:
            raise ScenarioRuntimeError(exc.message, step.index, {"line": step.line, **exc.details}) from exc
        finally:
            net.listeners.remove(self._record_tick)
        self.steps_executed += 1
        return self.outputs[before:]

    def apply_override(self, key: str, value: str) -> None:
        self.session.settings = self.settings.with_overrides({key: value})
        self.session.net.params = self.session.settings.net

    # -- helpers -------------------------------------------------------------

    def _ids(self, names: Sequence[str]) -> List[int]:
        return [self.session.resolve(name) for name in names]

    def _name(self, nid: int) -> str:
        return self.session.net.label_of(nid)

    def _emit(self, text: str) -> None:
        self.outputs.append(text)

    def _record_tick(self, report: TickReport) -> None:
        self.session.ticks_run += 1
        if self.writer is not None:
            self.writer.write(self._row(report))

    def _row(self, report) -> TraceRow:
        probes = {}
        if self.writer is not None:
            for column in self.writer.probes:
                kind, _, target = column.partition(":")
                if kind == "rate":
                    probes[column] = self.session.net.neurons[self.session.resolve(target)].rate
                else:
                    pre, post = self._ids(target.split(">"))
                    probes[column] = self.session.net.effective_weight(pre, post)
        return TraceRow(tick=report.tick, fired=list(report.fired), probes=probes)

    # -- structure -----------------------------------------------------------

    def _do_neuron(self, step: ScenarioStep) -> None:
        kind = NeuronKind(step.options.get("kind", "excitatory"))
        for name in step.args:
            self.session.net.add_neuron(kind=kind, label=name)

    def _do_synapse(self, step: ScenarioStep) -> None:
        pre, post = self._ids(step.args)
        self.session.net.add_synapse(
            pre, post, ltm=float(step.options.get("weight", 0.5)), delay=int(step.options.get("delay", 1))
        )

    def _do_word(self, step: ScenarioStep) -> None:
        for text in step.args:
            self.session.lexicon.add_word(text)

    def _do_ground(self, step: ScenarioStep) -> None:
        word = self.session.lexicon.get(step.args[0])
        weight = float(step.options.get("weight", self.settings.language.ground_weight))
        ground_word(self.session.net, self.session.lexicon, word, self._ids(step.args[1:]), weight)

    # -- dynamics ------------------------------------------------------------

    def _do_inject(self, step: ScenarioStep) -> None:
        strength = float(step.options.get("strength", self.settings.sequence.strength))
        inject_pattern(self.session.net, self._ids(step.args), strength, int(step.options.get("duration", 1)))

    def _do_step(self, step: ScenarioStep) -> None:
        for _ in range(int(step.args[0])):
            step_network(self.session.net)

    def _do_consolidate(self, step: ScenarioStep) -> None:
        consolidate(self.session.net, float(step.options.get("rate", self.settings.plasticity.consolidate_rate)))

    def _do_groups(self, step: ScenarioStep) -> None:
        competition = self.settings.competition
        groups = build_groups(
            self.session.net,
            int(step.options.get("threshold", competition.overlap_threshold)),
            float(step.options.get("strength", competition.inhibition_strength)),
        )
        attach_groups(self.session.net, groups, competition)
        self._emit("groups: " + " | ".join(" ".join(self._name(m) for m in g.members) for g in groups))

    # -- sequences -----------------------------------------------------------

    def _do_train(self, step: ScenarioStep) -> None:
        seq = self.settings.sequence
        spec = SequenceSpec(
            items=tuple(self._ids(step.args)),
            gap=int(step.options.get("gap", seq.gap)),
            strength=float(step.options.get("strength", seq.strength)),
            repetitions=int(step.options.get("reps", seq.repetitions)),
        )
        report = train_sequence(self.session.net, spec, self.settings.plasticity)
        if report.grown:
            self._emit("grown: " + " ".join(self._name(n) for n in report.grown))

    def _do_recall(self, step: ScenarioStep) -> None:
        cue = self.session.resolve(step.args[0])
        max_len = int(step.options.get("max_len", len(self.session.net)))
        recalled = recall_sequence(self.session.net, cue, max_len, self.settings.sequence.recall_strength)
        self.session.last_recalled = recalled
        self._emit("recalled: " + " ".join(self._name(n) for n in recalled))

    def _do_object(self, step: ScenarioStep) -> None:
        views = self._ids(step.args)
        order = self._ids(step.options["order"].split(",")) if "order" in step.options else views
        circuit = encode_object(self.session.net, views, order, self.settings.sequence, self.settings.plasticity)
        self._emit(f"object anchor: {self._name(circuit.anchor)}")

    # -- language ------------------------------------------------------------

    def _do_learn(self, step: ScenarioStep) -> None:
        lang = self.settings.language
        pattern = learn_sentence(
            self.session.net,
            self.session.lexicon,
            step.args,
            int(step.options.get("reps", lang.repetitions)),
            lang,
            self.settings.plasticity,
            self.settings.competition,
        )
        self.session.patterns[step.options.get("name", " ".join(step.args))] = pattern
        self._emit(f"pattern: {pattern.describe()}")

    def _do_generate(self, step: ScenarioStep) -> None:
        name = step.options.get("pattern")
        pattern = self.session.patterns[name] if name in self.session.patterns else self.session.latest_pattern()
        words = generate_sentence(
            self.session.net,
            self.session.lexicon,
            pattern,
            self._ids(step.args),
            self.settings.language,
            self.settings.competition,
        )
        self.session.last_sentence = words
        self._emit(f"sentence: {render(words)}")

    # -- logic ---------------------------------------------------------------

    def _do_rule(self, step: ScenarioStep) -> None:
        rule = Rule(RuleKind(step.args[0].upper()), tuple(step.args[1:]))
        compile_rule(self.session.net, self.session.rules, rule, self.settings.logic)

    def _do_rules(self, step: ScenarioStep) -> None:
        path = self.base_dir / step.args[0]
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ScenarioRuntimeError(f"cannot read rule file {path}", step.index, {"path": str(path)}) from exc
        compile_rules(self.session.net, self.session.rules, parse_rules(text), self.settings.logic)

    def _do_infer(self, step: ScenarioStep) -> None:
        horizon = int(step.options.get("horizon", self.settings.logic.horizon))
        derived = infer(self.session.net, self.session.rules, step.args, horizon, self.settings.logic)
        self.session.last_derived = derived
        self._emit("derived: " + " ".join(sorted(derived)))

    def _do_transitive(self, step: ScenarioStep) -> None:
        edges = consolidate_transitive(
            self.session.net,
            self.session.rules,
            int(step.options.get("replays", 50)),
            self.settings.logic,
            self.settings.plasticity,
        )
        for edge in edges:
            self._emit(f"shortcut: {edge.premise} -> {edge.conclusion} (replay {edge.replay})")

    # -- observation ---------------------------------------------------------

    def _do_measure(self, step: ScenarioStep) -> None:
        what = step.args[0]
        if what == "rate":
            nid = self.session.resolve(step.args[1])
            self._emit(f"rate {self._name(nid)} = {self.session.net.neurons[nid].rate!r}")
        elif what == "weight":
            pre, post = self._ids(step.args[1:3])
            syn = self.session.net.find_synapse(pre, post)
            ltm, stm = (syn.weight.ltm, syn.weight.stm) if syn else (0.0, 0.0)
            self._emit(f"weight {self._name(pre)}->{self._name(post)} ltm={ltm!r} stm={stm!r}")
        elif what == "sentence":
            self._emit("sentence: " + render(self.session.last_sentence or []))
        elif what == "derived":
            self._emit("derived: " + " ".join(sorted(self.session.last_derived or ())))
        else:
            self._emit("recalled: " + " ".join(self._name(n) for n in self.session.last_recalled or []))

    def _do_probe(self, step: ScenarioStep) -> None:
        # columns are fixed when the trace opens; validate the target exists
        self._ids(step.args[1:])

    def _do_save(self, step: ScenarioStep) -> None:
        path = save_snapshot(self.session.net, self.base_dir / step.args[0], self.session)
        self._emit(f"saved: {path}")

    def _do_assert(self, step: ScenarioStep) -> None:
        expression = step.args[0]
        check = parse_assertion(expression, step.line)
        ok, observed = self._evaluate(check)
        if not ok:
            raise ScenarioAssertionError(expression, step.index, step.line, observed)
        self._emit(f"ok: {expression}")

    def _evaluate(self, check: Assertion):
        session = self.session
        if check.kind == "sentence":
            observed = render(session.last_sentence) if session.last_sentence is not None else None
            return observed == check.value, observed
        if check.kind == "derived":
            derived = session.last_derived or set()
            has = check.args[0] in derived
            return (has if check.op == "has" else not has), sorted(derived)
        if check.kind == "recalled":
            observed = ",".join(self._name(n) for n in session.last_recalled or [])
            return observed == check.value, observed
        if check.kind in ("fired", "silent"):
            fired = session.net.neurons[session.resolve(check.args[0])].fired_flag
            return (fired if check.kind == "fired" else not fired), fired
        if check.kind == "rate":
            observed = session.net.neurons[session.resolve(check.args[0])].rate
        else:
            pre, post = self._ids(check.args)
            observed = session.net.effective_weight(pre, post)
        return _OPERATORS[check.op](observed, float(check.value)), observed


def run_scenario(
    path: Union[str, Path],
    settings: Optional[Settings] = None,
    out_dir: Optional[Union[str, Path]] = None,
    trace_format: Optional[str] = None,
    session: Optional[Session] = None,
) -> RunSummary:
    """Parse and execute a scenario file, writing ``trace.<fmt>`` and ``summary.json``.

    Parse errors propagate; assertion failures and step errors are reported
    in the summary with exit codes 1 and 2.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioParseError(f"cannot read scenario {path}: {exc.strerror}", 0, {"path": str(path)}) from exc
    scenario = parse_scenario(text, str(path))

    settings = (settings or load_settings()).with_overrides(scenario.overrides)
    if session is None:
        session = Session.create(scenario.name, settings)
    else:
        session.settings = settings
    fmt = trace_format or settings.trace_format
    out = Path(out_dir or settings.out_dir)
    writer = TraceWriter(out / f"trace.{fmt}", fmt, probe_columns(scenario.steps))
    runner = ScenarioRunner(session, base_dir=path.parent, writer=writer)

    status, exit_code, failure = "passed", 0, None
    with writer:
        try:
            runner.run(scenario.steps)
        except ScenarioAssertionError as exc:
            status, exit_code, failure = "failed", 1, exc.message
        except ScenarioRuntimeError as exc:
            status, exit_code, failure = "error", 2, exc.message

    summary = RunSummary(
        scenario=scenario.name,
        status=status,
        exit_code=exit_code,
        seed=settings.net.rng_seed,
        steps_executed=runner.steps_executed,
        ticks=session.ticks_run,
        outputs=runner.outputs,
        failure=failure,
        trace_path=str(writer.path),
        edge_hash=session.net.edge_set_hash(),
    )
    (out / "summary.json").write_text(summary.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info("scenario %s %s after %d steps", scenario.name, status, runner.steps_executed)
    return summary
