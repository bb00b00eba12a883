"""Rules as circuits: IMP, NOT and FALSE compiled into the network.

``IMP a b`` is a strong delayed synapse a->b, so a firing premise drives the
conclusion over threshold ``d_rule`` ticks later. Inference is forward
chaining by simulation: facts are held on and every atom that fires is
derived. ``NOT x b`` routes x through inhibitory interneurons onto b and
``FALSE z`` clamps z silent.
"""

from __future__ import annotations

import itertools
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from neurocortex.config import LogicParams, NetParams, PlasticityParams
from neurocortex.exceptions import RuleError
from neurocortex.netcore import Network, NeuronId, NeuronKind, step_network
from neurocortex.plasticity import FiringHistory, consolidate, plastic_step

logger = logging.getLogger(__name__)

_SYMBOL = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*$")


class RuleKind(str, Enum):
    IMP = "IMP"
    NOT = "NOT"
    FALSE = "FALSE"


_ARITY = {RuleKind.IMP: 2, RuleKind.NOT: 2, RuleKind.FALSE: 1}


@dataclass
class Rule:
    kind: RuleKind
    args: Tuple[str, ...]
    # synapse indices and interneuron ids installed by compile_rule
    synapses: Tuple[int, ...] = ()
    interneurons: Tuple[NeuronId, ...] = ()

    def __post_init__(self) -> None:
        self.kind = RuleKind(self.kind)
        self.args = tuple(self.args)
        if len(self.args) != _ARITY[self.kind]:
            raise RuleError(f"{self.kind.value} takes {_ARITY[self.kind]} atom(s), got {len(self.args)}")
        for symbol in self.args:
            if not _SYMBOL.match(symbol):
                raise RuleError(f"invalid atom name {symbol!r}")

    @classmethod
    def imp(cls, premise: str, conclusion: str) -> "Rule":
        return cls(RuleKind.IMP, (premise, conclusion))

    @classmethod
    def neg(cls, inhibitor: str, target: str) -> "Rule":
        return cls(RuleKind.NOT, (inhibitor, target))

    @classmethod
    def false(cls, target: str) -> "Rule":
        return cls(RuleKind.FALSE, (target,))

    def __str__(self) -> str:
        return " ".join((self.kind.value,) + self.args)


@dataclass
class RuleBase:
    """Atom registry plus the rules compiled into one network."""

    atoms: Dict[str, NeuronId] = field(default_factory=dict)
    rules: List[Rule] = field(default_factory=list)
    bias: Optional[str] = None

    def __contains__(self, symbol: str) -> bool:
        return symbol in self.atoms

    def atom_id(self, symbol: str) -> NeuronId:
        try:
            return self.atoms[symbol]
        except KeyError:
            raise RuleError(f"unknown atom '{symbol}'", details={"atom": symbol}) from None

    def symbol_of(self, nid: NeuronId) -> Optional[str]:
        for symbol, atom in self.atoms.items():
            if atom == nid:
                return symbol
        return None

    def register(self, net: Network, symbol: str) -> NeuronId:
        """Look up or create the neuron for ``symbol``.

        A neuron that already carries the label (a word, a named neuron) is
        reused as the atom.
        """
        if symbol in self.atoms:
            return self.atoms[symbol]
        nid = net.neuron_by_label(symbol) if net.has_label(symbol) else net.add_neuron(label=symbol)
        self.atoms[symbol] = nid
        return nid

    def reported_atoms(self) -> Dict[str, NeuronId]:
        return {s: n for s, n in self.atoms.items() if s != self.bias}


@dataclass(frozen=True)
class InferenceResult:
    derived: frozenset
    first_fire: Dict[str, int]
    horizon: int


@dataclass(frozen=True)
class TransitiveEdge:
    premise: str
    conclusion: str
    replay: int
    ltm: float


@dataclass(frozen=True)
class TruthTable:
    inputs: Tuple[str, ...]
    output: str
    rows: Tuple[Tuple[Tuple[bool, ...], bool], ...]

    def as_dict(self) -> Dict[Tuple[bool, ...], bool]:
        return dict(self.rows)

    def render(self) -> str:
        header = " ".join(self.inputs) + " | " + self.output
        lines = [header]
        for assignment, out in self.rows:
            lines.append(" ".join(str(int(v)) for v in assignment) + " | " + str(int(out)))
        return "\n".join(lines)


def rule_weight(net_params: NetParams, logic: LogicParams) -> float:
    """Long-term weight of an IMP synapse.

    A premise firing at the threshold rate ``f_thr`` must push the conclusion
    to ``safety`` times the summed input that reaches ``f_thr``:
    ``w_rule * f_thr = safety * sigma_thr`` with
    ``sigma_thr = -ln(1 - f_thr / c1) / c2``.
    """
    weight = logic.safety * net_params.sigma_threshold / net_params.f_thr
    if weight > net_params.w_max:
        logger.warning("rule weight %.4f exceeds w_max, clamping to %.4f", weight, net_params.w_max)
        weight = net_params.w_max
    return weight


def _install_edge(net: Network, pre: NeuronId, post: NeuronId, ltm: float, delay: int) -> int:
    syn = net.find_synapse(pre, post)
    if syn is None:
        return net.add_synapse(pre, post, ltm=ltm, delay=delay).index
    syn.weight.ltm = max(syn.weight.ltm, ltm)
    net.set_delay(syn, delay)
    return syn.index


def compile_rule(net: Network, rb: RuleBase, rule: Rule, logic: Optional[LogicParams] = None) -> Rule:
    """Install the subgraph realising ``rule`` and record it in ``rb``.

    Contradictory rules are installed side by side; their conflict plays out
    in the dynamics.
    """
    logic = logic or LogicParams()
    ids = [rb.register(net, symbol) for symbol in rule.args]
    if logic.bias_atom in rule.args:
        rb.bias = logic.bias_atom

    if rule.kind is RuleKind.IMP:
        premise, conclusion = ids
        rule.synapses = (_install_edge(net, premise, conclusion, rule_weight(net.params, logic), logic.d_rule),)
    elif rule.kind is RuleKind.NOT:
        inhibitor, target = ids
        synapses, interneurons = [], []
        for _ in range(logic.inhibition_factor):
            inh = net.add_neuron(kind=NeuronKind.INHIBITORY)
            interneurons.append(inh)
            synapses.append(net.add_synapse(inhibitor, inh, ltm=net.params.w_max, delay=1).index)
            synapses.append(net.add_synapse(inh, target, ltm=net.params.w_max, delay=max(1, logic.d_rule - 1)).index)
        rule.synapses, rule.interneurons = tuple(synapses), tuple(interneurons)
    else:
        net.neurons[ids[0]].clamped = True

    rb.rules.append(rule)
    logger.debug("compiled %s", rule)
    return rule


def compile_rules(net: Network, rb: RuleBase, rules: Iterable[Rule], logic: Optional[LogicParams] = None) -> List[Rule]:
    return [compile_rule(net, rb, rule, logic) for rule in rules]


def parse_rules(text: str) -> List[Rule]:
    """Parse a rule file: ``IMP a b``, ``NOT x b`` or ``FALSE z`` per line."""
    rules: List[Rule] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *args = line.split()
        try:
            kind = RuleKind(head.upper())
        except ValueError:
            raise RuleError(f"unknown rule kind '{head}'", line=number) from None
        try:
            rules.append(Rule(kind, tuple(args)))
        except RuleError as exc:
            raise RuleError(exc.message, line=number) from None
    return rules


def first_fire_times(
    net: Network,
    rb: RuleBase,
    facts: Iterable[str],
    horizon: Optional[int] = None,
    logic: Optional[LogicParams] = None,
) -> Dict[str, int]:
    """Hold the facts (and the bias atom) on and record when each atom first fires."""
    logic = logic or LogicParams()
    horizon = horizon if horizon is not None else logic.horizon
    external = {rb.atom_id(symbol): logic.fact_strength for symbol in facts}
    if rb.bias is not None:
        external[rb.atom_id(rb.bias)] = logic.fact_strength
    watched = rb.reported_atoms()
    by_id: Dict[NeuronId, List[str]] = {}
    for symbol, nid in watched.items():
        by_id.setdefault(nid, []).append(symbol)

    first: Dict[str, int] = {}
    net.reset_activity()
    origin = net.tick
    for _ in range(horizon):
        report = step_network(net, external)
        for nid in report.fired:
            for symbol in by_id.get(nid, ()):
                first.setdefault(symbol, report.tick)
    net.reset_activity()
    return {symbol: tick - origin for symbol, tick in first.items()}


def infer(
    net: Network,
    rb: RuleBase,
    facts: Iterable[str],
    horizon: Optional[int] = None,
    logic: Optional[LogicParams] = None,
) -> Set[str]:
    return set(first_fire_times(net, rb, facts, horizon, logic))


def run_inference(
    net: Network,
    rb: RuleBase,
    facts: Iterable[str],
    horizon: Optional[int] = None,
    logic: Optional[LogicParams] = None,
) -> InferenceResult:
    logic = logic or LogicParams()
    horizon = horizon if horizon is not None else logic.horizon
    first = first_fire_times(net, rb, facts, horizon, logic)
    return InferenceResult(derived=frozenset(first), first_fire=first, horizon=horizon)


def truth_table(
    net: Network,
    rb: RuleBase,
    inputs: Sequence[str],
    output: str,
    assignments: Optional[Iterable[Sequence[bool]]] = None,
    horizon: Optional[int] = None,
    logic: Optional[LogicParams] = None,
) -> TruthTable:
    """Evaluate ``output`` for every input assignment.

    IMP reads as "premise firing drives the conclusion", not material
    implication: with a false premise the conclusion is simply not derived.
    Each row runs on its own clone of the network.
    """
    inputs = tuple(inputs)
    for symbol in inputs + (output,):
        rb.atom_id(symbol)
    if assignments is None:
        assignments = itertools.product((True, False), repeat=len(inputs))
    rows = []
    for assignment in assignments:
        assignment = tuple(bool(v) for v in assignment)
        if len(assignment) != len(inputs):
            raise RuleError("assignment length does not match inputs", details={"inputs": list(inputs)})
        facts = [symbol for symbol, value in zip(inputs, assignment) if value]
        derived = infer(net.clone(), rb, facts, horizon, logic)
        rows.append((assignment, output in derived))
    return TruthTable(inputs=inputs, output=output, rows=tuple(rows))


def build_nand(net: Network, rb: RuleBase, a: str, b: str, out: str, logic: Optional[LogicParams] = None) -> List[Rule]:
    """NAND from IMP and NOT: out <- not a, out <- not b."""
    logic = logic or LogicParams()
    bias = logic.bias_atom
    na, nb = f"not_{a}", f"not_{b}"
    return compile_rules(
        net,
        rb,
        [
            Rule.imp(bias, na),
            Rule.neg(a, na),
            Rule.imp(bias, nb),
            Rule.neg(b, nb),
            Rule.imp(na, out),
            Rule.imp(nb, out),
        ],
        logic,
    )


def build_not(net: Network, rb: RuleBase, x: str, out: str, logic: Optional[LogicParams] = None) -> List[Rule]:
    logic = logic or LogicParams()
    return compile_rules(net, rb, [Rule.imp(logic.bias_atom, out), Rule.neg(x, out)], logic)


def _rule_edges(net: Network, rb: RuleBase, w_rule: float) -> Dict[NeuronId, Set[NeuronId]]:
    """Atom -> atoms it drives with long-term rule strength (bias excluded)."""
    atom_ids = set(rb.reported_atoms().values())
    edges: Dict[NeuronId, Set[NeuronId]] = {}
    for syn in net.synapses:
        if syn.sign > 0 and syn.pre in atom_ids and syn.post in atom_ids and syn.pre != syn.post:
            if syn.weight.ltm >= w_rule:
                edges.setdefault(syn.pre, set()).add(syn.post)
    return edges


def consolidate_transitive(
    net: Network,
    rb: RuleBase,
    replays: int,
    logic: Optional[LogicParams] = None,
    plasticity: Optional[PlasticityParams] = None,
) -> List[TransitiveEdge]:
    """Replay the rule chains until direct premise->conclusion synapses form.

    Every two-step path x->y->z of rule-strength edges without a direct x->z
    rule gets a candidate synapse (ltm 0, delay ``d_rule``). Each replay
    pulses every root premise in its own episode with interval learning
    restricted to the candidates, then consolidates. A candidate whose ltm
    reaches rule strength becomes an IMP rule. Intermediate synapses are
    never modified.
    """
    if replays < 1:
        raise RuleError("replays must be at least 1", details={"replays": replays})
    logic = logic or LogicParams()
    plasticity = plasticity or PlasticityParams()
    w_rule = rule_weight(net.params, logic)
    created: List[TransitiveEdge] = []

    for replay in range(1, replays + 1):
        edges = _rule_edges(net, rb, w_rule)
        candidates: Dict[int, Tuple[NeuronId, NeuronId]] = {}
        for x in sorted(edges):
            for y in sorted(edges[x]):
                for z in sorted(edges.get(y, ())):
                    if z == x or z in edges[x]:
                        continue
                    syn = net.find_synapse(x, z)
                    if syn is None:
                        syn = net.add_synapse(x, z, ltm=0.0, delay=logic.d_rule)
                    candidates[syn.index] = (x, z)
        if not candidates:
            break

        targets = {z for z in itertools.chain.from_iterable(edges.values())}
        roots = sorted(x for x in edges if x not in targets) or sorted(edges)
        for root in roots:
            net.reset_activity()
            history = FiringHistory(plasticity.window_W)
            plastic_step(net, history, plasticity, {root: logic.fact_strength}, cofire=False, synapses=set(candidates))
            for _ in range(logic.horizon - 1):
                plastic_step(net, history, plasticity, None, cofire=False, synapses=set(candidates))
            consolidate(net, plasticity.consolidate_rate)
        net.reset_activity()

        for idx, (x, z) in sorted(candidates.items()):
            syn = net.synapses[idx]
            if syn.weight.ltm >= w_rule:
                premise, conclusion = rb.symbol_of(x), rb.symbol_of(z)
                rb.rules.append(Rule(RuleKind.IMP, (premise, conclusion), synapses=(idx,)))
                created.append(TransitiveEdge(premise, conclusion, replay, syn.weight.ltm))
                logger.info("replay %d: %s -> %s reached rule strength (ltm %.4f)", replay, premise, conclusion, syn.weight.ltm)
    return created


def closure(rules: Iterable[Rule], facts: Iterable[str]) -> Set[str]:
    """Forward-chaining closure over IMP rules, without simulation."""
    implies: Dict[str, Set[str]] = {}
    for rule in rules:
        if rule.kind is RuleKind.IMP:
            implies.setdefault(rule.args[0], set()).add(rule.args[1])
    derived = set(facts)
    frontier = list(derived)
    while frontier:
        atom = frontier.pop()
        for nxt in implies.get(atom, ()):
            if nxt not in derived:
                derived.add(nxt)
                frontier.append(nxt)
    return derived

