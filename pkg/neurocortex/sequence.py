"""Sequence coding with delayed synapses, recall, and object circuits.

Training presents items as timed one-tick injections. The interval rule then
strengthens each item's synapse onto its successor; the delay of that
synapse equals the presentation gap, so a cue replays the chain in order.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from neurocortex.competition import InhibitionGroup, resolve_wta
from neurocortex.config import CompetitionParams, PlasticityParams, SequenceParams
from neurocortex.exceptions import NetworkError
from neurocortex.netcore import Network, NeuronId, Synapse, step_network
from neurocortex.plasticity import CofireTracker, FiringHistory, consolidate, plastic_step

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SequenceSpec:
    items: Tuple[NeuronId, ...]
    gap: int = 2
    strength: float = 50.0
    repetitions: int = 20

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise NetworkError("a sequence needs at least one item")
        if self.gap < 1 or self.repetitions < 1:
            raise NetworkError("gap and repetitions must be at least 1", {"gap": self.gap, "repetitions": self.repetitions})


@dataclass(frozen=True)
class TrainingReport:
    pairs: Tuple[Tuple[NeuronId, NeuronId], ...]
    # trajectories[pair] = [(forward effective, backward effective) after each repetition]
    trajectories: Dict[Tuple[NeuronId, NeuronId], List[Tuple[float, float]]]
    grown: Tuple[NeuronId, ...] = ()

    def margins(self, pair: Tuple[NeuronId, NeuronId]) -> List[float]:
        return [fwd - bwd for fwd, bwd in self.trajectories[pair]]

    def final_margin(self) -> float:
        """Smallest forward-minus-backward margin over consecutive pairs."""
        if not self.pairs:
            return 0.0
        return min(self.margins(pair)[-1] for pair in self.pairs)


@dataclass(frozen=True)
class ObjectCircuit:
    views: Tuple[NeuronId, ...]
    anchor: NeuronId
    ring: Tuple[int, ...]  # synapse indices among the views

    @property
    def distinguishability(self) -> int:
        return len(self.views)


class RecallMode(str, Enum):
    ASSOCIATION = "association"
    RECOGNITION = "recognition"


@dataclass(frozen=True)
class Recognition:
    winner: NeuronId
    mode: RecallMode
    sigmas: Dict[NeuronId, float] = field(default_factory=dict)


def _ensure_edge(net: Network, pre: NeuronId, post: NeuronId, delay: int) -> Synapse:
    syn = net.find_synapse(pre, post)
    if syn is None:
        return net.add_synapse(pre, post, ltm=0.0, delay=delay)
    net.set_delay(syn, delay)
    return syn


def present(
    net: Network,
    items: Sequence[NeuronId],
    gap: int,
    strength: float,
    plasticity: PlasticityParams,
    consolidate_rate: Optional[float] = None,
    tracker: Optional[CofireTracker] = None,
) -> None:
    """Run one training episode: item ``i`` is injected for one tick at ``i * gap``."""
    net.reset_activity()
    history = FiringHistory(plasticity.window_W)
    onsets: Dict[int, List[NeuronId]] = {}
    for i, item in enumerate(items):
        onsets.setdefault(i * gap, []).append(item)
    for offset in range((len(items) - 1) * gap + 1):
        external = {nid: strength for nid in onsets.get(offset, ())}
        plastic_step(net, history, plasticity, external, tracker=tracker)
    consolidate(net, consolidate_rate if consolidate_rate is not None else plasticity.consolidate_rate)


def train_sequence(net: Network, spec: SequenceSpec, plasticity: Optional[PlasticityParams] = None) -> TrainingReport:
    """Train the chain ``spec.items`` and report per-pair weight trajectories."""
    plasticity = plasticity or PlasticityParams()
    net.check_ids(spec.items)
    pairs = tuple(zip(spec.items, spec.items[1:]))
    trajectories: Dict[Tuple[NeuronId, NeuronId], List[Tuple[float, float]]] = {p: [] for p in pairs}
    if not pairs:
        return TrainingReport(pairs=(), trajectories={})

    for pre, post in pairs:
        _ensure_edge(net, pre, post, spec.gap)

    # co-firing counts accumulate across repetitions
    tracker = CofireTracker() if plasticity.grow_new else None
    for rep in range(spec.repetitions):
        present(net, spec.items, spec.gap, spec.strength, plasticity, tracker=tracker)
        for pre, post in pairs:
            trajectories[(pre, post)].append((net.effective_weight(pre, post), net.effective_weight(post, pre)))
    net.reset_activity()
    report = TrainingReport(
        pairs=pairs, trajectories=trajectories, grown=tuple(tracker.grown) if tracker is not None else ()
    )
    logger.info(
        "trained sequence of %d items over %d repetitions (min margin %.4f)",
        len(spec.items), spec.repetitions, report.final_margin(),
    )
    return report


def first_fire_order(reports: Iterable, limit: Optional[int] = None) -> List[NeuronId]:
    first: Dict[NeuronId, int] = {}
    for report in reports:
        for nid in report.fired:
            first.setdefault(nid, report.tick)
    order = sorted(first, key=lambda nid: (first[nid], nid))
    return order[:limit] if limit is not None else order


def recall_sequence(
    net: Network,
    cue: NeuronId,
    max_len: int,
    strength: float = 50.0,
    horizon: Optional[int] = None,
) -> List[NeuronId]:
    """Cue ``cue`` for one tick and list neurons in order of first firing.

    Returns an empty list when the cue itself does not fire.
    """
    net.check_ids([cue])
    if max_len < 1:
        return []
    net.reset_activity()
    ticks = horizon if horizon is not None else max_len * net.max_delay() + 1
    reports = [step_network(net, {cue: strength})]
    reports.extend(step_network(net) for _ in range(ticks - 1))
    net.reset_activity()
    if cue not in reports[0].fired:
        return []
    return first_fire_order(reports, max_len)


def encode_object(
    net: Network,
    views: Iterable[NeuronId],
    presentation_order: Sequence[NeuronId],
    settings: Optional[SequenceParams] = None,
    plasticity: Optional[PlasticityParams] = None,
) -> ObjectCircuit:
    """Associate the 2D views of one object as they arrive one after another.

    Each consecutive transition of ``presentation_order`` is replayed as a
    two-item episode. The anchor is the view with the strongest outgoing
    connections; ties go to the most frequent, then the first presented view.
    """
    settings = settings or SequenceParams()
    plasticity = plasticity or PlasticityParams()
    view_set = tuple(sorted(set(views)))
    if len(view_set) < 2:
        raise NetworkError("an object needs at least two views", {"views": list(view_set)})
    net.check_ids(view_set)
    order = list(presentation_order)
    stray = [v for v in order if v not in view_set]
    if stray:
        raise NetworkError("presentation order names neurons outside the views", {"stray": stray})

    transitions = [(u, w) for u, w in zip(order, order[1:]) if u != w]
    ring = tuple(_ensure_edge(net, u, w, settings.object_gap).index for u, w in dict.fromkeys(transitions))
    for _ in range(settings.object_repetitions):
        for u, w in transitions:
            present(net, (u, w), settings.object_gap, settings.strength, plasticity, consolidate_rate=1.0)
    net.reset_activity()

    frequency = Counter(order)
    first_seen = {v: order.index(v) if v in order else len(order) for v in view_set}

    def outgoing_ltm(view: NeuronId) -> float:
        return sum(
            net.synapses[i].weight.ltm for i in net.outgoing[view] if net.synapses[i].post in view_set
        )

    anchor = min(view_set, key=lambda v: (-outgoing_ltm(v), -frequency[v], first_seen[v]))
    logger.info("encoded object with %d views, anchor %d", len(view_set), anchor)
    return ObjectCircuit(views=view_set, anchor=anchor, ring=ring)


def recognize(
    net: Network,
    clues: Iterable[NeuronId],
    target_pool: Iterable[NeuronId],
    settings: Optional[SequenceParams] = None,
    competition: Optional[CompetitionParams] = None,
) -> Recognition:
    """Hold the clues on and let the target pool compete.

    The mechanism is the same for few and many clues; only the reported
    mode label changes at ``assoc_cutoff``.
    """
    settings = settings or SequenceParams()
    clue_set = tuple(sorted(set(clues)))
    pool = tuple(sorted(set(target_pool)))
    if not clue_set or not pool:
        raise NetworkError("recognition needs clues and a target pool")
    net.check_ids(clue_set + pool)
    net.reset_activity()
    external = {nid: settings.recall_strength for nid in clue_set}
    report = None
    for _ in range(net.max_delay() + 1):
        report = step_network(net, external)
    net.reset_activity()
    sigmas = {nid: report.sigma[nid] for nid in pool}
    if len(pool) == 1:
        winner = pool[0]
    else:
        winner = resolve_wta(InhibitionGroup(pool), sigmas, net.params, competition, net).winner
    mode = RecallMode.ASSOCIATION if len(clue_set) < settings.assoc_cutoff else RecallMode.RECOGNITION
    return Recognition(winner=winner, mode=mode, sigmas=sigmas)
