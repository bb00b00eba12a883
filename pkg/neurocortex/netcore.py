"""Network data model and the deterministic discrete-time update loop.

Time is discrete and synchronous: one call to :func:`step_network` computes
every neuron's new rate from the pre-tick state. A synapse with delay ``d``
delivers the presynaptic rate from ``d`` ticks earlier through a ring buffer
of length ``d``.
"""

from __future__ import annotations

import copy
import hashlib
import logging
import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Callable, Deque, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from neurocortex.config import CompetitionParams, NetParams
from neurocortex.exceptions import ActivationDomainError, NetworkError, StimulusError

if TYPE_CHECKING:
    from neurocortex.competition import InhibitionGroup

logger = logging.getLogger(__name__)

NeuronId = int

__all__ = [
    "NeuronId",
    "NeuronKind",
    "Neuron",
    "DualTraceWeight",
    "Synapse",
    "NetParams",
    "ScheduledInjection",
    "Network",
    "TickReport",
    "StateSnapshot",
    "activation",
    "step_network",
    "inject_pattern",
    "read_state",
]


class NeuronKind(str, Enum):
    EXCITATORY = "excitatory"
    INHIBITORY = "inhibitory"


@dataclass(slots=True)
class Neuron:
    id: NeuronId
    kind: NeuronKind = NeuronKind.EXCITATORY
    rate: float = 0.0
    fired_flag: bool = False
    label: Optional[str] = None
    # A clamped neuron stays silent whatever its input (constant-false atom).
    clamped: bool = False


@dataclass(slots=True)
class DualTraceWeight:
    """Long-term weight plus a decaying short-term trace (working memory)."""

    ltm: float = 0.0
    stm: float = 0.0

    def effective(self, w_max: float) -> float:
        return min(self.ltm + self.stm, w_max)


@dataclass(slots=True)
class Synapse:
    index: int
    pre: NeuronId
    post: NeuronId
    weight: DualTraceWeight
    delay: int
    sign: int


@dataclass(frozen=True, slots=True)
class ScheduledInjection:
    """Constant external input to ``neurons`` for ticks in ``[start, stop)``."""

    neurons: Tuple[NeuronId, ...]
    strength: float
    start: int
    stop: int


@dataclass(frozen=True)
class TickReport:
    tick: int
    fired: Tuple[NeuronId, ...]
    sigma: Tuple[float, ...]
    rates: Tuple[float, ...]


@dataclass(frozen=True)
class StateSnapshot:
    tick: int
    rates: Tuple[float, ...]
    fired: Tuple[bool, ...]
    # (pre, post, ltm, stm) per synapse, in synapse-index order
    weights: Tuple[Tuple[NeuronId, NeuronId, float, float], ...]


def activation(sigma: Union[float, np.ndarray], params: NetParams) -> Union[float, np.ndarray]:
    """Saturating rate function ``c1 * (1 - exp(-c2 * sigma))``.

    ``expm1`` keeps full relative precision for small inputs.
    """
    if isinstance(sigma, np.ndarray):
        if np.any(sigma < 0) or np.any(np.isnan(sigma)):
            raise ActivationDomainError("activation is undefined for negative summed input")
        return params.c1 * -np.expm1(-params.c2 * sigma)
    if math.isnan(sigma) or sigma < 0:
        raise ActivationDomainError(
            "activation is undefined for negative summed input", {"sigma": sigma}
        )
    return params.c1 * -math.expm1(-params.c2 * sigma)


class Network:
    """Directed graph of rate neurons joined by weighted, delayed synapses."""

    def __init__(self, params: Optional[NetParams] = None):
        self.params = params or NetParams()
        self.neurons: List[Neuron] = []
        self.synapses: List[Synapse] = []
        self.incoming: List[List[int]] = []
        self.outgoing: List[List[int]] = []
        self.delay_buffers: List[Deque[float]] = []
        self.schedule: List[ScheduledInjection] = []
        self.groups: List["InhibitionGroup"] = []
        self.competition: Optional[CompetitionParams] = None
        self.tick = 0
        # called with every TickReport; not copied by clone() or snapshots
        self.listeners: List[Callable[[TickReport], None]] = []
        self.rng = np.random.default_rng(self.params.rng_seed)
        self._edges: Dict[Tuple[NeuronId, NeuronId], int] = {}
        self._labels: Dict[str, NeuronId] = {}

    def __len__(self) -> int:
        return len(self.neurons)

    # -- structure -----------------------------------------------------------

    def add_neuron(self, kind: NeuronKind = NeuronKind.EXCITATORY, label: Optional[str] = None) -> NeuronId:
        if label is not None and label in self._labels:
            raise NetworkError(f"neuron label '{label}' already in use", {"label": label})
        nid = len(self.neurons)
        self.neurons.append(Neuron(id=nid, kind=NeuronKind(kind), label=label))
        self.incoming.append([])
        self.outgoing.append([])
        if label is not None:
            self._labels[label] = nid
        return nid

    def add_synapse(
        self,
        pre: NeuronId,
        post: NeuronId,
        ltm: float = 0.0,
        delay: int = 1,
        stm: float = 0.0,
    ) -> Synapse:
        self.check_ids((pre, post))
        if (pre, post) in self._edges:
            raise NetworkError(f"synapse {pre}->{post} already exists", {"pre": pre, "post": post})
        if delay < 1:
            raise NetworkError("synapse delay must be at least one tick", {"delay": delay})
        weight = DualTraceWeight(
            ltm=min(max(ltm, 0.0), self.params.w_max),
            stm=min(max(stm, 0.0), self.params.s_max),
        )
        sign = -1 if self.neurons[pre].kind is NeuronKind.INHIBITORY else 1
        syn = Synapse(index=len(self.synapses), pre=pre, post=post, weight=weight, delay=delay, sign=sign)
        self.synapses.append(syn)
        self.incoming[post].append(syn.index)
        self.outgoing[pre].append(syn.index)
        self.delay_buffers.append(deque([0.0] * delay, maxlen=delay))
        self._edges[(pre, post)] = syn.index
        return syn

    def find_synapse(self, pre: NeuronId, post: NeuronId) -> Optional[Synapse]:
        index = self._edges.get((pre, post))
        return None if index is None else self.synapses[index]

    def effective_weight(self, pre: NeuronId, post: NeuronId) -> float:
        syn = self.find_synapse(pre, post)
        return 0.0 if syn is None else syn.weight.effective(self.params.w_max)

    def set_delay(self, syn: Synapse, delay: int) -> None:
        if delay < 1:
            raise NetworkError("synapse delay must be at least one tick", {"delay": delay})
        if delay != syn.delay:
            syn.delay = delay
            self.delay_buffers[syn.index] = deque([0.0] * delay, maxlen=delay)

    def max_delay(self) -> int:
        return max((s.delay for s in self.synapses), default=1)

    def neuron_by_label(self, label: str) -> NeuronId:
        try:
            return self._labels[label]
        except KeyError:
            raise NetworkError(f"unknown neuron label '{label}'", {"label": label}) from None

    def has_label(self, label: str) -> bool:
        return label in self._labels

    def label_of(self, nid: NeuronId) -> str:
        label = self.neurons[nid].label
        return label if label is not None else str(nid)

    def check_ids(self, ids: Iterable[NeuronId]) -> None:
        n = len(self.neurons)
        for nid in ids:
            if not isinstance(nid, (int, np.integer)) or not 0 <= nid < n:
                raise NetworkError(f"unknown neuron id {nid!r}", {"neuron": repr(nid)})

    def excitatory_sources(self, nid: NeuronId) -> frozenset:
        return frozenset(self.synapses[i].pre for i in self.incoming[nid] if self.synapses[i].sign > 0)

    # -- episodes ------------------------------------------------------------

    def reset_activity(self) -> None:
        """Silence every neuron and clear delay lines and pending injections."""
        for neuron in self.neurons:
            neuron.rate = 0.0
            neuron.fired_flag = False
        for i, syn in enumerate(self.synapses):
            self.delay_buffers[i] = deque([0.0] * syn.delay, maxlen=syn.delay)
        self.schedule = []

    def clone(self) -> "Network":
        listeners, self.listeners = self.listeners, []
        try:
            return copy.deepcopy(self)
        finally:
            self.listeners = listeners

    def to_digraph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(len(self.neurons)))
        graph.add_edges_from((s.pre, s.post) for s in self.synapses)
        return graph

    def edge_set_hash(self) -> str:
        digest = hashlib.sha256()
        for syn in sorted(self.synapses, key=lambda s: (s.pre, s.post)):
            digest.update(
                f"{syn.pre}>{syn.post}:{syn.delay}:{syn.sign}:{syn.weight.ltm.hex()}:{syn.weight.stm.hex()};".encode()
            )
        return digest.hexdigest()

    def scheduled_input(self, tick: int) -> Dict[NeuronId, float]:
        totals: Dict[NeuronId, float] = {}
        for item in self.schedule:
            if item.start <= tick < item.stop:
                for nid in item.neurons:
                    totals[nid] = totals.get(nid, 0.0) + item.strength
        return totals


def _validate_external(net: Network, external: Optional[Mapping[NeuronId, float]]) -> Dict[NeuronId, float]:
    if not external:
        return {}
    net.check_ids(external.keys())
    for nid, value in external.items():
        if value is None or math.isnan(value) or value < 0:
            raise StimulusError(f"invalid injection {value!r} for neuron {nid}", {"neuron": nid, "value": value})
    return dict(external)


def step_network(
    net: Network,
    external: Optional[Mapping[NeuronId, float]] = None,
    order: Optional[Sequence[NeuronId]] = None,
) -> TickReport:
    """Advance the network by one synchronous tick.

    ``order`` only changes the iteration order over neurons; results are
    identical for every permutation.
    """
    injected = _validate_external(net, external)
    params = net.params
    n = len(net.neurons)
    tick = net.tick

    for nid, value in net.scheduled_input(tick).items():
        injected[nid] = injected.get(nid, 0.0) + value

    sigma = np.zeros(n)
    w_max = params.w_max
    for nid in (order if order is not None else range(n)):
        total = 0.0
        # fixed summation order: ascending synapse index
        for idx in net.incoming[nid]:
            syn = net.synapses[idx]
            delayed = net.delay_buffers[idx][0]
            if delayed:
                total += syn.sign * syn.weight.effective(w_max) * delayed
        total += injected.get(nid, 0.0)
        sigma[nid] = total if total > 0.0 else 0.0

    rates = activation(sigma, params) if n else np.zeros(0)
    for neuron in net.neurons:
        if neuron.clamped:
            rates[neuron.id] = 0.0

    if net.groups:
        from neurocortex.competition import apply_groups

        apply_groups(net, sigma, rates)

    fired: List[NeuronId] = []
    f_thr = params.f_thr
    for neuron in net.neurons:
        rate = float(rates[neuron.id])
        neuron.rate = rate
        neuron.fired_flag = rate >= f_thr
        if neuron.fired_flag:
            fired.append(neuron.id)

    for idx, syn in enumerate(net.synapses):
        net.delay_buffers[idx].append(net.neurons[syn.pre].rate)

    net.tick = tick + 1
    if net.schedule:
        net.schedule = [item for item in net.schedule if item.stop > net.tick]
    report = TickReport(
        tick=tick,
        fired=tuple(fired),
        sigma=tuple(float(s) for s in sigma),
        rates=tuple(n.rate for n in net.neurons),
    )
    if fired:
        logger.debug("tick %d fired %s", tick, fired)
    for listener in list(net.listeners):
        listener(report)
    return report


def inject_pattern(net: Network, pattern: Iterable[NeuronId], strength: float, duration: int) -> None:
    """Schedule a constant injection starting with the next computed tick.

    Overlapping schedules on the same neuron add up.
    """
    neurons = tuple(sorted(set(pattern)))
    net.check_ids(neurons)
    if math.isnan(strength) or strength < 0:
        raise StimulusError("injection strength must be non-negative", {"strength": strength})
    if duration < 1:
        raise StimulusError("injection duration must be at least one tick", {"duration": duration})
    if not neurons:
        return
    net.schedule.append(ScheduledInjection(neurons, float(strength), net.tick, net.tick + duration))


def read_state(net: Network) -> StateSnapshot:
    return StateSnapshot(
        tick=net.tick,
        rates=tuple(n.rate for n in net.neurons),
        fired=tuple(n.fired_flag for n in net.neurons),
        weights=tuple((s.pre, s.post, s.weight.ltm, s.weight.stm) for s in net.synapses),
    )


def run_ticks(net: Network, ticks: int, external: Optional[Mapping[NeuronId, float]] = None) -> List[TickReport]:
    """Step ``ticks`` times holding ``external`` constant."""
    return [step_network(net, external) for _ in range(ticks)]
