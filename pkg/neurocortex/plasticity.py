"""Co-firing association, interval-dependent strengthening and depression.

Learning writes to the short-term trace of each synapse. The trace decays
every tick and only :func:`consolidate` moves it into the long-term weight.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Collection, Deque, Dict, Iterable, List, Mapping, Optional, Set, Tuple

from neurocortex.config import PlasticityParams
from neurocortex.exceptions import ConfigurationError
from neurocortex.netcore import Network, NeuronId, Synapse, TickReport, step_network

logger = logging.getLogger(__name__)

WeightDelta = Tuple[int, float]  # (synapse index, applied change)


@dataclass
class FiringHistory:
    """Recent firing events per neuron, bounded by the plasticity window."""

    window_W: int
    events: Dict[NeuronId, Deque[Tuple[int, float]]] = field(default_factory=dict)
    last_tick: Optional[int] = None
    last_fired: Tuple[NeuronId, ...] = ()

    def record_firing(self, nid: NeuronId, tick: int, rate: float) -> None:
        self.events.setdefault(nid, deque()).append((tick, rate))

    def record(self, report: TickReport) -> None:
        for nid in report.fired:
            self.record_firing(nid, report.tick, report.rates[nid])
        self.last_tick = report.tick
        self.last_fired = report.fired
        self.prune(report.tick)

    def prune(self, now: int) -> None:
        horizon = now - self.window_W
        for nid in list(self.events):
            queue = self.events[nid]
            while queue and queue[0][0] < horizon:
                queue.popleft()
            if not queue:
                del self.events[nid]

    def firings(self, nid: NeuronId) -> Iterable[Tuple[int, float]]:
        return self.events.get(nid, ())

    def fired_at(self, nid: NeuronId, tick: int) -> bool:
        return any(t == tick for t, _ in self.events.get(nid, ()))


def stdp_kernel(delta_t: int, params: PlasticityParams) -> float:
    """Weight change for a post-minus-pre firing interval ``delta_t``.

    Positive intervals potentiate, negative ones depress, both shrinking
    exponentially with the interval. Zero and out-of-window intervals give 0.
    """
    if delta_t == 0 or abs(delta_t) > params.window_W:
        return 0.0
    if delta_t > 0:
        return params.a_plus * math.exp(-delta_t / params.tau_plus)
    return -params.a_minus * math.exp(delta_t / params.tau_minus)


def _bump_stm(net: Network, syn: Synapse, delta: float) -> float:
    """Add ``delta`` to the short-term trace, clamped; returns the applied change."""
    before = syn.weight.stm
    after = min(max(before + delta, 0.0), net.params.s_max)
    syn.weight.stm = after
    return after - before


def apply_temporal_plasticity(
    net: Network,
    history: FiringHistory,
    params: PlasticityParams,
    synapses: Optional[Collection[int]] = None,
) -> List[WeightDelta]:
    """Apply the interval kernel to every synapse touched by this tick's firing.

    Each (pre, post) firing pair is counted once, at the tick the later of
    the two fires. ``synapses`` restricts learning to a subset of indices.
    """
    now = history.last_tick
    if now is None or not history.last_fired:
        return []
    fired_now = set(history.last_fired)
    touched: Set[int] = set()
    for nid in fired_now:
        touched.update(net.incoming[nid])
        touched.update(net.outgoing[nid])
    if synapses is not None:
        touched &= set(synapses)

    deltas: List[WeightDelta] = []
    for idx in sorted(touched):
        syn = net.synapses[idx]
        delta = 0.0
        if syn.post in fired_now:
            for t_pre, _ in history.firings(syn.pre):
                if t_pre < now:
                    delta += stdp_kernel(now - t_pre, params)
        if syn.pre in fired_now:
            for t_post, _ in history.firings(syn.post):
                if t_post < now:
                    delta += stdp_kernel(t_post - now, params)
        if delta:
            applied = _bump_stm(net, syn, delta)
            deltas.append((idx, applied))
    return deltas


@dataclass
class CofireTracker:
    """Counts co-firing of neuron pairs that have no common target yet."""

    counts: Dict[Tuple[NeuronId, NeuronId], int] = field(default_factory=dict)
    grown: List[NeuronId] = field(default_factory=list)


def _shared_targets(net: Network, u: NeuronId, v: NeuronId) -> List[NeuronId]:
    targets_u = {net.synapses[i].post for i in net.outgoing[u]}
    return sorted(t for t in (net.synapses[i].post for i in net.outgoing[v]) if t in targets_u)


def apply_cofire(
    net: Network,
    fired: Iterable[NeuronId],
    params: PlasticityParams,
    tracker: Optional[CofireTracker] = None,
) -> List[WeightDelta]:
    """Strengthen convergent synapses of neurons that fire in the same tick.

    With ``grow_new`` a pair that co-fires ``grow_threshold`` times without
    a shared target gets a freshly allocated one.
    """
    fired_sorted = sorted(set(fired))
    strengthen: Set[int] = set()
    for u, v in combinations(fired_sorted, 2):
        shared = _shared_targets(net, u, v)
        if shared:
            for target in shared:
                strengthen.add(net.find_synapse(u, target).index)
                strengthen.add(net.find_synapse(v, target).index)
        elif params.grow_new and tracker is not None:
            count = tracker.counts.get((u, v), 0) + 1
            if count >= params.grow_threshold:
                new = net.add_neuron()
                net.add_synapse(u, new, ltm=params.grow_weight, delay=1)
                net.add_synapse(v, new, ltm=params.grow_weight, delay=1)
                tracker.grown.append(new)
                tracker.counts.pop((u, v), None)
                logger.info("grew neuron %d as common target of %d and %d", new, u, v)
            else:
                tracker.counts[(u, v)] = count

    deltas: List[WeightDelta] = []
    for idx in sorted(strengthen):
        applied = _bump_stm(net, net.synapses[idx], params.eta_cofire)
        deltas.append((idx, applied))
    return deltas


def decay_stm(net: Network, params: PlasticityParams, ticks: int = 1) -> None:
    """Multiply every short-term trace by ``exp(-ticks / tau_stm)``."""
    factor = math.exp(-ticks / params.tau_stm)
    for syn in net.synapses:
        if syn.weight.stm:
            syn.weight.stm *= factor


def consolidate(net: Network, rate: float) -> None:
    """Move ``rate * stm`` of every synapse into its long-term weight."""
    if not 0 < rate <= 1:
        raise ConfigurationError("consolidation rate must be in (0, 1]", {"rate": rate})
    w_max = net.params.w_max
    for syn in net.synapses:
        moved = rate * syn.weight.stm
        if moved:
            syn.weight.ltm = min(syn.weight.ltm + moved, w_max)
            syn.weight.stm -= moved


def plastic_step(
    net: Network,
    history: FiringHistory,
    params: PlasticityParams,
    external: Optional[Mapping[NeuronId, float]] = None,
    cofire: bool = True,
    tracker: Optional[CofireTracker] = None,
    synapses: Optional[Collection[int]] = None,
) -> TickReport:
    """One learning tick: step, record, interval rule, co-firing rule, decay."""
    report = step_network(net, external)
    history.record(report)
    apply_temporal_plasticity(net, history, params, synapses)
    if cofire:
        apply_cofire(net, report.fired, params, tracker)
    decay_stm(net, params)
    return report
