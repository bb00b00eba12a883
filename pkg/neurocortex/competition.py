"""Lateral inhibition between neurons that share common inputs.

Groups are the cliques of the relation "shares at least ``overlap_threshold``
excitatory input sources". Inside a group the neuron with the largest summed
input wins; the others are silenced for that tick.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import AbstractSet, Dict, List, Mapping, Optional, Tuple

import networkx as nx
import numpy as np

from neurocortex.config import CompetitionParams, NetParams
from neurocortex.exceptions import NetworkError
from neurocortex.netcore import Network, NeuronId, activation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InhibitionGroup:
    members: Tuple[NeuronId, ...]
    overlap_threshold: int = 1
    inhibition_strength: float = 5.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(sorted(set(self.members))))

    def __contains__(self, nid: NeuronId) -> bool:
        return nid in self.members

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class WTAOutcome:
    winner: NeuronId
    rates: Dict[NeuronId, float]


def overlap_graph(
    net: Network,
    overlap_threshold: int,
    sources: Optional[Mapping[NeuronId, AbstractSet[NeuronId]]] = None,
) -> nx.Graph:
    """Undirected graph linking neurons that share enough input sources.

    ``sources`` restricts the comparison to the given neurons and input sets;
    by default every neuron is compared on its excitatory synapses.
    """
    if sources is None:
        sources = {nid: net.excitatory_sources(nid) for nid in range(len(net))}
    by_source: Dict[NeuronId, List[NeuronId]] = {}
    for nid, srcs in sources.items():
        for src in srcs:
            by_source.setdefault(src, []).append(nid)
    graph = nx.Graph()
    seen = set()
    for targets in by_source.values():
        for u, v in combinations(sorted(targets), 2):
            if (u, v) in seen:
                continue
            seen.add((u, v))
            shared = len(sources[u] & sources[v])
            if shared >= overlap_threshold:
                graph.add_edge(u, v, overlap=shared)
    return graph


def build_groups(
    net: Network,
    overlap_threshold: int = 1,
    inhibition_strength: float = 5.0,
    sources: Optional[Mapping[NeuronId, AbstractSet[NeuronId]]] = None,
) -> List[InhibitionGroup]:
    """Partition competing neurons into disjoint cliques, strongest overlaps first."""
    if overlap_threshold < 1:
        raise NetworkError("overlap_threshold must be at least 1", {"overlap_threshold": overlap_threshold})
    graph = overlap_graph(net, overlap_threshold, sources)
    edges = sorted(graph.edges(data="overlap"), key=lambda e: (-e[2], min(e[0], e[1]), max(e[0], e[1])))
    assigned: set = set()
    groups: List[InhibitionGroup] = []
    for u, v, _ in edges:
        if u in assigned or v in assigned:
            continue
        clique = {u, v}
        candidates = set(graph[u]) & set(graph[v])
        while True:
            viable = [
                w for w in candidates
                if w not in assigned and w not in clique and all(graph.has_edge(w, m) for m in clique)
            ]
            if not viable:
                break
            best = min(viable, key=lambda w: (-sum(graph[w][m]["overlap"] for m in clique), w))
            clique.add(best)
        assigned |= clique
        groups.append(InhibitionGroup(tuple(clique), overlap_threshold, inhibition_strength))
    groups.sort(key=lambda g: g.members)
    logger.info("built %d inhibition groups (threshold %d)", len(groups), overlap_threshold)
    return groups


def _fan_in(net: Network, nid: NeuronId) -> int:
    return len(net.excitatory_sources(nid))


def resolve_wta(
    group: InhibitionGroup,
    sigmas: Mapping[NeuronId, float],
    params: NetParams,
    competition: Optional[CompetitionParams] = None,
    net: Optional[Network] = None,
) -> WTAOutcome:
    """Pick the group member with the largest input and silence the rest.

    Ties go to the lowest neuron id. In soft mode every member's input is
    first reduced by ``inhibition_strength`` per rival.
    """
    competition = competition or CompetitionParams()
    if not group.members:
        raise NetworkError("cannot resolve competition in an empty group")
    missing = [m for m in group.members if m not in sigmas]
    if missing:
        raise NetworkError("missing summed input for group members", {"missing": missing})

    if competition.wta_criterion == "fan_in":
        if net is None:
            raise NetworkError("fan-in competition needs the network")
        key = lambda m: (-_fan_in(net, m), -sigmas[m], m)  # noqa: E731
    else:
        key = lambda m: (-sigmas[m], m)  # noqa: E731
    winner = min(group.members, key=key)

    if competition.wta_mode == "soft":
        # graded: every member keeps the rate of its inhibited input
        penalty = group.inhibition_strength * (len(group.members) - 1)
        rates = {m: float(activation(max(0.0, float(sigmas[m]) - penalty), params)) for m in group.members}
        return WTAOutcome(winner=winner, rates=rates)

    rates = {m: 0.0 for m in group.members}
    rates[winner] = float(activation(float(sigmas[winner]), params))
    return WTAOutcome(winner=winner, rates=rates)


def attach_groups(
    net: Network,
    groups: List[InhibitionGroup],
    competition: Optional[CompetitionParams] = None,
) -> None:
    """Install groups into the stepping loop (replaces any attached before)."""
    net.groups = list(groups)
    net.competition = competition


def apply_groups(net: Network, sigma: np.ndarray, rates: np.ndarray) -> None:
    """Apply every attached group to this tick's freshly computed rates."""
    for group in net.groups:
        sigmas = {m: float(sigma[m]) for m in group.members}
        outcome = resolve_wta(group, sigmas, net.params, net.competition, net)
        for member, rate in outcome.rates.items():
            rates[member] = 0.0 if net.neurons[member].clamped else rate
