"""Sandglass (convergent-divergent) architectures and positional measures.

A sandglass narrows layer by layer into a waist and widens again. Every
route from the inputs to the outputs crosses the waist, which is the
narrowest shell of relays; :func:`find_kernel` ranks neurons by it.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx
import numpy as np

from neurocortex.config import NetParams, TopologyParams, parse_key_values
from neurocortex.exceptions import ConfigurationError, TopologyError
from neurocortex.netcore import Network, NeuronId, step_network

logger = logging.getLogger(__name__)

Expressway = Tuple[int, int, int, int]  # (from_layer, from_index, to_layer, to_index)


@dataclass(frozen=True)
class SandglassSpec:
    layer_sizes: Tuple[int, ...]
    fan_in: Union[int, Tuple[int, ...]] = 2
    delay: int = 1
    weight: float = 0.5
    seed: int = 0
    expressways: Tuple[Expressway, ...] = ()

    def __post_init__(self) -> None:
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "expressways", tuple(tuple(e) for e in self.expressways))
        if not isinstance(self.fan_in, int):
            object.__setattr__(self, "fan_in", tuple(int(k) for k in self.fan_in))

        if len(sizes) < 3:
            raise TopologyError("a sandglass needs at least three layers", {"layer_sizes": list(sizes)})
        if any(s < 1 for s in sizes):
            raise TopologyError("layer sizes must be positive", {"layer_sizes": list(sizes)})
        smallest = min(sizes)
        if sizes.count(smallest) != 1:
            raise TopologyError("no strictly smallest waist layer", {"layer_sizes": list(sizes)})
        waist = sizes.index(smallest)
        if waist in (0, len(sizes) - 1):
            raise TopologyError("the waist cannot be an input or output layer", {"layer_sizes": list(sizes)})
        if any(a < b for a, b in zip(sizes[:waist], sizes[1 : waist + 1])):
            raise TopologyError("layers must narrow towards the waist", {"layer_sizes": list(sizes)})
        if any(a > b for a, b in zip(sizes[waist:], sizes[waist + 1 :])):
            raise TopologyError("layers must widen after the waist", {"layer_sizes": list(sizes)})

        fans = self.fans
        if len(fans) != len(sizes) - 1 or any(k < 1 for k in fans):
            raise TopologyError("fan_in needs one positive count per layer transition", {"fan_in": list(fans)})
        if self.delay < 1:
            raise TopologyError("delay must be at least one tick", {"delay": self.delay})
        if not self.weight > 0:
            raise TopologyError("weight must be positive", {"weight": self.weight})
        for road in self.expressways:
            fl, fi, tl, ti = road
            if not (0 <= fl < tl < len(sizes) and 0 <= fi < sizes[fl] and 0 <= ti < sizes[tl]):
                raise TopologyError("expressway endpoints out of range", {"expressway": list(road)})

    @property
    def waist(self) -> int:
        return self.layer_sizes.index(min(self.layer_sizes))

    @property
    def fans(self) -> Tuple[int, ...]:
        if isinstance(self.fan_in, int):
            return (self.fan_in,) * (len(self.layer_sizes) - 1)
        return self.fan_in


@dataclass(frozen=True)
class KernelScore:
    neuron: NeuronId
    score: float
    autonomy: float
    power: float
    shell: int = 0


@dataclass(frozen=True)
class PositionReport:
    neuron: NeuronId
    distance_from_inputs: Optional[int]
    distance_to_outputs: Optional[int]
    reach: int
    influence: float
    autonomy: float
    kernel_score: float = 0.0


@dataclass
class Sandglass:
    net: Network
    spec: SandglassSpec
    layers: List[List[NeuronId]] = field(default_factory=list)

    @property
    def inputs(self) -> List[NeuronId]:
        return self.layers[0]

    @property
    def outputs(self) -> List[NeuronId]:
        return self.layers[-1]

    @property
    def waist(self) -> List[NeuronId]:
        return self.layers[self.spec.waist]


def layer_ids(spec: SandglassSpec) -> List[List[NeuronId]]:
    """Neuron ids per layer; layers are numbered consecutively from 0."""
    ids, start = [], 0
    for size in spec.layer_sizes:
        ids.append(list(range(start, start + size)))
        start += size
    return ids


def _round_robin(rng: np.random.Generator, sources: int, targets: int, per_source: int) -> List[Tuple[int, int]]:
    """Give each source ``per_source`` distinct targets, spreading load evenly."""
    order = rng.permutation(targets)
    pairs, cursor = [], 0
    for src in rng.permutation(sources):
        for offset in range(per_source):
            pairs.append((int(src), int(order[(cursor + offset) % targets])))
        cursor += per_source
    return pairs


def build_sandglass(spec: SandglassSpec, params: Optional[NetParams] = None) -> Network:
    return build_sandglass_layers(spec, params).net


def build_sandglass_layers(spec: SandglassSpec, params: Optional[NetParams] = None) -> Sandglass:
    """Build the layered graph; convergent up to the waist, divergent after."""
    net = Network(params)
    layers = layer_ids(spec)
    for depth, layer in enumerate(layers):
        for index, _ in enumerate(layer):
            net.add_neuron(label=f"L{depth}_{index}")

    rng = np.random.default_rng(spec.seed)
    for depth, k in enumerate(spec.fans):
        src_layer, dst_layer = layers[depth], layers[depth + 1]
        if len(dst_layer) <= len(src_layer):
            pairs = _round_robin(rng, len(src_layer), len(dst_layer), min(k, len(dst_layer)))
        else:
            pairs = [(s, t) for t, s in _round_robin(rng, len(dst_layer), len(src_layer), min(k, len(src_layer)))]
        for s, t in sorted(pairs):
            net.add_synapse(src_layer[s], dst_layer[t], ltm=spec.weight, delay=spec.delay)

    for fl, fi, tl, ti in spec.expressways:
        pre, post = layers[fl][fi], layers[tl][ti]
        if net.find_synapse(pre, post) is None:
            net.add_synapse(pre, post, ltm=spec.weight, delay=spec.delay)

    logger.info(
        "built sandglass %s with %d synapses (edge hash %s)",
        list(spec.layer_sizes), len(net.synapses), net.edge_set_hash()[:12],
    )
    return Sandglass(net=net, spec=spec, layers=layers)


def parse_sandglass(text: str, source: str = "<topology>") -> SandglassSpec:
    """Read a key=value sandglass description.

    Keys: ``layers`` (comma list), ``fan_in`` (int or comma list), ``delay``,
    ``weight``, ``seed`` and ``expressways`` (``fl:fi>tl:ti`` separated by ``;``).
    """
    pairs = parse_key_values(text.splitlines(), source)
    unknown = set(pairs) - {"layers", "fan_in", "delay", "weight", "seed", "expressways"}
    if unknown:
        raise ConfigurationError(f"{source}: unknown keys {sorted(unknown)}", {"keys": sorted(unknown)})
    if "layers" not in pairs:
        raise ConfigurationError(f"{source}: missing 'layers'")
    try:
        layers = tuple(int(v) for v in pairs["layers"].split(","))
        fans = tuple(int(v) for v in pairs.get("fan_in", "2").split(","))
        roads = []
        for item in filter(None, (r.strip() for r in pairs.get("expressways", "").split(";"))):
            left, right = item.split(">")
            fl, fi = left.split(":")
            tl, ti = right.split(":")
            roads.append((int(fl), int(fi), int(tl), int(ti)))
        return SandglassSpec(
            layer_sizes=layers,
            fan_in=fans[0] if len(fans) == 1 else fans,
            delay=int(pairs.get("delay", 1)),
            weight=float(pairs.get("weight", 0.5)),
            seed=int(pairs.get("seed", 0)),
            expressways=tuple(roads),
        )
    except ValueError as exc:
        raise ConfigurationError(f"{source}: {exc}") from exc


def logic_distance(net: Network, source: NeuronId, target: NeuronId) -> Optional[int]:
    """Number of synapses on the shortest directed path, ``None`` if unreachable."""
    net.check_ids((source, target))
    try:
        return nx.shortest_path_length(net.to_digraph(), source, target)
    except nx.NetworkXNoPath:
        return None


def _probe_delta(net: Network, probe: Dict[NeuronId, float], horizon: int) -> np.ndarray:
    baseline, probed = net.clone(), net.clone()
    baseline.reset_activity()
    probed.reset_activity()
    delta = np.zeros(len(net))
    for _ in range(horizon):
        base = np.asarray(step_network(baseline).rates)
        test = np.asarray(step_network(probed, probe).rates)
        np.maximum(delta, np.abs(test - base), out=delta)
    return delta


def influence_score(
    net: Network,
    source: NeuronId,
    probe_strength: float,
    horizon: int,
) -> Dict[NeuronId, float]:
    """Per-neuron max |rate difference| between a probed and an unprobed run."""
    net.check_ids((source,))
    delta = _probe_delta(net, {source: probe_strength}, horizon)
    return {nid: float(delta[nid]) for nid in range(len(net))}


def _distances(graph: nx.DiGraph, sources: Iterable[NeuronId]) -> Dict[NeuronId, int]:
    return dict(nx.multi_source_dijkstra_path_length(graph, set(sources)))


def _output_reach(graph: nx.DiGraph, nid: NeuronId, outputs: Set[NeuronId]) -> int:
    return len((nx.descendants(graph, nid) | {nid}) & outputs)


def find_kernel(net: Network, inputs: Iterable[NeuronId], outputs: Iterable[NeuronId]) -> List[KernelScore]:
    """Rank neurons by how narrow a relay shell they sit in, best first.

    Relays are neurons outside the input and output sets that are reached
    from some input and reach some output. Relays at the same logic distance
    from the inputs form a shell; a relay scores the size of the narrowest
    shell over the size of its own, so sandglass waist neurons score 1 and
    every wider layer less. Inputs, outputs and disconnected neurons score 0.

    ``autonomy`` is the shortest distance from any input over the largest
    such distance and ``power`` the fraction of outputs the neuron reaches;
    they break ties between equal scores.
    """
    inputs, outputs = sorted(set(inputs)), sorted(set(outputs))
    if not inputs or not outputs:
        raise TopologyError("find_kernel needs inputs and outputs")
    net.check_ids(inputs + outputs)
    graph = net.to_digraph()
    d_in = _distances(graph, inputs)
    max_in = max(d_in.values(), default=0)
    output_set = set(outputs)
    boundary = set(inputs) | output_set

    reach = {nid: _output_reach(graph, nid, output_set) for nid in range(len(net))}
    relays = {nid for nid in d_in if nid not in boundary and reach[nid]}
    shells = Counter(d_in[nid] for nid in relays)
    narrowest = min(shells.values(), default=0)

    scores = []
    for nid in range(len(net)):
        shell = shells[d_in[nid]] if nid in relays else 0
        scores.append(
            KernelScore(
                neuron=nid,
                score=narrowest / shell if shell else 0.0,
                autonomy=d_in[nid] / max_in if nid in d_in and max_in else 0.0,
                power=reach[nid] / len(outputs),
                shell=shell,
            )
        )
    scores.sort(key=lambda s: (-s.score, -s.power, -s.autonomy, s.neuron))
    return scores


def position_report(
    net: Network,
    inputs: Iterable[NeuronId],
    outputs: Iterable[NeuronId],
    params: Optional[TopologyParams] = None,
) -> Dict[NeuronId, PositionReport]:
    """Distances, output reach and probe influence for every neuron.

    Influence comes from one probe that drives all inputs at once.
    """
    params = params or TopologyParams()
    inputs, outputs = sorted(set(inputs)), sorted(set(outputs))
    kernel = {k.neuron: k.score for k in find_kernel(net, inputs, outputs)}
    graph = net.to_digraph()
    d_in = _distances(graph, inputs)
    d_out = _distances(graph.reverse(copy=False), outputs)
    output_set = set(outputs)

    delta = _probe_delta(net, {nid: params.probe_strength for nid in inputs}, params.horizon)
    peak = float(delta.max()) if len(delta) else 0.0

    reports = {}
    for nid in range(len(net)):
        influence = float(delta[nid])
        reports[nid] = PositionReport(
            neuron=nid,
            distance_from_inputs=d_in.get(nid),
            distance_to_outputs=d_out.get(nid),
            reach=_output_reach(graph, nid, output_set),
            influence=influence,
            autonomy=1.0 - influence / peak if peak else 1.0,
            kernel_score=kernel[nid],
        )
    return reports


def reaches_kernel(
    net: Network,
    source: NeuronId,
    kernel: Sequence[NeuronId],
    strength: float,
    horizon: int,
) -> bool:
    """Whether holding ``source`` at ``strength`` makes any kernel neuron fire."""
    net.check_ids([source, *kernel])
    probe = net.clone()
    probe.reset_activity()
    targets = set(kernel)
    for _ in range(horizon):
        report = step_network(probe, {source: strength})
        if targets.intersection(report.fired):
            return True
    return False
