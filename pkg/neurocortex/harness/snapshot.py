"""Versioned binary snapshots of a network and its session registries.

Layout (big-endian)::

    magic   4 bytes  b"NCSN"
    version u16
    crc32   u32      over the compressed payload
    length  u64      compressed payload size
    payload          zlib-compressed JSON of :class:`SnapshotFile`

Floats survive the JSON round trip exactly, so a loaded network continues
along the same trajectory as the saved one.
"""

import logging
import struct
import zlib
from collections import deque
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from neurocortex.competition import InhibitionGroup
from neurocortex.config import Settings
from neurocortex.exceptions import SnapshotChecksumError, SnapshotError, SnapshotVersionError
from neurocortex.harness.session import Session
from neurocortex.language import Lexicon, SentencePattern, Slot, Word
from neurocortex.logic import Rule, RuleBase
from neurocortex.models import (
    GroupRecord,
    InjectionRecord,
    NeuronRecord,
    PatternRecord,
    RegistryRecord,
    RngRecord,
    RuleRecord,
    SnapshotFile,
    SynapseRecord,
)
from neurocortex.netcore import Network, NeuronKind, ScheduledInjection

logger = logging.getLogger(__name__)

MAGIC = b"NCSN"
FORMAT_VERSION = 1
_HEADER = struct.Struct(">4sHIQ")

PathLike = Union[str, Path]


def _group_record(group: InhibitionGroup) -> GroupRecord:
    return GroupRecord(
        members=list(group.members),
        overlap_threshold=group.overlap_threshold,
        inhibition_strength=group.inhibition_strength,
    )


def _group(record: GroupRecord) -> InhibitionGroup:
    return InhibitionGroup(tuple(record.members), record.overlap_threshold, record.inhibition_strength)


def _rng_record(net: Network) -> RngRecord:
    state = net.rng.bit_generator.state
    return RngRecord(
        bit_generator=state["bit_generator"],
        state=str(state["state"]["state"]),
        inc=str(state["state"]["inc"]),
        has_uint32=state.get("has_uint32", 0),
        uinteger=state.get("uinteger", 0),
    )


def _registries(session: Session) -> RegistryRecord:
    grounding = [
        (feature, word, weight)
        for feature, words in sorted(session.lexicon.grounding.edges.items())
        for word, weight in sorted(words.items())
    ]
    patterns = {
        name: PatternRecord(
            slots=[(s.word.text if s.word else None, s.slot_id) for s in pattern.slots],
            pools={sid: _group_record(g) for sid, g in pattern.slot_pools.items()},
            gap=pattern.gap,
            source=[w.text for w in pattern.source],
        )
        for name, pattern in session.patterns.items()
    }
    rules = [
        RuleRecord(kind=r.kind.value, args=list(r.args), synapses=list(r.synapses), interneurons=list(r.interneurons))
        for r in session.rules.rules
    ]
    return RegistryRecord(
        words={text: w.neuron for text, w in session.lexicon.words.items()},
        grounding=grounding,
        patterns=patterns,
        atoms=dict(session.rules.atoms),
        rules=rules,
        bias=session.rules.bias,
    )


def to_snapshot(net: Network, session: Optional[Session] = None) -> SnapshotFile:
    return SnapshotFile(
        format_version=FORMAT_VERSION,
        params=net.params,
        tick=net.tick,
        neurons=[
            NeuronRecord(kind=n.kind.value, rate=n.rate, fired=n.fired_flag, label=n.label, clamped=n.clamped)
            for n in net.neurons
        ],
        synapses=[
            SynapseRecord(
                pre=s.pre,
                post=s.post,
                ltm=s.weight.ltm,
                stm=s.weight.stm,
                delay=s.delay,
                sign=s.sign,
                buffer=list(net.delay_buffers[s.index]),
            )
            for s in net.synapses
        ],
        schedule=[
            InjectionRecord(neurons=list(i.neurons), strength=i.strength, start=i.start, stop=i.stop)
            for i in net.schedule
        ],
        groups=[_group_record(g) for g in net.groups],
        competition=net.competition,
        rng=_rng_record(net),
        registries=_registries(session) if session is not None else RegistryRecord(),
    )


def network_from_snapshot(snapshot: SnapshotFile) -> Network:
    net = Network(snapshot.params)
    for record in snapshot.neurons:
        nid = net.add_neuron(kind=NeuronKind(record.kind), label=record.label)
        neuron = net.neurons[nid]
        neuron.rate, neuron.fired_flag, neuron.clamped = record.rate, record.fired, record.clamped
    for record in snapshot.synapses:
        syn = net.add_synapse(record.pre, record.post, ltm=record.ltm, delay=record.delay, stm=record.stm)
        if syn.sign != record.sign or len(record.buffer) != record.delay:
            raise SnapshotError("synapse record is inconsistent", {"synapse": syn.index})
        syn.weight.ltm, syn.weight.stm = record.ltm, record.stm
        net.delay_buffers[syn.index] = deque(record.buffer, maxlen=record.delay)
    net.schedule = [ScheduledInjection(tuple(i.neurons), i.strength, i.start, i.stop) for i in snapshot.schedule]
    net.groups = [_group(g) for g in snapshot.groups]
    net.competition = snapshot.competition
    net.tick = snapshot.tick

    rng = snapshot.rng
    try:
        net.rng = np.random.Generator(getattr(np.random, rng.bit_generator)())
    except AttributeError:
        raise SnapshotError(f"unknown bit generator '{rng.bit_generator}'") from None
    net.rng.bit_generator.state = {
        "bit_generator": rng.bit_generator,
        "state": {"state": int(rng.state), "inc": int(rng.inc)},
        "has_uint32": rng.has_uint32,
        "uinteger": rng.uinteger,
    }
    return net


def session_from_snapshot(snapshot: SnapshotFile, session_id: str, settings: Optional[Settings] = None) -> Session:
    settings = (settings or Settings()).model_copy(update={"net": snapshot.params})
    net = network_from_snapshot(snapshot)
    reg = snapshot.registries
    lexicon = Lexicon(net)
    for text, nid in reg.words.items():
        lexicon.register(Word(text=text, neuron=nid))
    for feature, word, weight in reg.grounding:
        lexicon.grounding.add(feature, word, weight)

    patterns = {}
    for name, record in reg.patterns.items():
        slots = tuple(
            Slot(word=lexicon.get(text)) if text is not None else Slot(slot_id=slot_id)
            for text, slot_id in record.slots
        )
        patterns[name] = SentencePattern(
            slots=slots,
            slot_pools={sid: _group(g) for sid, g in record.pools.items()},
            gap=record.gap,
            source=tuple(lexicon.get(text) for text in record.source),
        )

    rules = RuleBase(atoms=dict(reg.atoms), bias=reg.bias)
    rules.rules = [
        Rule(r.kind, tuple(r.args), synapses=tuple(r.synapses), interneurons=tuple(r.interneurons)) for r in reg.rules
    ]
    return Session(session_id=session_id, settings=settings, net=net, lexicon=lexicon, rules=rules, patterns=patterns)


def encode_snapshot(snapshot: SnapshotFile) -> bytes:
    payload = zlib.compress(snapshot.model_dump_json().encode("utf-8"))
    header = _HEADER.pack(MAGIC, snapshot.format_version, zlib.crc32(payload), len(payload))
    return header + payload


def decode_snapshot(data: bytes) -> SnapshotFile:
    """Validate the header and checksum, then parse the payload."""
    if len(data) < _HEADER.size:
        raise SnapshotChecksumError("snapshot is truncated", {"size": len(data)})
    magic, version, crc, length = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotError("not a neurocortex snapshot", {"magic": magic.hex()})
    if version != FORMAT_VERSION:
        raise SnapshotVersionError(version, FORMAT_VERSION)
    payload = data[_HEADER.size :]
    if len(payload) != length or zlib.crc32(payload) != crc:
        raise SnapshotChecksumError(
            "snapshot checksum mismatch", {"expected_length": length, "actual_length": len(payload)}
        )
    try:
        return SnapshotFile.model_validate_json(zlib.decompress(payload))
    except (zlib.error, ValidationError) as exc:
        raise SnapshotChecksumError("snapshot payload is corrupt", {"reason": str(exc)}) from exc


def save_snapshot(net: Network, path: PathLike, session: Optional[Session] = None) -> Path:
    path = Path(path)
    data = encode_snapshot(to_snapshot(net, session))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    except OSError as exc:
        raise SnapshotError(f"cannot write snapshot {path}", {"path": str(path)}) from exc
    logger.info("saved snapshot %s (%d bytes, %d synapses)", path, len(data), len(net.synapses))
    return path


def read_snapshot(path: PathLike) -> SnapshotFile:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise SnapshotError(f"cannot read snapshot {path}", {"path": str(path)}) from exc
    return decode_snapshot(data)


def load_snapshot(path: PathLike) -> Network:
    return network_from_snapshot(read_snapshot(path))


def load_session(path: PathLike, session_id: str = "default", settings: Optional[Settings] = None) -> Session:
    return session_from_snapshot(read_snapshot(path), session_id, settings)


def describe(snapshot: SnapshotFile) -> Tuple[int, int, int]:
    """(neurons, synapses, tick) for display."""
    return len(snapshot.neurons), len(snapshot.synapses), snapshot.tick
