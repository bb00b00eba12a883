"""Grounded lexicon, sentence patterns and sentence generation.

Every word is one neuron. Feature (picture) neurons project onto word
neurons, many features to one word. A learned sentence is a trained chain of
word neurons; positions whose word shares grounding features with rival
words become open slots, filled at generation time by winner-take-all over
the context-driven input.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from neurocortex.competition import InhibitionGroup, attach_groups, build_groups, resolve_wta
from neurocortex.config import CompetitionParams, LanguageParams, PlasticityParams
from neurocortex.exceptions import LexiconError
from neurocortex.netcore import Network, NeuronId, step_network
from neurocortex.sequence import SequenceSpec, train_sequence

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Word:
    text: str
    neuron: NeuronId


UNKNOWN = Word(text="UNKNOWN", neuron=-1)


@dataclass
class GroundingMap:
    """Feature -> word edges; the synapses themselves live in the network."""

    edges: Dict[NeuronId, Dict[NeuronId, float]] = field(default_factory=dict)

    def add(self, feature: NeuronId, word: NeuronId, weight: float) -> None:
        self.edges.setdefault(feature, {})[word] = weight

    def features_of(self, word: NeuronId) -> FrozenSet[NeuronId]:
        return frozenset(f for f, words in self.edges.items() if word in words)

    def words_of(self, feature: NeuronId) -> FrozenSet[NeuronId]:
        return frozenset(self.edges.get(feature, {}))


class Lexicon:
    """Registry of word neurons and their grounding."""

    def __init__(self, net: Network):
        self.net = net
        self.words: Dict[str, Word] = {}
        self.grounding = GroundingMap()
        self._by_neuron: Dict[NeuronId, Word] = {}

    def __contains__(self, text: str) -> bool:
        return text in self.words

    def __len__(self) -> int:
        return len(self.words)

    def add_word(self, text: str) -> Word:
        if not text or not text.strip():
            raise LexiconError("word text must be non-empty")
        if text in self.words:
            raise LexiconError(f"word '{text}' already in lexicon", {"word": text})
        word = Word(text=text, neuron=self.net.add_neuron(label=text))
        self.words[text] = word
        self._by_neuron[word.neuron] = word
        return word

    def register(self, word: Word) -> None:
        """Re-register an existing word neuron (snapshot restore)."""
        self.words[word.text] = word
        self._by_neuron[word.neuron] = word

    def get(self, text: str) -> Word:
        try:
            return self.words[text]
        except KeyError:
            raise LexiconError(f"unknown word '{text}'", {"word": text}) from None

    def word_at(self, nid: NeuronId) -> Optional[Word]:
        return self._by_neuron.get(nid)

    def meaning(self, word: Word) -> FrozenSet[NeuronId]:
        return self.grounding.features_of(word.neuron)

    def words_for(self, feature: NeuronId) -> List[Word]:
        return sorted((self._by_neuron[n] for n in self.grounding.words_of(feature) if n in self._by_neuron), key=lambda w: w.neuron)

    def grounded_inputs(self) -> Dict[NeuronId, FrozenSet[NeuronId]]:
        """Word neuron -> grounding features, for words that have any."""
        inputs = {w.neuron: self.meaning(w) for w in self.words.values()}
        return {nid: feats for nid, feats in inputs.items() if feats}


def add_word(lexicon: Lexicon, text: str) -> Word:
    return lexicon.add_word(text)


def ground_word(
    net: Network,
    lexicon: Lexicon,
    word: Word,
    features: Iterable[NeuronId],
    weight: float,
) -> None:
    """Connect each feature to the word neuron with at least ``weight``.

    Repeating the call with the same weight changes nothing.
    """
    feature_ids = tuple(sorted(set(features)))
    if not feature_ids:
        raise LexiconError("grounding needs at least one feature", {"word": word.text})
    net.check_ids(feature_ids + (word.neuron,))
    if not 0 < weight <= net.params.w_max:
        raise LexiconError("grounding weight must be in (0, w_max]", {"weight": weight})
    for feature in feature_ids:
        syn = net.find_synapse(feature, word.neuron)
        if syn is None:
            syn = net.add_synapse(feature, word.neuron, ltm=weight, delay=1)
        else:
            syn.weight.ltm = min(max(syn.weight.ltm, weight), net.params.w_max)
        lexicon.grounding.add(feature, word.neuron, syn.weight.ltm)


@dataclass(frozen=True)
class Slot:
    """A pattern position: either a fixed word or an open slot id."""

    word: Optional[Word] = None
    slot_id: Optional[int] = None

    @property
    def is_open(self) -> bool:
        return self.slot_id is not None


@dataclass(frozen=True)
class SentencePattern:
    slots: Tuple[Slot, ...]
    slot_pools: Dict[int, InhibitionGroup]
    gap: int
    source: Tuple[Word, ...]

    @property
    def open_slots(self) -> int:
        return len(self.slot_pools)

    def describe(self) -> str:
        parts = []
        for slot in self.slots:
            if slot.is_open:
                parts.append("SLOT{" + ",".join(str(m) for m in self.slot_pools[slot.slot_id].members) + "}")
            else:
                parts.append(slot.word.text)
        return " ".join(parts)


def _equalize(net: Network, pairs: Sequence[Tuple[NeuronId, NeuronId]], delay: int) -> None:
    """Give every (pre, post) pair the strongest weight found among them."""
    existing = [net.find_synapse(pre, post) for pre, post in pairs]
    ltm = max((s.weight.ltm for s in existing if s is not None), default=0.0)
    stm = max((s.weight.stm for s in existing if s is not None), default=0.0)
    for (pre, post), syn in zip(pairs, existing):
        if syn is None:
            syn = net.add_synapse(pre, post, ltm=ltm, delay=delay, stm=stm)
        else:
            net.set_delay(syn, delay)
            syn.weight.ltm, syn.weight.stm = ltm, stm


def learn_sentence(
    net: Network,
    lexicon: Lexicon,
    words: Sequence[Union[Word, str]],
    reps: int,
    settings: Optional[LanguageParams] = None,
    plasticity: Optional[PlasticityParams] = None,
    competition: Optional[CompetitionParams] = None,
) -> SentencePattern:
    """Train the word chain and turn competing positions into open slots."""
    settings = settings or LanguageParams()
    competition = competition or CompetitionParams()
    resolved = tuple(lexicon.get(w) if isinstance(w, str) else lexicon.get(w.text) for w in words)
    if not resolved:
        raise LexiconError("a sentence needs at least one word")
    gap = settings.sentence_gap
    train_sequence(
        net,
        SequenceSpec(
            items=tuple(w.neuron for w in resolved),
            gap=gap,
            strength=settings.cue_strength,
            repetitions=reps,
        ),
        plasticity,
    )

    # slot rivals share grounding features; chain inputs from other sentences do not count
    groups = build_groups(
        net, competition.overlap_threshold, competition.inhibition_strength, lexicon.grounded_inputs()
    )
    pool_of = {m: g for g in groups for m in g.members if len(g) >= 2}
    slots: List[Slot] = []
    pools: Dict[int, InhibitionGroup] = {}
    for position, word in enumerate(resolved):
        group = pool_of.get(word.neuron)
        if group is None:
            slots.append(Slot(word=word))
            continue
        slot_id = len(pools)
        pools[slot_id] = group
        slots.append(Slot(slot_id=slot_id))
        # a position is mutually exclusive: every candidate inherits the chain
        if position > 0:
            pred = resolved[position - 1].neuron
            _equalize(net, [(pred, m) for m in group.members], gap)
        if position + 1 < len(resolved):
            succ = resolved[position + 1].neuron
            _equalize(net, [(m, succ) for m in group.members], gap)

    pattern = SentencePattern(slots=tuple(slots), slot_pools=pools, gap=gap, source=resolved)
    logger.info("learned sentence pattern: %s", pattern.describe())
    return pattern


def generate_sentence(
    net: Network,
    lexicon: Lexicon,
    pattern: SentencePattern,
    context: Iterable[NeuronId],
    settings: Optional[LanguageParams] = None,
    competition: Optional[CompetitionParams] = None,
) -> List[Word]:
    """Replay the pattern under a context and fill each open slot.

    Context features are held on for the whole episode; the first fixed
    word is cued at tick 1 and slot ``i`` is read at tick ``1 + i * gap``.
    A slot yields :data:`UNKNOWN` when no candidate reaches threshold or
    the strongest input is shared by several candidates.
    """
    settings = settings or LanguageParams()
    context_ids = tuple(sorted(set(context)))
    net.check_ids(context_ids)

    saved_groups, saved_competition = net.groups, net.competition
    attach_groups(net, list(pattern.slot_pools.values()), competition)
    net.reset_activity()
    try:
        external_context = {f: settings.context_strength for f in context_ids}
        readout = {1 + i * pattern.gap: i for i in range(len(pattern.slots))}
        last = max(readout)
        first = pattern.slots[0]
        out: List[Word] = []
        for tick in range(last + 1):
            external = dict(external_context)
            if tick == 1 and not first.is_open:
                external[first.word.neuron] = external.get(first.word.neuron, 0.0) + settings.cue_strength
            report = step_network(net, external)
            position = readout.get(tick)
            if position is None:
                continue
            slot = pattern.slots[position]
            if not slot.is_open:
                out.append(slot.word)
                continue
            out.append(_fill_slot(net, lexicon, pattern.slot_pools[slot.slot_id], report.sigma, competition))
    finally:
        net.reset_activity()
        net.groups, net.competition = saved_groups, saved_competition
    return out


def _fill_slot(
    net: Network,
    lexicon: Lexicon,
    pool: InhibitionGroup,
    sigma: Sequence[float],
    competition: Optional[CompetitionParams],
) -> Word:
    sigmas = {m: sigma[m] for m in pool.members}
    outcome = resolve_wta(pool, sigmas, net.params, competition, net)
    best = sigmas[outcome.winner]
    tied = sum(1 for value in sigmas.values() if value == best)
    if tied > 1 or outcome.rates[outcome.winner] < net.params.f_thr:
        return UNKNOWN
    return lexicon.word_at(outcome.winner) or Word(text=net.label_of(outcome.winner), neuron=outcome.winner)


def render(words: Sequence[Word]) -> str:
    return " ".join(w.text for w in words)
