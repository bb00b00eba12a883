"""State owned by one simulation session."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set

from neurocortex.config import Settings
from neurocortex.exceptions import LexiconError
from neurocortex.language import Lexicon, SentencePattern, Word
from neurocortex.logic import RuleBase
from neurocortex.netcore import Network, NeuronId


@dataclass
class Session:
    """A network plus the registries the harness builds on top of it.

    The ``last_*`` fields hold the most recent results for ``measure`` and
    ``assert`` statements; they are not persisted.
    """

    session_id: str
    settings: Settings
    net: Network
    lexicon: Lexicon
    rules: RuleBase = field(default_factory=RuleBase)
    patterns: Dict[str, SentencePattern] = field(default_factory=dict)
    last_sentence: Optional[List[Word]] = None
    last_derived: Optional[Set[str]] = None
    last_recalled: Optional[List[NeuronId]] = None
    ticks_run: int = 0

    @classmethod
    def create(cls, session_id: str, settings: Settings) -> "Session":
        net = Network(settings.net)
        return cls(session_id=session_id, settings=settings, net=net, lexicon=Lexicon(net))

    def resolve(self, name: str) -> NeuronId:
        """Neuron id for a label or a decimal id."""
        if self.net.has_label(name):
            return self.net.neuron_by_label(name)
        if name.isdigit():
            nid = int(name)
            self.net.check_ids([nid])
            return nid
        return self.net.neuron_by_label(name)

    def latest_pattern(self) -> SentencePattern:
        if not self.patterns:
            raise LexiconError("no sentence pattern learned yet")
        return next(reversed(self.patterns.values()))
