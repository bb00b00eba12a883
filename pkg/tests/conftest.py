"""Shared fixtures for the neurocortex test suite."""

from pathlib import Path

import pytest

from neurocortex.config import LanguageParams, NetParams, PlasticityParams, Settings
from neurocortex.language import Lexicon, ground_word, learn_sentence
from neurocortex.netcore import Network

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch, tmp_path):
    """Keep NEUROCORTEX_* variables and stray .env files out of the tests."""
    import os

    for key in list(os.environ):
        if key.startswith("NEUROCORTEX_"):
            monkeypatch.delenv(key, raising=False)
    monkeypatch.chdir(tmp_path)


@pytest.fixture
def net() -> Network:
    return Network(NetParams())


@pytest.fixture
def plasticity() -> PlasticityParams:
    return PlasticityParams()


@pytest.fixture
def settings(tmp_path) -> Settings:
    return Settings(out_dir=str(tmp_path / "out"))


@pytest.fixture
def scenarios_dir() -> Path:
    return SCENARIOS


def make_chain(net: Network, labels, weight: float = 1.0, delay: int = 1):
    ids = [net.add_neuron(label=label) for label in labels]
    for pre, post in zip(ids, ids[1:]):
        net.add_synapse(pre, post, ltm=weight, delay=delay)
    return ids


def build_cat_world(net: Network):
    """Lexicon with dog, cat and cow grounded on shared picture features."""
    features = {name: net.add_neuron(label=name) for name in ("animal", "furry", "barks", "meows", "moos", "horns")}
    lexicon = Lexicon(net)
    for text in ("this", "is", "dog", "cat", "cow"):
        lexicon.add_word(text)
    weight = LanguageParams().ground_weight
    ground_word(net, lexicon, lexicon.get("dog"), [features[f] for f in ("animal", "furry", "barks")], weight)
    ground_word(net, lexicon, lexicon.get("cat"), [features[f] for f in ("animal", "furry", "meows")], weight)
    ground_word(net, lexicon, lexicon.get("cow"), [features[f] for f in ("animal", "moos", "horns")], weight)
    return features, lexicon


@pytest.fixture
def cat_world(net):
    features, lexicon = build_cat_world(net)
    pattern = learn_sentence(net, lexicon, ["this", "is", "dog"], reps=20)
    return net, features, lexicon, pattern
