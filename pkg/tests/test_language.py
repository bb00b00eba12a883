import pytest

from neurocortex.config import NetParams
from neurocortex.exceptions import LexiconError, NetworkError
from neurocortex.language import (
    UNKNOWN,
    Lexicon,
    add_word,
    generate_sentence,
    ground_word,
    learn_sentence,
    render,
)
from neurocortex.netcore import Network

from .conftest import build_cat_world


class TestLexicon:
    def test_one_neuron_per_word(self, net):
        lexicon = Lexicon(net)
        dog = add_word(lexicon, "dog")
        assert net.label_of(dog.neuron) == "dog"
        assert "dog" in lexicon
        assert len(lexicon) == 1
        assert lexicon.word_at(dog.neuron) == dog

    def test_duplicate_and_empty_words(self, net):
        lexicon = Lexicon(net)
        lexicon.add_word("dog")
        with pytest.raises(LexiconError):
            lexicon.add_word("dog")
        with pytest.raises(LexiconError):
            lexicon.add_word("  ")

    def test_unknown_word(self, net):
        with pytest.raises(LexiconError):
            Lexicon(net).get("unicorn")


class TestGrounding:
    def test_meaning_and_reverse_lookup(self, net):
        features, lexicon = build_cat_world(net)
        dog = lexicon.get("dog")
        assert lexicon.meaning(dog) == frozenset({features["animal"], features["furry"], features["barks"]})
        names = [w.text for w in lexicon.words_for(features["animal"])]
        assert names == ["dog", "cat", "cow"]

    def test_grounding_is_idempotent(self, net):
        features, lexicon = build_cat_world(net)
        before = net.edge_set_hash()
        dog = lexicon.get("dog")
        ground_word(net, lexicon, dog, [features["animal"], features["furry"], features["barks"]], 0.5)
        assert net.edge_set_hash() == before

    def test_regrounding_keeps_the_stronger_weight(self, net):
        features, lexicon = build_cat_world(net)
        dog = lexicon.get("dog")
        ground_word(net, lexicon, dog, [features["animal"]], 0.2)
        assert net.effective_weight(features["animal"], dog.neuron) == 0.5
        ground_word(net, lexicon, dog, [features["animal"]], 0.9)
        assert net.effective_weight(features["animal"], dog.neuron) == 0.9

    def test_grounding_needs_features(self, net):
        lexicon = Lexicon(net)
        word = lexicon.add_word("dog")
        with pytest.raises(LexiconError):
            ground_word(net, lexicon, word, [], 0.5)
        with pytest.raises(NetworkError):
            ground_word(net, lexicon, word, [42], 0.5)
        feature = net.add_neuron()
        with pytest.raises(LexiconError):
            ground_word(net, lexicon, word, [feature], 0.0)


class TestSentences:
    def test_competing_position_becomes_open_slot(self, cat_world):
        net, features, lexicon, pattern = cat_world
        assert pattern.open_slots == 1
        assert [slot.is_open for slot in pattern.slots] == [False, False, True]
        members = {lexicon.word_at(m).text for m in pattern.slot_pools[0].members}
        assert members == {"dog", "cat", "cow"}
        assert pattern.describe().startswith("this is SLOT{")

    def test_slot_candidates_share_the_chain(self, cat_world):
        net, _, lexicon, _ = cat_world
        is_ = lexicon.get("is").neuron
        weights = {net.effective_weight(is_, lexicon.get(w).neuron) for w in ("dog", "cat", "cow")}
        assert len(weights) == 1
        assert weights.pop() > 0.5

    @pytest.mark.parametrize(
        "context, expected",
        [
            (("animal", "furry", "meows"), "this is cat"),
            (("animal", "furry", "barks"), "this is dog"),
            (("animal", "moos", "horns"), "this is cow"),
        ],
    )
    def test_context_fills_the_slot(self, cat_world, context, expected):
        net, features, lexicon, pattern = cat_world
        words = generate_sentence(net, lexicon, pattern, [features[f] for f in context])
        assert render(words) == expected

    def test_empty_context_is_unknown(self, cat_world):
        net, _, lexicon, pattern = cat_world
        words = generate_sentence(net, lexicon, pattern, [])
        assert words[-1] is UNKNOWN
        assert render(words) == "this is UNKNOWN"

    def test_generation_is_deterministic(self, cat_world):
        net, features, lexicon, pattern = cat_world
        context = [features["animal"], features["furry"], features["meows"]]
        outputs = {render(generate_sentence(net, lexicon, pattern, context)) for _ in range(10)}
        assert outputs == {"this is cat"}

    def test_generation_leaves_network_untouched(self, cat_world):
        net, features, lexicon, pattern = cat_world
        before = net.edge_set_hash()
        generate_sentence(net, lexicon, pattern, [features["animal"]])
        assert net.edge_set_hash() == before
        assert net.groups == []

    def test_sentence_without_rivals_has_no_slots(self):
        net = Network(NetParams())
        lexicon = Lexicon(net)
        for text in ("hello", "world"):
            lexicon.add_word(text)
        pattern = learn_sentence(net, lexicon, ["hello", "world"], reps=5)
        assert pattern.open_slots == 0
        assert render(generate_sentence(net, lexicon, pattern, [])) == "hello world"

    def test_unknown_word_in_sentence(self, net):
        lexicon = Lexicon(net)
        lexicon.add_word("this")
        with pytest.raises(LexiconError):
            learn_sentence(net, lexicon, ["this", "unicorn"], reps=1)

    def test_ungrounded_word_is_not_a_slot(self, cat_world):
        net, features, lexicon, cat_pattern = cat_world
        lexicon.add_word("red")
        pattern = learn_sentence(net, lexicon, ["this", "is", "red"], reps=20)
        assert pattern.open_slots == 0
        assert pattern.describe() == "this is red"
        assert render(generate_sentence(net, lexicon, pattern, [])) == "this is red"
        context = [features[f] for f in ("animal", "furry", "meows")]
        assert render(generate_sentence(net, lexicon, cat_pattern, context)) == "this is cat"

    def test_relearning_strengthens_the_same_pattern(self, net):
        _, lexicon = build_cat_world(net)
        this, is_, dog = (lexicon.get(w).neuron for w in ("this", "is", "dog"))
        first = learn_sentence(net, lexicon, ["this", "is", "dog"], reps=2)
        before = (net.find_synapse(this, is_).weight.ltm, net.find_synapse(is_, dog).weight.ltm)
        second = learn_sentence(net, lexicon, ["this", "is", "dog"], reps=2)
        after = (net.find_synapse(this, is_).weight.ltm, net.find_synapse(is_, dog).weight.ltm)
        assert second.describe() == first.describe()
        assert second.slot_pools[0].members == first.slot_pools[0].members
        assert all(a > b for a, b in zip(after, before))

    def test_growing_context_keeps_its_winner(self, cat_world):
        net, features, lexicon, pattern = cat_world
        steps = [("moos",), ("moos", "meows"), ("moos", "meows", "furry"), ("moos", "meows", "furry", "animal")]
        filled = [
            render(generate_sentence(net, lexicon, pattern, [features[f] for f in context])).split()[-1]
            for context in steps
        ]
        assert filled[0] == "cow"
        assert filled[-1] == "cat"
        first_cat = filled.index("cat")
        assert set(filled[first_cat:]) == {"cat"}

    def test_slot_patterns_compose_with_candidates(self, cat_world):
        net, features, lexicon, this_is = cat_world
        for text in ("that", "was"):
            lexicon.add_word(text)
        that_was = learn_sentence(net, lexicon, ["that", "was", "cow"], reps=20)
        assert that_was.open_slots == 1
        contexts = {
            "dog": ("animal", "furry", "barks"),
            "cat": ("animal", "furry", "meows"),
            "cow": ("animal", "moos", "horns"),
        }
        sentences = {
            render(generate_sentence(net, lexicon, pattern, [features[f] for f in context]))
            for pattern in (this_is, that_was)
            for context in contexts.values()
        }
        assert len(sentences) == 2 * len(contexts)
        assert {s.split()[-1] for s in sentences} == set(contexts)
        assert "that was dog" in sentences and "this is cow" in sentences
        # two frames of two words each, plus one word per candidate
        assert len(lexicon) == 2 * 2 + len(contexts)
