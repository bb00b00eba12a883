import math

import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from neurocortex.config import LogicParams, NetParams
from neurocortex.exceptions import RuleError
from neurocortex.logic import (
    Rule,
    RuleBase,
    RuleKind,
    build_nand,
    build_not,
    closure,
    compile_rules,
    consolidate_transitive,
    first_fire_times,
    infer,
    parse_rules,
    rule_weight,
    run_inference,
    truth_table,
)
from neurocortex.netcore import Network, activation

LOGIC = LogicParams()


def _compiled(*rules):
    net, rb = Network(NetParams()), RuleBase()
    compile_rules(net, rb, rules)
    return net, rb


def test_rule_weight():
    params = NetParams()
    weight = rule_weight(params, LOGIC)
    assert math.isclose(weight, 1.5 * (-math.log(0.8) / 0.02) / 20.0, rel_tol=1e-12)
    assert activation(weight * params.f_thr, params) >= params.f_thr


def test_rule_weight_is_capped():
    assert rule_weight(NetParams(), LogicParams(safety=5.0)) == 1.0


class TestInference:
    def test_implication_delivers_after_rule_delay(self):
        net, rb = _compiled(Rule.imp("a", "b"))
        assert first_fire_times(net, rb, ["a"]) == {"a": 0, "b": LOGIC.d_rule}

    def test_chain_timing(self):
        net, rb = _compiled(Rule.imp("a", "b"), Rule.imp("b", "c"))
        result = run_inference(net, rb, ["a"])
        assert result.derived == frozenset({"a", "b", "c"})
        assert result.first_fire["c"] == 4

    def test_inhibition_blocks_conclusion(self):
        net, rb = _compiled(Rule.imp("a", "b"), Rule.neg("x", "b"))
        assert infer(net, rb, ["a", "x"]) == {"a", "x"}
        assert infer(net, rb, ["a"]) == {"a", "b"}

    def test_false_atom_never_fires(self):
        net, rb = _compiled(Rule.imp("a", "z"), Rule.false("z"))
        assert "z" not in infer(net, rb, ["a", "z"])

    def test_no_facts_no_conclusions(self):
        net, rb = _compiled(Rule.imp("a", "b"))
        assert infer(net, rb, []) == set()

    def test_contradictory_rules_both_installed(self):
        net, rb = _compiled(Rule.imp("a", "b"), Rule.neg("a", "b"))
        assert [r.kind for r in rb.rules] == [RuleKind.IMP, RuleKind.NOT]
        assert "b" not in infer(net, rb, ["a"])

    def test_inference_is_repeatable(self):
        net, rb = _compiled(Rule.imp("a", "b"), Rule.imp("b", "c"))
        assert first_fire_times(net, rb, ["a"]) == first_fire_times(net, rb, ["a"])

    def test_unknown_fact(self):
        net, rb = _compiled(Rule.imp("a", "b"))
        with pytest.raises(RuleError):
            infer(net, rb, ["nope"])


_ATOMS = [f"p{i}" for i in range(10)]


@hyp_settings(max_examples=100, deadline=None)
@given(
    st.lists(st.tuples(st.sampled_from(_ATOMS), st.sampled_from(_ATOMS)), max_size=20),
    st.sets(st.sampled_from(_ATOMS), max_size=4),
)
def test_simulation_matches_forward_chaining(pairs, facts):
    net, rb = Network(NetParams()), RuleBase()
    for atom in _ATOMS:
        rb.register(net, atom)
    rules = [Rule.imp(premise, conclusion) for premise, conclusion in pairs]
    compile_rules(net, rb, rules)
    assert infer(net, rb, facts, horizon=30) == closure(rules, facts)


class TestCircuits:
    def test_not_gate(self):
        net, rb = Network(NetParams()), RuleBase()
        build_not(net, rb, "x", "out")
        table = truth_table(net, rb, ["x"], "out")
        assert table.as_dict() == {(True,): False, (False,): True}

    def test_implication_table(self):
        net, rb = _compiled(Rule.imp("a", "b"))
        assert truth_table(net, rb, ["a"], "b").as_dict() == {(True,): True, (False,): False}

    def test_nand_gate(self):
        net, rb = Network(NetParams()), RuleBase()
        build_nand(net, rb, "a", "b", "out")
        table = truth_table(net, rb, ["a", "b"], "out")
        assert table.as_dict() == {
            (True, True): False,
            (True, False): True,
            (False, True): True,
            (False, False): True,
        }
        assert table.render().splitlines()[0] == "a b | out"

    def test_bias_is_not_reported(self):
        net, rb = Network(NetParams()), RuleBase()
        build_not(net, rb, "x", "out")
        assert LOGIC.bias_atom not in infer(net, rb, [])

    def test_table_leaves_network_untouched(self):
        net, rb = Network(NetParams()), RuleBase()
        build_nand(net, rb, "a", "b", "out")
        before, tick = net.edge_set_hash(), net.tick
        truth_table(net, rb, ["a", "b"], "out")
        assert (net.edge_set_hash(), net.tick) == (before, tick)

    def test_assignment_length_checked(self):
        net, rb = _compiled(Rule.imp("a", "b"))
        with pytest.raises(RuleError):
            truth_table(net, rb, ["a"], "b", assignments=[(True, False)])


class TestTransitive:
    def test_shortcut_forms_and_speeds_inference(self):
        net, rb = _compiled(Rule.imp("a", "b"), Rule.imp("b", "c"))
        assert first_fire_times(net, rb, ["a"])["c"] == 4
        created = consolidate_transitive(net, rb, replays=50)
        assert [(e.premise, e.conclusion) for e in created] == [("a", "c")]
        assert created[0].replay < 50
        assert created[0].ltm >= rule_weight(net.params, LOGIC)
        assert first_fire_times(net, rb, ["a"])["c"] == 2

    def test_intermediate_rules_untouched(self):
        net, rb = _compiled(Rule.imp("a", "b"), Rule.imp("b", "c"))
        ab = net.find_synapse(rb.atom_id("a"), rb.atom_id("b")).weight.ltm
        consolidate_transitive(net, rb, replays=50)
        assert net.find_synapse(rb.atom_id("a"), rb.atom_id("b")).weight.ltm == ab

    def test_single_rule_has_nothing_to_shortcut(self):
        net, rb = _compiled(Rule.imp("a", "b"))
        assert consolidate_transitive(net, rb, replays=10) == []

    def test_longer_chains_shortcut_in_stages(self):
        net, rb = _compiled(Rule.imp("a", "b"), Rule.imp("b", "c"), Rule.imp("c", "d"))
        created = {(e.premise, e.conclusion): e.replay for e in consolidate_transitive(net, rb, replays=100)}
        assert {("a", "c"), ("b", "d"), ("a", "d")} <= set(created)
        assert created[("a", "d")] > created[("a", "c")]
        assert created[("a", "d")] > created[("b", "d")]

    def test_replays_must_be_positive(self):
        net, rb = _compiled(Rule.imp("a", "b"))
        with pytest.raises(RuleError):
            consolidate_transitive(net, rb, replays=0)


class TestParsing:
    def test_rule_file(self):
        rules = parse_rules("# gates\nIMP a b\nnot x b  # inhibit\n\nFALSE z\n")
        assert [str(r) for r in rules] == ["IMP a b", "NOT x b", "FALSE z"]

    def test_arity_error_names_line(self):
        with pytest.raises(RuleError) as info:
            parse_rules("IMP a b\nIMP a\n")
        assert info.value.line == 2
        assert info.value.message.startswith("line 2:")

    def test_unknown_kind(self):
        with pytest.raises(RuleError) as info:
            parse_rules("FOO a b")
        assert info.value.line == 1

    def test_bad_atom_name(self):
        with pytest.raises(RuleError):
            Rule.imp("a", "1b")
