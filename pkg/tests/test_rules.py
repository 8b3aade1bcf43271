import json

import pytest

from mindreader.cdg import MalformedDocument
from mindreader.defaults import DEFAULT_HIERARCHY, DEFAULT_RULES
from mindreader.rules import (
    ConceptHierarchy,
    ConceptRule,
    NodePattern,
    RuleSetInvalid,
    dump_rules,
    load_rules,
    rule_from_json,
    rule_to_json,
    validate_rules,
)
from mindreader import expr as ex


def shipped_text() -> str:
    return dump_rules(DEFAULT_HIERARCHY, DEFAULT_RULES)


class TestLoad:
    def test_shipped_rules_contain_required_vocabulary(self):
        hierarchy, rules = load_rules(shipped_text())
        ids = {r.rule_id for r in rules}
        assert {"counter_loop_while", "counter_loop_for", "aggregate",
                "swap_inline", "swap_call", "compare_and_swap_adjacent"} <= ids
        assert any(r.rhs_name == "average" for r in rules)
        assert hierarchy.rank("average") == 3
        assert hierarchy.rank("counterLoop") == 1
        assert hierarchy.rank("assign") == 0

    def test_roundtrip(self):
        hierarchy, rules = load_rules(shipped_text())
        again = dump_rules(hierarchy, sorted(rules, key=lambda r: DEFAULT_RULES.index(
            next(x for x in DEFAULT_RULES if x.rule_id == r.rule_id))))
        h2, r2 = load_rules(again)
        assert h2.ranks == hierarchy.ranks
        assert {x.rule_id for x in r2} == {x.rule_id for x in rules}

    def test_rules_sorted_by_priority_then_id(self):
        _, rules = load_rules(shipped_text())
        keys = [(-r.priority, r.rule_id) for r in rules]
        assert keys == sorted(keys)

    def test_empty_rule_file(self):
        hierarchy, rules = load_rules(json.dumps({"version": 1, "hierarchy": {}, "rules": []}))
        assert rules == []
        assert hierarchy.rank("assign") == 0  # base vocabulary filled in

    def test_bad_json(self):
        with pytest.raises(MalformedDocument):
            load_rules("{not json")

    def test_wrong_version(self):
        with pytest.raises(MalformedDocument):
            load_rules(json.dumps({"version": 2, "hierarchy": {}, "rules": []}))


def _rule(**kwargs) -> ConceptRule:
    base = dict(
        rule_id="r", priority=0,
        lhs=(NodePattern("a", ("assign",)),),
        lhs_prec=(),
        rhs_name="counterLoop", rhs_level=1, rhs_params=(),
    )
    base.update(kwargs)
    return ConceptRule(**base)


HIER = ConceptHierarchy({"assign": 0, "whileLoop": 0, "counterLoop": 1, "swap": 1}, {})


class TestValidation:
    def test_rank_must_increase(self):
        bad = _rule(rhs_name="assign", rhs_level=0)
        with pytest.raises(RuleSetInvalid) as err:
            validate_rules(HIER, [bad])
        assert err.value.rule_id == "r"

    def test_rhs_level_must_agree_with_hierarchy(self):
        bad = _rule(rhs_name="swap", rhs_level=2)
        with pytest.raises(RuleSetInvalid):
            validate_rules(HIER, [bad])

    def test_unbound_meta_rejected(self):
        bad = _rule(rhs_params=(("x", ex.Var("GHOST")),))
        with pytest.raises(RuleSetInvalid) as err:
            validate_rules(HIER, [bad])
        assert "GHOST" in err.value.reason

    def test_free_patterns_need_total_order(self):
        bad = _rule(
            lhs=(NodePattern("a", ("assign",)), NodePattern("b", ("assign",))),
            lhs_prec=(),
        )
        with pytest.raises(RuleSetInvalid):
            validate_rules(HIER, [bad])

    def test_member_of_unknown_key(self):
        bad = _rule(lhs=(NodePattern("a", ("assign",), member_of="ghost"),))
        with pytest.raises(RuleSetInvalid):
            validate_rules(HIER, [bad])

    def test_duplicate_rule_ids(self):
        with pytest.raises(RuleSetInvalid):
            validate_rules(HIER, [_rule(), _rule()])

    def test_shipped_rules_validate(self):
        validate_rules(DEFAULT_HIERARCHY, list(DEFAULT_RULES))

    def test_rule_json_roundtrip(self):
        for rule in DEFAULT_RULES:
            doc = rule_to_json(rule)
            back = rule_from_json(json.loads(json.dumps(doc)), "t")
            assert back == rule
