import pytest

from conftest import corpus_base_cdg, corpus_fixpoint
from gen import random_program
from mindreader import cdg as C
from mindreader.defaults import DEFAULT_HIERARCHY, DEFAULT_RULES
from mindreader.dynamics import SplitMix64
from mindreader.minilang.abstract import extract_concepts
from mindreader.minilang.ast import SourceProgram
from mindreader.minilang.parser import parse
from mindreader.summarize import (
    SummarizationError,
    apply_rule_once,
    measure,
    replay,
    summarize_lfp,
)


def base_of(text: str) -> C.Cdg:
    return C.from_abstract_program(extract_concepts(parse(SourceProgram(text, "t"))))


def names(g: C.Cdg) -> set[str]:
    return {n.name for n in g.nodes}


COUNTER_RULE = next(r for r in DEFAULT_RULES if r.rule_id == "counter_loop_while")

TWO_LOOPS = """\
func main() {
  int a = 0;
  while (a < 3) {
    a = a + 1;
  }
  int b = 0;
  while (b < 5) {
    b = b + 1;
  }
}
"""


class TestApplyRuleOnce:
    def test_counter_loop_collapse(self):
        g = base_of("func main() { int k = 0; while (k <= 9) { k = k + 1; } }")
        out = apply_rule_once(g, COUNTER_RULE)
        assert out is not None
        g2, delta = out
        node = g2.node(delta.added.id)
        assert node.name == "counterLoop" and node.level == 1
        assert str(node.param("var")) == "k"
        assert str(node.param("init")) == "0"
        # absorbed nodes are members of the new concept
        assert g2.node("s2:k:init").member_of == node.id
        assert g2.node("s3").member_of == node.id

    def test_no_loop_means_no_match(self):
        g = base_of("func main() { int k = 0; print k; }")
        assert apply_rule_once(g, COUNTER_RULE) is None

    def test_two_disjoint_loops_smaller_ids_first(self):
        g = base_of(TWO_LOOPS)
        out = apply_rule_once(g, COUNTER_RULE)
        assert out is not None
        _, delta = out
        # statements 2-4 hold the first loop; the deterministic least match
        assert delta.removed == ("s2:a:init", "s3", "s4")

    def test_interleaved_statement_blocks_adjacency(self):
        g = base_of(
            "func main() { int k = 0; print k; while (k <= 9) { k = k + 1; } }"
        )
        assert apply_rule_once(g, COUNTER_RULE) is None


class TestFixpoint:
    def test_ps_average_fixpoint(self, default_kb):
        fix, trace = corpus_fixpoint("average_while.ml1", default_kb)
        assert "average" in names(fix)
        assert [s.rule_id for s in trace.steps] == [
            "counter_loop_while", "aggregate", "average_le",
        ]

    def test_for_variant_average_fixpoint(self, default_kb):
        fix, trace = corpus_fixpoint("average_for.ml1", default_kb)
        assert "average" in names(fix)
        assert trace.steps[0].rule_id == "counter_loop_for"

    def test_swap_solutions_reach_swap(self, default_kb):
        for name in ("swap_reference.ml1", "swap_function.ml1"):
            fix, _ = corpus_fixpoint(name, default_kb)
            assert "swap" in names(fix), name

    def test_bubble_reference_reaches_bubble_sort(self, default_kb):
        fix, trace = corpus_fixpoint("bubble_sort_reference.ml1", default_kb)
        assert "bubbleSort" in names(fix)
        assert "sentinelLoop" in names(fix)

    def test_q_lacks_sentinel_and_bubble(self, default_kb):
        fix, _ = corpus_fixpoint("bubble_sort_q.ml1", default_kb)
        assert "bubbleSort" not in names(fix)
        assert "sentinelLoop" not in names(fix)
        assert sum(1 for n in fix.nodes if n.name == "counterLoop") == 2

    def test_already_summarized_is_fixpoint(self, default_kb):
        fix, _ = corpus_fixpoint("average_while.ml1", default_kb)
        again, trace = summarize_lfp(fix, default_kb.hierarchy, default_kb.rules)
        assert trace.steps == ()
        assert again == fix

    def test_empty_rule_set_is_identity(self, default_kb):
        g = corpus_base_cdg("average_while.ml1")
        fix, trace = summarize_lfp(g, default_kb.hierarchy, [])
        assert fix == g and trace.steps == ()

    def test_rejects_replacement_groups(self, default_kb):
        template = default_kb.templates["average"].cdg
        with pytest.raises(ValueError):
            summarize_lfp(template, default_kb.hierarchy, default_kb.rules)


class TestProperties:
    def test_measure_decreases_each_step(self, default_kb):
        max_rank = default_kb.hierarchy.max_rank()
        for name in ("average_while.ml1", "bubble_sort_reference.ml1", "bubble_sort_q.ml1"):
            g = corpus_base_cdg(name)
            fix, trace = summarize_lfp(g, default_kb.hierarchy, default_kb.rules)
            current = g
            previous = measure(current, max_rank)
            for step in trace.steps:
                current = C.apply_delta(current, step.delta)
                now = measure(current, max_rank)
                assert now < previous, name
                previous = now
            assert current == fix

    def test_step_count_within_measure_bound(self, default_kb):
        max_rank = default_kb.hierarchy.max_rank()
        rng = SplitMix64(21)
        for _ in range(150):
            g = base_of(random_program(rng))
            bound = measure(g, max_rank)
            _, trace = summarize_lfp(g, default_kb.hierarchy, default_kb.rules)
            assert len(trace.steps) <= bound

    def test_deterministic(self, default_kb):
        for name in ("average_while.ml1", "bubble_sort_reference.ml1"):
            f1, t1 = corpus_fixpoint(name, default_kb)
            f2, t2 = corpus_fixpoint(name, default_kb)
            assert C.serialize(f1) == C.serialize(f2)
            assert t1 == t2

    def test_trace_replay_reproduces_fixpoint(self, default_kb):
        for name in ("average_while.ml1", "bubble_sort_q.ml1", "swap_function.ml1"):
            g = corpus_base_cdg(name)
            fix, trace = summarize_lfp(g, default_kb.hierarchy, default_kb.rules)
            assert replay(g, trace) == fix

    def test_fixpoint_nodes_original_or_derived(self, default_kb):
        g = corpus_base_cdg("average_while.ml1")
        original = set(n.id for n in g.nodes)
        fix, trace = summarize_lfp(g, default_kb.hierarchy, default_kb.rules)
        derived = {s.delta.added.id for s in trace.steps}
        for n in fix.nodes:
            if n.id not in original:
                assert n.level >= 1 and n.id in derived

    def test_declaration_permutation_same_fixpoint_shape(self, default_kb):
        base = (
            "func main() {\n  int elements[];\n  int total = 0;\n  int size;\n"
            "  int mean;\n  read elements;\n  size = elements.length - 1;\n"
            "  int k = 0;\n  while (k <= size) {\n    total = total + elements[k];\n"
            "    k = k + 1;\n  }\n  mean = total / (size + 1);\n  print mean;\n}\n"
        )
        permuted = base.replace(
            "  int total = 0;\n  int size;\n  int mean;\n",
            "  int mean;\n  int size;\n  int total = 0;\n",
        )
        f1, _ = summarize_lfp(base_of(base), default_kb.hierarchy, default_kb.rules)
        f2, _ = summarize_lfp(base_of(permuted), default_kb.hierarchy, default_kb.rules)
        assert sorted(n.name for n in f1.nodes) == sorted(n.name for n in f2.nodes)
        assert "average" in names(f2)

    def test_random_fixpoints_valid(self, default_kb):
        rng = SplitMix64(22)
        for _ in range(100):
            g = base_of(random_program(rng))
            fix, _ = summarize_lfp(g, default_kb.hierarchy, default_kb.rules)
            assert C.validate(fix) == []
