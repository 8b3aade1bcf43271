from pathlib import Path

import pytest

from conftest import corpus_base_cdg
from gen import random_cdg
from mindreader import cdg as C
from mindreader import expr as ex
from mindreader.dynamics import SplitMix64
from mindreader.minilang.abstract import (
    AbstractProgram,
    Computational,
    Declaration,
    Param,
    extract_concepts,
)
from mindreader.minilang.ast import SourceProgram
from mindreader.minilang.parser import parse

GOLDEN = Path(__file__).parent / "golden"


def cdg_of(text: str) -> C.Cdg:
    return C.from_abstract_program(extract_concepts(parse(SourceProgram(text, "t"))))


class TestFromAbstractProgram:
    def test_ps_base_graph(self):
        g = corpus_base_cdg("ps_verbatim.ml1")
        while_node = g.node("s4")
        assert while_node.name == "whileLoop" and while_node.member_of == "s2"
        members_of_while = {n.id for n in g.nodes if n.member_of == "s4"}
        assert members_of_while == {"s5", "s6"}
        assert g.node("s1:elements").kind == "declaration"
        assert g.node("s1:elements").level == 0

    def test_fig1_swap_chain(self):
        g = corpus_base_cdg("swap_reference.ml1")
        # t=a (s4), a=b (s5), b=t (s6) form a precedence chain
        assert ("s4", "s5") in g.prec and ("s5", "s6") in g.prec

    def test_empty_abstract_program(self):
        g = C.from_abstract_program(AbstractProgram((), frozenset()))
        assert g.nodes == () and g.prec == ()
        assert C.validate(g) == []

    def test_one_node_per_abstract_statement(self):
        text = "func main() { int a = 1, b; print a; }"
        ap = extract_concepts(parse(SourceProgram(text, "t")))
        g = C.from_abstract_program(ap)
        assert len(g.nodes) == len(ap.statements)

    def test_rejects_missing_container(self):
        bad = AbstractProgram(
            (Computational(1, "print", (), 99),), frozenset()
        )
        with pytest.raises(C.InvalidAbstractProgram):
            C.from_abstract_program(bad)

    def test_rejects_bad_kind(self):
        bad = AbstractProgram((Computational(1, "gosub", (), 0),), frozenset())
        with pytest.raises(C.InvalidAbstractProgram):
            C.from_abstract_program(bad)

    def test_validate_accepts_every_frontend_output(self):
        from gen import random_program

        rng = SplitMix64(11)
        for _ in range(100):
            g = cdg_of(random_program(rng))
            assert C.validate(g) == []


class TestValidate:
    def test_precedence_cycle_reported(self):
        a = C.ConceptNode("a", "assign", "computable", 0)
        b = C.ConceptNode("b", "assign", "computable", 0)
        g = C.Cdg((a, b), (("a", "b"), ("b", "a")))
        codes = {v.code for v in C.validate(g)}
        assert "prec-cycle" in codes

    def test_dangling_replacement_reported(self):
        a = C.ConceptNode("a", "assign", "computable", 0)
        g = C.Cdg((a,), (), (C.ReplGroup(("a",), ("ghost",)),))
        violations = C.validate(g)
        assert any(v.code == "repl-dangling" and "ghost" in v.ids for v in violations)

    def test_declaration_above_level_zero_reported(self):
        d = C.ConceptNode("d", "declaration", "declaration", 1)
        codes = {v.code for v in C.validate(C.Cdg((d,)))}
        assert "decl-level" in codes

    def test_disconnected_simple_cdg_reported(self):
        a = C.ConceptNode("a", "assign", "computable", 0)
        b = C.ConceptNode("b", "assign", "computable", 0)
        codes = {v.code for v in C.validate(C.Cdg((a, b), ()))}
        assert "disconnected" in codes

    def test_valid_ps_graph_is_clean(self):
        assert C.validate(corpus_base_cdg("ps_verbatim.ml1")) == []


class TestDot:
    def test_empty_graph(self):
        text = C.to_dot(C.Cdg())
        assert text.startswith("digraph cdg {") and text.rstrip().endswith("}")

    def test_ps_golden(self):
        text = C.to_dot(corpus_base_cdg("ps_verbatim.ml1"))
        assert text == (GOLDEN / "ps_base.dot").read_text()

    def test_declarations_are_boxes(self):
        text = C.to_dot(corpus_base_cdg("ps_verbatim.ml1"))
        assert '"s1:elements" [shape=box' in text
        assert '"s4" [shape=ellipse' in text

    def test_deterministic(self):
        g = corpus_base_cdg("average_while.ml1")
        assert C.to_dot(g) == C.to_dot(g)

    def test_replacement_edges_dashed(self, default_kb):
        text = C.to_dot(default_kb.templates["average"].cdg)
        assert "style=dashed" in text


class TestSerialization:
    def test_ps_roundtrip(self):
        g = corpus_base_cdg("ps_verbatim.ml1")
        assert C.deserialize(C.serialize(g)) == g

    def test_template_with_repl_roundtrip(self, default_kb):
        g = default_kb.templates["average"].cdg
        assert C.deserialize(C.serialize(g)) == g

    def test_truncated_document(self):
        g = corpus_base_cdg("swap_reference.ml1")
        with pytest.raises(C.MalformedDocument):
            C.deserialize(C.serialize(g)[:40])

    def test_duplicate_id_rejected(self):
        doc = '{"version": 1, "nodes": [%s, %s], "prec": [], "repl": []}' % (
            '{"id": "a", "name": "assign", "kind": "computable", "level": 0, "params": [], "member_of": null}',
            '{"id": "a", "name": "print", "kind": "computable", "level": 0, "params": [], "member_of": null}',
        )
        with pytest.raises(C.MalformedDocument):
            C.deserialize(doc)

    def test_wrong_version_rejected(self):
        with pytest.raises(C.MalformedDocument):
            C.deserialize('{"version": 99, "nodes": []}')

    def test_random_roundtrip(self):
        rng = SplitMix64(13)
        for _ in range(300):
            g = random_cdg(rng, allow_repl=True, allow_levels=True)
            assert C.deserialize(C.serialize(g)) == g

    def test_serialize_deterministic(self):
        rng = SplitMix64(14)
        g = random_cdg(rng, allow_repl=True)
        assert C.serialize(g) == C.serialize(g)


class TestStructure:
    def test_equality_ignores_node_order(self):
        a = C.ConceptNode("a", "assign", "computable", 0)
        b = C.ConceptNode("b", "print", "computable", 0)
        g1 = C.Cdg((a, b), (("a", "b"),))
        g2 = C.Cdg((b, a), (("a", "b"),))
        assert g1 == g2

    def test_renumbering_changes_identity_not_shape(self):
        g1 = cdg_of("int a; a = 1;")
        g2 = cdg_of("// leading comment\nint a; a = 1;")
        assert g1 == g2

    def test_children_order_follows_chain(self):
        g = corpus_base_cdg("ps_verbatim.ml1")
        kids = [n.id for n in g.children("s4")]
        assert kids == ["s5", "s6"]

    def test_descendants_transitive(self):
        g = corpus_base_cdg("ps_verbatim.ml1")
        assert {"s5", "s6"} <= g.descendants("s2")

    def test_delta_roundtrip(self):
        g = cdg_of("int a; a = 1; print a;")
        added = C.ConceptNode("c1", "counterLoop", "computable", 1, (), None)
        delta = C.CdgDelta(
            added=added,
            removed=("s2",),
            member_rewires=(("s2", "c1"),),
            prec_removed=(("s1:a", "s2"), ("s2", "s3")),
            prec_added=(("s1:a", "c1"), ("c1", "s3")),
        )
        g2 = C.apply_delta(g, delta)
        assert g2.node("s2").member_of == "c1"
        assert ("s1:a", "c1") in g2.prec and ("s1:a", "s2") not in g2.prec
