import pytest

from conftest import corpus_ast
from gen import random_program
from mindreader import expr as ex
from mindreader.dynamics import SplitMix64
from mindreader.minilang import ast as A
from mindreader.minilang.abstract import (
    Computational,
    Declaration,
    DuplicateDeclaration,
    extract_concepts,
    list_variables,
)
from mindreader.minilang.ast import SourceProgram
from mindreader.minilang.parser import parse


def norm(text: str) -> ex.Expr:
    return ex.normalize(ex.parse(text))


@pytest.fixture(scope="module")
def ps():
    return extract_concepts(corpus_ast("ps_verbatim.ml1"))


class TestVerbatimPs:
    def test_while_statement_tuple(self, ps):
        (w,) = [s for s in ps.statements if isinstance(s, Computational) and s.e == "whileLoop"]
        assert w.n == 4
        assert w.c == 2
        assert w.param("cond") == norm("(<= k size)")

    def test_increment_tuple(self, ps):
        (inc,) = [s for s in ps.statements if isinstance(s, Computational) and s.e == "increment"]
        assert inc.n == 6
        assert inc.c == 4
        assert inc.param("target") == ex.Var("k")
        assert inc.param("value") == norm("(+ 1 k)")

    def test_containment(self, ps):
        containers = {}
        for s in ps.statements:
            containers.setdefault(s.n, set()).add(s.c)
        assert containers[5] == {4} and containers[6] == {4}
        assert containers[4] == {2}
        assert containers[3] == {2} and containers[7] == {2}
        assert containers[1] == {0} and containers[2] == {0}

    def test_declarators_share_statement_number(self, ps):
        decls = [s for s in ps.statements if isinstance(s, Declaration) and s.n == 3]
        assert [d.v for d in decls] == ["k", "total", "size", "mean"]

    def test_initializers_become_assign_tuples(self, ps):
        inits = [
            s for s in ps.statements
            if isinstance(s, Computational) and s.e == "assign" and s.n == 3
        ]
        assert [(s.param("target"), s.param("value")) for s in inits] == [
            (ex.Var("k"), ex.Lit(0)),
            (ex.Var("size"), ex.Lit(9)),
        ]

    def test_list_variables(self, ps):
        assert list_variables(ps) == {
            ("k", "scalar"),
            ("total", "scalar"),
            ("size", "scalar"),
            ("mean", "scalar"),
            ("elements", "list"),
        }

    def test_precedence_consecutive_within_container(self, ps):
        assert ps.precedence == frozenset({(1, 2), (3, 4), (4, 7), (5, 6)})


class TestExtraction:
    def test_empty_variables_for_declaration_free_program(self):
        ap = extract_concepts(parse(SourceProgram("print 1;", "p")))
        assert list_variables(ap) == set()

    def test_duplicate_declaration_same_scope(self):
        ap = extract_concepts(parse(SourceProgram("int k; int k;", "dup")))
        with pytest.raises(DuplicateDeclaration):
            list_variables(ap)

    def test_shadowing_across_scopes_allowed(self):
        text = "int k;\nfunc main() { int k; print k; }"
        ap = extract_concepts(parse(SourceProgram(text, "shadow")))
        assert ("k", "scalar") in list_variables(ap)

    def test_parameter_is_declaration_in_function_scope(self):
        text = "func f(int x) { int x; }\nfunc main() { print 1; }"
        ap = extract_concepts(parse(SourceProgram(text, "param")))
        with pytest.raises(DuplicateDeclaration):
            list_variables(ap)

    def test_swap_call_detected(self, corpus_dir):
        ap = extract_concepts(corpus_ast("swap_function.ml1"))
        (sc,) = [s for s in ap.statements if isinstance(s, Computational) and s.e == "swapCall"]
        assert sc.param("x") == ex.Var("a") and sc.param("y") == ex.Var("b")

    def test_non_swap_call_stays_call(self):
        text = (
            "func f(int& i, int& j) { i = j; }\n"
            "func main() { int a = 1, b = 2; f(a, b); }"
        )
        ap = extract_concepts(parse(SourceProgram(text, "call")))
        kinds = {s.e for s in ap.statements if isinstance(s, Computational)}
        assert "call" in kinds and "swapCall" not in kinds

    def test_decrement_classification(self):
        ap = extract_concepts(parse(SourceProgram("int k; k = k - 1; k--;", "dec")))
        kinds = [s.e for s in ap.statements if isinstance(s, Computational)]
        assert kinds == ["decrement", "decrement"]

    def test_indexed_update_is_plain_assign(self):
        ap = extract_concepts(parse(SourceProgram("int xs[3]; xs[0] = xs[0] + 1;", "ix")))
        kinds = [s.e for s in ap.statements if isinstance(s, Computational)]
        assert kinds == ["assign"]

    def test_normalized_parameters(self):
        a = extract_concepts(parse(SourceProgram("int k; k = k + 1;", "a")))
        b = extract_concepts(parse(SourceProgram("int k; k = 1 + k;", "b")))
        pa = [s for s in a.statements if isinstance(s, Computational)][0]
        pb = [s for s in b.statements if isinstance(s, Computational)][0]
        assert pa.p == pb.p


class TestProperties:
    def test_statement_counts_match(self):
        rng = SplitMix64(7)
        for _ in range(100):
            program = parse(SourceProgram(random_program(rng), "gen"))
            ap = extract_concepts(program)
            ast_numbers = {s.stmt_no for s in A.iter_statements(program)}
            abstract_numbers = {s.n for s in ap.statements}
            assert abstract_numbers == ast_numbers

    def test_total_on_random_parseable_programs(self):
        rng = SplitMix64(8)
        for _ in range(100):
            extract_concepts(parse(SourceProgram(random_program(rng), "gen")))

    def test_container_chains_are_linear(self):
        rng = SplitMix64(9)
        for _ in range(100):
            ap = extract_concepts(parse(SourceProgram(random_program(rng), "gen")))
            succ: dict[int, set[int]] = {}
            pred: dict[int, set[int]] = {}
            for a, b in ap.precedence:
                succ.setdefault(a, set()).add(b)
                pred.setdefault(b, set()).add(a)
            assert all(len(v) == 1 for v in succ.values())
            assert all(len(v) == 1 for v in pred.values())
