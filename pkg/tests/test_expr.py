import pytest
from hypothesis import given, strategies as st

from mindreader import expr as ex


def norm(text: str) -> ex.Expr:
    return ex.normalize(ex.parse(text))


class TestNormalize:
    def test_commutative_reorder(self):
        assert norm("(+ k 1)") == norm("(+ 1 k)")
        assert norm("(* b a)") == norm("(* a b)")
        assert norm("(== y x)") == norm("(== x y)")

    def test_associative_flatten(self):
        assert norm("(+ (+ a b) c)") == norm("(+ a (+ b c))")
        assert norm("(+ a b c)") == norm("(+ c b a)")

    def test_comparison_direction(self):
        assert norm("(> a b)") == norm("(< b a)")
        assert norm("(>= a b)") == norm("(<= b a)")

    def test_boolean_simplification(self):
        assert norm("(== flag false)") == norm("(! flag)")
        assert norm("(== flag true)") == ex.Var("flag")
        assert norm("(!= flag true)") == norm("(! flag)")
        assert norm("(!= flag false)") == ex.Var("flag")
        assert norm("(! (! flag))") == ex.Var("flag")

    def test_constant_folding(self):
        assert norm("(+ 2 3)") == ex.Lit(5)
        assert norm("(/ 7 2)") == ex.Lit(3)
        assert norm("(/ -7 2)") == ex.Lit(-3)  # truncation toward zero
        assert norm("(% -7 2)") == ex.Lit(-1)
        assert norm("(< 1 2)") == ex.Lit(True)

    def test_subtraction_not_commutative(self):
        assert norm("(- a b)") != norm("(- b a)")

    def test_idempotent_on_examples(self):
        for text in ("(+ 1 k)", "(index ar (- j 1))", "(< (index a j) (index a (- j 1)))",
                     "(len xs)", "(call f a 2)", "(! done)"):
            e = norm(text)
            assert ex.normalize(e) == e


class TestSerialization:
    @pytest.mark.parametrize(
        "text",
        [
            "k",
            "42",
            "-3",
            "true",
            "_",
            '"Before"',
            "(+ 1 k)",
            "(index elements k)",
            "(len elements)",
            "(call helper a b)",
            "(! (< a b))",
            "(- (len ar) 1)",
        ],
    )
    def test_render_parse_roundtrip(self, text):
        e = ex.parse(text)
        assert ex.parse(e.render()) == e

    def test_bad_inputs(self):
        for bad in ("", "(", "(+ 1", "(index a)", "(?? a b)", "(! a b)"):
            with pytest.raises(ex.ExprSyntaxError):
                ex.parse(bad)


# Recursive strategy over the expression grammar.
_leaf = st.one_of(
    st.integers(-50, 50).map(ex.Lit),
    st.booleans().map(ex.Lit),
    st.sampled_from(list("abkxy")).map(ex.Var),
)
_expr = st.recursive(
    _leaf,
    lambda inner: st.one_of(
        st.tuples(st.sampled_from(["+", "*"]), st.lists(inner, min_size=2, max_size=3))
        .map(lambda t: ex.Op(t[0], tuple(t[1]))),
        st.tuples(st.sampled_from(["-", "/", "%", "<", "<=", ">", ">=", "==", "!="]),
                  inner, inner).map(lambda t: ex.Op(t[0], (t[1], t[2]))),
        inner.map(lambda e: ex.Op("!", (e,))),
        st.tuples(inner, inner).map(lambda t: ex.Index(t[0], t[1])),
        inner.map(ex.Length),
    ),
    max_leaves=12,
)


@given(_expr)
def test_normalize_idempotent(e):
    once = ex.normalize(e)
    assert ex.normalize(once) == once


@given(_expr)
def test_normalized_render_parses_back(e):
    n = ex.normalize(e)
    assert ex.parse(n.render()) == n


class TestUnify:
    def test_binds_and_checks_consistency(self):
        pat = norm("(+ S (index L K))")
        val = norm("(+ total (index elements k))")
        env = ex.unify(pat, val, {})
        assert env == {"S": ex.Var("total"), "L": ex.Var("elements"), "K": ex.Var("k")}

    def test_conflicting_binding_fails(self):
        pat = norm("(+ S S)")
        val = norm("(+ a b)")
        assert ex.unify(pat, val, {}) is None

    def test_wildcard_matches_without_binding(self):
        env = ex.unify(norm("(index L _)"), norm("(index ar (- j 1))"), {})
        assert env == {"L": ex.Var("ar")}

    def test_vars_only_restricts_to_variables(self):
        pat, val = ex.Var("X"), norm("(+ 1 k)")
        assert ex.unify(pat, val, {}) is not None
        assert ex.unify(pat, val, {}, vars_only=True) is None

    def test_literals_exact(self):
        assert ex.unify(ex.Lit(1), ex.Lit(1), {}) == {}
        assert ex.unify(ex.Lit(1), ex.Lit(2), {}) is None

    def test_commutative_operand_assignment(self):
        pat = norm("(+ 1 K)")
        assert ex.unify(pat, norm("(+ 1 k)"), {}) == {"K": ex.Var("k")}
        # operands sorted differently than the pattern order still match
        pat2 = norm("(+ S (index L _))")
        val2 = norm("(+ (index xs i) acc)")
        env = ex.unify(pat2, val2, {})
        assert env is not None and env["S"] == ex.Var("acc")

    def test_substitute(self):
        e = ex.substitute(norm("(+ S 1)"), {"S": ex.Var("total")})
        assert e == norm("(+ total 1)")
