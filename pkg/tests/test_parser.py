import pytest

from gen import random_program
from mindreader.dynamics import SplitMix64
from mindreader.minilang import ast as A
from mindreader.minilang.ast import SourceProgram, pretty
from mindreader.minilang.parser import EmptyProgram, ParseFailure, parse


def parse_text(text: str, name: str = "<test>") -> A.Program:
    return parse(SourceProgram(text, name))


def numbers(program: A.Program) -> list[int]:
    return [s.stmt_no for s in A.iter_statements(program)]


class TestBasics:
    def test_minimal_program(self):
        p = parse_text("int a; a = 1;")
        assert numbers(p) == [1, 2]
        assert isinstance(p.items[0], A.DeclStmt)
        assert isinstance(p.items[1], A.AssignStmt)

    def test_fig1_reference_has_seven_statements(self, corpus_dir):
        p = parse(SourceProgram((corpus_dir / "swap_reference.ml1").read_text(), "fig1"))
        assert numbers(p) == [1, 2, 3, 4, 5, 6, 7]

    def test_statement_numbers_strictly_increasing_in_source_order(self):
        p = parse_text(
            "func main() { int i = 0; while (i < 3) { if (i < 2) { print i; } i++; } }"
        )
        nos = numbers(p)
        assert nos == sorted(nos) and len(set(nos)) == len(nos)

    def test_block_headers_are_numbered(self, corpus_dir):
        p = parse(SourceProgram((corpus_dir / "ps_verbatim.ml1").read_text(), "ps"))
        stmts = {s.stmt_no: s for s in A.iter_statements(p)}
        assert isinstance(stmts[2], A.FuncDef)
        assert isinstance(stmts[4], A.WhileStmt)
        assert isinstance(stmts[7], A.PrintStmt)

    def test_increment_sugar(self):
        p = parse_text("int k; k++;")
        assign = p.items[1]
        assert assign.sugar == "++"

    def test_for_header_owns_one_number(self):
        p = parse_text("func main() { for (int i = 0; i < 3; i = i + 1) { print i; } }")
        nos = numbers(p)
        assert nos == [1, 2, 3]  # func, for, print


class TestErrors:
    def test_empty_program(self):
        with pytest.raises(EmptyProgram):
            parse_text("   \n\t  ")

    def test_comment_only_is_empty(self):
        with pytest.raises(EmptyProgram):
            parse_text("// nothing here\n")

    def test_unclosed_while_condition(self):
        with pytest.raises(ParseFailure) as err:
            parse_text("func main() { while ( }")
        assert any("expected" in e.message for e in err.value.errors)
        assert err.value.errors[0].line >= 1

    def test_illegal_character(self):
        with pytest.raises(ParseFailure) as err:
            parse_text("int a; a = 1 @ 2;")
        assert any("illegal character" in e.message for e in err.value.errors)

    def test_errors_collected_up_to_cap(self):
        bad = "\n".join("x%d = ;" % i for i in range(20))
        with pytest.raises(ParseFailure) as err:
            parse_text(bad)
        assert 1 < len(err.value.errors) <= 10

    def test_error_has_position(self):
        with pytest.raises(ParseFailure) as err:
            parse_text("int a;\na = ;")
        e = err.value.errors[0]
        assert (e.line, e.col) == (2, 5)

    def test_bool_list_rejected(self):
        with pytest.raises(ParseFailure):
            parse_text("bool flags[10];")

    def test_list_initializer_rejected(self):
        with pytest.raises(ParseFailure):
            parse_text("int xs[3] = 1;")


class TestRoundTrip:
    CASES = [
        "int a; a = 1;",
        "func main() { int k = 0, total, size = 9, mean; k++; }",
        "func f(int x, int& y, int zs[]) int { return x + zs[0]; }\nfunc main() { print 1; }",
        'func main() { print "a b", 1 + 2 * 3, (1 + 2) * 3, -4; }',
        "func main() { int i; for (i = 0; i < 10; i--) { read i; } }",
        "func main() { if (1 < 2) { print 1; } else { print 2; } }",
        "func main() { bool t = true && !false || 1 <= 2; }",
        "func main() { int xs[5]; xs[1 + 1] = xs.length; }",
    ]

    @pytest.mark.parametrize("text", CASES)
    def test_pretty_reparse_identical(self, text):
        p1 = parse_text(text)
        p2 = parse_text(pretty(p1))
        assert p1.items == p2.items  # includes stmt_no equality

    def test_corpus_round_trips(self, corpus_dir):
        for f in sorted(corpus_dir.glob("*.ml1")):
            p1 = parse(SourceProgram(f.read_text(), f.name))
            p2 = parse(SourceProgram(pretty(p1), f.name))
            assert p1.items == p2.items, f.name

    def test_random_programs_round_trip(self):
        rng = SplitMix64(2024)
        for _ in range(200):
            text = random_program(rng)
            p1 = parse_text(text)
            p2 = parse_text(pretty(p1))
            assert p1.items == p2.items, text
