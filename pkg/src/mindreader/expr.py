"""Expression trees with canonical normalization and pattern unification.

Concept parameters, rewrite-rule patterns, and template patterns all share
this one representation.  Normalization sorts commutative operands, flattens
associative chains, canonicalizes comparison direction, and simplifies
boolean tautologies, so that trivially reordered expressions (``k+1`` vs
``1+k``, ``a>b`` vs ``b<a``) compare equal.

Expressions serialize to a compact prefix form, e.g. ``(+ 1 k)`` or
``(index ar (- j 1))``; identifiers act as bindable variables in patterns
and ``_`` is the non-binding wildcard.
"""

from __future__ import annotations

import re
from dataclasses import dataclass


class ExprSyntaxError(ValueError):
    """Raised by :func:`parse` on a malformed prefix expression."""


@dataclass(frozen=True)
class Expr:
    """Base class; concrete nodes below are frozen and hashable."""

    def render(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:  # pragma: no cover - convenience
        return self.render()


@dataclass(frozen=True)
class Lit(Expr):
    value: int | bool

    def render(self) -> str:
        if self.value is True:
            return "true"
        if self.value is False:
            return "false"
        return str(self.value)


@dataclass(frozen=True)
class Str(Expr):
    """String literal; only produced by ``print`` arguments."""

    value: str

    def render(self) -> str:
        return '"%s"' % self.value.replace("\\", "\\\\").replace('"', '\\"')


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def render(self) -> str:
        return self.name


@dataclass(frozen=True)
class Wildcard(Expr):
    """Matches any expression in a pattern without binding."""

    def render(self) -> str:
        return "_"


@dataclass(frozen=True)
class Index(Expr):
    base: Expr
    index: Expr

    def render(self) -> str:
        return "(index %s %s)" % (self.base.render(), self.index.render())


@dataclass(frozen=True)
class Length(Expr):
    base: Expr

    def render(self) -> str:
        return "(len %s)" % self.base.render()


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: tuple[Expr, ...]

    def render(self) -> str:
        parts = " ".join(a.render() for a in self.args)
        return "(call %s%s)" % (self.name, (" " + parts) if parts else "")


@dataclass(frozen=True)
class Op(Expr):
    """Operator application.

    ``+``, ``*``, ``&&``, ``||`` are variadic (flattened, operands sorted);
    ``-``, ``/``, ``%``, ``<``, ``<=`` are binary; ``==``, ``!=`` are binary
    with sorted operands; ``!`` is unary.  ``>`` and ``>=`` never appear in
    normalized trees (rewritten to flipped ``<`` / ``<=``).
    """

    op: str
    args: tuple[Expr, ...]

    def render(self) -> str:
        return "(%s %s)" % (self.op, " ".join(a.render() for a in self.args))


WILDCARD = Wildcard()

COMMUTATIVE = {"+", "*", "&&", "||", "==", "!="}
ASSOCIATIVE = {"+", "*", "&&", "||"}
_FLIP = {">": "<", ">=": "<="}


def _fold(op: str, args: tuple[Expr, ...]) -> Expr | None:
    """Constant-fold when every operand is an integer or boolean literal."""
    if not all(isinstance(a, Lit) for a in args):
        return None
    vals = [a.value for a in args]  # type: ignore[union-attr]
    try:
        if op == "+":
            out: int | bool = sum(vals)
        elif op == "*":
            out = 1
            for v in vals:
                out *= v
        elif op == "-":
            out = vals[0] - vals[1]
        elif op == "/":
            q = abs(vals[0]) // abs(vals[1])
            out = q if (vals[0] >= 0) == (vals[1] >= 0) else -q
        elif op == "%":
            r = abs(vals[0]) % abs(vals[1])
            out = r if vals[0] >= 0 else -r
        elif op == "<":
            out = vals[0] < vals[1]
        elif op == "<=":
            out = vals[0] <= vals[1]
        elif op == "==":
            out = vals[0] == vals[1]
        elif op == "!=":
            out = vals[0] != vals[1]
        elif op == "&&":
            out = all(vals)
        elif op == "||":
            out = any(vals)
        elif op == "!":
            out = not vals[0]
        else:
            return None
    except ZeroDivisionError:
        return None
    return Lit(out)


def normalize(e: Expr) -> Expr:
    """Return the canonical form of ``e``.  Idempotent."""
    if isinstance(e, (Lit, Str, Var, Wildcard)):
        return e
    if isinstance(e, Index):
        return Index(normalize(e.base), normalize(e.index))
    if isinstance(e, Length):
        return Length(normalize(e.base))
    if isinstance(e, Call):
        return Call(e.name, tuple(normalize(a) for a in e.args))
    assert isinstance(e, Op)
    op = e.op
    args = tuple(normalize(a) for a in e.args)
    if op in _FLIP:
        op = _FLIP[op]
        args = (args[1], args[0])
    if op in ("==", "!=") and len(args) == 2:
        for a, b in (args, args[::-1]):
            if isinstance(a, Lit) and isinstance(a.value, bool):
                inner = b if a.value else Op("!", (b,))
                out = inner if op == "==" else _negate(inner)
                return normalize(out) if isinstance(out, Op) and out.op == "!" else out
    if op == "!" and isinstance(args[0], Op) and args[0].op == "!":
        return args[0].args[0]
    if op in ASSOCIATIVE:
        flat: list[Expr] = []
        for a in args:
            if isinstance(a, Op) and a.op == op:
                flat.extend(a.args)
            else:
                flat.append(a)
        args = tuple(sorted(flat, key=lambda x: x.render()))
    elif op in COMMUTATIVE:
        args = tuple(sorted(args, key=lambda x: x.render()))
    folded = _fold(op, args)
    return folded if folded is not None else Op(op, args)


def _negate(e: Expr) -> Expr:
    if isinstance(e, Op) and e.op == "!":
        return e.args[0]
    return Op("!", (e,))


def variables(e: Expr) -> set[str]:
    """All identifier names occurring in ``e``."""
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Index):
        return variables(e.base) | variables(e.index)
    if isinstance(e, Length):
        return variables(e.base)
    if isinstance(e, (Call, Op)):
        out: set[str] = set()
        for a in e.args:
            out |= variables(a)
        return out
    return set()


def substitute(e: Expr, bindings: dict[str, Expr]) -> Expr:
    """Replace every bound identifier with its binding."""
    if isinstance(e, Var):
        return bindings.get(e.name, e)
    if isinstance(e, Index):
        return Index(substitute(e.base, bindings), substitute(e.index, bindings))
    if isinstance(e, Length):
        return Length(substitute(e.base, bindings))
    if isinstance(e, Call):
        return Call(e.name, tuple(substitute(a, bindings) for a in e.args))
    if isinstance(e, Op):
        return Op(e.op, tuple(substitute(a, bindings) for a in e.args))
    return e


def unify(
    pattern: Expr,
    value: Expr,
    bindings: dict[str, Expr],
    *,
    vars_only: bool = False,
) -> dict[str, Expr] | None:
    """Match ``pattern`` against ``value``, extending ``bindings``.

    Identifiers in the pattern bind subtrees of the value; with
    ``vars_only`` they may only bind plain identifiers (the matcher's
    variable-to-variable substitution discipline).  Returns the extended
    bindings or None.  Both sides are assumed normalized; commutative
    operands are matched by backtracking assignment.
    """
    if isinstance(pattern, Wildcard):
        return bindings
    if isinstance(pattern, Var):
        if vars_only and not isinstance(value, Var):
            return None
        bound = bindings.get(pattern.name)
        if bound is not None:
            return bindings if bound == value else None
        out = dict(bindings)
        out[pattern.name] = value
        return out
    if isinstance(pattern, (Lit, Str)):
        return bindings if pattern == value else None
    if isinstance(pattern, Index) and isinstance(value, Index):
        mid = unify(pattern.base, value.base, bindings, vars_only=vars_only)
        if mid is None:
            return None
        return unify(pattern.index, value.index, mid, vars_only=vars_only)
    if isinstance(pattern, Length) and isinstance(value, Length):
        return unify(pattern.base, value.base, bindings, vars_only=vars_only)
    if isinstance(pattern, Call) and isinstance(value, Call):
        if pattern.name != value.name or len(pattern.args) != len(value.args):
            return None
        return _unify_seq(pattern.args, value.args, bindings, vars_only)
    if isinstance(pattern, Op) and isinstance(value, Op):
        if pattern.op != value.op or len(pattern.args) != len(value.args):
            return None
        if pattern.op in COMMUTATIVE:
            return _unify_commutative(pattern.args, value.args, bindings, vars_only)
        return _unify_seq(pattern.args, value.args, bindings, vars_only)
    return None


def _unify_seq(pats, vals, bindings, vars_only):
    for p, v in zip(pats, vals):
        bindings = unify(p, v, bindings, vars_only=vars_only)
        if bindings is None:
            return None
    return bindings


def _unify_commutative(pats, vals, bindings, vars_only):
    # Injective assignment of pattern operands to value operands, found by
    # backtracking.  Arities are small (2-4 in practice).
    def go(i: int, used: int, env):
        if i == len(pats):
            return env
        for j in range(len(vals)):
            if used & (1 << j):
                continue
            nxt = unify(pats[i], vals[j], env, vars_only=vars_only)
            if nxt is not None:
                out = go(i + 1, used | (1 << j), nxt)
                if out is not None:
                    return out
        return None

    return go(0, 0, bindings)


_TOKEN = re.compile(r"\(|\)|\"(?:[^\"\\]|\\.)*\"|[^\s()]+")
_INT = re.compile(r"-?\d+$")
_NAME = re.compile(r"[A-Za-z_]\w*$")
_OPS = {"+", "-", "*", "/", "%", "<", "<=", ">", ">=", "==", "!=", "&&", "||", "!"}


def parse(text: str) -> Expr:
    """Parse the prefix serialization produced by :meth:`Expr.render`."""
    tokens = _TOKEN.findall(text)
    if not tokens:
        raise ExprSyntaxError("empty expression")
    pos = 0

    def next_tok() -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise ExprSyntaxError("unexpected end of expression: %r" % text)
        tok = tokens[pos]
        pos += 1
        return tok

    def atom(tok: str) -> Expr:
        if tok == "_":
            return WILDCARD
        if tok == "true":
            return Lit(True)
        if tok == "false":
            return Lit(False)
        if _INT.match(tok):
            return Lit(int(tok))
        if tok.startswith('"'):
            body = tok[1:-1].replace('\\"', '"').replace("\\\\", "\\")
            return Str(body)
        if _NAME.match(tok):
            return Var(tok)
        raise ExprSyntaxError("bad token %r in %r" % (tok, text))

    def expr() -> Expr:
        tok = next_tok()
        if tok != "(":
            return atom(tok)
        head = next_tok()
        args: list[Expr] = []
        while True:
            if pos >= len(tokens):
                raise ExprSyntaxError("unclosed '(' in %r" % text)
            if tokens[pos] == ")":
                next_tok()
                break
            args.append(expr())
        if head == "index":
            if len(args) != 2:
                raise ExprSyntaxError("index takes 2 operands: %r" % text)
            return Index(args[0], args[1])
        if head == "len":
            if len(args) != 1:
                raise ExprSyntaxError("len takes 1 operand: %r" % text)
            return Length(args[0])
        if head == "call":
            if not args or not isinstance(args[0], Var):
                raise ExprSyntaxError("call needs a function name: %r" % text)
            return Call(args[0].name, tuple(args[1:]))
        if head in _OPS:
            if head == "!" and len(args) != 1:
                raise ExprSyntaxError("! takes 1 operand: %r" % text)
            if head not in ASSOCIATIVE and head != "!" and len(args) != 2:
                raise ExprSyntaxError("%s takes 2 operands: %r" % (head, text))
            return Op(head, tuple(args))
        raise ExprSyntaxError("unknown operator %r in %r" % (head, text))

    out = expr()
    if pos != len(tokens):
        raise ExprSyntaxError("trailing tokens in %r" % text)
    return out
