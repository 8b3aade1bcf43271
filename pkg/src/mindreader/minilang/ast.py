"""MiniLang abstract syntax.

Every statement (including block headers like ``while`` and ``func``)
carries a ``stmt_no``: a positive integer assigned in source order, unique
across the program.  Bodies are plain statement lists; they are not
statements themselves and carry no number.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from mindreader import expr as ex


@dataclass(frozen=True)
class SourceProgram:
    """Raw program text plus a name used in reports."""

    text: str
    name: str = "<program>"


@dataclass(frozen=True)
class LValue:
    name: str
    index: ex.Expr | None = None  # set for xs[i] targets

    def to_expr(self) -> ex.Expr:
        if self.index is None:
            return ex.Var(self.name)
        return ex.Index(ex.Var(self.name), self.index)


@dataclass(frozen=True)
class Declarator:
    name: str
    is_list: bool
    size: ex.Expr | None = None  # list capacity, None for `xs[]`
    init: ex.Expr | None = None


@dataclass(frozen=True)
class Stmt:
    pass


@dataclass(frozen=True)
class DeclStmt(Stmt):
    stmt_no: int
    base_type: str  # "int" | "bool"
    declarators: tuple[Declarator, ...]


@dataclass(frozen=True)
class AssignStmt(Stmt):
    stmt_no: int
    target: LValue
    value: ex.Expr
    sugar: str | None = None  # "++" / "--" when written that way


@dataclass(frozen=True)
class CallStmt(Stmt):
    stmt_no: int
    name: str
    args: tuple[ex.Expr, ...]


@dataclass(frozen=True)
class IfStmt(Stmt):
    stmt_no: int
    cond: ex.Expr
    then_body: tuple[Stmt, ...]
    else_body: tuple[Stmt, ...]


@dataclass(frozen=True)
class WhileStmt(Stmt):
    stmt_no: int
    cond: ex.Expr
    body: tuple[Stmt, ...]


@dataclass(frozen=True)
class ForStmt(Stmt):
    """C-style header; init/update belong to the header's statement number."""

    stmt_no: int
    init_decl: DeclStmt | None
    init_assign: AssignStmt | None
    cond: ex.Expr
    update: AssignStmt | None
    body: tuple[Stmt, ...]


@dataclass(frozen=True)
class PrintStmt(Stmt):
    stmt_no: int
    args: tuple[ex.Expr, ...]  # Str literals allowed here only


@dataclass(frozen=True)
class ReadStmt(Stmt):
    stmt_no: int
    target: str


@dataclass(frozen=True)
class ReturnStmt(Stmt):
    stmt_no: int
    value: ex.Expr | None


@dataclass(frozen=True)
class Param:
    type: str  # "int" | "bool" | "list"
    name: str
    by_ref: bool


@dataclass(frozen=True)
class FuncDef(Stmt):
    stmt_no: int
    name: str
    params: tuple[Param, ...]
    ret_type: str | None  # None = no return value
    body: tuple[Stmt, ...]


@dataclass(frozen=True)
class Program:
    """Top level: function definitions and statements, in source order."""

    items: tuple[Stmt, ...]
    source_name: str = "<program>"

    def functions(self) -> dict[str, FuncDef]:
        return {f.name: f for f in self.items if isinstance(f, FuncDef)}

    def statement_count(self) -> int:
        count = 0

        def walk(stmts):
            nonlocal count
            for s in stmts:
                count += 1
                for child in _children(s):
                    walk(child)

        walk(self.items)
        return count


def _children(s: Stmt) -> list[tuple[Stmt, ...]]:
    if isinstance(s, IfStmt):
        return [s.then_body, s.else_body]
    if isinstance(s, (WhileStmt, ForStmt, FuncDef)):
        return [s.body]
    return []


def iter_statements(program: Program):
    """Yield every statement in stmt_no order (pre-order source walk)."""

    def walk(stmts):
        for s in stmts:
            yield s
            for child in _children(s):
                yield from walk(child)

    yield from walk(program.items)


# ---------------------------------------------------------------------------
# Pretty printer.  Output reparses to a structurally identical Program
# (statement numbers included), which the test suite checks as a law.
# ---------------------------------------------------------------------------

_PREC = {"||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, "<=": 4, ">": 4, ">=": 4,
         "+": 5, "-": 5, "*": 6, "/": 6, "%": 6}


def _render_expr(e: ex.Expr, parent_prec: int = 0) -> str:
    if isinstance(e, ex.Lit):
        if e.value is True:
            return "true"
        if e.value is False:
            return "false"
        if e.value < 0:
            return "(%d)" % e.value if parent_prec >= 7 else str(e.value)
        return str(e.value)
    if isinstance(e, ex.Str):
        return '"%s"' % e.value.replace("\\", "\\\\").replace('"', '\\"')
    if isinstance(e, ex.Var):
        return e.name
    if isinstance(e, ex.Index):
        return "%s[%s]" % (_render_expr(e.base, 8), _render_expr(e.index))
    if isinstance(e, ex.Length):
        return "%s.length" % _render_expr(e.base, 8)
    if isinstance(e, ex.Call):
        return "%s(%s)" % (e.name, ", ".join(_render_expr(a) for a in e.args))
    assert isinstance(e, ex.Op)
    if e.op == "!":
        return "!%s" % _render_expr(e.args[0], 7)
    prec = _PREC[e.op]
    parts = (" %s " % e.op).join(_render_expr(a, prec + 1) for a in e.args)
    return "(%s)" % parts if prec < parent_prec else parts


def pretty(program: Program) -> str:
    """Canonical source rendering of an AST."""
    out: list[str] = []

    def declarator(d: Declarator) -> str:
        s = d.name
        if d.is_list:
            s += "[%s]" % (_render_expr(d.size) if d.size is not None else "")
        if d.init is not None:
            s += " = " + _render_expr(d.init)
        return s

    def assign_text(a: AssignStmt) -> str:
        if a.sugar == "++":
            return "%s++" % _render_expr(a.target.to_expr())
        if a.sugar == "--":
            return "%s--" % _render_expr(a.target.to_expr())
        return "%s = %s" % (_render_expr(a.target.to_expr()), _render_expr(a.value))

    def decl_text(d: DeclStmt) -> str:
        return "%s %s" % (d.base_type, ", ".join(declarator(x) for x in d.declarators))

    def emit(stmts, depth: int) -> None:
        pad = "  " * depth
        for s in stmts:
            if isinstance(s, DeclStmt):
                out.append(pad + decl_text(s) + ";")
            elif isinstance(s, AssignStmt):
                out.append(pad + assign_text(s) + ";")
            elif isinstance(s, CallStmt):
                out.append(pad + "%s(%s);" % (s.name, ", ".join(_render_expr(a) for a in s.args)))
            elif isinstance(s, PrintStmt):
                out.append(pad + "print %s;" % ", ".join(_render_expr(a) for a in s.args))
            elif isinstance(s, ReadStmt):
                out.append(pad + "read %s;" % s.target)
            elif isinstance(s, ReturnStmt):
                if s.value is None:
                    out.append(pad + "return;")
                else:
                    out.append(pad + "return %s;" % _render_expr(s.value))
            elif isinstance(s, IfStmt):
                out.append(pad + "if (%s) {" % _render_expr(s.cond))
                emit(s.then_body, depth + 1)
                if s.else_body:
                    out.append(pad + "} else {")
                    emit(s.else_body, depth + 1)
                out.append(pad + "}")
            elif isinstance(s, WhileStmt):
                out.append(pad + "while (%s) {" % _render_expr(s.cond))
                emit(s.body, depth + 1)
                out.append(pad + "}")
            elif isinstance(s, ForStmt):
                if s.init_decl is not None:
                    init = decl_text(s.init_decl)
                elif s.init_assign is not None:
                    init = assign_text(s.init_assign)
                else:
                    init = ""
                update = assign_text(s.update) if s.update is not None else ""
                out.append(pad + "for (%s; %s; %s) {" % (init, _render_expr(s.cond), update))
                emit(s.body, depth + 1)
                out.append(pad + "}")
            elif isinstance(s, FuncDef):
                params = ", ".join(
                    "%s%s %s%s" % ("int" if p.type == "list" else p.type,
                                   "&" if p.by_ref else "",
                                   p.name,
                                   "[]" if p.type == "list" else "")
                    for p in s.params
                )
                ret = (" %s" % s.ret_type) if s.ret_type else ""
                out.append(pad + "func %s(%s)%s {" % (s.name, params, ret))
                emit(s.body, depth + 1)
                out.append(pad + "}")
            else:  # pragma: no cover - closed statement set
                raise AssertionError("unknown statement %r" % (s,))

    emit(program.items, 0)
    return "\n".join(out) + "\n"
