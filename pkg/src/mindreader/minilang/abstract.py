"""Abstract statements: the bridge from MiniLang syntax to concept graphs.

Each parsed statement becomes one computational tuple; declaration
statements contribute one declaration tuple per declarator (all sharing the
statement number), and a declarator initializer additionally yields an
implicit ``assign`` tuple so that ``int k = 0;`` and ``int k; k = 0;``
abstract identically.  Calls to a function whose body is a
reference-parameter swap are classified as ``swapCall``.

All parameter expressions are stored normalized (see :mod:`mindreader.expr`),
so ``k+1`` and ``1+k`` yield identical tuples.
"""

from __future__ import annotations

from dataclasses import dataclass

from mindreader import expr as ex
from mindreader.minilang import ast as A

ROOT = 0  # distinguished container id for the program root

EXECUTABLE_KINDS = (
    "assign",
    "increment",
    "decrement",
    "whileLoop",
    "forLoop",
    "decide",
    "print",
    "read",
    "call",
    "funcDef",
    "swapCall",
    "return",
)

VARIABLE_CLASSES = ("scalar", "boolean", "list")


class UnsupportedConstruct(Exception):
    """An AST node with no abstract mapping; names the construct and statement."""

    def __init__(self, construct: str, stmt_no: int):
        super().__init__("unsupported construct %s at statement %d" % (construct, stmt_no))
        self.construct = construct
        self.stmt_no = stmt_no


class DuplicateDeclaration(Exception):
    def __init__(self, name: str, scope: int, stmt_no: int):
        super().__init__(
            "variable %r redeclared at statement %d (scope %s)"
            % (name, stmt_no, "root" if scope == ROOT else str(scope))
        )
        self.name = name
        self.scope = scope
        self.stmt_no = stmt_no


@dataclass(frozen=True)
class Param:
    role: str
    value: ex.Expr


@dataclass(frozen=True)
class Declaration:
    n: int
    v: str
    t: str  # scalar | boolean | list
    c: int
    size: ex.Expr | None = None  # declared list capacity, if any


@dataclass(frozen=True)
class Computational:
    n: int
    e: str
    p: tuple[Param, ...]
    c: int

    def param(self, role: str) -> ex.Expr | None:
        for item in self.p:
            if item.role == role:
                return item.value
        return None


AbstractStatement = Declaration | Computational


@dataclass(frozen=True)
class AbstractProgram:
    """Abstract statements in emission order plus the precedence relation.

    ``precedence`` pairs consecutive distinct statement numbers within each
    container; the finer-grained ordering of co-numbered tuples (declarators
    and their initializers) is the tuple order of ``statements``.
    """

    statements: tuple[AbstractStatement, ...]
    precedence: frozenset[tuple[int, int]]

    def by_container(self) -> dict[int, list[AbstractStatement]]:
        out: dict[int, list[AbstractStatement]] = {}
        for s in self.statements:
            out.setdefault(s.c, []).append(s)
        return out


def _class_of(base_type: str, is_list: bool) -> str:
    if is_list:
        return "list"
    return "boolean" if base_type == "bool" else "scalar"


def _norm(e: ex.Expr) -> ex.Expr:
    return ex.normalize(e)


def _classify_update(target: A.LValue, value: ex.Expr) -> str:
    """assign vs increment/decrement: target := target +/- integer constant."""
    if target.index is not None:
        return "assign"
    v = ex.Var(target.name)
    norm = _norm(value)
    if isinstance(norm, ex.Op) and len(norm.args) == 2:
        a, b = norm.args
        if norm.op == "+":
            const = a if isinstance(a, ex.Lit) else (b if isinstance(b, ex.Lit) else None)
            other = b if const is a else a
            if const is not None and isinstance(const.value, int) and other == v and const.value != 0:
                return "increment" if const.value > 0 else "decrement"
        if norm.op == "-" and a == v and isinstance(b, ex.Lit) and isinstance(b.value, int) and b.value != 0:
            return "decrement" if b.value > 0 else "increment"
    return "assign"


def detect_swap_functions(program: A.Program) -> set[str]:
    """Names of functions whose body swaps their two reference parameters."""
    out: set[str] = set()
    for f in program.items:
        if isinstance(f, A.FuncDef) and _is_swap_body(f):
            out.add(f.name)
    return out


def _is_swap_body(f: A.FuncDef) -> bool:
    if len(f.params) != 2:
        return False
    if not all(p.by_ref and p.type == "int" for p in f.params):
        return False
    temps: list[str] = []
    events: list[tuple[str, str]] = []  # (target var, source var) in order
    for s in f.body:
        if isinstance(s, A.DeclStmt):
            for d in s.declarators:
                if d.is_list:
                    return False
                temps.append(d.name)
                if d.init is not None:
                    if not isinstance(d.init, ex.Var):
                        return False
                    events.append((d.name, d.init.name))
        elif isinstance(s, A.AssignStmt):
            if s.target.index is not None or not isinstance(s.value, ex.Var):
                return False
            events.append((s.target.name, s.value.name))
        else:
            return False
    if len(temps) != 1 or len(events) != 3:
        return False
    t = temps[0]
    p1, p2 = f.params[0].name, f.params[1].name
    (t1, s1), (t2, s2), (t3, s3) = events
    return (
        t1 == t
        and s1 in (p1, p2)
        and t2 == s1
        and s2 in (p1, p2)
        and s2 != s1
        and t3 == s2
        and s3 == t
    )


def extract_concepts(program: A.Program) -> AbstractProgram:
    """Convert a numbered AST into declaration/computational tuples."""
    swap_funcs = detect_swap_functions(program)
    statements: list[AbstractStatement] = []

    def emit_decl_stmt(s: A.DeclStmt, container: int) -> None:
        for d in s.declarators:
            cls = _class_of(s.base_type, d.is_list)
            statements.append(
                Declaration(s.stmt_no, d.name, cls, container,
                            _norm(d.size) if d.size is not None else None)
            )
            if d.init is not None:
                statements.append(
                    Computational(
                        s.stmt_no,
                        "assign",
                        (Param("target", ex.Var(d.name)), Param("value", _norm(d.init))),
                        container,
                    )
                )

    def emit(s: A.Stmt, container: int) -> None:
        n = s.stmt_no
        if isinstance(s, A.DeclStmt):
            emit_decl_stmt(s, container)
        elif isinstance(s, A.AssignStmt):
            kind = _classify_update(s.target, s.value)
            statements.append(
                Computational(
                    n,
                    kind,
                    (Param("target", _norm(s.target.to_expr())), Param("value", _norm(s.value))),
                    container,
                )
            )
        elif isinstance(s, A.CallStmt):
            if s.name in swap_funcs and len(s.args) == 2:
                statements.append(
                    Computational(
                        n,
                        "swapCall",
                        (Param("x", _norm(s.args[0])), Param("y", _norm(s.args[1]))),
                        container,
                    )
                )
            else:
                params = [Param("callee", ex.Str(s.name))]
                params.extend(Param("arg", _norm(a)) for a in s.args)
                statements.append(Computational(n, "call", tuple(params), container))
        elif isinstance(s, A.PrintStmt):
            params = tuple(Param("value", _norm(a)) for a in s.args)
            statements.append(Computational(n, "print", params, container))
        elif isinstance(s, A.ReadStmt):
            statements.append(
                Computational(n, "read", (Param("target", ex.Var(s.target)),), container)
            )
        elif isinstance(s, A.ReturnStmt):
            params = (Param("value", _norm(s.value)),) if s.value is not None else ()
            statements.append(Computational(n, "return", params, container))
        elif isinstance(s, A.IfStmt):
            statements.append(
                Computational(n, "decide", (Param("cond", _norm(s.cond)),), container)
            )
            for child in s.then_body:
                emit(child, n)
            for child in s.else_body:
                emit(child, n)
        elif isinstance(s, A.WhileStmt):
            statements.append(
                Computational(n, "whileLoop", (Param("cond", _norm(s.cond)),), container)
            )
            for child in s.body:
                emit(child, n)
        elif isinstance(s, A.ForStmt):
            params: list[Param] = []
            loop_var: str | None = None
            init_value: ex.Expr | None = None
            if s.init_decl is not None:
                d = s.init_decl.declarators[0]
                loop_var, init_value = d.name, d.init
            elif s.init_assign is not None and s.init_assign.target.index is None:
                loop_var, init_value = s.init_assign.target.name, s.init_assign.value
            if loop_var is None and s.update is not None and s.update.target.index is None:
                loop_var = s.update.target.name
            if loop_var is not None:
                params.append(Param("var", ex.Var(loop_var)))
            if init_value is not None:
                params.append(Param("init", _norm(init_value)))
            params.append(Param("cond", _norm(s.cond)))
            if s.update is not None:
                params.append(Param("update", _norm(s.update.value)))
            statements.append(Computational(n, "forLoop", tuple(params), container))
            if s.init_decl is not None:
                d = s.init_decl.declarators[0]
                statements.append(
                    Declaration(n, d.name, _class_of(s.init_decl.base_type, False), n)
                )
            for child in s.body:
                emit(child, n)
        elif isinstance(s, A.FuncDef):
            params = [Param("name", ex.Str(s.name))]
            params.extend(Param("param", ex.Var(p.name)) for p in s.params)
            statements.append(Computational(n, "funcDef", tuple(params), container))
            for p in s.params:
                cls = "list" if p.type == "list" else ("boolean" if p.type == "bool" else "scalar")
                statements.append(Declaration(n, p.name, cls, n))
            for child in s.body:
                emit(child, n)
        else:  # pragma: no cover - closed statement set
            raise UnsupportedConstruct(type(s).__name__, n)

    for item in program.items:
        emit(item, ROOT)

    # Consecutive distinct statement numbers within each container.
    chains: dict[int, list[int]] = {}
    for st in statements:
        seq = chains.setdefault(st.c, [])
        if not seq or seq[-1] != st.n:
            if st.n not in seq:
                seq.append(st.n)
    precedence = frozenset(
        (a, b) for seq in chains.values() for a, b in zip(seq, seq[1:])
    )
    return AbstractProgram(tuple(statements), precedence)


def list_variables(ap: AbstractProgram) -> set[tuple[str, str]]:
    """Every declared variable with its class.

    Raises :class:`DuplicateDeclaration` when a name is declared twice in
    one scope (a function body, or the program root).  Scopes are
    function-level: block nesting does not open a new scope.
    """
    func_nos = {
        s.n for s in ap.statements if isinstance(s, Computational) and s.e == "funcDef"
    }
    containers = {s.n: s.c for s in ap.statements}

    def scope_of(decl: Declaration) -> int:
        c = decl.c
        seen = set()
        while c != ROOT and c not in func_nos:
            if c in seen:  # defensive: malformed container cycle
                break
            seen.add(c)
            c = containers.get(c, ROOT)
        return c

    out: set[tuple[str, str]] = set()
    per_scope: dict[int, set[str]] = {}
    for s in ap.statements:
        if isinstance(s, Declaration):
            scope = scope_of(s)
            names = per_scope.setdefault(scope, set())
            if s.v in names:
                raise DuplicateDeclaration(s.v, scope, s.n)
            names.add(s.v)
            out.add((s.v, s.t))
    return out
