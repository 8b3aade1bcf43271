"""Concept dependence graphs.

A graph of concept nodes carrying the four quadrants (name, contextual
parameters, node id, membership) plus a precedence relation (solid edges)
and replacement groups (dashed edges: two interchangeable node sequences).

Base graphs come from :func:`from_abstract_program`: one node per abstract
statement, ids ``s<stmt_no>`` for computations, ``s<stmt_no>:<var>`` for
declarations and ``s<stmt_no>:<var>:init`` for declarator initializers.
Summarization introduces ``c<k>`` nodes; it never deletes nodes, it absorbs
them: a matched node becomes a member of the concept node that replaced it
on its container's chain.  A node whose ``member_of`` points at a level>=1
node is *consumed* and no longer visible to the rewriter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from mindreader import expr as ex
from mindreader.minilang.abstract import (
    ROOT,
    AbstractProgram,
    Computational,
    Declaration,
    EXECUTABLE_KINDS,
    Param,
    VARIABLE_CLASSES,
)

SCHEMA_VERSION = 1


class InvalidAbstractProgram(Exception):
    pass


class MalformedDocument(Exception):
    """Bad serialized CDG/rule/template document; carries a location path."""

    def __init__(self, message: str, where: str = ""):
        super().__init__("%s%s" % (("%s: " % where) if where else "", message))
        self.where = where


@dataclass(frozen=True)
class ConceptNode:
    id: str
    name: str
    kind: str  # "declaration" | "computable"
    level: int
    params: tuple[Param, ...] = ()
    member_of: str | None = None

    def param(self, role: str) -> ex.Expr | None:
        for p in self.params:
            if p.role == role:
                return p.value
        return None

    def params_for(self, role: str) -> list[ex.Expr]:
        return [p.value for p in self.params if p.role == role]


@dataclass(frozen=True)
class ReplGroup:
    """Two interchangeable realizations, each a sequence of node ids."""

    lhs: tuple[str, ...]
    rhs: tuple[str, ...]


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    ids: tuple[str, ...] = ()


def _id_sort_key(node_id: str):
    head = node_id.split(":", 1)[0]
    prefix, digits = head[:1], head[1:]
    num = int(digits) if digits.isdigit() else 0
    return (0 if prefix == "s" else 1, num, node_id)


@dataclass(frozen=True, eq=False)
class Cdg:
    nodes: tuple[ConceptNode, ...] = ()
    prec: tuple[tuple[str, str], ...] = ()
    repl: tuple[ReplGroup, ...] = ()

    # -- access ------------------------------------------------------------

    def __post_init__(self):
        index = {n.id: n for n in self.nodes}
        if len(index) != len(self.nodes):
            raise ValueError("duplicate node ids in Cdg")
        object.__setattr__(self, "_index", index)

    def node(self, node_id: str) -> ConceptNode:
        return self._index[node_id]

    def has(self, node_id: str) -> bool:
        return node_id in self._index

    def ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    def consumed(self, node_id: str) -> bool:
        m = self.node(node_id).member_of
        return m is not None and self.has(m) and self.node(m).level >= 1

    def children(self, container: str | None) -> list[ConceptNode]:
        """Direct members of ``container`` (None = root), in chain order."""
        group = [n for n in self.nodes if n.member_of == container]
        if len(group) <= 1:
            return group
        group_ids = {n.id for n in group}
        succ = {a: b for a, b in self.prec if a in group_ids and b in group_ids}
        pred = {b: a for a, b in succ.items()}
        starts = [n.id for n in group if n.id not in pred]
        ordered: list[ConceptNode] = []
        seen: set[str] = set()
        for start in starts:
            cur: str | None = start
            while cur is not None and cur in group_ids and cur not in seen:
                seen.add(cur)
                ordered.append(self.node(cur))
                cur = succ.get(cur)
        ordered.extend(n for n in group if n.id not in seen)
        return ordered

    def descendants(self, node_id: str) -> set[str]:
        kids: dict[str | None, list[str]] = {}
        for n in self.nodes:
            kids.setdefault(n.member_of, []).append(n.id)
        out: set[str] = set()
        stack = [node_id]
        while stack:
            cur = stack.pop()
            for k in kids.get(cur, []):
                if k not in out:
                    out.add(k)
                    stack.append(k)
        return out

    def is_inside(self, node_id: str, container_id: str) -> bool:
        """Membership chain from ``node_id`` reaches ``container_id``."""
        cur = self.node(node_id).member_of
        hops = 0
        while cur is not None and hops <= len(self.nodes):
            if cur == container_id:
                return True
            cur = self.node(cur).member_of if self.has(cur) else None
            hops += 1
        return False

    def prec_closure(self) -> dict[str, set[str]]:
        """Reachability over precedence edges."""
        succ: dict[str, list[str]] = {}
        for a, b in self.prec:
            succ.setdefault(a, []).append(b)
        reach: dict[str, set[str]] = {}

        def visit(u: str) -> set[str]:
            if u in reach:
                return reach[u]
            reach[u] = set()  # cycle guard; validation forbids cycles anyway
            acc: set[str] = set()
            for v in succ.get(u, []):
                acc.add(v)
                acc |= visit(v)
            reach[u] = acc
            return acc

        for n in self.nodes:
            visit(n.id)
        return reach

    def max_concept_counter(self) -> int:
        best = 0
        for n in self.nodes:
            if n.id.startswith("c") and n.id[1:].isdigit():
                best = max(best, int(n.id[1:]))
        return best

    # -- structural equality -----------------------------------------------

    def canonical_key(self):
        nodes = tuple(
            (n.id, n.name, n.kind, n.level, n.member_of,
             tuple((p.role, p.value.render()) for p in n.params))
            for n in sorted(self.nodes, key=lambda n: _id_sort_key(n.id))
        )
        prec = tuple(sorted(self.prec))
        repl = tuple(sorted((g.lhs, g.rhs) for g in self.repl))
        return (nodes, prec, repl)

    def __eq__(self, other) -> bool:
        return isinstance(other, Cdg) and self.canonical_key() == other.canonical_key()

    def __hash__(self) -> int:
        return hash(self.canonical_key())


@dataclass(frozen=True)
class CdgDelta:
    """One summarization step: nodes leave the visible chain, one concept
    node takes their place.  Replaying deltas reproduces the fixpoint."""

    added: ConceptNode
    removed: tuple[str, ...]  # matched node ids, absorbed into `added`
    member_rewires: tuple[tuple[str, str], ...]  # (node id, new member_of)
    prec_removed: tuple[tuple[str, str], ...]
    prec_added: tuple[tuple[str, str], ...]


def apply_delta(g: Cdg, delta: CdgDelta) -> Cdg:
    rewire = dict(delta.member_rewires)
    nodes = [replace(n, member_of=rewire[n.id]) if n.id in rewire else n for n in g.nodes]
    nodes.append(delta.added)
    removed = set(delta.prec_removed)
    prec = [e for e in g.prec if e not in removed]
    prec.extend(delta.prec_added)
    return Cdg(tuple(nodes), tuple(prec), g.repl)


# ---------------------------------------------------------------------------
# Construction from the frontend
# ---------------------------------------------------------------------------


def from_abstract_program(ap: AbstractProgram) -> Cdg:
    """Base-level CDG: one node per abstract statement, all at level 0."""
    _check_abstract(ap)
    nodes: list[ConceptNode] = []
    per_container: dict[int, list[str]] = {}
    decl_counts: dict[int, int] = {}
    for st in ap.statements:
        if isinstance(st, Declaration):
            decl_counts[st.n] = decl_counts.get(st.n, 0) + 1

    def container_ref(c: int) -> str | None:
        return None if c == ROOT else "s%d" % c

    for st in ap.statements:
        if isinstance(st, Declaration):
            node_id = "s%d:%s" % (st.n, st.v)
            params = [Param("var", ex.Var(st.v)), Param("class", ex.Str(st.t))]
            if st.size is not None:
                params.append(Param("size", st.size))
            nodes.append(
                ConceptNode(node_id, "declaration", "declaration", 0,
                            tuple(params), container_ref(st.c))
            )
        else:
            node_id = _computational_id(st, nodes)
            nodes.append(
                ConceptNode(node_id, st.e, "computable", 0, st.p, container_ref(st.c))
            )
        per_container.setdefault(st.c, []).append(nodes[-1].id)

    prec = [
        (a, b)
        for seq in per_container.values()
        for a, b in zip(seq, seq[1:])
    ]
    return Cdg(tuple(nodes), tuple(prec), ())


def _computational_id(st: Computational, emitted: list[ConceptNode]) -> str:
    # Declarator initializers share the declaration's statement number; they
    # are distinguished as s<n>:<var>:init.  The initializer always directly
    # follows its declaration node in emission order.
    if st.e == "assign" and emitted:
        prev = emitted[-1]
        target = next((p.value for p in st.p if p.role == "target"), None)
        if (
            prev.kind == "declaration"
            and prev.id == "s%d:%s" % (st.n, getattr(target, "name", ""))
        ):
            return prev.id + ":init"
    return "s%d" % st.n


def _check_abstract(ap: AbstractProgram) -> None:
    numbers = {s.n for s in ap.statements}
    for s in ap.statements:
        if s.n <= 0:
            raise InvalidAbstractProgram("statement number %d not positive" % s.n)
        if s.c != ROOT and s.c not in numbers:
            raise InvalidAbstractProgram(
                "statement %d names missing container %d" % (s.n, s.c)
            )
        if isinstance(s, Declaration) and s.t not in VARIABLE_CLASSES:
            raise InvalidAbstractProgram("bad variable class %r" % s.t)
        if isinstance(s, Computational) and s.e not in EXECUTABLE_KINDS:
            raise InvalidAbstractProgram("bad executable kind %r" % s.e)
    for a, b in ap.precedence:
        if a == b:
            raise InvalidAbstractProgram("reflexive precedence %d" % a)
        if a not in numbers or b not in numbers:
            raise InvalidAbstractProgram("precedence names missing statement")


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate(g: Cdg) -> list[Violation]:
    out: list[Violation] = []
    ids = set(g.ids())
    for a, b in g.prec:
        for x in (a, b):
            if x not in ids:
                out.append(Violation("prec-dangling", "precedence edge names missing node", (x,)))
    for grp in g.repl:
        for x in grp.lhs + grp.rhs:
            if x not in ids:
                out.append(Violation("repl-dangling", "replacement group names missing node", (x,)))
    for n in g.nodes:
        if n.member_of is not None and n.member_of not in ids:
            out.append(Violation("member-dangling", "member_of names missing node", (n.id,)))
        if n.level < 0:
            out.append(Violation("level-negative", "negative level", (n.id,)))
        if n.kind == "declaration" and n.level != 0:
            out.append(Violation("decl-level", "declaration node above level 0", (n.id,)))
        if n.kind not in ("declaration", "computable"):
            out.append(Violation("bad-kind", "unknown node kind %r" % n.kind, (n.id,)))

    # membership acyclicity
    for n in g.nodes:
        seen = {n.id}
        cur = n.member_of
        while cur is not None and cur in ids:
            if cur in seen:
                out.append(Violation("member-cycle", "membership cycle", tuple(sorted(seen))))
                break
            seen.add(cur)
            cur = g.node(cur).member_of

    # precedence acyclicity
    cycle = _find_prec_cycle(g)
    if cycle:
        out.append(Violation("prec-cycle", "precedence cycle", tuple(cycle)))

    # simple CDGs must be connected (prec + membership, undirected)
    if not g.repl and g.nodes and all(n.level == 0 for n in g.nodes):
        if not _connected(g):
            out.append(Violation("disconnected", "simple CDG is not connected"))

    # visible chains stay linear once replacement groups are resolved
    if not g.repl:
        out.extend(_chain_violations(g))
    return out


def _find_prec_cycle(g: Cdg) -> list[str]:
    succ: dict[str, list[str]] = {}
    for a, b in g.prec:
        succ.setdefault(a, []).append(b)
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {n.id: WHITE for n in g.nodes}
    stack_path: list[str] = []

    def dfs(u: str) -> list[str]:
        color[u] = GRAY
        stack_path.append(u)
        for v in succ.get(u, []):
            if v not in color:
                continue
            if color[v] == GRAY:
                return stack_path[stack_path.index(v):]
            if color[v] == WHITE:
                found = dfs(v)
                if found:
                    return found
        color[u] = BLACK
        stack_path.pop()
        return []

    for n in g.nodes:
        if color[n.id] == WHITE:
            found = dfs(n.id)
            if found:
                return found
    return []


def _connected(g: Cdg) -> bool:
    ids = g.ids()
    adj: dict[str, set[str]] = {i: set() for i in ids}
    for a, b in g.prec:
        if a in adj and b in adj:
            adj[a].add(b)
            adj[b].add(a)
    for n in g.nodes:
        if n.member_of is not None and n.member_of in adj:
            adj[n.id].add(n.member_of)
            adj[n.member_of].add(n.id)
    seen = {ids[0]}
    stack = [ids[0]]
    while stack:
        for v in adj[stack.pop()]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == len(ids)


def _chain_violations(g: Cdg) -> list[Violation]:
    out: list[Violation] = []
    containers: set[str | None] = {n.member_of for n in g.nodes}
    for c in containers:
        group = {n.id for n in g.nodes if n.member_of == c}
        if len(group) <= 1:
            continue
        inner = [(a, b) for a, b in g.prec if a in group and b in group]
        preds: dict[str, int] = {}
        succs: dict[str, int] = {}
        for a, b in inner:
            succs[a] = succs.get(a, 0) + 1
            preds[b] = preds.get(b, 0) + 1
        if any(v > 1 for v in preds.values()) or any(v > 1 for v in succs.values()):
            out.append(Violation("chain-branch", "container chain branches",
                                 tuple(sorted(group))))
            continue
        if len(inner) != len(group) - 1:
            out.append(Violation("chain-broken", "container chain is not connected",
                                 tuple(sorted(group))))
    return out


# ---------------------------------------------------------------------------
# DOT rendering
# ---------------------------------------------------------------------------


def to_dot(g: Cdg, title: str = "cdg") -> str:
    """Deterministic DOT text: boxes for declarations, ellipses for
    computables, solid precedence edges, dashed replacement edges, dotted
    membership edges."""

    def esc(s: str) -> str:
        return s.replace("\\", "\\\\").replace('"', '\\"')

    lines = ["digraph %s {" % title, "  rankdir=TB;", '  node [fontsize=10];']
    for n in sorted(g.nodes, key=lambda n: _id_sort_key(n.id)):
        shape = "box" if n.kind == "declaration" else "ellipse"
        parts = ["%s | %s" % (n.name, n.id)]
        params = ", ".join("%s=%s" % (p.role, p.value.render()) for p in n.params)
        if params:
            parts.append(params)
        if n.member_of is not None:
            parts.append("in %s" % n.member_of)
        label = "\\n".join(esc(part) for part in parts)
        extra = ", peripheries=2" if n.level >= 1 else ""
        lines.append('  "%s" [shape=%s%s, label="%s"];' % (n.id, shape, extra, label))
    for a, b in sorted(g.prec):
        lines.append('  "%s" -> "%s";' % (a, b))
    for n in sorted(g.nodes, key=lambda n: _id_sort_key(n.id)):
        if n.member_of is not None:
            lines.append('  "%s" -> "%s" [style=dotted, color=gray, arrowhead=none];'
                         % (n.id, n.member_of))
    for i, grp in enumerate(g.repl):
        lines.append('  "%s" -> "%s" [style=dashed, dir=both, label="alt%d"];'
                     % (grp.lhs[0], grp.rhs[0], i))
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------


def node_to_json(n: ConceptNode) -> dict:
    return {
        "id": n.id,
        "name": n.name,
        "kind": n.kind,
        "level": n.level,
        "params": [{"role": p.role, "value": p.value.render()} for p in n.params],
        "member_of": n.member_of,
    }


def node_from_json(doc: dict, where: str) -> ConceptNode:
    try:
        params = tuple(
            Param(p["role"], ex.normalize(ex.parse(p["value"]))) for p in doc.get("params", [])
        )
        return ConceptNode(
            id=doc["id"],
            name=doc["name"],
            kind=doc["kind"],
            level=int(doc["level"]),
            params=params,
            member_of=doc.get("member_of"),
        )
    except (KeyError, TypeError, ValueError, ex.ExprSyntaxError) as err:
        raise MalformedDocument("bad node: %s" % err, where) from err


def cdg_to_json(g: Cdg) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "nodes": [node_to_json(n) for n in sorted(g.nodes, key=lambda n: _id_sort_key(n.id))],
        "prec": [list(e) for e in sorted(g.prec)],
        "repl": [{"lhs": list(grp.lhs), "rhs": list(grp.rhs)} for grp in g.repl],
    }


def cdg_from_json(doc, where: str = "cdg") -> Cdg:
    if not isinstance(doc, dict):
        raise MalformedDocument("expected an object", where)
    if doc.get("version") != SCHEMA_VERSION:
        raise MalformedDocument("unsupported schema version %r" % doc.get("version"), where)
    raw_nodes = doc.get("nodes")
    if not isinstance(raw_nodes, list):
        raise MalformedDocument("nodes must be a list", where)
    nodes = tuple(
        node_from_json(nd, "%s.nodes[%d]" % (where, i)) for i, nd in enumerate(raw_nodes)
    )
    seen: set[str] = set()
    for n in nodes:
        if n.id in seen:
            raise MalformedDocument("duplicate node id %r" % n.id, where)
        seen.add(n.id)
    raw_prec = doc.get("prec", [])
    if not isinstance(raw_prec, list):
        raise MalformedDocument("prec must be a list", where)
    prec = []
    for i, e in enumerate(raw_prec):
        if not (isinstance(e, list) and len(e) == 2):
            raise MalformedDocument("bad precedence edge", "%s.prec[%d]" % (where, i))
        prec.append((e[0], e[1]))
    repl = []
    for i, grp in enumerate(doc.get("repl", [])):
        try:
            repl.append(ReplGroup(tuple(grp["lhs"]), tuple(grp["rhs"])))
        except (KeyError, TypeError) as err:
            raise MalformedDocument("bad replacement group", "%s.repl[%d]" % (where, i)) from err
    return Cdg(nodes, tuple(prec), tuple(repl))


def serialize(g: Cdg) -> str:
    return json.dumps(cdg_to_json(g), indent=2, sort_keys=True) + "\n"


def deserialize(text: str) -> Cdg:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise MalformedDocument("invalid JSON at line %d column %d" % (err.lineno, err.colno)) from err
    return cdg_from_json(doc)
