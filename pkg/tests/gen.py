"""Seeded random generators shared across the test suite.

Everything is driven by the repo's own SplitMix64 so failures replay
bit-exactly from a seed.
"""

from __future__ import annotations

from mindreader import expr as ex
from mindreader.cdg import Cdg, ConceptNode, ReplGroup
from mindreader.dynamics import SplitMix64
from mindreader.minilang.abstract import Param

NAME_POOL = ("assign", "print", "read", "decide", "whileLoop", "counterLoop", "swap")
VAR_POOL = ("a", "b", "c", "d", "n", "k")


def _choice(rng: SplitMix64, seq):
    return seq[rng.below(len(seq))]


def random_params(rng: SplitMix64, max_params: int = 2) -> tuple[Param, ...]:
    out = []
    for i in range(rng.below(max_params + 1)):
        role = _choice(rng, ("t", "v", "w"))
        kind = rng.below(3)
        if kind == 0:
            value: ex.Expr = ex.Var(_choice(rng, VAR_POOL))
        elif kind == 1:
            value = ex.Lit(rng.randint(0, 3))
        else:
            value = ex.normalize(ex.Op("+", (ex.Lit(1), ex.Var(_choice(rng, VAR_POOL)))))
        out.append(Param(role, value))
    return tuple(out)


def random_cdg(rng: SplitMix64, max_nodes: int = 8, allow_repl: bool = False,
               allow_levels: bool = False) -> Cdg:
    """A valid CDG: container tree, per-container chains, optional levels
    and replacement groups."""
    count = 2 + rng.below(max_nodes - 1)
    nodes: list[ConceptNode] = []
    chains: dict[str | None, list[str]] = {None: []}
    for i in range(count):
        node_id = "s%d" % (i + 1)
        is_decl = rng.below(4) == 0
        member_of = _choice(rng, list(chains.keys()))
        if is_decl:
            node = ConceptNode(
                node_id, "declaration", "declaration", 0,
                (Param("var", ex.Var(_choice(rng, VAR_POOL))),
                 Param("class", ex.Str(_choice(rng, ("scalar", "list", "boolean"))))),
                member_of,
            )
        else:
            level = rng.below(3) if (allow_levels and rng.below(3) == 0) else 0
            name = _choice(rng, NAME_POOL)
            node = ConceptNode(node_id, name, "computable", level,
                               random_params(rng), member_of)
            if rng.below(3) == 0:
                chains[node_id] = []
        nodes.append(node)
        chains[member_of].append(node_id)
    prec = []
    for seq in chains.values():
        prec.extend(zip(seq, seq[1:]))
    repl: tuple[ReplGroup, ...] = ()
    if allow_repl and count >= 4 and rng.below(2) == 0:
        ids = [n.id for n in nodes]
        a = _choice(rng, ids)
        b = _choice(rng, [i for i in ids if i != a])
        repl = (ReplGroup((a,), (b,)),)
    return Cdg(tuple(nodes), tuple(prec), repl)


def derived_template(rng: SplitMix64, candidate: Cdg) -> Cdg:
    """A template extracted from a candidate: a node subset with induced
    membership and some induced precedence, variables renamed, occasional
    wildcards.  Matches the candidate at score 1 by construction."""
    ids = [n.id for n in candidate.nodes]
    keep: list[str] = []
    for i in ids:
        if rng.below(3) != 0:
            keep.append(i)
    if not keep:
        keep = [ids[0]]
    keep_set = set(keep)

    def kept_ancestor(node_id: str) -> str | None:
        cur = candidate.node(node_id).member_of
        while cur is not None:
            if cur in keep_set:
                return cur
            cur = candidate.node(cur).member_of
        return None

    renames = {v: "m%d" % i for i, v in enumerate(sorted(self_vars(candidate)))}
    subst = {old: ex.Var(new) for old, new in renames.items()}

    def rewrite(p: Param) -> Param:
        value = ex.substitute(p.value, subst)
        if rng.below(6) == 0:
            value = ex.WILDCARD
        return Param(p.role, value)

    nodes = []
    for n in candidate.nodes:
        if n.id not in keep_set:
            continue
        nodes.append(
            ConceptNode("t_" + n.id, n.name, n.kind, n.level,
                        tuple(rewrite(p) for p in n.params),
                        ("t_" + kept_ancestor(n.id)) if kept_ancestor(n.id) else None)
        )
    reach = candidate.prec_closure()
    prec = []
    for a in keep:
        for b in keep:
            if a != b and b in reach.get(a, ()) and rng.below(3) == 0:
                prec.append(("t_" + a, "t_" + b))
    return Cdg(tuple(nodes), tuple(prec), ())


def self_vars(g: Cdg) -> set[str]:
    out: set[str] = set()
    for n in g.nodes:
        for p in n.params:
            out |= ex.variables(p.value)
    return out


# ---------------------------------------------------------------------------
# Random MiniLang programs (used for pipeline-level properties)
# ---------------------------------------------------------------------------


def random_program(rng: SplitMix64, max_stmts: int = 6) -> str:
    """Small random but always-parseable MiniLang source."""
    lines = ["func main() {"]
    declared: list[str] = []

    def fresh() -> str:
        name = "v%d" % (len(declared) + 1)
        declared.append(name)
        return name

    def expr_text() -> str:
        if not declared or rng.below(3) == 0:
            return str(rng.randint(0, 9))
        v = _choice(rng, declared)
        if rng.below(3) == 0:
            return "%s + %d" % (v, rng.randint(1, 3))
        return v

    n_stmts = 1 + rng.below(max_stmts)
    lines.append("  int %s = %d;" % (fresh(), rng.randint(0, 9)))
    for _ in range(n_stmts):
        kind = rng.below(5)
        if kind == 0:
            lines.append("  int %s = %s;" % (fresh(), expr_text()))
        elif kind == 1:
            lines.append("  %s = %s;" % (_choice(rng, declared), expr_text()))
        elif kind == 2:
            lines.append("  print %s;" % expr_text())
        elif kind == 3:
            v = fresh()
            lines.append("  int %s = 0;" % v)
            lines.append("  while (%s <= %d) {" % (v, rng.below(4)))
            lines.append("    %s = %s + 1;" % (v, v))
            lines.append("  }")
        else:
            v = _choice(rng, declared)
            lines.append("  if (%s <= %d) {" % (v, rng.below(5)))
            lines.append("    print %s;" % v)
            lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"
