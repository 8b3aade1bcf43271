"""Brute-force matching oracle, independent of the production matcher.

Enumerates every injective, name/kind-compatible assignment of template
nodes to candidate nodes (no search-order cleverness, no pruning beyond
injectivity), then checks variable consistency, membership, and precedence
on the completed assignment.  Decides exactly the question "does some
replacement variant embed fully with every precedence edge satisfied",
which must coincide with the matcher reporting score 1.
"""

from __future__ import annotations

from mindreader import expr as ex
from mindreader.cdg import Cdg
from mindreader.matching import expand_alternatives


def full_embedding_exists(template: Cdg, candidate: Cdg) -> bool:
    for _, variant in expand_alternatives(template):
        if variant.nodes and _variant_embeds(variant, candidate):
            return True
    return False


def _variant_embeds(variant: Cdg, candidate: Cdg) -> bool:
    tnodes = list(variant.nodes)
    pools = [
        [c for c in candidate.nodes if c.name == t.name and c.kind == t.kind]
        for t in tnodes
    ]
    if any(not pool for pool in pools):
        return False
    reach = candidate.prec_closure()

    def assignments(i: int, used: set):
        if i == len(tnodes):
            yield {}
            return
        for c in pools[i]:
            if c.id in used:
                continue
            used.add(c.id)
            for rest in assignments(i + 1, used):
                rest[tnodes[i].id] = c.id
                yield rest
            used.remove(c.id)

    for node_map in assignments(0, set()):
        if _check(variant, candidate, node_map, reach):
            return True
    return False


def _check(variant: Cdg, candidate: Cdg, node_map: dict, reach: dict) -> bool:
    bindings: dict = {}
    for t in variant.nodes:
        cand = candidate.node(node_map[t.id])
        taken: dict[str, int] = {}
        for p in t.params:
            idx = taken.get(p.role, 0)
            taken[p.role] = idx + 1
            values = cand.params_for(p.role)
            if idx >= len(values):
                return False
            env = ex.unify(p.value, values[idx], bindings, vars_only=True)
            if env is None:
                return False
            bindings = env
    names = [v.name for v in bindings.values() if isinstance(v, ex.Var)]
    if len(names) != len(set(names)):
        return False
    for t in variant.nodes:
        if t.member_of is not None:
            if not candidate.is_inside(node_map[t.id], node_map[t.member_of]):
                return False
    for a, b in variant.prec:
        if node_map[b] not in reach.get(node_map[a], ()):
            return False
    return True
