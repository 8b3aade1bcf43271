"""Substitution-aware subgraph matching of template CDGs.

A template is matched against a student fixpoint by an injective,
name-preserving embedding of template nodes into candidate nodes.
Identifiers inside template parameters bind student variables (the
substitution is variable-to-variable and injective); ``_`` parameters are
wildcards; integer constants must match exactly.  Membership edges of the
template are hard constraints (checked transitively, so extra nesting
levels in the student graph are tolerated); precedence edges are soft:
they are checked against the candidate's transitive precedence closure
and only lower the score when violated.

    score = matched/total * satisfied_prec/considered_prec

Templates may carry replacement groups (two interchangeable node
sequences); every combination is expanded and the best-scoring variant
wins.  Score 1 therefore means: some variant embeds completely with all
precedence constraints satisfied.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from mindreader import expr as ex
from mindreader.cdg import Cdg, ConceptNode, ReplGroup, _id_sort_key


class AlternativeExplosion(Exception):
    def __init__(self, count: int, cap: int):
        super().__init__("replacement expansion yields %d variants (cap %d)" % (count, cap))
        self.count = count
        self.cap = cap


class NoTemplates(Exception):
    pass


@dataclass(frozen=True)
class Substitution:
    var_map: dict
    node_map: dict

    def to_json(self) -> dict:
        return {
            "var_map": dict(sorted(self.var_map.items())),
            "node_map": dict(sorted(self.node_map.items())),
        }


@dataclass(frozen=True)
class MatchResult:
    score: Fraction
    substitution: Substitution
    unmatched_template_nodes: tuple[str, ...]
    violated_precedences: tuple[tuple[str, str], ...]
    variant_used: tuple[str, ...]
    total_template_nodes: int
    matched_template_nodes: int

    @property
    def is_full(self) -> bool:
        return not self.unmatched_template_nodes and not self.violated_precedences

    def to_json(self) -> dict:
        return {
            "score": "%d/%d" % (self.score.numerator, self.score.denominator),
            "score_float": float(self.score),
            "substitution": self.substitution.to_json(),
            "unmatched_template_nodes": list(self.unmatched_template_nodes),
            "violated_precedences": [list(e) for e in self.violated_precedences],
            "variant_used": list(self.variant_used),
            "total_template_nodes": self.total_template_nodes,
            "matched_template_nodes": self.matched_template_nodes,
        }


def expand_alternatives(template: Cdg, cap: int = 1024) -> list[tuple[tuple[str, ...], Cdg]]:
    """Every simple variant obtained by choosing one side per replacement
    group.  Unchosen sequences are removed along with their membership
    descendants and incident precedence edges."""
    groups = template.repl
    if not groups:
        return [((), template)]
    count = 2 ** len(groups)
    if count > cap:
        raise AlternativeExplosion(count, cap)
    variants: list[tuple[tuple[str, ...], Cdg]] = []
    for choice in itertools.product(("lhs", "rhs"), repeat=len(groups)):
        drop: set[str] = set()
        for pick, grp in zip(choice, groups):
            losers = grp.rhs if pick == "lhs" else grp.lhs
            for node_id in losers:
                if template.has(node_id):
                    drop.add(node_id)
                    drop |= template.descendants(node_id)
        nodes = tuple(n for n in template.nodes if n.id not in drop)
        prec = tuple((a, b) for a, b in template.prec if a not in drop and b not in drop)
        key = tuple("%d:%s" % (i, pick) for i, pick in enumerate(choice))
        variants.append((key, Cdg(nodes, prec, ())))
    return variants


def _params_match(template_node: ConceptNode, cand: ConceptNode, bindings):
    env = bindings
    taken: dict[str, int] = {}
    for p in template_node.params:
        idx = taken.get(p.role, 0)
        taken[p.role] = idx + 1
        values = cand.params_for(p.role)
        if idx >= len(values):
            return None
        env = ex.unify(p.value, values[idx], env, vars_only=True)
        if env is None:
            return None
    return env


def _var_map_injective(bindings: dict) -> bool:
    names = [v.name for v in bindings.values() if isinstance(v, ex.Var)]
    return len(names) == len(set(names))


@dataclass
class _Search:
    template: Cdg
    candidate: Cdg
    reach: dict
    order: list  # template nodes, most-constrained first
    candidates: dict  # template id -> list of candidate nodes
    best_score: Fraction = Fraction(-1)
    best: tuple | None = None  # (score, matched, node_map, bindings)

    def run(self) -> tuple[dict, dict]:
        self._step(0, {}, {})
        assert self.best is not None
        return self.best[2], self.best[3]

    def _prec_stats(self, node_map: dict) -> tuple[int, int]:
        considered = satisfied = 0
        for a, b in self.template.prec:
            if a in node_map and b in node_map:
                considered += 1
                if node_map[b] in self.reach.get(node_map[a], ()):
                    satisfied += 1
        return satisfied, considered

    def _score_of(self, node_map: dict) -> Fraction:
        total = len(self.template.nodes)
        if total == 0:
            return Fraction(0)
        sat, considered = self._prec_stats(node_map)
        score = Fraction(len(node_map), total)
        if considered:
            score *= Fraction(sat, considered)
        return score

    def _membership_ok(self, tid: str, cid: str, node_map: dict) -> bool:
        t_node = self.template.node(tid)
        if t_node.member_of is not None and t_node.member_of in node_map:
            if not self.candidate.is_inside(cid, node_map[t_node.member_of]):
                return False
        for other_tid, other_cid in node_map.items():
            if self.template.node(other_tid).member_of == tid:
                if not self.candidate.is_inside(other_cid, cid):
                    return False
        return True

    def _step(self, i: int, node_map: dict, bindings: dict) -> None:
        total = len(self.template.nodes)
        remaining = len(self.order) - i
        potential = Fraction(len(node_map) + remaining, total)
        if potential < self.best_score:
            return
        if i == len(self.order):
            score = self._score_of(node_map)
            key = tuple(sorted(node_map.items()))
            if (
                self.best is None
                or score > self.best_score
                or (score == self.best_score and len(node_map) > self.best[1])
                or (score == self.best_score and len(node_map) == self.best[1]
                    and key < self.best[4])
            ):
                self.best_score = score
                self.best = (score, len(node_map), dict(node_map), dict(bindings), key)
            return
        t_node = self.order[i]
        used = set(node_map.values())
        for cand in self.candidates[t_node.id]:
            if cand.id in used:
                continue
            if not self._membership_ok(t_node.id, cand.id, node_map):
                continue
            env = _params_match(t_node, cand, bindings)
            if env is None or not _var_map_injective(env):
                continue
            node_map[t_node.id] = cand.id
            self._step(i + 1, node_map, env)
            del node_map[t_node.id]
        # skip branch: leave this template node unmatched
        self._step(i + 1, node_map, bindings)


def _match_variant(variant: Cdg, candidate: Cdg, reach: dict) -> tuple[Fraction, dict, dict]:
    by_bucket: dict[tuple[str, str], list[ConceptNode]] = {}
    for n in candidate.nodes:
        by_bucket.setdefault((n.name, n.kind), []).append(n)
    for bucket in by_bucket.values():
        bucket.sort(key=lambda n: _id_sort_key(n.id))
    candidates = {
        t.id: by_bucket.get((t.name, t.kind), []) for t in variant.nodes
    }
    order = sorted(
        variant.nodes, key=lambda t: (len(candidates[t.id]), _id_sort_key(t.id))
    )
    search = _Search(variant, candidate, reach, order, candidates)
    node_map, bindings = search.run()
    return search.best_score, node_map, bindings


def match(template: Cdg, candidate: Cdg, expansion_cap: int = 1024) -> MatchResult:
    """Best match of ``template`` (with alternatives) against ``candidate``."""
    if candidate.repl:
        raise ValueError("candidate must be a fixpoint CDG without replacement groups")
    if not template.nodes:
        raise ValueError("template has no nodes")
    reach = candidate.prec_closure()
    best: MatchResult | None = None
    for key, variant in expand_alternatives(template, expansion_cap):
        if not variant.nodes:
            continue
        score, node_map, bindings = _match_variant(variant, candidate, reach)
        sat_violations = tuple(
            sorted(
                (a, b)
                for a, b in variant.prec
                if a in node_map and b in node_map
                and node_map[b] not in reach.get(node_map[a], ())
            )
        )
        unmatched = tuple(
            sorted((t.id for t in variant.nodes if t.id not in node_map), key=_id_sort_key)
        )
        var_map = {k: v.name for k, v in bindings.items() if isinstance(v, ex.Var)}
        result = MatchResult(
            score=score,
            substitution=Substitution(var_map, dict(node_map)),
            unmatched_template_nodes=unmatched,
            violated_precedences=sat_violations,
            variant_used=key,
            total_template_nodes=len(variant.nodes),
            matched_template_nodes=len(node_map),
        )
        if best is None or result.score > best.score:
            best = result
    assert best is not None
    return best


def best_match(templates, candidate: Cdg, expansion_cap: int = 1024):
    """Highest-scoring template; ties broken by template id order.

    ``templates`` is an iterable of objects with ``template_id`` and ``cdg``
    attributes (see :mod:`mindreader.kb`).
    """
    items = sorted(templates, key=lambda t: t.template_id)
    if not items:
        raise NoTemplates()
    best_id, best_result = None, None
    for t in items:
        result = match(t.cdg, candidate, expansion_cap)
        if best_result is None or result.score > best_result.score:
            best_id, best_result = t.template_id, result
    return best_id, best_result
