"""Concept hierarchy and rewrite rules that drive summarization.

A rule's left-hand side is a small graph pattern: node patterns with
allowed concept names, parameter patterns (identifiers bind, ``_``
matches anything), transitive membership constraints, and an adjacency
chain over the *free* patterns (those not constrained to be members of
another pattern).  The right-hand side is a single higher-level concept
node whose parameters are built from the bindings.

Rules must be rank-increasing with respect to the concept hierarchy:
the produced node's level strictly exceeds every matched node's level.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from mindreader import expr as ex
from mindreader.cdg import MalformedDocument

RULE_SCHEMA_VERSION = 1

# Base vocabulary: every executable kind plus declarations sits at rank 0.
BASE_CONCEPTS = (
    "declaration",
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


class RuleSetInvalid(Exception):
    def __init__(self, rule_id: str, reason: str):
        super().__init__("rule %s: %s" % (rule_id, reason))
        self.rule_id = rule_id
        self.reason = reason


@dataclass(frozen=True)
class ConceptHierarchy:
    """Rank order over concept names plus the composes-into relation."""

    ranks: dict[str, int]
    parents: dict[str, tuple[str, ...]]

    def rank(self, name: str) -> int:
        return self.ranks.get(name, 0)

    def max_rank(self) -> int:
        return max(self.ranks.values(), default=0)


@dataclass(frozen=True)
class NodePattern:
    key: str
    names: tuple[str, ...]  # acceptable concept names
    kind: str | None = None
    member_of: str | None = None  # key of another pattern; transitive
    params: tuple[tuple[str, ex.Expr], ...] = ()  # (role, pattern)


@dataclass(frozen=True)
class ConceptRule:
    rule_id: str
    priority: int
    lhs: tuple[NodePattern, ...]
    lhs_prec: tuple[tuple[str, str], ...]  # adjacency between free patterns
    rhs_name: str
    rhs_level: int
    rhs_params: tuple[tuple[str, ex.Expr], ...] = ()

    def free_keys(self) -> list[str]:
        """Free patterns in chain order (lhs order, refined by lhs_prec)."""
        free = [p.key for p in self.lhs if p.member_of is None]
        if not self.lhs_prec:
            return free
        succ = dict(self.lhs_prec)
        preds = {b for _, b in self.lhs_prec}
        starts = [k for k in free if k not in preds]
        ordered: list[str] = []
        for s in starts:
            cur: str | None = s
            while cur is not None and cur not in ordered:
                ordered.append(cur)
                cur = succ.get(cur)
        ordered.extend(k for k in free if k not in ordered)
        return ordered

    def pattern_vars(self) -> set[str]:
        out: set[str] = set()
        for p in self.lhs:
            for _, pat in p.params:
                out |= ex.variables(pat)
        return out


def validate_rules(
    hierarchy: ConceptHierarchy, rules: list[ConceptRule]
) -> None:
    """Raise :class:`RuleSetInvalid` naming the first offending rule."""
    seen_ids: set[str] = set()
    for r in rules:
        if r.rule_id in seen_ids:
            raise RuleSetInvalid(r.rule_id, "duplicate rule id")
        seen_ids.add(r.rule_id)
        if not r.lhs:
            raise RuleSetInvalid(r.rule_id, "empty left-hand side")
        keys = [p.key for p in r.lhs]
        if len(set(keys)) != len(keys):
            raise RuleSetInvalid(r.rule_id, "duplicate pattern keys")
        key_set = set(keys)
        for p in r.lhs:
            if not p.names:
                raise RuleSetInvalid(r.rule_id, "pattern %s has no names" % p.key)
            if p.member_of is not None and p.member_of not in key_set:
                raise RuleSetInvalid(
                    r.rule_id, "pattern %s member_of unknown key %r" % (p.key, p.member_of)
                )
        # membership references must be acyclic
        for p in r.lhs:
            hops, cur = 0, p.member_of
            by_key = {q.key: q for q in r.lhs}
            while cur is not None:
                hops += 1
                if hops > len(r.lhs):
                    raise RuleSetInvalid(r.rule_id, "membership cycle in lhs")
                cur = by_key[cur].member_of
        for a, b in r.lhs_prec:
            if a not in key_set or b not in key_set:
                raise RuleSetInvalid(r.rule_id, "prec names unknown key")
        # free patterns must form one chain so the rewrite is well-defined
        free = [p.key for p in r.lhs if p.member_of is None]
        if not free:
            raise RuleSetInvalid(r.rule_id, "no free pattern in lhs")
        chain = r.free_keys()
        succ = dict(r.lhs_prec)
        if len(dict(r.lhs_prec)) != len(r.lhs_prec):
            raise RuleSetInvalid(r.rule_id, "branching prec in lhs")
        for a, b in zip(chain, chain[1:]):
            if succ.get(a) != b:
                raise RuleSetInvalid(
                    r.rule_id, "free patterns are not totally ordered by prec"
                )
        # rank increase
        max_lhs = 0
        for p in r.lhs:
            for nm in p.names:
                max_lhs = max(max_lhs, hierarchy.rank(nm))
        if r.rhs_level <= max_lhs:
            raise RuleSetInvalid(
                r.rule_id,
                "rhs level %d does not exceed lhs level %d" % (r.rhs_level, max_lhs),
            )
        if hierarchy.ranks.get(r.rhs_name) != r.rhs_level:
            raise RuleSetInvalid(
                r.rule_id,
                "rhs %s level %d disagrees with hierarchy" % (r.rhs_name, r.rhs_level),
            )
        bound = r.pattern_vars()
        for _, e in r.rhs_params:
            unbound = ex.variables(e) - bound
            if unbound:
                raise RuleSetInvalid(
                    r.rule_id, "rhs uses unbound meta-variables %s" % sorted(unbound)
                )


# ---------------------------------------------------------------------------
# Loading / saving
# ---------------------------------------------------------------------------


def _parse_pattern(text: str, where: str) -> ex.Expr:
    try:
        return ex.normalize(ex.parse(text))
    except ex.ExprSyntaxError as err:
        raise MalformedDocument(str(err), where) from err


def rule_to_json(r: ConceptRule) -> dict:
    return {
        "rule_id": r.rule_id,
        "priority": r.priority,
        "lhs": {
            "nodes": [
                {
                    "key": p.key,
                    "names": list(p.names),
                    **({"kind": p.kind} if p.kind else {}),
                    **({"member_of": p.member_of} if p.member_of else {}),
                    "params": [{"role": role, "pattern": pat.render()} for role, pat in p.params],
                }
                for p in r.lhs
            ],
            "prec": [list(e) for e in r.lhs_prec],
        },
        "rhs": {
            "name": r.rhs_name,
            "level": r.rhs_level,
            "params": [{"role": role, "expr": e.render()} for role, e in r.rhs_params],
        },
    }


def rule_from_json(doc: dict, where: str) -> ConceptRule:
    try:
        lhs_doc = doc["lhs"]
        patterns = []
        for i, nd in enumerate(lhs_doc["nodes"]):
            params = tuple(
                (p["role"], _parse_pattern(p["pattern"], "%s.nodes[%d]" % (where, i)))
                for p in nd.get("params", [])
            )
            patterns.append(
                NodePattern(
                    key=nd["key"],
                    names=tuple(nd["names"]),
                    kind=nd.get("kind"),
                    member_of=nd.get("member_of"),
                    params=params,
                )
            )
        prec = tuple((e[0], e[1]) for e in lhs_doc.get("prec", []))
        rhs = doc["rhs"]
        rhs_params = tuple(
            (p["role"], _parse_pattern(p["expr"], where + ".rhs")) for p in rhs.get("params", [])
        )
        return ConceptRule(
            rule_id=doc["rule_id"],
            priority=int(doc.get("priority", 0)),
            lhs=tuple(patterns),
            lhs_prec=prec,
            rhs_name=rhs["name"],
            rhs_level=int(rhs["level"]),
            rhs_params=rhs_params,
        )
    except (KeyError, TypeError) as err:
        raise MalformedDocument("bad rule: %s" % err, where) from err


def rules_to_json(hierarchy: ConceptHierarchy, rules: list[ConceptRule]) -> dict:
    return {
        "version": RULE_SCHEMA_VERSION,
        "hierarchy": dict(sorted(hierarchy.ranks.items())),
        "parents": {k: list(v) for k, v in sorted(hierarchy.parents.items())},
        "rules": [rule_to_json(r) for r in rules],
    }


def load_rules(text: str) -> tuple[ConceptHierarchy, list[ConceptRule]]:
    """Parse and validate a rule file; see the JSON schema in the README."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise MalformedDocument(
            "invalid JSON at line %d column %d" % (err.lineno, err.colno), "rules"
        ) from err
    if not isinstance(doc, dict) or doc.get("version") != RULE_SCHEMA_VERSION:
        raise MalformedDocument("unsupported rule schema version", "rules")
    ranks_doc = doc.get("hierarchy", {})
    if not isinstance(ranks_doc, dict):
        raise MalformedDocument("hierarchy must be an object", "rules")
    ranks = {str(k): int(v) for k, v in ranks_doc.items()}
    for base in BASE_CONCEPTS:
        ranks.setdefault(base, 0)
    parents_doc = doc.get("parents", {})
    parents = {str(k): tuple(v) for k, v in parents_doc.items()}
    hierarchy = ConceptHierarchy(ranks, parents)
    rules = [
        rule_from_json(rd, "rules[%d]" % i) for i, rd in enumerate(doc.get("rules", []))
    ]
    for base in BASE_CONCEPTS:
        if ranks.get(base, 0) != 0:
            raise MalformedDocument("base concept %r must have rank 0" % base, "rules")
    validate_rules(hierarchy, rules)
    order = sorted(rules, key=lambda r: (-r.priority, r.rule_id))
    return hierarchy, order


def dump_rules(hierarchy: ConceptHierarchy, rules: list[ConceptRule]) -> str:
    return json.dumps(rules_to_json(hierarchy, rules), indent=2, sort_keys=True) + "\n"
