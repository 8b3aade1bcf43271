"""Fixpoint summarization: rewrite a base CDG into higher-level concepts.

Rule application is *absorbing*: the matched nodes are not deleted, they
become members of the new concept node (free matched nodes re-parent to it
and keep their mutual precedence edges; member-matched nodes stay where
they are).  A node whose container has level >= 1 counts as consumed and
is invisible to further matching, so a rule never re-fires on its own
output.  Each step strictly decreases the measure

    sum over visible nodes of (max_rank - level)

which bounds the iteration count by nodes x max_rank.

Free patterns of a rule must match a contiguous run of one container's
chain; this keeps every container's chain linear after the rewrite and
makes cycle creation impossible.
"""

from __future__ import annotations

from dataclasses import dataclass

from mindreader import expr as ex
from mindreader.cdg import Cdg, CdgDelta, ConceptNode, apply_delta, _id_sort_key
from mindreader.minilang.abstract import Param
from mindreader.rules import ConceptHierarchy, ConceptRule, validate_rules


class SummarizationError(RuntimeError):
    """Internal guard tripped; should be unreachable for valid rule sets."""


@dataclass(frozen=True)
class TraceStep:
    rule_id: str
    matched: tuple[str, ...]
    delta: CdgDelta


@dataclass(frozen=True)
class SummarizationTrace:
    steps: tuple[TraceStep, ...]


def replay(base: Cdg, trace: SummarizationTrace) -> Cdg:
    """Re-apply a trace's deltas; reproduces the fixpoint exactly."""
    g = base
    for step in trace.steps:
        g = apply_delta(g, step.delta)
    return g


def measure(g: Cdg, max_rank: int) -> int:
    return sum(max_rank - n.level for n in g.nodes if not g.consumed(n.id))


@dataclass(frozen=True)
class _Match:
    node_map: dict  # pattern key -> node id
    bindings: dict  # meta-variable -> Expr
    container: str | None
    window_start: int  # index of the free run inside the container chain

    def sorted_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.node_map.values(), key=_id_sort_key))


def _params_unify(node: ConceptNode, pattern_params, bindings):
    """Match each (role, pattern) against the node's params.

    Repeated roles match positionally: the k-th pattern for a role is
    matched against the node's k-th parameter of that role.
    """
    env = bindings
    taken: dict[str, int] = {}
    for role, pat in pattern_params:
        idx = taken.get(role, 0)
        taken[role] = idx + 1
        values = node.params_for(role)
        if idx >= len(values):
            return None
        env = ex.unify(pat, values[idx], env)
        if env is None:
            return None
    return env


def _injective_bindings(bindings: dict) -> bool:
    seen: set[str] = set()
    for value in bindings.values():
        if isinstance(value, ex.Lit):
            continue  # distinct metas may bind equal literals
        key = value.render()
        if key in seen:
            return False
        seen.add(key)
    return True


def find_matches(g: Cdg, rule: ConceptRule) -> list[_Match]:
    """All complete matches of ``rule`` in ``g``, unordered."""
    by_key = {p.key: p for p in rule.lhs}
    free_keys = rule.free_keys()
    # Member patterns ordered so a pattern follows the one it is a member of.
    member_keys: list[str] = []
    pending = [p.key for p in rule.lhs if p.member_of is not None]
    while pending:
        progressed = False
        for key in list(pending):
            host = by_key[key].member_of
            if host in free_keys or host in member_keys:
                member_keys.append(key)
                pending.remove(key)
                progressed = True
        if not progressed:  # pragma: no cover - rejected by validate_rules
            member_keys.extend(pending)
            break

    def admissible(pattern, node: ConceptNode) -> bool:
        if node.name not in pattern.names:
            return False
        if pattern.kind is not None and node.kind != pattern.kind:
            return False
        return not g.consumed(node.id)

    # chains of containers whose children are visible
    chains: list[tuple[str | None, list[str]]] = []
    containers: list[str | None] = [None] + [
        n.id for n in g.nodes if n.level == 0 and n.kind == "computable"
    ]
    for c in containers:
        chain = [n.id for n in g.children(c)]
        if chain:
            chains.append((c, chain))

    matches: list[_Match] = []
    k = len(free_keys)
    sorted_nodes = sorted(g.nodes, key=lambda n: _id_sort_key(n.id))

    def extend_members(i, node_map, bindings, container, start):
        if i == len(member_keys):
            if _injective_bindings(bindings):
                matches.append(_Match(dict(node_map), dict(bindings), container, start))
            return
        key = member_keys[i]
        pattern = by_key[key]
        used = set(node_map.values())
        host = node_map[pattern.member_of]
        for n in sorted_nodes:
            if n.id in used or not admissible(pattern, n):
                continue
            if not g.is_inside(n.id, host):
                continue
            env = _params_unify(n, pattern.params, bindings)
            if env is None:
                continue
            node_map[key] = n.id
            extend_members(i + 1, node_map, env, container, start)
            del node_map[key]

    for container, chain in chains:
        for start in range(len(chain) - k + 1):
            window = chain[start:start + k]
            env: dict | None = {}
            node_map: dict = {}
            ok = True
            for key, node_id in zip(free_keys, window):
                node = g.node(node_id)
                if not admissible(by_key[key], node):
                    ok = False
                    break
                env = _params_unify(node, by_key[key].params, env)
                if env is None:
                    ok = False
                    break
                node_map[key] = node_id
            if ok:
                extend_members(0, node_map, env, container, start)
    return matches


def apply_rule_once(g: Cdg, rule: ConceptRule) -> tuple[Cdg, CdgDelta] | None:
    """Apply ``rule`` at its lexicographically least match, if any."""
    matches = find_matches(g, rule)
    if not matches:
        return None
    best = min(matches, key=lambda m: m.sorted_ids())
    return _fire(g, rule, best)


def _fire(g: Cdg, rule: ConceptRule, m: _Match) -> tuple[Cdg, CdgDelta]:
    free_keys = rule.free_keys()
    chain = [n.id for n in g.children(m.container)]
    window = chain[m.window_start:m.window_start + len(free_keys)]
    pred = chain[m.window_start - 1] if m.window_start > 0 else None
    succ_idx = m.window_start + len(free_keys)
    succ = chain[succ_idx] if succ_idx < len(chain) else None

    new_id = "c%d" % (g.max_concept_counter() + 1)
    params = []
    for role, template in rule.rhs_params:
        if not ex.variables(template) <= set(m.bindings):
            continue  # optional: meta never bound in this match
        params.append(Param(role, ex.normalize(ex.substitute(template, m.bindings))))
    new_node = ConceptNode(
        id=new_id,
        name=rule.rhs_name,
        kind="computable",
        level=rule.rhs_level,
        params=tuple(params),
        member_of=m.container,
    )

    prec_removed = []
    prec_added = []
    if pred is not None:
        prec_removed.append((pred, window[0]))
        prec_added.append((pred, new_id))
    if succ is not None:
        prec_removed.append((window[-1], succ))
        prec_added.append((new_id, succ))
    member_rewires = tuple((node_id, new_id) for node_id in window)
    matched_ids = tuple(sorted(m.node_map.values(), key=_id_sort_key))
    delta = CdgDelta(
        added=new_node,
        removed=matched_ids,
        member_rewires=member_rewires,
        prec_removed=tuple(prec_removed),
        prec_added=tuple(prec_added),
    )
    return apply_delta(g, delta), delta


def summarize_lfp(
    g: Cdg, hierarchy: ConceptHierarchy, rules: list[ConceptRule]
) -> tuple[Cdg, SummarizationTrace]:
    """Least fixpoint of the rule set over ``g``.

    Rules are tried highest priority first, then by rule id; each iteration
    fires the first applicable rule at its least match.  Terminates for all
    inputs (see the module docstring for the measure argument).
    """
    if g.repl:
        raise ValueError("cannot summarize a CDG with replacement groups")
    validate_rules(hierarchy, rules)
    ordered = sorted(rules, key=lambda r: (-r.priority, r.rule_id))
    max_rank = max(hierarchy.max_rank(), max((r.rhs_level for r in rules), default=0))
    guard = max(1, len(g.nodes)) * max(1, max_rank) + 1

    steps: list[TraceStep] = []
    current = g
    prev_measure = measure(current, max_rank)
    for _ in range(guard):
        fired = None
        for rule in ordered:
            out = apply_rule_once(current, rule)
            if out is not None:
                fired = (rule, out)
                break
        if fired is None:
            return current, SummarizationTrace(tuple(steps))
        rule, (current, delta) = fired
        now = measure(current, max_rank)
        if now >= prev_measure:
            raise SummarizationError(
                "measure did not decrease applying %s" % rule.rule_id
            )
        prev_measure = now
        steps.append(TraceStep(rule.rule_id, delta.removed, delta))
    raise SummarizationError("iteration guard exceeded; rule set is not rank-increasing")
