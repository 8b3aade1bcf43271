"""File-backed knowledgebase: algorithm templates, rules, curation queue.

Layout (one directory per knowledgebase):

    rules/core.json      concept hierarchy + rewrite rules
    templates/*.json     one algorithm template per file
    queue/*.json         curation entries (pending/accepted/rejected)
    VERSION              decimal counter, bumped on every mutation

A behavioral pass with a concept mismatch enters the queue as a pending
entry carrying a ready-to-install proposal.  Accepting an entry installs
the proposal: a new replacement alternative inside the base template when
the student fixpoint differs from it in one contiguous region of the
top-level chain, otherwise a sibling template under the same name.
Pending entries never influence grading.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, replace
from pathlib import Path

from mindreader import expr as ex
from mindreader.cdg import (
    Cdg,
    ConceptNode,
    MalformedDocument,
    ReplGroup,
    cdg_from_json,
    cdg_to_json,
    _id_sort_key,
)
from mindreader.dynamics import InputSpec
from mindreader.matching import AlternativeExplosion, expand_alternatives, match
from mindreader.minilang.abstract import Param
from mindreader.rules import ConceptHierarchy, ConceptRule, dump_rules, load_rules

KB_SCHEMA_VERSION = 1
_SAFE_ID = re.compile(r"[A-Za-z0-9_.\-]+$")


class MissingKnowledgebase(Exception):
    pass


class SchemaVersionMismatch(Exception):
    pass


class DuplicateKnowledge(Exception):
    def __init__(self, template_id: str):
        super().__init__("an existing template already matches at score 1: %s" % template_id)
        self.template_id = template_id


class UnknownEntry(Exception):
    pass


class AlreadyDecided(Exception):
    pass


class UnknownTemplate(Exception):
    pass


@dataclass(frozen=True)
class OutputPolicy:
    mode: str = "stdout"  # "stdout" | "stdout_store"
    store_vars: tuple[str, ...] = ()  # template variable names

    def to_json(self) -> dict:
        return {"mode": self.mode, "store_vars": list(self.store_vars)}

    @staticmethod
    def from_json(doc: dict) -> "OutputPolicy":
        return OutputPolicy(doc.get("mode", "stdout"), tuple(doc.get("store_vars", [])))


@dataclass(frozen=True)
class AlgorithmTemplate:
    template_id: str
    name: str
    cdg: Cdg
    input_spec: InputSpec
    output_policy: OutputPolicy
    provenance: str  # "authored" | "learned_curated"
    reference_source: str
    reference_name: str = "<reference>"

    def to_json(self) -> dict:
        return {
            "version": KB_SCHEMA_VERSION,
            "template_id": self.template_id,
            "name": self.name,
            "provenance": self.provenance,
            "input_spec": self.input_spec.to_json(),
            "output_policy": self.output_policy.to_json(),
            "reference_name": self.reference_name,
            "reference_source": self.reference_source,
            "cdg": cdg_to_json(self.cdg),
        }

    @staticmethod
    def from_json(doc: dict, where: str) -> "AlgorithmTemplate":
        if doc.get("version") != KB_SCHEMA_VERSION:
            raise SchemaVersionMismatch("%s: template schema %r" % (where, doc.get("version")))
        try:
            return AlgorithmTemplate(
                template_id=doc["template_id"],
                name=doc["name"],
                cdg=cdg_from_json(doc["cdg"], where + ".cdg"),
                input_spec=InputSpec.from_json(doc["input_spec"], where + ".input_spec"),
                output_policy=OutputPolicy.from_json(doc.get("output_policy", {})),
                provenance=doc.get("provenance", "authored"),
                reference_source=doc["reference_source"],
                reference_name=doc.get("reference_name", "<reference>"),
            )
        except KeyError as err:
            raise MalformedDocument("template missing %s" % err, where) from err


@dataclass(frozen=True)
class CurationEntry:
    entry_id: str
    template_id: str
    student_name: str
    student_source: str
    fixpoint: Cdg
    match_summary: dict
    verdict_summary: dict
    proposal: dict
    status: str = "pending"  # pending | accepted | rejected

    def to_json(self) -> dict:
        return {
            "version": KB_SCHEMA_VERSION,
            "entry_id": self.entry_id,
            "template_id": self.template_id,
            "student_name": self.student_name,
            "student_source": self.student_source,
            "fixpoint": cdg_to_json(self.fixpoint),
            "match": self.match_summary,
            "verdict": self.verdict_summary,
            "proposal": self.proposal,
            "status": self.status,
        }

    @staticmethod
    def from_json(doc: dict, where: str) -> "CurationEntry":
        if doc.get("version") != KB_SCHEMA_VERSION:
            raise SchemaVersionMismatch("%s: entry schema %r" % (where, doc.get("version")))
        try:
            return CurationEntry(
                entry_id=doc["entry_id"],
                template_id=doc["template_id"],
                student_name=doc.get("student_name", "<student>"),
                student_source=doc["student_source"],
                fixpoint=cdg_from_json(doc["fixpoint"], where + ".fixpoint"),
                match_summary=doc.get("match", {}),
                verdict_summary=doc.get("verdict", {}),
                proposal=doc["proposal"],
                status=doc.get("status", "pending"),
            )
        except KeyError as err:
            raise MalformedDocument("entry missing %s" % err, where) from err


@dataclass(frozen=True)
class Knowledgebase:
    templates: dict  # template_id -> AlgorithmTemplate
    hierarchy: ConceptHierarchy
    rules: list
    queue: dict  # entry_id -> CurationEntry
    version: int = 1

    def family(self, template_ref: str) -> list[AlgorithmTemplate]:
        """Templates sharing the referenced template's name, id order."""
        if template_ref in self.templates:
            name = self.templates[template_ref].name
        elif any(t.name == template_ref for t in self.templates.values()):
            name = template_ref
        else:
            raise UnknownTemplate(template_ref)
        return sorted(
            (t for t in self.templates.values() if t.name == name),
            key=lambda t: t.template_id,
        )

    def pending_entries(self) -> list[CurationEntry]:
        return sorted(
            (e for e in self.queue.values() if e.status == "pending"),
            key=lambda e: e.entry_id,
        )


# ---------------------------------------------------------------------------
# Load / save
# ---------------------------------------------------------------------------


def load(path: str | Path) -> Knowledgebase:
    root = Path(path)
    version_file = root / "VERSION"
    rules_file = root / "rules" / "core.json"
    if not root.is_dir() or not version_file.is_file() or not rules_file.is_file():
        raise MissingKnowledgebase(str(root))
    try:
        version = int(version_file.read_text().strip())
    except ValueError as err:
        raise MalformedDocument("VERSION is not a decimal counter", str(version_file)) from err
    hierarchy, rules = load_rules(rules_file.read_text())
    templates: dict[str, AlgorithmTemplate] = {}
    for f in sorted((root / "templates").glob("*.json")):
        doc = _read_json(f)
        t = AlgorithmTemplate.from_json(doc, f.name)
        if t.template_id in templates:
            raise MalformedDocument("duplicate template id %r" % t.template_id, f.name)
        templates[t.template_id] = t
    queue: dict[str, CurationEntry] = {}
    queue_dir = root / "queue"
    if queue_dir.is_dir():
        for f in sorted(queue_dir.glob("*.json")):
            entry = CurationEntry.from_json(_read_json(f), f.name)
            if entry.template_id not in templates:
                raise MalformedDocument(
                    "queue entry %s references unknown template %r"
                    % (entry.entry_id, entry.template_id),
                    f.name,
                )
            queue[entry.entry_id] = entry
    return Knowledgebase(templates, hierarchy, list(rules), queue, version)


def _read_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise MalformedDocument(
            "invalid JSON at line %d column %d" % (err.lineno, err.colno), str(path)
        ) from err


def save(kb: Knowledgebase, path: str | Path) -> None:
    root = Path(path)
    (root / "rules").mkdir(parents=True, exist_ok=True)
    (root / "templates").mkdir(parents=True, exist_ok=True)
    (root / "queue").mkdir(parents=True, exist_ok=True)
    (root / "rules" / "core.json").write_text(dump_rules(kb.hierarchy, kb.rules))
    wanted_templates = set()
    for t in kb.templates.values():
        if not _SAFE_ID.match(t.template_id):
            raise ValueError("template id %r is not filename-safe" % t.template_id)
        name = t.template_id + ".json"
        wanted_templates.add(name)
        (root / "templates" / name).write_text(
            json.dumps(t.to_json(), indent=2, sort_keys=True) + "\n"
        )
    for stale in (root / "templates").glob("*.json"):
        if stale.name not in wanted_templates:
            stale.unlink()
    wanted_entries = set()
    for e in kb.queue.values():
        name = e.entry_id + ".json"
        wanted_entries.add(name)
        (root / "queue" / name).write_text(
            json.dumps(e.to_json(), indent=2, sort_keys=True) + "\n"
        )
    for stale in (root / "queue").glob("*.json"):
        if stale.name not in wanted_entries:
            stale.unlink()
    (root / "VERSION").write_text("%d\n" % kb.version)


# ---------------------------------------------------------------------------
# Learning: fixpoint abstraction and proposal construction
# ---------------------------------------------------------------------------


def strip_funcdefs(g: Cdg) -> Cdg:
    """Remove funcDef wrapper nodes, splicing their children into the
    surrounding chain.  Learned templates stay agnostic about how students
    wrap their code in functions."""
    out = g
    while True:
        target = next(
            (n for n in out.nodes if n.name == "funcDef" and n.kind == "computable"),
            None,
        )
        if target is None:
            return out
        children = [c.id for c in out.children(target.id)]
        preds = [a for a, b in out.prec if b == target.id]
        succs = [b for a, b in out.prec if a == target.id]
        drop_edges = {(a, target.id) for a in preds} | {(target.id, b) for b in succs}
        prec = [e for e in out.prec if e not in drop_edges]
        if children:
            prec.extend((a, children[0]) for a in preds)
            prec.extend((children[-1], b) for b in succs)
        else:
            prec.extend((a, b) for a in preds for b in succs)
        nodes = tuple(
            replace(n, member_of=target.member_of) if n.member_of == target.id else n
            for n in out.nodes
            if n.id != target.id
        )
        out = Cdg(nodes, tuple(prec), out.repl)


def abstract_variables(g: Cdg, taken: set[str] | None = None) -> tuple[Cdg, dict]:
    """Uniformly rename program variables to fresh meta names v1, v2, ...

    Returns the renamed graph and the mapping {original: meta}.  Names in
    ``taken`` are skipped when generating metas.
    """
    taken = set(taken or ())
    order: list[str] = []
    for n in sorted(g.nodes, key=lambda n: _id_sort_key(n.id)):
        for p in n.params:
            for name in sorted(ex.variables(p.value)):
                if name not in order:
                    order.append(name)
    mapping: dict[str, ex.Expr] = {}
    counter = 1
    for name in order:
        while "v%d" % counter in taken:
            counter += 1
        mapping[name] = ex.Var("v%d" % counter)
        counter += 1
    nodes = tuple(
        replace(
            n,
            params=tuple(Param(p.role, ex.substitute(p.value, mapping)) for p in n.params),
        )
        for n in g.nodes
    )
    return Cdg(nodes, g.prec, g.repl), {k: v.name for k, v in mapping.items()}


def _template_vars(g: Cdg) -> set[str]:
    out: set[str] = set()
    for n in g.nodes:
        for p in n.params:
            out |= ex.variables(p.value)
    return out


def _anchor_unify(base: ConceptNode, learned: ConceptNode, mapping: dict) -> bool:
    """Extend ``mapping`` (learned meta -> base meta) so the two anchor
    nodes' parameters coincide; False when they are not isomorphic."""
    if base.name != learned.name or base.kind != learned.kind:
        return False
    roles_base = [(p.role, p.value) for p in base.params]
    roles_learned = {i: p for i, p in enumerate(learned.params)}
    for i, (role, pattern) in enumerate(roles_base):
        if i not in roles_learned or roles_learned[i].role != role:
            return False
        if not _expr_align(pattern, roles_learned[i].value, mapping):
            return False
    return True


def _expr_align(base: ex.Expr, learned: ex.Expr, mapping: dict) -> bool:
    if isinstance(base, ex.Wildcard) or isinstance(learned, ex.Wildcard):
        return True
    if isinstance(base, ex.Var) and isinstance(learned, ex.Var):
        if learned.name in mapping:
            return mapping[learned.name] == base.name
        if base.name in mapping.values():
            return False
        mapping[learned.name] = base.name
        return True
    if isinstance(base, (ex.Lit, ex.Str)) or isinstance(learned, (ex.Lit, ex.Str)):
        return base == learned
    if type(base) is not type(learned):
        return False
    if isinstance(base, ex.Index):
        return _expr_align(base.base, learned.base, mapping) and _expr_align(
            base.index, learned.index, mapping
        )
    if isinstance(base, ex.Length):
        return _expr_align(base.base, learned.base, mapping)
    if isinstance(base, (ex.Call, ex.Op)):
        key_b = base.name if isinstance(base, ex.Call) else base.op
        key_l = learned.name if isinstance(learned, ex.Call) else learned.op
        if key_b != key_l or len(base.args) != len(learned.args):
            return False
        return all(_expr_align(a, b, mapping) for a, b in zip(base.args, learned.args))
    return False


def build_proposal(base: AlgorithmTemplate, fixpoint: Cdg) -> dict:
    """Ready-to-install knowledge delta for a behaviorally verified
    student fixpoint that the base template failed to match."""
    learned = strip_funcdefs(fixpoint)
    learned, _ = abstract_variables(learned, taken=_template_vars(base.cdg))
    plan = _plan_repl_group(base, learned)
    if plan is not None:
        return plan
    return {"kind": "sibling", "cdg": cdg_to_json(learned)}


def _plan_repl_group(base: AlgorithmTemplate, learned: Cdg) -> dict | None:
    # Alignment runs against the primary realization (lhs chosen for every
    # replacement group) so learned alternatives never anchor on each other.
    try:
        primary = expand_alternatives(base.cdg)[0][1]
    except AlternativeExplosion:
        return None
    base_chain = [n.id for n in primary.children(None)]
    learned_chain = [n.id for n in learned.children(None)]
    if not base_chain or not learned_chain:
        return None
    mapping: dict[str, str] = {}
    prefix = 0
    while (
        prefix < min(len(base_chain), len(learned_chain))
        and _anchor_unify(
            base.cdg.node(base_chain[prefix]), learned.node(learned_chain[prefix]), mapping
        )
    ):
        prefix += 1
    suffix = 0
    while (
        suffix < min(len(base_chain), len(learned_chain)) - prefix
        and _anchor_unify(
            base.cdg.node(base_chain[-1 - suffix]),
            learned.node(learned_chain[-1 - suffix]),
            mapping,
        )
    ):
        suffix += 1
    base_mid = base_chain[prefix:len(base_chain) - suffix]
    learned_mid = learned_chain[prefix:len(learned_chain) - suffix]
    if not base_mid or not learned_mid:
        return None
    # Rename learned metas that the anchors identified with base metas.
    subst = {old: ex.Var(new) for old, new in mapping.items()}
    renamed_nodes = tuple(
        replace(
            n, params=tuple(Param(p.role, ex.substitute(p.value, subst)) for p in n.params)
        )
        for n in learned.nodes
    )
    learned = Cdg(renamed_nodes, learned.prec, learned.repl)
    keep = set(learned_mid)
    for i in learned_mid:
        keep |= learned.descendants(i)
    group_nodes = [n for n in learned.nodes if n.id in keep]
    group_prec = [(a, b) for a, b in learned.prec if a in keep and b in keep]
    fragment = Cdg(tuple(group_nodes), tuple(group_prec), ())
    return {
        "kind": "repl_group",
        "lhs": base_mid,
        "rhs_top": learned_mid,
        "fragment": cdg_to_json(fragment),
        "anchor_before": base_chain[prefix - 1] if prefix else None,
        "anchor_after": base_chain[len(base_chain) - suffix] if suffix else None,
    }


def _install_repl_group(base: AlgorithmTemplate, proposal: dict) -> AlgorithmTemplate:
    fragment = cdg_from_json(proposal["fragment"], "proposal.fragment")
    prefix = "alt%d_" % (len(base.cdg.repl) + 1)
    renames = {n.id: prefix + n.id for n in fragment.nodes}
    frag_nodes = tuple(
        replace(
            n,
            id=renames[n.id],
            member_of=renames.get(n.member_of, n.member_of) if n.member_of else None,
        )
        for n in fragment.nodes
    )
    frag_prec = tuple((renames[a], renames[b]) for a, b in fragment.prec)
    rhs_top = [renames[i] for i in proposal["rhs_top"]]
    nodes = base.cdg.nodes + frag_nodes
    prec = list(base.cdg.prec) + list(frag_prec)
    if proposal.get("anchor_before"):
        prec.append((proposal["anchor_before"], rhs_top[0]))
    if proposal.get("anchor_after"):
        prec.append((rhs_top[-1], proposal["anchor_after"]))
    repl = base.cdg.repl + (ReplGroup(tuple(proposal["lhs"]), tuple(rhs_top)),)
    return replace(base, cdg=Cdg(tuple(nodes), tuple(prec), repl))


# ---------------------------------------------------------------------------
# Queue operations
# ---------------------------------------------------------------------------


def entry_id_for(template_id: str, fixpoint: Cdg) -> str:
    digest = hashlib.sha256()
    digest.update(template_id.encode())
    digest.update(json.dumps(cdg_to_json(fixpoint), sort_keys=True).encode())
    return "q" + digest.hexdigest()[:12]


def make_entry(
    kb: Knowledgebase,
    template_id: str,
    student_name: str,
    student_source: str,
    fixpoint: Cdg,
    match_summary: dict,
    verdict_summary: dict,
) -> CurationEntry:
    base = kb.templates[template_id]
    return CurationEntry(
        entry_id=entry_id_for(template_id, fixpoint),
        template_id=template_id,
        student_name=student_name,
        student_source=student_source,
        fixpoint=fixpoint,
        match_summary=match_summary,
        verdict_summary=verdict_summary,
        proposal=build_proposal(base, fixpoint),
    )


def propose_learning(kb: Knowledgebase, entry: CurationEntry) -> Knowledgebase:
    """Queue a behaviorally verified solution for curation.

    Rejects entries whose verdict is not equivalent and duplicates (some
    template of the family already matches the fixpoint at score 1).
    """
    if not entry.verdict_summary.get("equivalent", False):
        raise ValueError("only behaviorally equivalent solutions enter the queue")
    if entry.template_id not in kb.templates:
        raise UnknownTemplate(entry.template_id)
    for t in kb.family(entry.template_id):
        if match(t.cdg, entry.fixpoint).score == 1:
            raise DuplicateKnowledge(t.template_id)
    queue = dict(kb.queue)
    queue[entry.entry_id] = entry
    return replace(kb, queue=queue, version=kb.version + 1)


def curate(kb: Knowledgebase, entry_id: str, decision: str) -> Knowledgebase:
    if decision not in ("accept", "reject"):
        raise ValueError("decision must be accept or reject")
    entry = kb.queue.get(entry_id)
    if entry is None:
        raise UnknownEntry(entry_id)
    if entry.status != "pending":
        raise AlreadyDecided(entry_id)
    queue = dict(kb.queue)
    templates = dict(kb.templates)
    if decision == "reject":
        queue[entry_id] = replace(entry, status="rejected")
        return replace(kb, queue=queue, version=kb.version + 1)
    base = templates[entry.template_id]
    proposal = entry.proposal
    if proposal["kind"] == "repl_group":
        templates[base.template_id] = replace(
            _install_repl_group(base, proposal), provenance=base.provenance
        )
    else:
        sibling_id = "%s.%s" % (base.template_id, entry.entry_id)
        templates[sibling_id] = AlgorithmTemplate(
            template_id=sibling_id,
            name=base.name,
            cdg=cdg_from_json(proposal["cdg"], "proposal.cdg"),
            input_spec=base.input_spec,
            output_policy=base.output_policy,
            provenance="learned_curated",
            reference_source=entry.student_source,
            reference_name=entry.student_name,
        )
    queue[entry_id] = replace(entry, status="accepted")
    return replace(kb, templates=templates, queue=queue, version=kb.version + 1)
