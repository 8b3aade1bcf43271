"""End-to-end grading pipeline.

parse -> extract concepts -> base CDG -> fixpoint -> template match ->
(on mismatch) behavioral comparison -> report, queuing behaviorally
verified novel solutions for curation.

Statuses: ``concept_verified`` (match score reached the acceptance
threshold, 1.0 by default), ``behaviour_verified_pending_curation``
(score below threshold but reference and student agree on every test),
``rejected`` (a divergence witness exists), ``error`` (parse or
knowledgebase failure).  Grading never mutates templates or rules; only
the curation queue grows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from mindreader import cdg as cdg_mod
from mindreader import kb as kb_mod
from mindreader.dynamics import (
    ComparePolicy,
    EquivalenceVerdict,
    dynamic_equiv,
    generate_tests,
)
from mindreader.matching import MatchResult, match
from mindreader.minilang import ast as A
from mindreader.minilang.abstract import extract_concepts
from mindreader.minilang.parser import ParseFailure, parse
from mindreader.summarize import summarize_lfp

REPORT_SCHEMA_VERSION = 1

# Didactic text for unmatched template concepts, keyed by concept name.
PHRASES = {
    "declaration": "expected a declaration of a matching variable; found none",
    "assign": "expected an assignment statement here; found none",
    "increment": "expected a statement stepping the loop variable; found none",
    "decrement": "expected a statement stepping the loop variable down; found none",
    "whileLoop": "expected a while loop; found none",
    "forLoop": "expected a for loop; found none",
    "decide": "expected a conditional (if) around the comparison; found none",
    "print": "expected the result to be printed; found none",
    "read": "expected the input to be read; found none",
    "swap": "expected the two values to be swapped (a temporary plus a "
            "cyclic exchange, or a swap helper); found none",
    "swapCall": "expected a call to a swap helper; found none",
    "counterLoop": "expected a counter loop (initialize, test, and step a "
                   "loop variable) over the data; found none",
    "sentinelLoop": "expected a flag-controlled loop that re-checks a "
                    "sorted/done flag; found none",
    "aggregate": "expected the list elements to be summed inside a counter "
                 "loop; found none",
    "compareAndSwapAdjacent": "expected adjacent elements to be compared "
                              "and swapped when out of order; found none",
    "average": "expected the average computation (sum the elements, then "
               "divide by the element count); found none",
    "bubbleSort": "expected a bubble sort (a sorted flag re-checked while "
                  "passes compare and swap adjacent elements); found none",
}


@dataclass(frozen=True)
class GraderConfig:
    kb_path: str | None = None
    theta: Fraction = Fraction(1)
    tests: int = 20
    seed: int = 42
    step_limit: int = 1_000_000
    expansion_cap: int = 1024
    dump_stage: str | None = None  # "base" | "fixpoint"
    dump_format: str = "json"  # "json" | "dot"
    dump_dir: str | None = None

    def __post_init__(self):
        if not (0 < self.theta <= 1):
            raise ValueError("theta must be in (0, 1]")
        if self.tests < 1:
            raise ValueError("need at least one test")


@dataclass(frozen=True)
class GradeReport:
    status: str
    student: str
    template_ref: str
    template_id: str | None = None
    score: Fraction | None = None
    match_result: MatchResult | None = None
    verdict: EquivalenceVerdict | None = None
    queue_entry_id: str | None = None
    diagnostics: tuple[str, ...] = ()
    artifacts: dict = field(default_factory=dict)
    error_kind: str | None = None  # "input" | "kb"

    def to_json(self) -> dict:
        doc: dict = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "status": self.status,
            "student": self.student,
            "template_ref": self.template_ref,
            "template_id": self.template_id,
            "diagnostics": list(self.diagnostics),
            "artifacts": dict(sorted(self.artifacts.items())),
        }
        if self.score is not None:
            doc["score"] = "%d/%d" % (self.score.numerator, self.score.denominator)
            doc["score_float"] = float(self.score)
        if self.match_result is not None:
            doc["match"] = self.match_result.to_json()
        if self.verdict is not None:
            doc["verdict"] = self.verdict.to_json()
        if self.queue_entry_id is not None:
            doc["queue_entry_id"] = self.queue_entry_id
        return doc

    def to_json_text(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = ["%s: %s (template %s)" % (self.student, self.status,
                                           self.template_id or self.template_ref)]
        if self.score is not None:
            lines.append("  score: %s" % self.score)
        if self.match_result is not None and self.match_result.substitution.var_map:
            pairs = ", ".join(
                "%s->%s" % kv for kv in sorted(self.match_result.substitution.var_map.items())
            )
            lines.append("  substitution: %s" % pairs)
        if self.queue_entry_id is not None:
            lines.append("  queued for curation as: %s" % self.queue_entry_id)
        for d in self.diagnostics:
            lines.append("  - %s" % d)
        for name, path in sorted(self.artifacts.items()):
            lines.append("  artifact %s: %s" % (name, path))
        return "\n".join(lines) + "\n"


def pipeline_cdgs(source: A.SourceProgram, kb: kb_mod.Knowledgebase):
    """Parse and build (base CDG, fixpoint CDG, trace) for a program."""
    program = parse(source)
    ap = extract_concepts(program)
    base = cdg_mod.from_abstract_program(ap)
    fixpoint, trace = summarize_lfp(base, kb.hierarchy, kb.rules)
    return program, base, fixpoint, trace


def _unmatched_diagnostics(template_cdg, result: MatchResult) -> list[str]:
    out = []
    for node_id in result.unmatched_template_nodes:
        node = template_cdg.node(node_id) if template_cdg.has(node_id) else None
        name = node.name if node else node_id
        phrase = PHRASES.get(name, "expected a %s concept; found none" % name)
        out.append("%s (template node %s)" % (phrase, node_id))
    for a, b in result.violated_precedences:
        out.append(
            "expected %s to come before %s; the submission orders them otherwise"
            % (a, b)
        )
    return out


def _divergence_diagnostics(verdict: EquivalenceVerdict) -> list[str]:
    assert verdict.first_divergence is not None
    case, ref_trace, stu_trace, div = verdict.first_divergence
    out = [
        "behavioral divergence on test input %s: %s"
        % (list(case.stdin_stream), div.detail),
        "expected stdout: %s" % " ".join(ref_trace.stdout),
        "observed stdout: %s" % " ".join(stu_trace.stdout),
    ]
    return out


def _store_policy(template, stu_match: MatchResult, kb) -> ComparePolicy:
    if template.output_policy.mode != "stdout_store":
        return ComparePolicy()
    try:
        ref_source = A.SourceProgram(template.reference_source, template.reference_name)
        _, _, ref_fix, _ = pipeline_cdgs(ref_source, kb)
        ref_match = match(template.cdg, ref_fix)
    except Exception:
        return ComparePolicy()
    pairs = []
    for var in template.output_policy.store_vars:
        ref_var = ref_match.substitution.var_map.get(var)
        stu_var = stu_match.substitution.var_map.get(var)
        if ref_var and stu_var:
            pairs.append((ref_var, stu_var))
    return ComparePolicy(tuple(pairs))


def _dump_artifacts(cfg: GraderConfig, source_name: str, base, fixpoint) -> dict:
    if cfg.dump_stage is None:
        return {}
    stage_cdg = base if cfg.dump_stage == "base" else fixpoint
    text = (
        cdg_mod.serialize(stage_cdg)
        if cfg.dump_format == "json"
        else cdg_mod.to_dot(stage_cdg)
    )
    out_dir = Path(cfg.dump_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(source_name).stem or "program"
    path = out_dir / ("%s.%s.%s" % (stem, cfg.dump_stage, cfg.dump_format))
    path.write_text(text)
    return {"%s_%s" % (cfg.dump_stage, cfg.dump_format): str(path)}


def grade(
    source: A.SourceProgram,
    template_ref: str,
    cfg: GraderConfig,
    kb: kb_mod.Knowledgebase,
) -> tuple[GradeReport, kb_mod.Knowledgebase]:
    """Grade one submission.  Returns the report and the knowledgebase,
    which gains a pending curation entry on a behavioral pass."""
    try:
        family = kb.family(template_ref)
    except kb_mod.UnknownTemplate:
        return (
            GradeReport(
                status="error", student=source.name, template_ref=template_ref,
                diagnostics=("unknown template %r" % template_ref,),
                error_kind="kb",
            ),
            kb,
        )
    try:
        program, base, fixpoint, _trace = pipeline_cdgs(source, kb)
    except ParseFailure as err:
        return (
            GradeReport(
                status="error", student=source.name, template_ref=template_ref,
                diagnostics=tuple("parse error at %s" % e for e in err.errors),
                error_kind="input",
            ),
            kb,
        )
    artifacts = _dump_artifacts(cfg, source.name, base, fixpoint)

    best_id, best = None, None
    for t in family:
        result = match(t.cdg, fixpoint, cfg.expansion_cap)
        if best is None or result.score > best.score:
            best_id, best = t.template_id, result
    assert best is not None and best_id is not None
    template = kb.templates[best_id]

    if best.score >= cfg.theta:
        return (
            GradeReport(
                status="concept_verified", student=source.name,
                template_ref=template_ref, template_id=best_id,
                score=best.score, match_result=best, artifacts=artifacts,
            ),
            kb,
        )

    diagnostics = _unmatched_diagnostics(template.cdg, best)
    try:
        ref_program = parse(
            A.SourceProgram(template.reference_source, template.reference_name)
        )
    except ParseFailure as err:
        return (
            GradeReport(
                status="error", student=source.name, template_ref=template_ref,
                template_id=best_id,
                diagnostics=("knowledgebase reference program does not parse: %s" % err,),
                error_kind="kb",
            ),
            kb,
        )
    tests = generate_tests(template.input_spec, cfg.tests, cfg.seed)
    policy = _store_policy(template, best, kb)
    verdict = dynamic_equiv(ref_program, program, tests, policy, cfg.step_limit)

    if verdict.equivalent:
        entry = kb_mod.make_entry(
            kb, best_id, source.name, source.text, fixpoint,
            best.to_json(), {"equivalent": True, "tests_run": verdict.tests_run},
        )
        try:
            kb = kb_mod.propose_learning(kb, entry)
            entry_id = entry.entry_id
        except kb_mod.DuplicateKnowledge as dup:
            entry_id = None
            diagnostics.append("already known: %s" % dup)
        return (
            GradeReport(
                status="behaviour_verified_pending_curation", student=source.name,
                template_ref=template_ref, template_id=best_id,
                score=best.score, match_result=best, verdict=verdict,
                queue_entry_id=entry_id,
                diagnostics=tuple(
                    ["behavior matches the reference on %d tests; solution "
                     "queued for curator review" % verdict.tests_run]
                    + diagnostics
                ),
                artifacts=artifacts,
            ),
            kb,
        )

    return (
        GradeReport(
            status="rejected", student=source.name,
            template_ref=template_ref, template_id=best_id,
            score=best.score, match_result=best, verdict=verdict,
            diagnostics=tuple(_divergence_diagnostics(verdict) + diagnostics),
            artifacts=artifacts,
        ),
        kb,
    )


def dump_cdg(source: A.SourceProgram, stage: str, fmt: str,
             kb: kb_mod.Knowledgebase) -> str:
    """Render one pipeline stage of a program as JSON or DOT text."""
    if stage not in ("base", "fixpoint"):
        raise ValueError("stage must be base or fixpoint")
    if fmt not in ("json", "dot"):
        raise ValueError("format must be json or dot")
    _, base, fixpoint, _ = pipeline_cdgs(source, kb)
    g = base if stage == "base" else fixpoint
    return cdg_mod.serialize(g) if fmt == "json" else cdg_mod.to_dot(g)
