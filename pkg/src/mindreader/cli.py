"""Command-line interface.

    mindreader grade <file> --template <id> [--kb DIR] [--seed N] [--tests N]
                     [--json] [--dump base|fixpoint --format dot|json]
    mindreader batch <manifest> [--kb DIR] [--json] [--strict]
    mindreader learn list | accept <entry> | reject <entry>
    mindreader templates list
    mindreader dump <file> --stage base|fixpoint --format dot|json [-o FILE]
    mindreader init --kb DIR

The knowledgebase directory comes from --kb, else the MINDREADER_KB
environment variable, else the built-in default (read-only: gradings that
would queue a curation entry report it but cannot persist it).

Exit codes: 0 success; 1 rejected submissions (with --strict) or failed
batch rows; 2 input errors; 3 knowledgebase errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import fcntl
import json
import os
import sys
from contextlib import contextmanager
from pathlib import Path

from mindreader import kb as kb_mod
from mindreader.cdg import MalformedDocument
from mindreader.defaults import build_default_kb
from mindreader.grader import GradeReport, GraderConfig, dump_cdg, grade
from mindreader.minilang.ast import SourceProgram
from mindreader.minilang.parser import ParseFailure

EXIT_OK = 0
EXIT_REJECTED = 1
EXIT_INPUT = 2
EXIT_KB = 3


def _kb_path(args) -> str | None:
    if getattr(args, "kb", None):
        return args.kb
    return os.environ.get("MINDREADER_KB") or None


def _load_kb(path: str | None) -> kb_mod.Knowledgebase:
    if path is None:
        packaged = Path(__file__).parent / "data" / "kb"
        if (packaged / "VERSION").is_file():
            return kb_mod.load(packaged)
        return build_default_kb()
    return kb_mod.load(path)


@contextmanager
def _kb_lock(path: str | None):
    """Exclusive advisory lock serializing knowledgebase mutations."""
    if path is None:
        yield
        return
    lock_file = Path(path) / ".lock"
    lock_file.parent.mkdir(parents=True, exist_ok=True)
    with open(lock_file, "w") as fh:
        fcntl.flock(fh, fcntl.LOCK_EX)
        try:
            yield
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)


def _read_source(path: str) -> SourceProgram:
    return SourceProgram(Path(path).read_text(), Path(path).name)


def _config(args, dump_dir=None) -> GraderConfig:
    return GraderConfig(
        kb_path=_kb_path(args),
        tests=getattr(args, "tests", 20),
        seed=getattr(args, "seed", 42),
        dump_stage=getattr(args, "dump", None),
        dump_format=getattr(args, "format", "json") or "json",
        dump_dir=dump_dir,
    )


def _emit(report: GradeReport, as_json: bool) -> None:
    sys.stdout.write(report.to_json_text() if as_json else report.to_text())


def cmd_grade(args) -> int:
    kb_path = _kb_path(args)
    try:
        kb = _load_kb(kb_path)
    except (kb_mod.MissingKnowledgebase, kb_mod.SchemaVersionMismatch, MalformedDocument) as err:
        print("knowledgebase error: %s" % err, file=sys.stderr)
        return EXIT_KB
    try:
        source = _read_source(args.file)
    except OSError as err:
        print("cannot read %s: %s" % (args.file, err), file=sys.stderr)
        return EXIT_INPUT
    cfg = _config(args, dump_dir=args.dump_dir)
    with _kb_lock(kb_path):
        report, new_kb = grade(source, args.template, cfg, kb)
        if new_kb is not kb and kb_path is not None:
            kb_mod.save(new_kb, kb_path)
    if new_kb is not kb and kb_path is None:
        report = dataclasses.replace(
            report,
            diagnostics=report.diagnostics
            + ("note: no --kb directory; the curation entry was not persisted",),
        )
    _emit(report, args.json)
    if report.status == "error":
        return EXIT_KB if report.error_kind == "kb" else EXIT_INPUT
    if report.status == "rejected" and args.strict:
        return EXIT_REJECTED
    return EXIT_OK


def cmd_batch(args) -> int:
    kb_path = _kb_path(args)
    try:
        kb = _load_kb(kb_path)
    except (kb_mod.MissingKnowledgebase, kb_mod.SchemaVersionMismatch, MalformedDocument) as err:
        print("knowledgebase error: %s" % err, file=sys.stderr)
        return EXIT_KB
    manifest = Path(args.manifest)
    try:
        lines = manifest.read_text().splitlines()
    except OSError as err:
        print("cannot read manifest: %s" % err, file=sys.stderr)
        return EXIT_INPUT
    rows: list[tuple[str, str]] = []
    for i, line in enumerate(lines, 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            print("manifest line %d is not 'path<TAB>template_id'" % i, file=sys.stderr)
            return EXIT_INPUT
        rows.append((parts[0].strip(), parts[1].strip()))
    cfg = _config(args)
    reports: list[GradeReport] = []
    with _kb_lock(kb_path):
        for rel_path, template_ref in rows:
            path = Path(rel_path)
            if not path.is_absolute():
                path = manifest.parent / path
            try:
                source = SourceProgram(path.read_text(), path.name)
            except OSError as err:
                reports.append(GradeReport(
                    status="error", student=str(rel_path), template_ref=template_ref,
                    diagnostics=("cannot read file: %s" % err,), error_kind="input",
                ))
                continue
            report, kb = grade(source, template_ref, cfg, kb)
            reports.append(report)
        if kb_path is not None:
            kb_mod.save(kb, kb_path)
    if args.json:
        doc = {"reports": [r.to_json() for r in reports],
               "summary": _summary(reports)}
        sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        for r in reports:
            sys.stdout.write(r.to_text())
        sys.stdout.write(_summary_text(reports))
    if any(r.status == "error" for r in reports):
        return EXIT_REJECTED
    if args.strict and any(r.status == "rejected" for r in reports):
        return EXIT_REJECTED
    return EXIT_OK


def _summary(reports) -> dict:
    counts: dict[str, int] = {}
    for r in reports:
        counts[r.status] = counts.get(r.status, 0) + 1
    return {"total": len(reports), "by_status": dict(sorted(counts.items()))}


def _summary_text(reports) -> str:
    s = _summary(reports)
    parts = ["%s=%d" % kv for kv in s["by_status"].items()]
    return "summary: %d graded (%s)\n" % (s["total"], ", ".join(parts))


def cmd_learn(args) -> int:
    kb_path = _kb_path(args)
    try:
        kb = _load_kb(kb_path)
    except (kb_mod.MissingKnowledgebase, kb_mod.SchemaVersionMismatch, MalformedDocument) as err:
        print("knowledgebase error: %s" % err, file=sys.stderr)
        return EXIT_KB
    if args.action == "list":
        entries = sorted(kb.queue.values(), key=lambda e: e.entry_id)
        if not entries:
            print("curation queue is empty")
        for e in entries:
            print("%s  %-8s  template=%s  student=%s  proposal=%s"
                  % (e.entry_id, e.status, e.template_id, e.student_name,
                     e.proposal.get("kind")))
        return EXIT_OK
    if args.entry is None:
        print("entry id required", file=sys.stderr)
        return EXIT_INPUT
    try:
        with _kb_lock(kb_path):
            kb = kb_mod.curate(kb, args.entry, args.action)
            if kb_path is not None:
                kb_mod.save(kb, kb_path)
            else:
                print("note: no --kb directory; decision not persisted")
    except kb_mod.UnknownEntry:
        print("unknown entry %r" % args.entry, file=sys.stderr)
        return EXIT_KB
    except kb_mod.AlreadyDecided:
        print("entry %r was already decided" % args.entry, file=sys.stderr)
        return EXIT_KB
    print("%s: %sed" % (args.entry, args.action))
    return EXIT_OK


def cmd_templates(args) -> int:
    try:
        kb = _load_kb(_kb_path(args))
    except (kb_mod.MissingKnowledgebase, kb_mod.SchemaVersionMismatch, MalformedDocument) as err:
        print("knowledgebase error: %s" % err, file=sys.stderr)
        return EXIT_KB
    for t in sorted(kb.templates.values(), key=lambda t: t.template_id):
        print("%-24s name=%-12s nodes=%-3d alternatives=%d  %s"
              % (t.template_id, t.name, len(t.cdg.nodes), len(t.cdg.repl),
                 t.provenance))
    return EXIT_OK


def cmd_dump(args) -> int:
    try:
        kb = _load_kb(_kb_path(args))
    except (kb_mod.MissingKnowledgebase, kb_mod.SchemaVersionMismatch, MalformedDocument) as err:
        print("knowledgebase error: %s" % err, file=sys.stderr)
        return EXIT_KB
    try:
        source = _read_source(args.file)
        text = dump_cdg(source, args.stage, args.format, kb)
    except OSError as err:
        print("cannot read %s: %s" % (args.file, err), file=sys.stderr)
        return EXIT_INPUT
    except ParseFailure as err:
        for e in err.errors:
            print("parse error at %s" % e, file=sys.stderr)
        return EXIT_INPUT
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_init(args) -> int:
    target = args.kb or os.environ.get("MINDREADER_KB")
    if not target:
        print("init needs --kb DIR (or MINDREADER_KB)", file=sys.stderr)
        return EXIT_INPUT
    root = Path(target)
    if (root / "VERSION").exists() and not args.force:
        print("refusing to overwrite existing knowledgebase at %s (use --force)" % root,
              file=sys.stderr)
        return EXIT_KB
    kb_mod.save(build_default_kb(), root)
    print("knowledgebase written to %s" % root)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mindreader",
        description="Semantic autograder for MiniLang programs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_kb(p):
        p.add_argument("--kb", help="knowledgebase directory (default: $MINDREADER_KB)")

    p = sub.add_parser("grade", help="grade one submission against a template")
    p.add_argument("file")
    p.add_argument("--template", required=True, help="template id or name")
    add_kb(p)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--tests", type=int, default=20)
    p.add_argument("--json", action="store_true", help="emit the JSON report")
    p.add_argument("--strict", action="store_true",
                   help="exit 1 when the submission is rejected")
    p.add_argument("--dump", choices=("base", "fixpoint"),
                   help="also write this stage's CDG")
    p.add_argument("--format", choices=("dot", "json"), default="json")
    p.add_argument("--dump-dir", default=".")
    p.set_defaults(func=cmd_grade)

    p = sub.add_parser("batch", help="grade a manifest of submissions")
    p.add_argument("manifest", help="rows of: path<TAB>template_id")
    add_kb(p)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--tests", type=int, default=20)
    p.add_argument("--json", action="store_true")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("learn", help="inspect or decide curation entries")
    p.add_argument("action", choices=("list", "accept", "reject"))
    p.add_argument("entry", nargs="?")
    add_kb(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("templates", help="list known templates")
    p.add_argument("action", choices=("list",))
    add_kb(p)
    p.set_defaults(func=cmd_templates)

    p = sub.add_parser("dump", help="write a program's CDG")
    p.add_argument("file")
    p.add_argument("--stage", choices=("base", "fixpoint"), required=True)
    p.add_argument("--format", choices=("dot", "json"), default="json")
    p.add_argument("-o", "--output")
    add_kb(p)
    p.set_defaults(func=cmd_dump)

    p = sub.add_parser("init", help="materialize the built-in knowledgebase")
    add_kb(p)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_init)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
