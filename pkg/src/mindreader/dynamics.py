"""Behavioral comparison on known and random test data.

When concept matching fails, reference and student programs are executed
on a deterministic test suite: mandatory edge cases first (empty list if
allowed, singleton, all-equal, reverse-sorted, scalar extremes), then
uniform random cases from a splitmix64 stream.  Two programs agree on a
test when both complete and print the same token sequence (a store policy
can additionally compare designated final variables).

Agreement over the suite is evidence, not proof; verdicts are labeled
behaviour-verified, never proved.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from mindreader.cdg import MalformedDocument
from mindreader.interp import ExecutionTrace, interpret
from mindreader.minilang import ast as A

TEST_SCHEMA_VERSION = 1

DEFAULT_TESTS = 20
DEFAULT_SEED = 42
DEFAULT_STEP_LIMIT = 1_000_000
DEFAULT_INT_LO = -1000
DEFAULT_INT_HI = 1000
DEFAULT_LIST_MAX = 32


class InvalidSpec(Exception):
    pass


class SplitMix64:
    """Tiny deterministic generator (splitmix-style 64-bit mixer).

    The exact algorithm is part of the artifact contract so recorded test
    suites replay bit-exactly; do not swap in another generator.
    """

    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = seed & self.MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & self.MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self.MASK
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        return self.next_u64() % n

    def randint(self, lo: int, hi: int) -> int:
        if hi < lo:
            raise ValueError("empty range")
        return lo + self.below(hi - lo + 1)


@dataclass(frozen=True)
class ScalarInput:
    name: str = "n"
    lo: int = DEFAULT_INT_LO
    hi: int = DEFAULT_INT_HI


@dataclass(frozen=True)
class ListInput:
    name: str = "xs"
    min_len: int = 0
    max_len: int = DEFAULT_LIST_MAX
    lo: int = DEFAULT_INT_LO
    hi: int = DEFAULT_INT_HI
    allow_empty: bool = True


InputItem = ScalarInput | ListInput


@dataclass(frozen=True)
class InputSpec:
    """Shape of the stdin stream: items are serialized in order, lists as a
    length prefix followed by that many values."""

    items: tuple[InputItem, ...]

    def validate(self) -> None:
        # An empty spec is legal: programs with hardcoded data take no input.
        for item in self.items:
            if item.lo > item.hi:
                raise InvalidSpec("empty value range for %r" % item.name)
            if isinstance(item, ListInput):
                lo = item.min_len if not item.allow_empty else 0
                if item.min_len < 0 or item.max_len < max(1, lo):
                    raise InvalidSpec("bad length range for %r" % item.name)

    def to_json(self) -> dict:
        out = []
        for item in self.items:
            if isinstance(item, ScalarInput):
                out.append({"kind": "scalar", "name": item.name,
                            "lo": item.lo, "hi": item.hi})
            else:
                out.append({"kind": "list", "name": item.name,
                            "min_len": item.min_len, "max_len": item.max_len,
                            "lo": item.lo, "hi": item.hi,
                            "allow_empty": item.allow_empty})
        return {"items": out}

    @staticmethod
    def from_json(doc: dict, where: str = "input_spec") -> "InputSpec":
        try:
            items: list[InputItem] = []
            for it in doc["items"]:
                if it["kind"] == "scalar":
                    items.append(ScalarInput(it["name"], it["lo"], it["hi"]))
                elif it["kind"] == "list":
                    items.append(ListInput(it["name"], it["min_len"], it["max_len"],
                                           it["lo"], it["hi"], it["allow_empty"]))
                else:
                    raise MalformedDocument("unknown input kind %r" % it["kind"], where)
            spec = InputSpec(tuple(items))
            spec.validate()
            return spec
        except (KeyError, TypeError) as err:
            raise MalformedDocument("bad input spec: %s" % err, where) from err
        except InvalidSpec as err:
            raise MalformedDocument(str(err), where) from err


@dataclass(frozen=True)
class TestCase:
    stdin_stream: tuple[int, ...]
    input_bindings: dict = field(default_factory=dict)
    seed: int = 0

    def to_json(self) -> dict:
        return {
            "stdin_stream": list(self.stdin_stream),
            "input_bindings": {
                k: (list(v) if isinstance(v, (list, tuple)) else v)
                for k, v in sorted(self.input_bindings.items())
            },
            "seed": self.seed,
        }


def _mid(lo: int, hi: int) -> int:
    return (lo + hi) // 2


def _edge_shapes(spec: InputSpec) -> list[list[list[int] | int]]:
    """Per-test values for the mandatory edge cases, item-aligned."""
    lists = [i for i, item in enumerate(spec.items) if isinstance(item, ListInput)]
    scalars = [i for i, item in enumerate(spec.items) if isinstance(item, ScalarInput)]

    def defaults() -> list:
        row: list = []
        for item in spec.items:
            if isinstance(item, ScalarInput):
                row.append(_mid(item.lo, item.hi))
            else:
                n = max(item.min_len, min(3, item.max_len))
                row.append([_mid(item.lo, item.hi)] * n)
        return row

    shapes: list[list] = []
    if lists:
        first = spec.items[lists[0]]
        assert isinstance(first, ListInput)
        if first.allow_empty and first.min_len == 0:
            row = defaults()
            for i in lists:
                row[i] = []
            shapes.append(row)
        row = defaults()
        for i in lists:
            item = spec.items[i]
            row[i] = [_mid(item.lo, item.hi)] * max(1, item.min_len)
        shapes.append(row)  # singleton (or shortest non-empty)
        row = defaults()
        for i in lists:
            item = spec.items[i]
            n = max(2, item.min_len)
            n = min(n, item.max_len) or 1
            row[i] = [item.hi if item.hi >= item.lo else item.lo] * max(n, 1)
        shapes.append(row)  # all-equal
        row = defaults()
        for i in lists:
            item = spec.items[i]
            n = min(max(4, item.min_len), item.max_len)
            n = max(n, 1)
            step = max(1, (item.hi - item.lo) // max(1, n))
            vals = [min(item.hi, item.lo + k * step) for k in range(n)]
            row[i] = list(reversed(vals))
        shapes.append(row)  # reverse-sorted
    if scalars:
        row = defaults()
        for i in scalars:
            row[i] = spec.items[i].lo
        shapes.append(row)
        row = defaults()
        for i in scalars:
            row[i] = spec.items[i].hi
        shapes.append(row)
    return shapes


def _to_stream(spec: InputSpec, row: list) -> tuple[int, ...]:
    out: list[int] = []
    for item, value in zip(spec.items, row):
        if isinstance(item, ListInput):
            out.append(len(value))
            out.extend(value)
        else:
            out.append(value)
    return tuple(out)


def generate_tests(spec: InputSpec, n: int, seed: int) -> list[TestCase]:
    """Deterministic suite of ``n`` cases: edge cases first, then random."""
    if n < 1:
        raise InvalidSpec("need at least one test")
    spec.validate()
    cases: list[TestCase] = []
    for row in _edge_shapes(spec):
        if len(cases) >= n:
            break
        cases.append(TestCase(_to_stream(spec, row), {}, seed))
    rng = SplitMix64(seed)
    while len(cases) < n:
        row: list = []
        for item in spec.items:
            if isinstance(item, ScalarInput):
                row.append(rng.randint(item.lo, item.hi))
            else:
                lo_len = item.min_len if not item.allow_empty else max(item.min_len, 0)
                if not item.allow_empty:
                    lo_len = max(1, item.min_len)
                length = rng.randint(lo_len, item.max_len)
                row.append([rng.randint(item.lo, item.hi) for _ in range(length)])
        cases.append(TestCase(_to_stream(spec, row), {}, seed))
    return cases


def suite_to_json(spec: InputSpec, seed: int, cases: list[TestCase]) -> str:
    doc = {
        "version": TEST_SCHEMA_VERSION,
        "spec": spec.to_json(),
        "seed": seed,
        "cases": [c.to_json() for c in cases],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Trace comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComparePolicy:
    """Default policy compares stdout only; ``store_vars`` adds pairs of
    (reference variable, student variable) whose final values must agree."""

    store_vars: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class Divergence:
    kind: str  # "crash" | "stdout_length" | "stdout" | "store"
    detail: str
    position: int | None = None

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind, "detail": self.detail}
        if self.position is not None:
            out["position"] = self.position
        return out


def compare_traces(ref: ExecutionTrace, stu: ExecutionTrace,
                   policy: ComparePolicy = ComparePolicy()) -> Divergence | None:
    if ref.outcome.kind != stu.outcome.kind or ref.outcome.kind != "completed":
        if ref.outcome.kind == stu.outcome.kind:
            return None if _same_failure(ref, stu) else Divergence(
                "crash", "both failed differently: reference %s, student %s"
                % (_outcome_text(ref), _outcome_text(stu)))
        return Divergence(
            "crash",
            "reference %s, student %s" % (_outcome_text(ref), _outcome_text(stu)),
        )
    for i, (a, b) in enumerate(zip(ref.stdout, stu.stdout)):
        if a != b:
            return Divergence("stdout", "output token %d: expected %r, got %r" % (i, a, b), i)
    if len(ref.stdout) != len(stu.stdout):
        return Divergence(
            "stdout_length",
            "expected %d output tokens, got %d" % (len(ref.stdout), len(stu.stdout)),
            min(len(ref.stdout), len(stu.stdout)),
        )
    for ref_var, stu_var in policy.store_vars:
        a = ref.final_store.get(ref_var)
        b = stu.final_store.get(stu_var)
        if a != b:
            return Divergence("store", "final %s: expected %r, got %r (as %s)"
                              % (ref_var, a, b, stu_var))
    return None


def _outcome_text(t: ExecutionTrace) -> str:
    o = t.outcome
    if o.kind == "completed":
        return "completed"
    if o.kind == "step_limit":
        return "hit the step limit"
    return "failed with %s at statement %s" % (o.error, o.stmt_no)


def _same_failure(ref: ExecutionTrace, stu: ExecutionTrace) -> bool:
    # Two programs failing the same way on the same input are not evidence
    # of divergence (e.g. both reject an empty list).  Stdout must agree up
    # to the failure point.
    return ref.stdout == stu.stdout and ref.outcome.error == stu.outcome.error


@dataclass(frozen=True)
class EquivalenceVerdict:
    equivalent: bool
    tests_run: int
    first_divergence: tuple[TestCase, ExecutionTrace, ExecutionTrace, Divergence] | None = None

    def to_json(self) -> dict:
        out: dict = {"equivalent": self.equivalent, "tests_run": self.tests_run}
        if self.first_divergence is not None:
            case, ref, stu, div = self.first_divergence
            out["first_divergence"] = {
                "test": case.to_json(),
                "reference_trace": ref.to_json(),
                "student_trace": stu.to_json(),
                "divergence": div.to_json(),
            }
        return out


def dynamic_equiv(ref: A.Program, stu: A.Program, tests: list[TestCase],
                  policy: ComparePolicy = ComparePolicy(),
                  step_limit: int = DEFAULT_STEP_LIMIT) -> EquivalenceVerdict:
    """Run every test on both programs; stop at the first divergence."""
    if not tests:
        raise InvalidSpec("no tests to run")
    for i, case in enumerate(tests):
        ref_trace = interpret(ref, case.stdin_stream, case.input_bindings, step_limit)
        stu_trace = interpret(stu, case.stdin_stream, case.input_bindings, step_limit)
        div = compare_traces(ref_trace, stu_trace, policy)
        if div is not None:
            return EquivalenceVerdict(False, i + 1, (case, ref_trace, stu_trace, div))
    return EquivalenceVerdict(True, len(tests))
