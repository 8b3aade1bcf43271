"""Deterministic big-step interpreter for MiniLang.

Execution model: top-level statements run first in the global frame, then
``main()`` is invoked if defined.  Scalars live in slots so reference
parameters can alias them; lists are shared objects and always pass by
reference.  Reading an uninitialized scalar or list element is a runtime
error at the reading statement.  Integer arithmetic is 64-bit signed with
explicit overflow trapping; division truncates toward zero.

Step accounting: every statement execution counts one step; loop headers
count one step per condition evaluation (including the final failing one).

Runtime errors never escape: they are carried in the trace outcome.
"""

from __future__ import annotations

from dataclasses import dataclass

from mindreader import expr as ex
from mindreader.minilang import ast as A

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1
CALL_DEPTH_LIMIT = 256

_UNINIT = object()


@dataclass(frozen=True)
class Outcome:
    kind: str  # "completed" | "step_limit" | "runtime_error"
    error: str | None = None
    stmt_no: int | None = None

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.error is not None:
            out["error"] = self.error
            out["stmt_no"] = self.stmt_no
        return out


@dataclass(frozen=True)
class ExecutionTrace:
    stdout: tuple[str, ...]
    final_store: dict
    steps: int
    outcome: Outcome

    def to_json(self) -> dict:
        return {
            "stdout": list(self.stdout),
            "final_store": {
                k: (list(v) if isinstance(v, tuple) else v)
                for k, v in sorted(self.final_store.items())
            },
            "steps": self.steps,
            "outcome": self.outcome.to_json(),
        }


class _RuntimeErr(Exception):
    def __init__(self, kind: str):
        super().__init__(kind)
        self.kind = kind


class _StepLimit(Exception):
    pass


class _Return(Exception):
    def __init__(self, value):
        super().__init__("return")
        self.value = value


class _Slot:
    """Mutable holder; shared between frames for reference parameters."""

    __slots__ = ("cls", "value")

    def __init__(self, cls: str, value=_UNINIT):
        self.cls = cls  # "scalar" | "boolean" | "list"
        self.value = value


class _Frame:
    def __init__(self):
        self.slots: dict[str, _Slot] = {}


class Interpreter:
    def __init__(self, program: A.Program, stdin_stream=(), input_bindings=None,
                 step_limit: int = 1_000_000):
        self.program = program
        self.functions = program.functions()
        self.stdin = list(stdin_stream)
        self.cursor = 0
        self.bindings = dict(input_bindings or {})
        self.step_limit = step_limit
        self.steps = 0
        self.stdout: list[str] = []
        self.globals = _Frame()
        self.frames: list[_Frame] = [self.globals]
        self.current_stmt = 0
        self.depth = 0
        self.main_frame: _Frame | None = None

    # -- plumbing -----------------------------------------------------------

    def frame(self) -> _Frame:
        return self.frames[-1]

    def lookup(self, name: str) -> _Slot:
        local = self.frame().slots
        if name in local:
            return local[name]
        if name in self.globals.slots:
            return self.globals.slots[name]
        raise _RuntimeErr("undeclared")

    def tick(self, stmt_no: int) -> None:
        self.current_stmt = stmt_no
        if self.steps >= self.step_limit:
            raise _StepLimit()
        self.steps += 1

    def check_int(self, v: int) -> int:
        if v < INT_MIN or v > INT_MAX:
            raise _RuntimeErr("overflow")
        return v

    # -- running ------------------------------------------------------------

    def run(self) -> ExecutionTrace:
        outcome = Outcome("completed")
        try:
            for item in self.program.items:
                if not isinstance(item, A.FuncDef):
                    self.exec_stmt(item)
            main = self.functions.get("main")
            if main is not None:
                if main.params:
                    raise _RuntimeErr("main_has_params")
                self.call_function(main, [])
        except _StepLimit:
            outcome = Outcome("step_limit")
        except _RuntimeErr as err:
            outcome = Outcome("runtime_error", err.kind, self.current_stmt)
        return ExecutionTrace(
            tuple(self.stdout), self.snapshot_store(), self.steps, outcome
        )

    def snapshot_store(self) -> dict:
        out: dict = {}
        for frame in (self.globals, self.main_frame):
            if frame is None:
                continue
            for name, slot in frame.slots.items():
                if slot.value is _UNINIT:
                    continue
                if slot.cls == "list":
                    out[name] = tuple(
                        None if v is _UNINIT else v for v in slot.value
                    )
                else:
                    out[name] = slot.value
        return out

    def call_function(self, f: A.FuncDef, args: list):
        if self.depth >= CALL_DEPTH_LIMIT:
            raise _RuntimeErr("call_depth")
        if len(args) != len(f.params):
            raise _RuntimeErr("arity")
        frame = _Frame()
        for p, arg in zip(f.params, args):
            if isinstance(arg, _Slot):
                frame.slots[p.name] = arg
            else:
                cls = "list" if p.type == "list" else ("boolean" if p.type == "bool" else "scalar")
                slot = _Slot(cls)
                self.store_value(slot, arg)
                frame.slots[p.name] = slot
        self.frames.append(frame)
        self.depth += 1
        if f.name == "main":
            self.main_frame = frame
        try:
            for s in f.body:
                self.exec_stmt(s)
            return _UNINIT
        except _Return as r:
            return r.value
        finally:
            self.depth -= 1
            self.frames.pop()

    def store_value(self, slot: _Slot, value) -> None:
        if slot.cls == "list":
            if not isinstance(value, list):
                raise _RuntimeErr("type")
            slot.value = value
        elif slot.cls == "boolean":
            if not isinstance(value, bool):
                raise _RuntimeErr("type")
            slot.value = value
        else:
            if isinstance(value, bool) or not isinstance(value, int):
                raise _RuntimeErr("type")
            slot.value = self.check_int(value)

    # -- statements ----------------------------------------------------------

    def exec_stmt(self, s: A.Stmt) -> None:
        if isinstance(s, A.DeclStmt):
            self.tick(s.stmt_no)
            for d in s.declarators:
                self.declare(s.base_type, d)
        elif isinstance(s, A.AssignStmt):
            self.tick(s.stmt_no)
            self.do_assign(s)
        elif isinstance(s, A.CallStmt):
            self.tick(s.stmt_no)
            self.eval_call(s.name, s.args)
        elif isinstance(s, A.PrintStmt):
            self.tick(s.stmt_no)
            for arg in s.args:
                self.print_value(arg)
        elif isinstance(s, A.ReadStmt):
            self.tick(s.stmt_no)
            self.do_read(s.target)
        elif isinstance(s, A.ReturnStmt):
            self.tick(s.stmt_no)
            value = self.eval(s.value) if s.value is not None else _UNINIT
            raise _Return(value)
        elif isinstance(s, A.IfStmt):
            self.tick(s.stmt_no)
            if self.eval_bool(s.cond):
                for child in s.then_body:
                    self.exec_stmt(child)
            else:
                for child in s.else_body:
                    self.exec_stmt(child)
        elif isinstance(s, A.WhileStmt):
            while True:
                self.tick(s.stmt_no)
                if not self.eval_bool(s.cond):
                    break
                for child in s.body:
                    self.exec_stmt(child)
        elif isinstance(s, A.ForStmt):
            if s.init_decl is not None:
                for d in s.init_decl.declarators:
                    self.declare(s.init_decl.base_type, d)
            elif s.init_assign is not None:
                self.current_stmt = s.stmt_no
                self.do_assign(s.init_assign)
            while True:
                self.tick(s.stmt_no)
                if not self.eval_bool(s.cond):
                    break
                for child in s.body:
                    self.exec_stmt(child)
                if s.update is not None:
                    self.current_stmt = s.stmt_no
                    self.do_assign(s.update)
        elif isinstance(s, A.FuncDef):
            pass  # definitions execute only when called
        else:  # pragma: no cover - closed statement set
            raise _RuntimeErr("unsupported")

    def declare(self, base_type: str, d: A.Declarator) -> None:
        frame = self.frame()
        if d.is_list:
            slot = _Slot("list")
            if d.size is not None:
                size = self.eval_int(d.size)
                if size < 0:
                    raise _RuntimeErr("size_negative")
                slot.value = [_UNINIT] * size
            else:
                slot.value = []
        else:
            slot = _Slot("boolean" if base_type == "bool" else "scalar")
        frame.slots[d.name] = slot
        if frame is self.globals and d.name in self.bindings:
            bound = self.bindings[d.name]
            if isinstance(bound, (list, tuple)):
                slot_value = [self.check_int(int(v)) for v in bound]
                if slot.cls != "list":
                    raise _RuntimeErr("type")
                slot.value = slot_value
            else:
                self.store_value(slot, bound)
        elif d.init is not None:
            self.store_value(slot, self.eval(d.init))

    def do_assign(self, s: A.AssignStmt) -> None:
        slot = self.lookup(s.target.name)
        if s.target.index is not None:
            if slot.cls != "list" or slot.value is _UNINIT:
                raise _RuntimeErr("type")
            idx = self.eval_int(s.target.index)
            if idx < 0 or idx >= len(slot.value):
                raise _RuntimeErr("index_range")
            value = self.eval(s.value)
            if isinstance(value, bool) or not isinstance(value, int):
                raise _RuntimeErr("type")
            slot.value[idx] = self.check_int(value)
        else:
            self.store_value(slot, self.eval(s.value))

    def do_read(self, name: str) -> None:
        slot = self.lookup(name)
        if slot.cls == "list":
            length = self.next_input()
            if length < 0:
                raise _RuntimeErr("read_bad_length")
            slot.value = [self.next_input() for _ in range(length)]
        elif slot.cls == "scalar":
            slot.value = self.next_input()
        else:
            raise _RuntimeErr("type")

    def next_input(self) -> int:
        if self.cursor >= len(self.stdin):
            raise _RuntimeErr("read_exhausted")
        v = self.stdin[self.cursor]
        self.cursor += 1
        return self.check_int(int(v))

    def print_value(self, arg: ex.Expr) -> None:
        if isinstance(arg, ex.Str):
            self.stdout.append(arg.value)
            return
        value = self.eval(arg)
        if value is _UNINIT:
            raise _RuntimeErr("uninitialized")
        if isinstance(value, bool):
            self.stdout.append("true" if value else "false")
        elif isinstance(value, int):
            self.stdout.append(str(value))
        elif isinstance(value, list):
            for v in value:
                if v is _UNINIT:
                    raise _RuntimeErr("uninitialized")
                self.stdout.append(str(v))
        else:  # pragma: no cover
            raise _RuntimeErr("type")

    # -- expressions ----------------------------------------------------------

    def eval_bool(self, e: ex.Expr) -> bool:
        v = self.eval(e)
        if not isinstance(v, bool):
            raise _RuntimeErr("type")
        return v

    def eval_int(self, e: ex.Expr) -> int:
        v = self.eval(e)
        if isinstance(v, bool) or not isinstance(v, int):
            raise _RuntimeErr("type")
        return v

    def eval(self, e: ex.Expr):
        if isinstance(e, ex.Lit):
            return e.value
        if isinstance(e, ex.Str):
            raise _RuntimeErr("type")  # strings only occur in print
        if isinstance(e, ex.Var):
            slot = self.lookup(e.name)
            if slot.value is _UNINIT:
                raise _RuntimeErr("uninitialized")
            return slot.value
        if isinstance(e, ex.Index):
            base = self.eval(e.base)
            if not isinstance(base, list):
                raise _RuntimeErr("type")
            idx = self.eval_int(e.index)
            if idx < 0 or idx >= len(base):
                raise _RuntimeErr("index_range")
            v = base[idx]
            if v is _UNINIT:
                raise _RuntimeErr("uninitialized")
            return v
        if isinstance(e, ex.Length):
            base = self.eval(e.base)
            if not isinstance(base, list):
                raise _RuntimeErr("type")
            return len(base)
        if isinstance(e, ex.Call):
            return self.eval_call(e.name, e.args)
        assert isinstance(e, ex.Op)
        return self.eval_op(e)

    def eval_call(self, name: str, args):
        f = self.functions.get(name)
        if f is None:
            raise _RuntimeErr("unknown_function")
        if len(args) != len(f.params):
            raise _RuntimeErr("arity")
        call_args: list = []
        for p, arg in zip(f.params, args):
            if p.by_ref or p.type == "list":
                if not isinstance(arg, ex.Var):
                    raise _RuntimeErr("type")
                slot = self.lookup(arg.name)
                if (p.type == "list") != (slot.cls == "list"):
                    raise _RuntimeErr("type")
                call_args.append(slot)
            else:
                call_args.append(self.eval(arg))
        caller_stmt = self.current_stmt
        result = self.call_function(f, call_args)
        self.current_stmt = caller_stmt
        return result

    def eval_op(self, e: ex.Op):
        op = e.op
        if op == "!":
            return not self.eval_bool(e.args[0])
        if op in ("&&", "||"):
            # short-circuit left to right
            for a in e.args:
                v = self.eval_bool(a)
                if op == "&&" and not v:
                    return False
                if op == "||" and v:
                    return True
            return op == "&&"
        if op in ("==", "!="):
            a, b = self.eval(e.args[0]), self.eval(e.args[1])
            if a is _UNINIT or b is _UNINIT:
                raise _RuntimeErr("uninitialized")
            if isinstance(a, bool) != isinstance(b, bool) or isinstance(a, list) or isinstance(b, list):
                raise _RuntimeErr("type")
            return (a == b) if op == "==" else (a != b)
        if op in ("<", "<=", ">", ">="):
            a, b = self.eval_int(e.args[0]), self.eval_int(e.args[1])
            return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]
        if op in ("+", "*"):
            acc = self.eval_int(e.args[0])
            for arg in e.args[1:]:
                v = self.eval_int(arg)
                acc = self.check_int(acc + v if op == "+" else acc * v)
            return acc
        if op == "-":
            a, b = self.eval_int(e.args[0]), self.eval_int(e.args[1])
            return self.check_int(a - b)
        if op in ("/", "%"):
            a, b = self.eval_int(e.args[0]), self.eval_int(e.args[1])
            if b == 0:
                raise _RuntimeErr("div_by_zero")
            q = abs(a) // abs(b)
            if (a >= 0) != (b >= 0):
                q = -q
            if op == "/":
                return self.check_int(q)
            return self.check_int(a - q * b)
        raise _RuntimeErr("type")  # pragma: no cover


def interpret(program: A.Program, stdin_stream=(), input_bindings=None,
              step_limit: int = 1_000_000) -> ExecutionTrace:
    """Run a program on one test input and capture its observable behavior."""
    return Interpreter(program, stdin_stream, input_bindings, step_limit).run()
