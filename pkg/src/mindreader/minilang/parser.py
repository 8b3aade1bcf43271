"""Recursive-descent parser for MiniLang.

Statement numbers are assigned during the parse, in source order, counting
every statement including block headers (``while``, ``for``, ``if``,
``func``).  Errors are collected (up to a cap) with line/column positions;
the parser resynchronizes at ``;`` and ``}`` so several diagnostics can be
reported from one bad file.
"""

from __future__ import annotations

from dataclasses import dataclass

from mindreader import expr as ex
from mindreader.minilang import ast as A
from mindreader.minilang.lexer import Token, tokenize

MAX_ERRORS = 10


@dataclass(frozen=True)
class ParseError:
    message: str
    line: int
    col: int

    def __str__(self) -> str:
        return "%d:%d: %s" % (self.line, self.col, self.message)


class ParseFailure(Exception):
    """Raised when a source program cannot be turned into an AST."""

    def __init__(self, errors: list[ParseError]):
        super().__init__("; ".join(str(e) for e in errors))
        self.errors = errors


class EmptyProgram(ParseFailure):
    """Input with no statements at all (blank or comments only)."""

    def __init__(self):
        super().__init__([ParseError("empty program", 1, 1)])


class _Bail(Exception):
    """Internal: abandon the current statement and resynchronize."""


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.errors: list[ParseError] = []
        self.next_no = 1

    # -- token plumbing ----------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, kind: str, value: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (value is None or tok.value == value)

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def expect(self, kind: str, value: str | None = None, what: str = "") -> Token:
        if self.at(kind, value):
            return self.advance()
        tok = self.peek()
        wanted = what or (value if value is not None else kind.lower())
        found = tok.value if tok.kind != "EOF" else "end of input"
        self.error("expected %s, found %r" % (wanted, found), tok)
        raise _Bail()

    def error(self, message: str, tok: Token | None = None) -> None:
        tok = tok or self.peek()
        if len(self.errors) < MAX_ERRORS:
            self.errors.append(ParseError(message, tok.line, tok.col))

    def take_no(self) -> int:
        no = self.next_no
        self.next_no += 1
        return no

    def sync(self) -> None:
        # Skip to just past the next ';' or to a '}' / EOF boundary.
        while not self.at("EOF"):
            if self.at("SYM", ";"):
                self.advance()
                return
            if self.at("SYM", "}"):
                return
            self.advance()

    # -- grammar -----------------------------------------------------------

    def program(self, source_name: str) -> A.Program:
        items: list[A.Stmt] = []
        while not self.at("EOF"):
            if len(self.errors) >= MAX_ERRORS:
                break
            try:
                if self.at("KEYWORD", "func"):
                    items.append(self.func_def())
                elif self.at("SYM", "}"):
                    self.error("unmatched '}'")
                    self.advance()
                else:
                    items.append(self.statement())
            except _Bail:
                self.sync()
        return A.Program(tuple(items), source_name)

    def func_def(self) -> A.FuncDef:
        no = self.take_no()
        self.expect("KEYWORD", "func")
        name = self.expect("IDENT", what="function name").value
        self.expect("SYM", "(")
        params: list[A.Param] = []
        if not self.at("SYM", ")"):
            while True:
                params.append(self.param())
                if self.at("SYM", ","):
                    self.advance()
                    continue
                break
        self.expect("SYM", ")")
        ret_type: str | None = None
        if self.at("KEYWORD", "int") or self.at("KEYWORD", "bool"):
            ret_type = self.advance().value
        body = self.block()
        return A.FuncDef(no, name, tuple(params), ret_type, body)

    def param(self) -> A.Param:
        if not (self.at("KEYWORD", "int") or self.at("KEYWORD", "bool")):
            self.error("expected parameter type")
            raise _Bail()
        base = self.advance().value
        by_ref = False
        if self.at("SYM", "&"):
            self.advance()
            by_ref = True
        name = self.expect("IDENT", what="parameter name").value
        is_list = False
        if self.at("SYM", "[") and self.peek(1).kind == "SYM" and self.peek(1).value == "]":
            self.advance()
            self.advance()
            is_list = True
        if is_list and base == "bool":
            self.error("bool lists are not supported")
            raise _Bail()
        ptype = "list" if is_list else base
        # Lists always pass by reference; the '&' marker applies to scalars.
        return A.Param(ptype, name, by_ref or is_list)

    def block(self) -> tuple[A.Stmt, ...]:
        self.expect("SYM", "{")
        stmts: list[A.Stmt] = []
        while not self.at("SYM", "}"):
            if self.at("EOF"):
                self.error("unclosed '{'")
                raise _Bail()
            if len(self.errors) >= MAX_ERRORS:
                break
            try:
                stmts.append(self.statement())
            except _Bail:
                self.sync()
                if self.at("SYM", "}"):
                    break
        if self.at("SYM", "}"):
            self.advance()
        return tuple(stmts)

    def statement(self) -> A.Stmt:
        tok = self.peek()
        if tok.kind == "KEYWORD":
            if tok.value in ("int", "bool"):
                return self.declaration()
            if tok.value == "if":
                return self.if_stmt()
            if tok.value == "while":
                return self.while_stmt()
            if tok.value == "for":
                return self.for_stmt()
            if tok.value == "print":
                return self.print_stmt()
            if tok.value == "read":
                return self.read_stmt()
            if tok.value == "return":
                return self.return_stmt()
            if tok.value == "func":
                self.error("function definitions are only allowed at top level")
                raise _Bail()
        if tok.kind == "IDENT":
            return self.assign_or_call()
        self.error("expected a statement, found %r" % (tok.value or tok.kind))
        raise _Bail()

    def declaration(self) -> A.DeclStmt:
        no = self.take_no()
        base = self.advance().value
        decls: list[A.Declarator] = []
        while True:
            name = self.expect("IDENT", what="variable name").value
            is_list = False
            size: ex.Expr | None = None
            if self.at("SYM", "["):
                if base == "bool":
                    self.error("bool lists are not supported")
                    raise _Bail()
                self.advance()
                if not self.at("SYM", "]"):
                    size = self.expr()
                self.expect("SYM", "]")
                is_list = True
            init: ex.Expr | None = None
            if self.at("SYM", "="):
                if is_list:
                    self.error("list declarations cannot have initializers")
                    raise _Bail()
                self.advance()
                init = self.expr()
            decls.append(A.Declarator(name, is_list, size, init))
            if self.at("SYM", ","):
                self.advance()
                continue
            break
        self.expect("SYM", ";")
        return A.DeclStmt(no, base, tuple(decls))

    def assign_or_call(self, *, consume_semi: bool = True, no: int | None = None) -> A.Stmt:
        if no is None:
            no = self.take_no()
        name_tok = self.expect("IDENT", what="identifier")
        if self.at("SYM", "(" ):
            self.advance()
            args: list[ex.Expr] = []
            if not self.at("SYM", ")"):
                while True:
                    args.append(self.expr())
                    if self.at("SYM", ","):
                        self.advance()
                        continue
                    break
            self.expect("SYM", ")")
            if consume_semi:
                self.expect("SYM", ";")
            return A.CallStmt(no, name_tok.value, tuple(args))
        target = self.lvalue_tail(name_tok.value)
        if self.at("SYM", "++") or self.at("SYM", "--"):
            sugar = self.advance().value
            if consume_semi:
                self.expect("SYM", ";")
            delta = ex.Lit(1)
            op = "+" if sugar == "++" else "-"
            return A.AssignStmt(no, target, ex.Op(op, (target.to_expr(), delta)), sugar)
        self.expect("SYM", "=")
        value = self.expr()
        if consume_semi:
            self.expect("SYM", ";")
        return A.AssignStmt(no, target, value)

    def lvalue_tail(self, name: str) -> A.LValue:
        if self.at("SYM", "["):
            self.advance()
            idx = self.expr()
            self.expect("SYM", "]")
            return A.LValue(name, idx)
        return A.LValue(name)

    def if_stmt(self) -> A.IfStmt:
        no = self.take_no()
        self.expect("KEYWORD", "if")
        self.expect("SYM", "(")
        cond = self.expr()
        self.expect("SYM", ")")
        then_body = self.block()
        else_body: tuple[A.Stmt, ...] = ()
        if self.at("KEYWORD", "else"):
            self.advance()
            if self.at("KEYWORD", "if"):
                else_body = (self.if_stmt(),)
            else:
                else_body = self.block()
        return A.IfStmt(no, cond, then_body, else_body)

    def while_stmt(self) -> A.WhileStmt:
        no = self.take_no()
        self.expect("KEYWORD", "while")
        self.expect("SYM", "(")
        cond = self.expr()
        self.expect("SYM", ")")
        body = self.block()
        return A.WhileStmt(no, cond, body)

    def for_stmt(self) -> A.ForStmt:
        no = self.take_no()
        self.expect("KEYWORD", "for")
        self.expect("SYM", "(")
        init_decl: A.DeclStmt | None = None
        init_assign: A.AssignStmt | None = None
        if self.at("KEYWORD", "int") or self.at("KEYWORD", "bool"):
            base = self.advance().value
            name = self.expect("IDENT", what="variable name").value
            self.expect("SYM", "=")
            value = self.expr()
            init_decl = A.DeclStmt(no, base, (A.Declarator(name, False, None, value),))
        elif not self.at("SYM", ";"):
            stmt = self.assign_or_call(consume_semi=False, no=no)
            if not isinstance(stmt, A.AssignStmt):
                self.error("for-loop initializer must be an assignment")
                raise _Bail()
            init_assign = stmt
        self.expect("SYM", ";")
        cond = ex.Lit(True) if self.at("SYM", ";") else self.expr()
        self.expect("SYM", ";")
        update: A.AssignStmt | None = None
        if not self.at("SYM", ")"):
            stmt = self.assign_or_call(consume_semi=False, no=no)
            if not isinstance(stmt, A.AssignStmt):
                self.error("for-loop update must be an assignment")
                raise _Bail()
            update = stmt
        self.expect("SYM", ")")
        body = self.block()
        return A.ForStmt(no, init_decl, init_assign, cond, update, body)

    def print_stmt(self) -> A.PrintStmt:
        no = self.take_no()
        self.expect("KEYWORD", "print")
        args: list[ex.Expr] = []
        while True:
            if self.at("STRING"):
                args.append(ex.Str(self.advance().value))
            else:
                args.append(self.expr())
            if self.at("SYM", ","):
                self.advance()
                continue
            break
        self.expect("SYM", ";")
        return A.PrintStmt(no, tuple(args))

    def read_stmt(self) -> A.ReadStmt:
        no = self.take_no()
        self.expect("KEYWORD", "read")
        name = self.expect("IDENT", what="variable name").value
        self.expect("SYM", ";")
        return A.ReadStmt(no, name)

    def return_stmt(self) -> A.ReturnStmt:
        no = self.take_no()
        self.expect("KEYWORD", "return")
        value: ex.Expr | None = None
        if not self.at("SYM", ";"):
            value = self.expr()
        self.expect("SYM", ";")
        return A.ReturnStmt(no, value)

    # -- expressions (precedence climbing) ----------------------------------

    def expr(self) -> ex.Expr:
        return self.or_expr()

    def or_expr(self) -> ex.Expr:
        left = self.and_expr()
        while self.at("SYM", "||"):
            self.advance()
            left = ex.Op("||", (left, self.and_expr()))
        return left

    def and_expr(self) -> ex.Expr:
        left = self.cmp_expr()
        while self.at("SYM", "&&"):
            self.advance()
            left = ex.Op("&&", (left, self.cmp_expr()))
        return left

    def cmp_expr(self) -> ex.Expr:
        left = self.add_expr()
        while self.peek().kind == "SYM" and self.peek().value in ("==", "!=", "<", "<=", ">", ">="):
            op = self.advance().value
            left = ex.Op(op, (left, self.add_expr()))
        return left

    def add_expr(self) -> ex.Expr:
        left = self.mul_expr()
        while self.peek().kind == "SYM" and self.peek().value in ("+", "-"):
            op = self.advance().value
            left = ex.Op(op, (left, self.mul_expr()))
        return left

    def mul_expr(self) -> ex.Expr:
        left = self.unary_expr()
        while self.peek().kind == "SYM" and self.peek().value in ("*", "/", "%"):
            op = self.advance().value
            left = ex.Op(op, (left, self.unary_expr()))
        return left

    def unary_expr(self) -> ex.Expr:
        if self.at("SYM", "-"):
            self.advance()
            inner = self.unary_expr()
            if isinstance(inner, ex.Lit) and isinstance(inner.value, int) and not isinstance(inner.value, bool):
                return ex.Lit(-inner.value)
            return ex.Op("-", (ex.Lit(0), inner))
        if self.at("SYM", "!"):
            self.advance()
            return ex.Op("!", (self.unary_expr(),))
        return self.postfix_expr()

    def postfix_expr(self) -> ex.Expr:
        e = self.primary_expr()
        while True:
            if self.at("SYM", "["):
                self.advance()
                idx = self.expr()
                self.expect("SYM", "]")
                e = ex.Index(e, idx)
            elif self.at("LENGTH"):
                self.advance()
                e = ex.Length(e)
            else:
                return e

    def primary_expr(self) -> ex.Expr:
        tok = self.peek()
        if tok.kind == "INT":
            self.advance()
            return ex.Lit(int(tok.value))
        if tok.kind == "KEYWORD" and tok.value in ("true", "false"):
            self.advance()
            return ex.Lit(tok.value == "true")
        if tok.kind == "IDENT":
            self.advance()
            if self.at("SYM", "("):
                self.advance()
                args: list[ex.Expr] = []
                if not self.at("SYM", ")"):
                    while True:
                        args.append(self.expr())
                        if self.at("SYM", ","):
                            self.advance()
                            continue
                        break
                self.expect("SYM", ")")
                return ex.Call(tok.value, tuple(args))
            return ex.Var(tok.value)
        if self.at("SYM", "("):
            self.advance()
            inner = self.expr()
            self.expect("SYM", ")")
            return inner
        self.error("expected an expression, found %r" % (tok.value or "end of input"))
        raise _Bail()


def parse(source: A.SourceProgram) -> A.Program:
    """Parse a source program into a numbered AST.

    Raises :class:`EmptyProgram` for blank input and :class:`ParseFailure`
    carrying up to ``MAX_ERRORS`` collected errors otherwise.
    """
    if not source.text.strip():
        raise EmptyProgram()
    tokens, lex_errors = tokenize(source.text)
    parser = _Parser(tokens)
    program = parser.program(source.name)
    errors = [ParseError(e.message, e.line, e.col) for e in lex_errors]
    errors.extend(parser.errors)
    errors.sort(key=lambda e: (e.line, e.col))
    if errors:
        raise ParseFailure(errors[:MAX_ERRORS])
    if not program.items:
        raise EmptyProgram()
    return program
