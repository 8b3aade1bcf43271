"""Hand-written tokenizer for MiniLang.

Tokens carry line/column (1-based) for error reporting.  Illegal characters
are recorded as error tokens so the parser can keep collecting diagnostics
instead of dying on the first bad byte.
"""

from __future__ import annotations

from dataclasses import dataclass

KEYWORDS = {
    "int",
    "bool",
    "true",
    "false",
    "if",
    "else",
    "while",
    "for",
    "func",
    "print",
    "read",
    "return",
}

# Two-char symbols must be tried before their one-char prefixes.
SYMBOLS = [
    "==",
    "!=",
    "<=",
    ">=",
    "&&",
    "||",
    "++",
    "--",
    "(",
    ")",
    "{",
    "}",
    "[",
    "]",
    ";",
    ",",
    "=",
    "<",
    ">",
    "+",
    "-",
    "*",
    "/",
    "%",
    "!",
    "&",
]


@dataclass(frozen=True)
class Token:
    kind: str  # INT | IDENT | STRING | KEYWORD | SYM | LENGTH | EOF | ERROR
    value: str
    line: int
    col: int


@dataclass(frozen=True)
class LexError:
    message: str
    line: int
    col: int


def tokenize(text: str) -> tuple[list[Token], list[LexError]]:
    tokens: list[Token] = []
    errors: list[LexError] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def push(kind: str, value: str, ln: int, cl: int) -> None:
        tokens.append(Token(kind, value, ln, cl))

    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == '"':
            ln, cl = line, col
            j = i + 1
            buf = []
            closed = False
            while j < n:
                c = text[j]
                if c == '"':
                    closed = True
                    j += 1
                    break
                if c == "\n":
                    break
                if c == "\\" and j + 1 < n:
                    buf.append(text[j + 1])
                    j += 2
                    continue
                buf.append(c)
                j += 1
            if not closed:
                errors.append(LexError("unterminated string literal", ln, cl))
            else:
                push("STRING", "".join(buf), ln, cl)
            col += j - i
            i = j
            continue
        if ch.isdigit():
            ln, cl = line, col
            j = i
            while j < n and text[j].isdigit():
                j += 1
            push("INT", text[i:j], ln, cl)
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            ln, cl = line, col
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            push("KEYWORD" if word in KEYWORDS else "IDENT", word, ln, cl)
            col += j - i
            i = j
            continue
        if text.startswith(".length", i):
            push("LENGTH", ".length", line, col)
            i += 7
            col += 7
            continue
        for sym in SYMBOLS:
            if text.startswith(sym, i):
                push("SYM", sym, line, col)
                i += len(sym)
                col += len(sym)
                break
        else:
            errors.append(LexError("illegal character %r" % ch, line, col))
            i += 1
            col += 1
    tokens.append(Token("EOF", "", line, col))
    return tokens, errors
