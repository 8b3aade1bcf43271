"""MiniLang front end: lexing, parsing, and concept extraction."""

from mindreader.minilang.ast import SourceProgram, Program, pretty
from mindreader.minilang.parser import parse, ParseFailure
from mindreader.minilang.abstract import (
    AbstractProgram,
    Declaration,
    Computational,
    extract_concepts,
    list_variables,
)

__all__ = [
    "SourceProgram",
    "Program",
    "pretty",
    "parse",
    "ParseFailure",
    "AbstractProgram",
    "Declaration",
    "Computational",
    "extract_concepts",
    "list_variables",
]
