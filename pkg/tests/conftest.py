import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # gen.py / oracle.py helpers

from mindreader import kb as kb_mod
from mindreader.cdg import from_abstract_program
from mindreader.defaults import build_default_kb
from mindreader.minilang.abstract import extract_concepts
from mindreader.minilang.ast import SourceProgram
from mindreader.minilang.parser import parse
from mindreader.summarize import summarize_lfp

CORPUS = Path(__file__).parent.parent / "src" / "mindreader" / "data" / "corpus"


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS


@pytest.fixture(scope="session")
def default_kb():
    return build_default_kb()


@pytest.fixture()
def tmp_kb(tmp_path):
    """A writable copy of the shipped knowledgebase."""
    target = tmp_path / "kb"
    kb_mod.save(build_default_kb(), target)
    return target


def corpus_source(name: str) -> SourceProgram:
    return SourceProgram((CORPUS / name).read_text(), name)


def corpus_ast(name: str):
    return parse(corpus_source(name))


def corpus_base_cdg(name: str):
    return from_abstract_program(extract_concepts(corpus_ast(name)))


def corpus_fixpoint(name: str, kb):
    fix, trace = summarize_lfp(corpus_base_cdg(name), kb.hierarchy, kb.rules)
    return fix, trace
