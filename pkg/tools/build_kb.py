#!/usr/bin/env python3
"""Regenerate the shipped knowledgebase files under src/mindreader/data/kb.

Run from the repository root after editing mindreader/defaults.py; a test
asserts the committed files agree with the builder.
"""

from pathlib import Path

from mindreader import kb as kb_mod
from mindreader.defaults import build_default_kb


def main() -> None:
    target = Path(__file__).resolve().parent.parent / "src" / "mindreader" / "data" / "kb"
    kb_mod.save(build_default_kb(), target)
    print("wrote", target)


if __name__ == "__main__":
    main()
