"""mindreader: semantic autograding of MiniLang programs.

Pipeline: parse -> abstract statements -> concept dependence graph ->
fixpoint summarization -> substitution-aware template matching, with a
behavioral (random-test) fallback that feeds a curated learning queue.
"""

__version__ = "0.1.0"
