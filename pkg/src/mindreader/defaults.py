"""The shipped knowledgebase: core rule set and the three starter templates
(swap, average, bubbleSort) with their reference programs.

Everything here is plain data; ``build_default_kb()`` is the single source
of truth and ``mindreader init`` materializes it to disk.
"""

from __future__ import annotations

from mindreader import expr as ex
from mindreader.cdg import Cdg, ConceptNode, ReplGroup
from mindreader.dynamics import InputSpec, ListInput
from mindreader.kb import AlgorithmTemplate, Knowledgebase, OutputPolicy
from mindreader.minilang.abstract import Param
from mindreader.rules import BASE_CONCEPTS, ConceptHierarchy, ConceptRule, NodePattern

__all__ = ["build_default_kb", "DEFAULT_HIERARCHY", "DEFAULT_RULES"]


def _p(text: str) -> ex.Expr:
    return ex.normalize(ex.parse(text))


def _node(node_id, name, kind="computable", level=0, params=(), member_of=None):
    return ConceptNode(
        node_id, name, kind, level,
        tuple(Param(role, _p(text)) for role, text in params),
        member_of,
    )


def _pattern(key, names, params=(), member_of=None):
    if isinstance(names, str):
        names = (names,)
    return NodePattern(
        key, tuple(names), None, member_of,
        tuple((role, _p(text)) for role, text in params),
    )


DEFAULT_HIERARCHY = ConceptHierarchy(
    ranks={
        **{name: 0 for name in BASE_CONCEPTS},
        "counterLoop": 1,
        "swap": 1,
        "sentinelLoop": 1,
        "aggregate": 2,
        "compareAndSwapAdjacent": 2,
        "average": 3,
        "bubbleSort": 3,
    },
    parents={
        "assign": ("counterLoop", "swap", "sentinelLoop"),
        "increment": ("counterLoop",),
        "decrement": ("counterLoop",),
        "whileLoop": ("counterLoop", "sentinelLoop"),
        "forLoop": ("counterLoop",),
        "swapCall": ("swap",),
        "decide": ("compareAndSwapAdjacent",),
        "swap": ("compareAndSwapAdjacent",),
        "counterLoop": ("aggregate", "bubbleSort"),
        "aggregate": ("average",),
        "compareAndSwapAdjacent": ("bubbleSort",),
        "sentinelLoop": ("bubbleSort",),
    },
)


DEFAULT_RULES = [
    # A temporary, two cyclic assignments: t=a; a=b; b=t (variables or
    # indexed cells; binding injectivity rules out degenerate cycles).
    ConceptRule(
        "swap_inline", 20,
        lhs=(
            _pattern("a1", "assign", [("target", "T"), ("value", "X")]),
            _pattern("a2", "assign", [("target", "X"), ("value", "Y")]),
            _pattern("a3", "assign", [("target", "Y"), ("value", "T")]),
        ),
        lhs_prec=(("a1", "a2"), ("a2", "a3")),
        rhs_name="swap", rhs_level=1,
        rhs_params=(("x", _p("X")), ("y", _p("Y"))),
    ),
    # A call to a function whose body swaps its two reference parameters.
    ConceptRule(
        "swap_call", 20,
        lhs=(_pattern("c", "swapCall", [("x", "X"), ("y", "Y")]),),
        lhs_prec=(),
        rhs_name="swap", rhs_level=1,
        rhs_params=(("x", _p("X")), ("y", _p("Y"))),
    ),
    # flag=false; while (!flag) { ... flag=true ... } -- fires before the
    # counter-loop rules so flag-controlled loops are not misread.
    ConceptRule(
        "sentinel_loop", 10,
        lhs=(
            _pattern("a", "assign", [("target", "F"), ("value", "false")]),
            _pattern("w", "whileLoop", [("cond", "(! F)")]),
            _pattern("r", "assign", [("target", "F"), ("value", "true")], member_of="w"),
        ),
        lhs_prec=(("a", "w"),),
        rhs_name="sentinelLoop", rhs_level=1,
        rhs_params=(("flag", _p("F")),),
    ),
    ConceptRule(
        "counter_loop_while", 5,
        lhs=(
            _pattern("a", "assign", [("target", "K"), ("value", "I")]),
            _pattern("w", "whileLoop", [("cond", "C")]),
            _pattern("n", ("increment", "decrement"),
                     [("target", "K"), ("value", "U")], member_of="w"),
        ),
        lhs_prec=(("a", "w"),),
        rhs_name="counterLoop", rhs_level=1,
        rhs_params=(("var", _p("K")), ("init", _p("I")),
                    ("cond", _p("C")), ("update", _p("U"))),
    ),
    ConceptRule(
        "counter_loop_for", 5,
        lhs=(
            _pattern("f", "forLoop",
                     [("var", "K"), ("init", "I"), ("cond", "C"), ("update", "U")]),
        ),
        lhs_prec=(),
        rhs_name="counterLoop", rhs_level=1,
        rhs_params=(("var", _p("K")), ("init", _p("I")),
                    ("cond", _p("C")), ("update", _p("U"))),
    ),
    # if (b < a) { swap(a, b) } over two cells, in either spelling.
    ConceptRule(
        "compare_and_swap_adjacent", 4,
        lhs=(
            _pattern("d", "decide", [("cond", "(< B A)")]),
            _pattern("s", "swap", [("x", "A"), ("y", "B")], member_of="d"),
        ),
        lhs_prec=(),
        rhs_name="compareAndSwapAdjacent", rhs_level=2,
        rhs_params=(("a", _p("A")), ("b", _p("B"))),
    ),
    ConceptRule(
        "compare_and_swap_adjacent_mirror", 4,
        lhs=(
            _pattern("d", "decide", [("cond", "(< B A)")]),
            _pattern("s", "swap", [("x", "B"), ("y", "A")], member_of="d"),
        ),
        lhs_prec=(),
        rhs_name="compareAndSwapAdjacent", rhs_level=2,
        rhs_params=(("a", _p("A")), ("b", _p("B"))),
    ),
    # Summation of list elements inside a counter loop.
    ConceptRule(
        "aggregate", 3,
        lhs=(
            _pattern("c", "counterLoop",
                     [("var", "K"), ("init", "I"), ("cond", "C")]),
            _pattern("a", "assign",
                     [("target", "S"), ("value", "(+ S (index L K))")], member_of="c"),
        ),
        lhs_prec=(),
        rhs_name="aggregate", rhs_level=2,
        rhs_params=(("list", _p("L")), ("acc", _p("S")), ("var", _p("K")),
                    ("init", _p("I")), ("cond", _p("C"))),
    ),
    # Aggregation followed by division by the element count.  The loop
    # bound discipline pins the count: k<=B covers B+1 elements, k<B
    # covers B.  Slopping the denominator (dividing by B after k<=B) must
    # not summarize to an average; that is the rejection path.
    ConceptRule(
        "average_le", 2,
        lhs=(
            _pattern("g", "aggregate",
                     [("list", "L"), ("acc", "S"), ("var", "K"),
                      ("init", "0"), ("cond", "(<= K B)")]),
            _pattern("m", ("assign", "print"), [("value", "(/ S (+ 1 B))")]),
        ),
        lhs_prec=(("g", "m"),),
        rhs_name="average", rhs_level=3,
        rhs_params=(("list", _p("L")),),
    ),
    ConceptRule(
        "average_lt", 2,
        lhs=(
            _pattern("g", "aggregate",
                     [("list", "L"), ("acc", "S"), ("var", "K"),
                      ("init", "0"), ("cond", "(< K B)")]),
            _pattern("m", ("assign", "print"), [("value", "(/ S B)")]),
        ),
        lhs_prec=(("g", "m"),),
        rhs_name="average", rhs_level=3,
        rhs_params=(("list", _p("L")),),
    ),
    ConceptRule(
        "average_le_len", 2,
        lhs=(
            _pattern("g", "aggregate",
                     [("list", "L"), ("acc", "S"), ("var", "K"),
                      ("init", "0"), ("cond", "(<= K (- (len L) 1))")]),
            _pattern("m", ("assign", "print"), [("value", "(/ S (len L))")]),
        ),
        lhs_prec=(("g", "m"),),
        rhs_name="average", rhs_level=3,
        rhs_params=(("list", _p("L")),),
    ),
    # Sentinel loop around a counter loop around a compare-and-swap.
    ConceptRule(
        "bubble_sort", 1,
        lhs=(
            _pattern("snt", "sentinelLoop", [("flag", "F")]),
            _pattern("cl", "counterLoop", [("var", "J")], member_of="snt"),
            _pattern("csa", "compareAndSwapAdjacent",
                     [("a", "(index L _)"), ("b", "(index L _)")], member_of="cl"),
        ),
        lhs_prec=(),
        rhs_name="bubbleSort", rhs_level=3,
        rhs_params=(("list", _p("L")),),
    ),
]


# ---------------------------------------------------------------------------
# Reference programs (also shipped as corpus fixtures)
# ---------------------------------------------------------------------------

SWAP_REFERENCE = """\
func main() {
  int a = 27, b = 43, t;
  print "Before", a, b;
  t = a;
  a = b;
  b = t;
  print "After", a, b;
}
"""

AVERAGE_REFERENCE = """\
func main() {
  int elements[];
  int total = 0;
  int size;
  int mean;
  read elements;
  size = elements.length - 1;
  int k = 0;
  while (k <= size) {
    total = total + elements[k];
    k = k + 1;
  }
  mean = total / (size + 1);
  print mean;
}
"""

BUBBLE_SORT_REFERENCE = """\
func main() {
  int ar[];
  read ar;
  bool sorted = false;
  while (!sorted) {
    sorted = true;
    int j = 1;
    while (j <= ar.length - 1) {
      if (ar[j-1] > ar[j]) {
        int t = ar[j-1];
        ar[j-1] = ar[j];
        ar[j] = t;
        sorted = false;
      }
      j = j + 1;
    }
  }
  print ar;
}
"""


def _counter_loop_alternatives(host: str, var: str, first_id: str):
    """Shared shape: a counter loop realized as one for-loop node or as an
    init-assign + while + increment triple.  Returns (nodes, prec, group)."""
    f = _node(first_id + "f", "forLoop", params=[("var", var)], member_of=host)
    ia = _node(first_id + "ia", "assign", params=[("target", var)], member_of=host)
    iw = _node(first_id + "iw", "whileLoop", member_of=host)
    inc = _node(first_id + "inc", "increment", params=[("target", var)], member_of=first_id + "iw")
    nodes = (f, ia, iw, inc)
    prec = ((first_id + "ia", first_id + "iw"),)
    group = ReplGroup((first_id + "f",), (first_id + "ia", first_id + "iw", first_id + "inc"))
    return nodes, prec, group


def _swap_template() -> AlgorithmTemplate:
    # The assignment prints the pair before and after the exchange; the
    # print sandwich also pins the match to the program's own swap rather
    # than the body of a helper function.
    cdg = Cdg(
        nodes=(
            _node("dx", "declaration", "declaration",
                  params=[("var", "x"), ("class", '"scalar"')]),
            _node("dy", "declaration", "declaration",
                  params=[("var", "y"), ("class", '"scalar"')]),
            _node("p1", "print"),
            _node("sw", "swap", level=1, params=[("x", "x"), ("y", "y")]),
            _node("p2", "print"),
        ),
        prec=(("dx", "dy"), ("dy", "p1"), ("p1", "sw"), ("sw", "p2")),
    )
    return AlgorithmTemplate(
        template_id="swap",
        name="swap",
        cdg=cdg,
        input_spec=InputSpec(()),
        output_policy=OutputPolicy(),
        provenance="authored",
        reference_source=SWAP_REFERENCE,
        reference_name="swap_reference",
    )


def _average_template() -> AlgorithmTemplate:
    alt_nodes, alt_prec, group = _counter_loop_alternatives("cl", "K", "")
    cdg = Cdg(
        nodes=(
            _node("dL", "declaration", "declaration",
                  params=[("var", "L"), ("class", '"list"')]),
            _node("avg", "average", level=3, params=[("list", "L")]),
            _node("agg", "aggregate", level=2,
                  params=[("list", "L"), ("acc", "S")], member_of="avg"),
            _node("cl", "counterLoop", level=1, params=[("var", "K")], member_of="agg"),
            _node("sum", "assign",
                  params=[("target", "S"), ("value", "(+ S (index L K))")],
                  member_of="cl"),
        ) + alt_nodes,
        prec=(("dL", "avg"),) + alt_prec,
        repl=(group,),
    )
    return AlgorithmTemplate(
        template_id="average",
        name="average",
        cdg=cdg,
        input_spec=InputSpec((ListInput("xs", min_len=1, max_len=24,
                                        lo=-100, hi=100, allow_empty=False),)),
        output_policy=OutputPolicy(),
        provenance="authored",
        reference_source=AVERAGE_REFERENCE,
        reference_name="average_while",
    )


def _bubble_sort_template() -> AlgorithmTemplate:
    alt_nodes, alt_prec, group = _counter_loop_alternatives("cl", "J", "")
    cdg = Cdg(
        nodes=(
            _node("dL", "declaration", "declaration",
                  params=[("var", "L"), ("class", '"list"')]),
            _node("rd", "read", params=[("target", "L")]),
            _node("dF", "declaration", "declaration",
                  params=[("var", "F"), ("class", '"boolean"')]),
            _node("bs", "bubbleSort", level=3, params=[("list", "L")]),
            _node("snt", "sentinelLoop", level=1, params=[("flag", "F")], member_of="bs"),
            _node("init", "assign",
                  params=[("target", "F"), ("value", "false")], member_of="snt"),
            _node("w", "whileLoop", params=[("cond", "(! F)")], member_of="snt"),
            _node("rst", "assign",
                  params=[("target", "F"), ("value", "true")], member_of="w"),
            _node("cl", "counterLoop", level=1, params=[("var", "J")], member_of="snt"),
            _node("csa", "compareAndSwapAdjacent", level=2,
                  params=[("a", "(index L (- J 1))"), ("b", "(index L J)")],
                  member_of="cl"),
            _node("dec", "decide",
                  params=[("cond", "(< (index L J) (index L (- J 1)))")],
                  member_of="csa"),
            _node("sw", "swap", level=1,
                  params=[("x", "(index L (- J 1))"), ("y", "(index L J)")],
                  member_of="csa"),
            _node("rs2", "assign",
                  params=[("target", "F"), ("value", "false")], member_of="csa"),
            _node("pr", "print", params=[("value", "L")]),
        ) + alt_nodes,
        prec=(("dL", "rd"), ("rd", "dF"), ("dF", "bs"), ("bs", "pr")) + alt_prec,
        repl=(group,),
    )
    return AlgorithmTemplate(
        template_id="bubbleSort",
        name="bubbleSort",
        cdg=cdg,
        input_spec=InputSpec((ListInput("xs", min_len=0, max_len=32,
                                        lo=-1000, hi=1000, allow_empty=True),)),
        output_policy=OutputPolicy(),
        provenance="authored",
        reference_source=BUBBLE_SORT_REFERENCE,
        reference_name="bubble_sort_reference",
    )


def build_default_kb() -> Knowledgebase:
    templates = [_swap_template(), _average_template(), _bubble_sort_template()]
    return Knowledgebase(
        templates={t.template_id: t for t in templates},
        hierarchy=DEFAULT_HIERARCHY,
        rules=list(DEFAULT_RULES),
        queue={},
        version=1,
    )
