"""Exact ordered search over pebbled binary trees at ternary speed.

The machine walks labels of the form (d, c_0..c_{d-1}, kind, a, b): a
stack of colors chosen by the enclosing recursion levels, plus the local
registers of the active level.  Three operators drive one level: the
coloring operator fans a vertex out over the colors pebbling it, the
tree-query operator writes the queried bit at vertices whose parent is
pebble-free and phases the rest, and the leaf-spread operator maps
vertices to superpositions over the leaves below them.  One query
operator application consumes one oracle query no matter how wide the
superposition is; subinstance indices compile to physical indices
through per-level boundary tables.

Recursion sizes follow n -> floor(n/3 + log2 n) + 1 until the instance
fits in the base case (size <= 8), which is classical bisection realized
with the same bit-write/descend operator shapes and ceil(log2 size)
queries.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Tuple

from .oracles import OrderedOracle
from .pebbles import (
    CoveringParams,
    FullBinaryTree,
    PebbledTree,
    build_tree,
    covering_hash,
    covering_params,
    construct_covering,
    path_to_leaf,
    vertex_set,
)
from .states import (
    K_LEAF,
    K_START,
    K_VBIT,
    K_VCOLOR,
    K_VERTEX,
    K_VSLOT,
    NORM_TOL,
    SEARCH,
    DomainError,
    LinearOp,
    PureState,
    apply_op,
    make_basis_state,
    measure_register,
)

Regs = Tuple[int, ...]
BitFn = Callable[[Regs, int], int]


class ExactnessError(RuntimeError):
    """The final measurement was not concentrated on a single leaf."""


def _parse(regs: Regs) -> Tuple[Regs, int, int, int]:
    d = regs[0]
    return regs[1 : d + 1], regs[d + 1], regs[d + 2], regs[d + 3]


def _label(stack: Regs, kind: int, a: int = 0, b: int = 0) -> Regs:
    return (len(stack),) + stack + (kind, a, b)


def _depth_ok(regs: Regs, depth: Optional[int]) -> bool:
    return depth is None or regs[0] == depth


def _pebble_free_parent(pt: PebbledTree, v: int) -> bool:
    p = pt.tree.parent[v]
    return p == -1 or pt.count(p) == 0


@lru_cache(maxsize=None)
def _householder(p: int) -> Tuple[Tuple[float, ...], ...]:
    """Symmetric orthogonal matrix sending slot 0 to the uniform vector."""
    if p == 1:
        return ((1.0,),)
    u = 1.0 / math.sqrt(p)
    w = [1.0 - u] + [-u] * (p - 1)
    wn = sum(t * t for t in w)
    return tuple(
        tuple((1.0 if i == j else 0.0) - 2.0 * w[i] * w[j] / wn for j in range(p))
        for i in range(p)
    )


def _phi_terms(tree: FullBinaryTree, u: int) -> List[Tuple[int, float]]:
    lo, hi = tree.span[u]
    du = tree.depth[u]
    return [
        (l, 2.0 ** (-(tree.depth[tree.leaves[l]] - du) / 2.0)) for l in range(lo, hi)
    ]


def phi_state(tree: FullBinaryTree, u: int) -> PureState:
    """Unit superposition over the leaves of u's subtree, amplitude 2^(-d/2)."""
    amp = {_label((), K_LEAF, l): complex(c) for l, c in _phi_terms(tree, u)}
    return PureState(SEARCH, amp)


# ---------------------------------------------------------------------------
# Operator builders.  All pass un-colored junk slots through unchanged:
# that subspace is orthogonal to every working image, so the extension
# stays an isometry and keeps numerical dust inert.
# ---------------------------------------------------------------------------


def coloring_op(pt: PebbledTree, depth: Optional[int] = None) -> LinearOp:
    """|v> -> (1/sqrt p_v) sum of |v; c> over colors pebbling v, completed
    to an isometry on the slot registers by a Householder reflection."""

    def domain(regs: Regs) -> bool:
        if not _depth_ok(regs, depth):
            return False
        _, kind, a, b = _parse(regs)
        if kind == K_VERTEX:
            return a in pt.pebbles
        if kind == K_VSLOT:
            return a in pt.pebbles and 1 <= b < pt.count(a)
        return False

    def rule(regs: Regs):
        stack, kind, v, b = _parse(regs)
        cs = pt.pebbles[v]
        h = _householder(len(cs))
        k = 0 if kind == K_VERTEX else b
        return [
            (_label(stack, K_VCOLOR, v, c), complex(h[ci][k]))
            for ci, c in enumerate(cs)
        ]

    return LinearOp("coloring", SEARCH, domain, rule)


def uncoloring_op(pt: PebbledTree, depth: Optional[int] = None) -> LinearOp:
    """Inverse coloring: the uniform color combination returns to |v>;
    anything orthogonal lands on slot registers k >= 1."""

    def domain(regs: Regs) -> bool:
        _, kind, a, b = _parse(regs)
        if kind == K_VSLOT:
            # deeper levels' residue only: same-depth slots are this
            # operator's own image space, so passing them through would
            # break the isometry
            return depth is not None and regs[0] > depth
        if not _depth_ok(regs, depth):
            return False
        return kind == K_VCOLOR and a in pt.pebbles and b in pt.pebbles[a]

    def rule(regs: Regs):
        stack, kind, v, c = _parse(regs)
        if kind == K_VSLOT:
            return [(regs, 1.0 + 0.0j)]
        cs = pt.pebbles[v]
        h = _householder(len(cs))
        ci = cs.index(c)
        out = [(_label(stack, K_VERTEX, v), complex(h[ci][0]))]
        out.extend(
            (_label(stack, K_VSLOT, v, k), complex(h[ci][k]))
            for k in range(1, len(cs))
        )
        return out

    return LinearOp("uncoloring", SEARCH, domain, rule)


def query_op(pt: PebbledTree, bit_fn: BitFn, depth: Optional[int] = None) -> LinearOp:
    """Tree-query operator: writes the queried bit at vertices whose parent
    is pebble-free (the root included), phases (-1)^bit elsewhere.  One
    application consumes exactly one oracle query."""
    tree = pt.tree

    def domain(regs: Regs) -> bool:
        _, kind, a, b = _parse(regs)
        if kind == K_VSLOT:
            return True
        if not _depth_ok(regs, depth):
            return False
        return kind == K_VERTEX and 0 <= a < tree.n_nodes and not tree.is_leaf(a)

    def rule(regs: Regs):
        stack, kind, v, _ = _parse(regs)
        if kind == K_VSLOT:
            return [(regs, 1.0 + 0.0j)]
        bit = bit_fn(stack, tree.query_leaf(v))
        if _pebble_free_parent(pt, v):
            return [(_label(stack, K_VBIT, v, bit), 1.0 + 0.0j)]
        return [(_label(stack, K_VERTEX, v), -1.0 + 0.0j if bit else 1.0 + 0.0j)]

    return LinearOp("tree-query", SEARCH, domain, rule)


def leaf_spread_op(pt: PebbledTree, depth: Optional[int] = None) -> LinearOp:
    """|v; 0> -> Phi(right v), |v; 1> -> Phi(left v) at bit-carrying
    vertices; |v> -> (Phi(right v) - Phi(left v))/sqrt 2 at vertices with
    a pebbled parent."""
    tree = pt.tree
    inv_sqrt2 = 1.0 / math.sqrt(2.0)

    def domain(regs: Regs) -> bool:
        _, kind, a, b = _parse(regs)
        if kind == K_VSLOT:
            return True
        if not _depth_ok(regs, depth):
            return False
        if kind == K_VBIT:
            return a in pt.pebbles and _pebble_free_parent(pt, a) and b in (0, 1)
        if kind == K_VERTEX:
            return a in pt.pebbles and not _pebble_free_parent(pt, a)
        return False

    def rule(regs: Regs):
        stack, kind, v, b = _parse(regs)
        if kind == K_VSLOT:
            return [(regs, 1.0 + 0.0j)]
        if kind == K_VBIT:
            child = tree.left[v] if b else tree.right[v]
            return [
                (_label(stack, K_LEAF, l), complex(c))
                for l, c in _phi_terms(tree, child)
            ]
        out: Dict[Regs, complex] = {}
        for l, c in _phi_terms(tree, tree.right[v]):
            out[_label(stack, K_LEAF, l)] = c * inv_sqrt2
        for l, c in _phi_terms(tree, tree.left[v]):
            key = _label(stack, K_LEAF, l)
            out[key] = out.get(key, 0.0) - c * inv_sqrt2
        return list(out.items())

    return LinearOp("leaf-spread", SEARCH, domain, rule)


def color_create_op(pt: PebbledTree, depth: int) -> LinearOp:
    """Start of a recursion level: fan |start> out over all 2^s colors,
    pushing the chosen color onto the stack."""
    colors = range(pt.n_colors)
    coeff = complex(1.0 / math.sqrt(pt.n_colors))

    def domain(regs: Regs) -> bool:
        return regs[0] == depth and regs[depth + 1] == K_START

    def rule(regs: Regs):
        stack, _, _, _ = _parse(regs)
        return [(_label(stack + (c,), K_START), coeff) for c in colors]

    return LinearOp("color-create", SEARCH, domain, rule)


def answer_op(pt: PebbledTree, vcs: Dict[int, List[int]], depth: int) -> LinearOp:
    """End of step 2: fold the sub-level answer |leaf j> and the stacked
    color c back into |V_c[j]; c>."""

    def domain(regs: Regs) -> bool:
        _, kind, a, b = _parse(regs)
        if kind == K_VSLOT:
            return True
        if regs[0] != depth + 1 or kind != K_LEAF:
            return False
        c = regs[depth + 1]  # last stack entry: the color this branch searched
        return c in vcs and 0 <= a < len(vcs[c])

    def rule(regs: Regs):
        stack, kind, j, _ = _parse(regs)
        if kind == K_VSLOT:
            return [(regs, 1.0 + 0.0j)]
        c = stack[-1]
        return [(_label(stack[:-1], K_VCOLOR, vcs[c][j], c), 1.0 + 0.0j)]

    return LinearOp("answer-fold", SEARCH, domain, rule)


def base_start_op(tree: FullBinaryTree, depth: int) -> LinearOp:
    def domain(regs: Regs) -> bool:
        return regs[0] == depth and regs[depth + 1] == K_START

    def rule(regs: Regs):
        stack, _, _, _ = _parse(regs)
        if tree.is_leaf(tree.root):
            return [(_label(stack, K_LEAF, tree.leaf_label[tree.root]), 1.0 + 0.0j)]
        return [(_label(stack, K_VERTEX, tree.root), 1.0 + 0.0j)]

    return LinearOp("base-start", SEARCH, domain, rule)


def base_query_op(tree: FullBinaryTree, bit_fn: BitFn, depth: int, step: int) -> LinearOp:
    """Bisection query: write the bit at the current vertex (depth == step);
    leaves reached earlier ride along unchanged."""

    def domain(regs: Regs) -> bool:
        if regs[0] != depth:
            return False
        _, kind, a, _ = _parse(regs)
        if kind == K_VERTEX:
            return not tree.is_leaf(a) and tree.depth[a] == step
        if kind == K_LEAF:
            return tree.depth[tree.leaves[a]] <= step
        return False

    def rule(regs: Regs):
        stack, kind, v, _ = _parse(regs)
        if kind == K_LEAF:
            return [(regs, 1.0 + 0.0j)]
        bit = bit_fn(stack, tree.query_leaf(v))
        return [(_label(stack, K_VBIT, v, bit), 1.0 + 0.0j)]

    return LinearOp("base-query", SEARCH, domain, rule)


def base_move_op(tree: FullBinaryTree, depth: int, step: int) -> LinearOp:
    """Bisection descend: bit 1 goes to the left child, bit 0 to the right."""

    def domain(regs: Regs) -> bool:
        if regs[0] != depth:
            return False
        _, kind, a, b = _parse(regs)
        if kind == K_VBIT:
            return not tree.is_leaf(a) and tree.depth[a] == step and b in (0, 1)
        if kind == K_LEAF:
            return tree.depth[tree.leaves[a]] <= step
        return False

    def rule(regs: Regs):
        stack, kind, v, b = _parse(regs)
        if kind == K_LEAF:
            return [(regs, 1.0 + 0.0j)]
        child = tree.left[v] if b else tree.right[v]
        if tree.is_leaf(child):
            return [(_label(stack, K_LEAF, tree.leaf_label[child]), 1.0 + 0.0j)]
        return [(_label(stack, K_VERTEX, child), 1.0 + 0.0j)]

    return LinearOp("base-move", SEARCH, domain, rule)


# ---------------------------------------------------------------------------
# Public single-level operations (stack depth 0, any user state).
# ---------------------------------------------------------------------------


def u1_apply(pt: PebbledTree, s: PureState) -> PureState:
    return apply_op(coloring_op(pt), s)


def u1_inverse_apply(pt: PebbledTree, s: PureState) -> PureState:
    return apply_op(uncoloring_op(pt), s)


def oracle_prime_apply(pt: PebbledTree, x: OrderedOracle, s: PureState) -> PureState:
    """Single-level tree query against the physical oracle; one query."""
    if x.n != pt.tree.n_leaves:
        raise DomainError(f"oracle size {x.n} != tree leaves {pt.tree.n_leaves}")
    return apply_op(query_op(pt, lambda stack, leaf: x.bits[leaf]), s)


def u2_apply(pt: PebbledTree, s: PureState) -> PureState:
    return apply_op(leaf_spread_op(pt), s)


def path_superposition(pt: PebbledTree, x: OrderedOracle) -> PureState:
    """Classically built (1/sqrt 2^s) sum of sqrt(p_v) |v> over the path
    from the root to the parent of the answer's leaf."""
    scale = 1.0 / math.sqrt(pt.n_colors)
    amp = {}
    for v in path_to_leaf(pt.tree, x.f):
        p = pt.count(v)
        if p:
            amp[_label((), K_VERTEX, v)] = complex(math.sqrt(p) * scale)
    return PureState(SEARCH, amp)


# ---------------------------------------------------------------------------
# Recursion arithmetic.
# ---------------------------------------------------------------------------


def recursion_size(n: int) -> int:
    """Size of the padded subinstances one level down: n' + 1."""
    if n < 2:
        raise ValueError("recursion needs n >= 2")
    even = n + (n % 2)
    return covering_params(even).n_prime + 1


def subinstance_oracle(pt: PebbledTree, color: int, x: OrderedOracle) -> OrderedOracle:
    """The derived instance one color searches: bit j reads the physical
    bit at the right boundary of the j-th band of V_color, padded to the
    common size by repeating the final (always 1) boundary."""
    if x.n != pt.tree.n_leaves:
        raise ValueError(f"oracle size {x.n} != tree leaves {pt.tree.n_leaves}")
    vs = vertex_set(pt, color)
    size = recursion_size(pt.tree.n_leaves)
    bits = tuple(
        x.bits[pt.tree.span[vs[min(j, len(vs) - 1)]][1] - 1] for j in range(size)
    )
    return OrderedOracle(size, bits)


@lru_cache(maxsize=None)
def f_tilde(n: int) -> int:
    """Reference query-count recursion: 1 for n <= 8, else one more than
    the value at floor(n/3 + log2 n + 1)."""
    if n < 1:
        raise ValueError("need n >= 1")
    if n <= 8:
        return 1
    nxt = math.floor(Fraction(n, 3) + Fraction(math.log2(n)) + 1)
    return f_tilde(nxt) + 1


def ceil_log3(n: int) -> int:
    if n < 1:
        raise ValueError("need n >= 1")
    k, p = 0, 1
    while p < n:
        p *= 3
        k += 1
    return k


@lru_cache(maxsize=None)
def implemented_queries(n: int) -> int:
    """Implemented recursion F: ceil(log2 n) for the base, F(n'+1)+1 above."""
    if n < 1:
        raise ValueError("need n >= 1")
    if n <= 8:
        return (n - 1).bit_length()
    return implemented_queries(recursion_size(n)) + 1


# ---------------------------------------------------------------------------
# Plans and execution.
# ---------------------------------------------------------------------------


@dataclass
class LevelPlan:
    size: int                 # logical instance size at this level
    padded: int               # even size actually built (size or size+1)
    base: bool
    tree: FullBinaryTree
    cover: Optional[PebbledTree]
    vcs: Optional[Dict[int, List[int]]]
    bnd: Optional[Dict[int, Tuple[int, ...]]]  # next-level index -> leaf label
    steps: int = 0            # base descent steps


@dataclass
class SearchPlan:
    """Per-level trees, coverings, and boundary tables; the query schedule
    is oblivious: it depends only on the instance size."""

    n: int
    levels: List[LevelPlan]
    query_count: int
    base_strategy: str = "bisect"


@lru_cache(maxsize=None)
def build_plan(n: int) -> SearchPlan:
    if n < 1:
        raise ValueError("need n >= 1")
    levels: List[LevelPlan] = []
    queries = 0
    size = n
    while size > 8:
        padded = size + (size % 2)
        tree = build_tree(padded)
        params = covering_params(padded)
        cover = construct_covering(tree, params)
        vcs = {c: vertex_set(cover, c) for c in range(cover.n_colors)}
        nxt = params.n_prime + 1
        bnd = {
            c: tuple(
                tree.span[vs[min(j, len(vs) - 1)]][1] - 1 for j in range(nxt)
            )
            for c, vs in vcs.items()
        }
        levels.append(LevelPlan(size, padded, False, tree, cover, vcs, bnd))
        queries += 1
        size = nxt
    if size >= 2:
        tree = build_tree(size)
        steps = max(tree.depth[v] for v in tree.leaves)
        levels.append(LevelPlan(size, size, True, tree, None, None, None, steps))
        queries += steps
    else:
        levels.append(LevelPlan(1, 1, True, FullBinaryTree(1), None, None, None, 0))
    plan = SearchPlan(n, levels, queries)
    assert queries == implemented_queries(n)
    return plan


@dataclass
class TraceStep:
    op: str
    query: bool
    state: PureState


@dataclass
class SearchOutcome:
    answer: int
    queries: int
    probability: float = 1.0
    trace: Optional[List[TraceStep]] = None


class _Runner:
    def __init__(self, plan: SearchPlan, x: OrderedOracle, record: bool):
        self.plan = plan
        self.x = x
        self.queries = 0
        self.trace: Optional[List[TraceStep]] = [] if record else None

    def _snap(self, name: str, consumed: bool, state: PureState):
        if self.trace is not None:
            self.trace.append(TraceStep(name, consumed, state.copy()))

    def _apply(self, op: LinearOp, state: PureState, consumes_query: bool = False):
        out = apply_op(op, state)
        if consumes_query:
            self.queries += 1
        self._snap(op.name, consumes_query, out)
        return out

    def bit_fn(self, level: int) -> BitFn:
        levels = self.plan.levels

        def fn(stack: Regs, leaf: int) -> int:
            i = leaf
            for lev in range(level, 0, -1):
                i = min(i, levels[lev].size - 1)
                i = levels[lev - 1].bnd[stack[lev - 1]][i]
            i = min(i, levels[0].size - 1)
            return self.x.bits[i]

        return fn

    def execute(self, state: PureState, level: int = 0) -> PureState:
        lp = self.plan.levels[level]
        if lp.base:
            state = self._apply(base_start_op(lp.tree, level), state)
            bits = self.bit_fn(level)
            for step in range(lp.steps):
                state = self._apply(
                    base_query_op(lp.tree, bits, level, step), state, True
                )
                state = self._apply(base_move_op(lp.tree, level, step), state)
            return state
        state = self._apply(color_create_op(lp.cover, level), state)
        state = self.execute(state, level + 1)
        state = self._apply(answer_op(lp.cover, lp.vcs, level), state)
        state = self._apply(uncoloring_op(lp.cover, level), state)
        state = self._apply(query_op(lp.cover, self.bit_fn(level), level), state, True)
        state = self._apply(leaf_spread_op(lp.cover, level), state)
        return state


def run_search(x: OrderedOracle, record_trace: bool = False) -> SearchOutcome:
    """Run the full recursive search; returns the found index, the query
    count, and (optionally) per-operator state snapshots."""
    n = x.n
    if n == 1:
        trace = [] if record_trace else None
        return SearchOutcome(0, 0, 1.0, trace)
    plan = build_plan(n)
    runner = _Runner(plan, x, record_trace)
    state = make_basis_state(SEARCH, (0, K_START, 0, 0))
    runner._snap("initial", False, state)
    state = runner.execute(state)
    dist = measure_register(state, 2)
    value, p = dist.most_likely()
    if p < 1.0 - NORM_TOL:
        raise ExactnessError(
            f"final state not concentrated: best leaf {value} has "
            f"probability {p:.12f} (n={n}, f={x.f})"
        )
    answer = min(value, n - 1)
    assert runner.queries == plan.query_count
    return SearchOutcome(answer, runner.queries, p, runner.trace)


def trace_to_jsonl(outcome: SearchOutcome, cover_sha: Optional[str]) -> str:
    """One JSON line per operator application, tied to the covering hash."""
    from .states import state_to_json

    lines = []
    for step in outcome.trace or []:
        lines.append(
            json.dumps(
                {
                    "op": step.op,
                    "query": step.query,
                    "cover": cover_sha,
                    "state": json.loads(state_to_json(step.state)),
                }
            )
        )
    return "\n".join(lines)


def plan_cover_hash(n: int) -> Optional[str]:
    plan = build_plan(n)
    top = plan.levels[0]
    return covering_hash(top.cover) if top.cover is not None else None
