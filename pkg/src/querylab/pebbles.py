"""Full binary trees with colored pebble coverings.

A covering places sets of colored pebbles on internal vertices subject to
two conditions: (A) every root-to-leaf path holds exactly one pebble of
each color, and (B) every internal vertex holds at least as many pebbles
as all of its proper ancestors combined.  A covering is fair when every
color uses the same number of pebbles and tight when every vertex either
matches its ancestor total exactly or has a pebble-free ancestry.

The constructor tiles the tree into maximal perfect subtrees ("blocks")
of at most 2^(s+1) leaves, pebbles each block in the unique tight
pattern (1, 1, 2, 4, ... doubling down the block), and balances colors
across blocks of equal size by cyclic rotation of the color intervals.
The validator is authoritative: the constructor refuses to return any
covering the validator rejects.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional, Tuple

from .oracles import OrderedOracle


class CoveringError(ValueError):
    """A covering could not be constructed or violates an invariant."""


class CapError(RuntimeError):
    """Exhaustive search refused: instance above the desk-scale cap."""


# ---------------------------------------------------------------------------
# Trees.
# ---------------------------------------------------------------------------


@dataclass
class FullBinaryTree:
    """Full binary tree; leaves carry labels 0..N-1 in left-to-right order."""

    n_leaves: int
    parent: List[int] = field(default_factory=list)
    left: List[int] = field(default_factory=list)
    right: List[int] = field(default_factory=list)
    depth: List[int] = field(default_factory=list)
    leaf_label: List[int] = field(default_factory=list)  # -1 for internal
    leaves: List[int] = field(default_factory=list)      # node id by label
    span: List[Tuple[int, int]] = field(default_factory=list)

    def is_leaf(self, v: int) -> bool:
        return self.left[v] == -1

    @property
    def root(self) -> int:
        return 0

    @property
    def n_nodes(self) -> int:
        return len(self.parent)

    def leaf_count(self, v: int) -> int:
        lo, hi = self.span[v]
        return hi - lo

    def perfect(self, v: int) -> bool:
        """All leaves below v at equal depth (single leaves count)."""
        lo, hi = self.span[v]
        depths = {self.depth[self.leaves[l]] for l in range(lo, hi)}
        return len(depths) == 1

    def query_leaf(self, v: int) -> int:
        """Label of the rightmost leaf in the left subtree of v."""
        if self.is_leaf(v):
            raise ValueError(f"node {v} is a leaf")
        return self.span[self.left[v]][1] - 1

    def internal_nodes(self) -> List[int]:
        return [v for v in range(self.n_nodes) if not self.is_leaf(v)]


def build_tree(n: int) -> FullBinaryTree:
    """Left-packed complete shape: a perfect top over 2^(D-1) slots with
    the leftmost slots expanded into sibling leaf pairs, D = ceil(log2 n)."""
    if n < 2:
        raise ValueError("need at least 2 leaves")
    slots = 1 << ((n - 1).bit_length() - 1)
    cherries = n - slots  # leftmost slots that become leaf pairs

    t = FullBinaryTree(n)

    def new_node(par: int, dep: int) -> int:
        t.parent.append(par)
        t.left.append(-1)
        t.right.append(-1)
        t.depth.append(dep)
        t.leaf_label.append(-1)
        t.span.append((0, 0))
        return len(t.parent) - 1

    def set_leaf(v: int):
        t.leaf_label[v] = len(t.leaves)
        t.leaves.append(v)

    def make(slot_lo: int, slot_hi: int, par: int, dep: int) -> int:
        v = new_node(par, dep)
        if slot_hi - slot_lo == 1:
            if slot_lo < cherries:
                a = new_node(v, dep + 1)
                set_leaf(a)
                b = new_node(v, dep + 1)
                set_leaf(b)
                t.left[v], t.right[v] = a, b
            else:
                set_leaf(v)
            return v
        mid = (slot_lo + slot_hi) // 2
        t.left[v] = make(slot_lo, mid, v, dep + 1)
        t.right[v] = make(mid, slot_hi, v, dep + 1)
        return v

    make(0, slots, -1, 0)

    # leaf spans, children before parents (children get larger ids)
    for v in range(t.n_nodes - 1, -1, -1):
        if t.is_leaf(v):
            l = t.leaf_label[v]
            t.span[v] = (l, l + 1)
        else:
            t.span[v] = (t.span[t.left[v]][0], t.span[t.right[v]][1])
    return t


def path_to_leaf(tree: FullBinaryTree, leaf: int) -> List[int]:
    """Internal vertices from the root down to the parent of the leaf."""
    if not 0 <= leaf < tree.n_leaves:
        raise ValueError(f"leaf label {leaf} out of range")
    node = tree.leaves[leaf]
    path = []
    v = tree.parent[node]
    while v != -1:
        path.append(v)
        v = tree.parent[v]
    path.reverse()
    return path


# ---------------------------------------------------------------------------
# Covering parameters.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoveringParams:
    n: int
    s: int        # number of colors is 2^s
    n_prime: int  # pebble budget per color

    @property
    def n_colors(self) -> int:
        return 1 << self.s


def covering_params(n: int) -> CoveringParams:
    """s = floor(log4(n/2)), n' = floor(n/3 + log2 n); n must be even."""
    if n < 2 or n % 2:
        raise ValueError(f"covering parameters need even n >= 2, got {n}")
    s = 0
    while 4 ** (s + 1) <= n // 2:
        s += 1
    n_prime = math.floor(Fraction(n, 3) + Fraction(math.log2(n)))
    return CoveringParams(n, s, n_prime)


# ---------------------------------------------------------------------------
# Pebbled trees.
# ---------------------------------------------------------------------------


@dataclass
class PebbledTree:
    """Tree plus per-vertex color sets; colors are 0 .. 2^s - 1."""

    tree: FullBinaryTree
    pebbles: Dict[int, Tuple[int, ...]]  # internal node id -> sorted colors
    s: int

    @property
    def n_colors(self) -> int:
        return 1 << self.s

    def count(self, v: int) -> int:
        return len(self.pebbles.get(v, ()))

    def per_color_counts(self) -> Dict[int, int]:
        counts = {c: 0 for c in range(self.n_colors)}
        for cs in self.pebbles.values():
            for c in cs:
                counts[c] += 1
        return counts


@dataclass
class CoverReport:
    cond_a: bool
    cond_b: bool
    fair: bool
    tight: bool
    per_color: Dict[int, int]
    path_sums: List[int]
    violations: List[str]

    @property
    def all_ok(self) -> bool:
        return self.cond_a and self.cond_b and self.fair and self.tight


def validate_covering(pt: PebbledTree) -> CoverReport:
    """Check every covering condition by direct definition; never raises."""
    tree = pt.tree
    ncol = pt.n_colors
    violations: List[str] = []

    cond_a = True
    path_sums = []
    for leaf in range(tree.n_leaves):
        seen: Dict[int, int] = {}
        total = 0
        for v in path_to_leaf(tree, leaf):
            for c in pt.pebbles.get(v, ()):
                seen[c] = seen.get(c, 0) + 1
            total += pt.count(v)
        path_sums.append(total)
        if sorted(seen) != list(range(ncol)) or any(k != 1 for k in seen.values()):
            cond_a = False
            violations.append(f"condition A fails on path to leaf {leaf}: {seen}")

    cond_b = True
    tight = True
    for v in tree.internal_nodes():
        anc = 0
        u = tree.parent[v]
        while u != -1:
            anc += pt.count(u)
            u = tree.parent[u]
        if pt.count(v) < anc:
            cond_b = False
            violations.append(
                f"condition B fails at vertex {v}: {pt.count(v)} < {anc} above"
            )
        if anc > 0 and pt.count(v) != anc:
            tight = False
            violations.append(
                f"tightness fails at vertex {v}: {pt.count(v)} != {anc} above"
            )

    per_color = pt.per_color_counts()
    fair = len(set(per_color.values())) <= 1
    if not fair:
        violations.append(f"unfair covering: per-color counts {per_color}")

    return CoverReport(cond_a, cond_b, fair, tight, per_color, path_sums, violations)


def construct_covering(tree: FullBinaryTree, params: CoveringParams) -> PebbledTree:
    """Tile into perfect blocks, pebble tightly, balance colors by rotation.

    Raises CoveringError (naming the violated condition) rather than ever
    returning a covering the validator rejects.
    """
    if tree.n_leaves != params.n:
        raise CoveringError(
            f"tree has {tree.n_leaves} leaves but params are for {params.n}"
        )
    s = params.s
    cap = 1 << (s + 1)

    blocks_by_size: Dict[int, List[int]] = {}

    def tile(v: int):
        size = tree.leaf_count(v)
        if tree.perfect(v) and size <= cap:
            if tree.is_leaf(v):
                raise CoveringError(
                    f"cannot tile: leaf {v} is not inside any perfect block"
                )
            blocks_by_size.setdefault(size, []).append(v)
            return
        if tree.is_leaf(v):
            raise CoveringError(f"cannot tile: stranded leaf node {v}")
        tile(tree.left[v])
        tile(tree.right[v])

    tile(tree.root)

    # Fairness needs size-2^m blocks in groups of 2^(m-1) rotations; split
    # any excess block into its two half-size children.
    max_m = cap.bit_length() - 1
    for m in range(max_m, 1, -1):
        size = 1 << m
        lst = blocks_by_size.get(size, [])
        group = 1 << (m - 1)
        keep = len(lst) - (len(lst) % group)
        for v in lst[keep:]:
            blocks_by_size.setdefault(size // 2, []).extend(
                [tree.left[v], tree.right[v]]
            )
        blocks_by_size[size] = lst[:keep]

    ncol = 1 << s
    pebbles: Dict[int, Tuple[int, ...]] = {}
    for size in sorted(blocks_by_size, reverse=True):
        m = size.bit_length() - 1  # internal levels in the block
        a = s - m + 1
        group = 1 << (m - 1)
        for idx, v in enumerate(blocks_by_size[size]):
            rot = (idx % group) * (1 << a)
            level = [v]
            for k in range(m):
                if k == 0:
                    lo, hi = 0, 1 << a
                else:
                    lo, hi = 1 << (a + k - 1), 1 << (a + k)
                colors = tuple(sorted((c + rot) % ncol for c in range(lo, hi)))
                for u in level:
                    pebbles[u] = colors
                level = [w for u in level for w in (tree.left[u], tree.right[u])]

    pt = PebbledTree(tree, pebbles, s)
    report = validate_covering(pt)
    if not report.all_ok:
        raise CoveringError(
            "constructed covering rejected by validator: "
            + "; ".join(report.violations[:3])
        )
    worst = max(report.per_color.values())
    if worst > params.n_prime:
        raise CoveringError(
            f"budget exceeded: {worst} pebbles of one color > n'={params.n_prime}"
        )
    return pt


# ---------------------------------------------------------------------------
# Covering queries.
# ---------------------------------------------------------------------------


def vertex_set(pt: PebbledTree, color: int) -> List[int]:
    """Vertices pebbled with `color`, ordered left-to-right by leaf span."""
    if not 0 <= color < pt.n_colors:
        raise ValueError(f"color {color} out of range")
    vs = [v for v, cs in pt.pebbles.items() if color in cs]
    vs.sort(key=lambda v: pt.tree.span[v])
    return vs


def locate_vc(pt: PebbledTree, color: int, x: OrderedOracle) -> int:
    """The unique vertex of V_color on the path to the answer's leaf."""
    vc = set(vertex_set(pt, color))
    on_path = [v for v in path_to_leaf(pt.tree, x.f) if v in vc]
    if len(on_path) != 1:
        raise CoveringError(
            f"covering invariant violated: {len(on_path)} vertices of color "
            f"{color} on the path to leaf {x.f}"
        )
    return on_path[0]


# ---------------------------------------------------------------------------
# Brute-force minimality oracle.
# ---------------------------------------------------------------------------


def _pareto(vectors) -> List[Tuple[int, ...]]:
    """Minimal elements under componentwise <=."""
    vecs = sorted(set(vectors), key=lambda v: (sum(v), v))
    keep: List[Tuple[int, ...]] = []
    for v in vecs:
        if not any(all(k <= x for k, x in zip(u, v)) for u in keep):
            keep.append(v)
    return keep


def brute_force_min_pebbles(
    tree: FullBinaryTree, colors: int, leaf_cap: int = 16
) -> int:
    """Minimum over all (A)+(B) coverings of the worst per-color count.

    Exhaustive subtree dynamic program; independent of the constructor.
    """
    if tree.n_leaves > leaf_cap or colors > 4:
        raise CapError(
            f"brute force capped at {leaf_cap} leaves / 4 colors "
            f"(got {tree.n_leaves} leaves, {colors} colors)"
        )
    memo: Dict[Tuple[int, frozenset], List[Tuple[int, ...]]] = {}

    def feasible(node: int, remaining: frozenset) -> List[Tuple[int, ...]]:
        key = (node, remaining)
        if key in memo:
            return memo[key]
        if tree.is_leaf(node):
            res = [tuple([0] * colors)] if not remaining else []
            memo[key] = res
            return res
        load = colors - len(remaining)  # pebbles on proper ancestors
        out = set()
        rem = sorted(remaining)
        for size in range(len(rem) + 1):
            if size < load:
                continue
            for chosen in combinations(rem, size):
                sub = remaining - frozenset(chosen)
                lhs = feasible(tree.left[node], sub)
                if not lhs:
                    continue
                rhs = feasible(tree.right[node], sub)
                if not rhs:
                    continue
                base = tuple(1 if c in chosen else 0 for c in range(colors))
                for lv in lhs:
                    for rv in rhs:
                        out.add(tuple(b + p + q for b, p, q in zip(base, lv, rv)))
        res = _pareto(out)
        memo[key] = res
        return res

    options = feasible(tree.root, frozenset(range(colors)))
    if not options:
        raise CoveringError("no (A)+(B) covering exists")  # unreachable for full trees
    return min(max(v) for v in options)


# ---------------------------------------------------------------------------
# Certificates.
# ---------------------------------------------------------------------------


def covering_to_json(pt: PebbledTree) -> str:
    tree = pt.tree
    params = covering_params(tree.n_leaves)
    nodes = []
    for v in range(tree.n_nodes):
        nodes.append(
            {
                "id": v,
                "left": None if tree.is_leaf(v) else tree.left[v],
                "right": None if tree.is_leaf(v) else tree.right[v],
                "pebbles": list(pt.pebbles.get(v, ())),
            }
        )
    doc = {
        "v": 1,
        "n_leaves": tree.n_leaves,
        "s": pt.s,
        "n_prime": params.n_prime,
        "nodes": nodes,
    }
    return json.dumps(doc)


def covering_hash(pt: PebbledTree) -> str:
    return hashlib.sha256(covering_to_json(pt).encode()).hexdigest()


def covering_from_json(text: str) -> PebbledTree:
    doc = json.loads(text)
    n = int(doc["n_leaves"])
    entries = {int(e["id"]): e for e in doc["nodes"]}
    t = FullBinaryTree(n)
    count = len(entries)
    t.parent = [-1] * count
    t.left = [-1] * count
    t.right = [-1] * count
    t.depth = [0] * count
    t.leaf_label = [-1] * count
    t.span = [(0, 0)] * count
    for v, e in entries.items():
        if e["left"] is not None:
            t.left[v], t.right[v] = int(e["left"]), int(e["right"])
            t.parent[t.left[v]] = v
            t.parent[t.right[v]] = v

    # depth, in-order leaf labels, and spans from the root
    def walk(v: int, dep: int):
        t.depth[v] = dep
        if t.left[v] == -1:
            l = len(t.leaves)
            t.leaf_label[v] = l
            t.leaves.append(v)
            t.span[v] = (l, l + 1)
            return
        walk(t.left[v], dep + 1)
        walk(t.right[v], dep + 1)
        t.span[v] = (t.span[t.left[v]][0], t.span[t.right[v]][1])

    roots = [v for v in range(count) if t.parent[v] == -1]
    if len(roots) != 1 or roots[0] != 0:
        raise CoveringError(f"certificate has no unique root node 0: {roots}")
    walk(0, 0)
    if len(t.leaves) != n:
        raise CoveringError("certificate leaf count mismatch")
    pebbles = {
        v: tuple(sorted(int(c) for c in e["pebbles"]))
        for v, e in entries.items()
        if e["pebbles"]
    }
    return PebbledTree(t, pebbles, int(doc["s"]))
