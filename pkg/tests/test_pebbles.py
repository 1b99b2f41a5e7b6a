"""Trees, covering construction and validation, brute-force minimality."""

from fractions import Fraction
from itertools import combinations, product

import pytest

from querylab.oracles import all_inputs
from querylab.pebbles import (
    CapError,
    CoveringError,
    PebbledTree,
    brute_force_min_pebbles,
    build_tree,
    construct_covering,
    covering_from_json,
    covering_params,
    covering_to_json,
    locate_vc,
    path_to_leaf,
    validate_covering,
    vertex_set,
)

EVEN_SIZES = list(range(2, 65, 2))


# -- trees ---------------------------------------------------------------------


def test_tree_n2_is_single_cherry():
    t = build_tree(2)
    assert t.n_nodes == 3
    assert not t.is_leaf(t.root)
    assert t.is_leaf(t.left[t.root]) and t.is_leaf(t.right[t.root])


def test_tree_n6_counts_and_labels():
    t = build_tree(6)
    assert t.n_leaves == 6
    assert len(t.internal_nodes()) == 5
    assert [t.leaf_label[v] for v in t.leaves] == list(range(6))


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 7, 10, 16, 33, 64])
def test_tree_invariants(n):
    t = build_tree(n)
    # full binary: internal nodes have both children
    for v in range(t.n_nodes):
        assert (t.left[v] == -1) == (t.right[v] == -1)
    # in-order leaf labels
    order = []

    def visit(v):
        if t.is_leaf(v):
            order.append(t.leaf_label[v])
            return
        visit(t.left[v])
        visit(t.right[v])

    visit(t.root)
    assert order == list(range(n))
    # exact dyadic identity; this is what normalizes the leaf superpositions
    for u in range(t.n_nodes):
        lo, hi = t.span[u]
        total = sum(
            Fraction(1, 2 ** (t.depth[t.leaves[l]] - t.depth[u]))
            for l in range(lo, hi)
        )
        assert total == 1


def test_tree_rejects_single_leaf():
    with pytest.raises(ValueError):
        build_tree(1)


def test_path_to_leaf_n8():
    t = build_tree(8)
    assert path_to_leaf(t, 0) == [0, 1, 2]
    assert len(path_to_leaf(t, 7)) == 3  # root, right-d1, right-right-d2


# -- parameters ------------------------------------------------------------------


@pytest.mark.parametrize(
    "n,s,n_prime",
    [(2, 0, 1), (8, 1, 5), (64, 2, 27)],
)
def test_covering_params_examples(n, s, n_prime):
    params = covering_params(n)
    assert (params.s, params.n_prime) == (s, n_prime)


def test_covering_params_rejects_odd_and_small():
    with pytest.raises(ValueError):
        covering_params(7)
    with pytest.raises(ValueError):
        covering_params(0)


# -- construction and validation ---------------------------------------------------


@pytest.mark.parametrize("n", EVEN_SIZES)
def test_constructed_coverings_pass_everything(n):
    params = covering_params(n)
    pt = construct_covering(build_tree(n), params)
    report = validate_covering(pt)
    assert report.all_ok, report.violations
    assert max(report.per_color.values()) <= params.n_prime
    assert pt.n_colors == params.n_colors
    assert set(report.path_sums) == {params.n_colors}


def test_n8_covering_matches_known_witness():
    pt = construct_covering(build_tree(8), covering_params(8))
    # one color on each depth-1 vertex, the other on the opposite depth-2 pair
    assert pt.pebbles[1] == (0,) and pt.pebbles[8] == (1,)
    assert pt.pebbles[2] == pt.pebbles[5] == (1,)
    assert pt.pebbles[9] == pt.pebbles[12] == (0,)
    assert validate_covering(pt).per_color == {0: 3, 1: 3}


def test_root_only_covering_fails_condition_b():
    t = build_tree(4)
    pt = PebbledTree(t, {t.root: (0,)}, 0)
    report = validate_covering(pt)
    assert report.cond_a
    assert not report.cond_b
    assert any("condition B" in v for v in report.violations)


def test_n2_root_pebble_all_flags():
    t = build_tree(2)
    report = validate_covering(PebbledTree(t, {t.root: (0,)}, 0))
    assert report.all_ok
    assert report.path_sums == [1, 1]


def test_tampered_covering_detected():
    pt = construct_covering(build_tree(8), covering_params(8))
    broken = PebbledTree(pt.tree, {v: c for v, c in pt.pebbles.items() if v != 9}, pt.s)
    report = validate_covering(broken)
    assert not report.cond_a
    assert not report.all_ok


def test_construct_rejects_mismatched_params():
    with pytest.raises(CoveringError):
        construct_covering(build_tree(8), covering_params(10))


# -- covering queries ----------------------------------------------------------------


def test_vertex_set_n2():
    pt = construct_covering(build_tree(2), covering_params(2))
    assert vertex_set(pt, 0) == [pt.tree.root]
    for x in all_inputs(2):
        assert locate_vc(pt, 0, x) == pt.tree.root


def test_locate_vc_n8_leaf0():
    pt = construct_covering(build_tree(8), covering_params(8))
    x = all_inputs(8)[0]
    assert locate_vc(pt, 0, x) == 1  # left depth-1 vertex
    assert locate_vc(pt, 1, x) == 2  # left-left depth-2 vertex


@pytest.mark.parametrize("n", [2, 8, 16, 34, 64])
def test_locate_vc_unique_everywhere(n):
    params = covering_params(n)
    pt = construct_covering(build_tree(n), params)
    for color in range(pt.n_colors):
        vs = vertex_set(pt, color)
        assert len(vs) <= params.n_prime
        spans = [pt.tree.span[v] for v in vs]
        assert spans == sorted(spans)
        # the bands partition the leaves
        assert spans[0][0] == 0 and spans[-1][1] == n
        assert all(a[1] == b[0] for a, b in zip(spans, spans[1:]))
        for x in all_inputs(n):
            v = locate_vc(pt, color, x)  # raises unless unique
            lo, hi = pt.tree.span[v]
            assert lo <= x.f < hi


# -- brute force -----------------------------------------------------------------------


def _raw_min_pebbles(tree, ncolors):
    """Independent oracle: enumerate every subset assignment outright."""
    internal = tree.internal_nodes()
    subsets = [
        frozenset(c)
        for r in range(ncolors + 1)
        for c in combinations(range(ncolors), r)
    ]
    best = None
    for assign in product(subsets, repeat=len(internal)):
        peb = dict(zip(internal, assign))
        ok = True
        for leaf in range(tree.n_leaves):
            seen = [c for v in path_to_leaf(tree, leaf) for c in peb[v]]
            if sorted(seen) != list(range(ncolors)):
                ok = False
                break
        if ok:
            for v in internal:
                anc, u = 0, tree.parent[v]
                while u != -1:
                    anc += len(peb.get(u, ()))
                    u = tree.parent[u]
                if len(peb[v]) < anc:
                    ok = False
                    break
        if ok:
            counts = [0] * ncolors
            for s in assign:
                for c in s:
                    counts[c] += 1
            m = max(counts)
            best = m if best is None else min(best, m)
    return best


def test_brute_force_spot_values():
    assert brute_force_min_pebbles(build_tree(2), 1) == 1
    assert brute_force_min_pebbles(build_tree(4), 1) == 2
    n8 = brute_force_min_pebbles(build_tree(8), 2)
    assert n8 == 3
    assert n8 <= covering_params(8).n_prime


def test_brute_force_matches_raw_enumeration():
    for n, colors in [(2, 1), (4, 1), (4, 2), (8, 2)]:
        t = build_tree(n)
        assert brute_force_min_pebbles(t, colors) == _raw_min_pebbles(t, colors)


@pytest.mark.parametrize("n", [2, 4, 6, 8, 10, 12, 14, 16])
def test_brute_force_never_beaten_by_constructor(n):
    params = covering_params(n)
    pt = construct_covering(build_tree(n), params)
    worst = max(pt.per_color_counts().values())
    minimum = brute_force_min_pebbles(pt.tree, pt.n_colors)
    assert minimum <= worst
    assert minimum <= params.n_prime


def test_brute_force_cap():
    with pytest.raises(CapError):
        brute_force_min_pebbles(build_tree(64), 4)


# -- certificates ------------------------------------------------------------------------


@pytest.mark.parametrize("n", [2, 8, 14, 32])
def test_certificate_round_trip(n):
    pt = construct_covering(build_tree(n), covering_params(n))
    back = covering_from_json(covering_to_json(pt))
    assert back.s == pt.s
    assert back.pebbles == pt.pebbles
    assert back.tree.span == pt.tree.span
    assert validate_covering(back).all_ok
