"""Weighted-adversary machinery: progress measures and bound calculators.

The lower-bound argument tracks W_j, a weighted sum of pairwise inner
products across an ensemble of inputs, and bounds how much one oracle
query can move it.  Weights are exact rationals (the combinatorial
identities are exact claims); state evolution and inner products are
floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .oracles import (
    AnnotatedPermutation,
    OrderedOracle,
    Permutation,
    all_annotated,
    all_inputs,
    all_permutations,
    annotate,
    comparison_oracle_apply,
    sigma_kd,
)
from .states import (
    COMPARISON,
    GENERIC,
    SEARCH,
    LinearOp,
    PureState,
    apply_op,
    inner_product,
    make_basis_state,
    project_query_index,
)


class EnsembleError(ValueError):
    """A progress computation was handed an incomplete input ensemble."""


class ConvergenceError(RuntimeError):
    """Power iteration failed to converge within the iteration cap."""


# ---------------------------------------------------------------------------
# Scalars.
# ---------------------------------------------------------------------------


def eps_prime(eps: float) -> float:
    """2 sqrt(eps (1 - eps)) for error probability 0 <= eps <= 1/2."""
    if not 0.0 <= eps <= 0.5:
        raise ValueError(f"eps must lie in [0, 1/2], got {eps}")
    return 2.0 * math.sqrt(eps * (1.0 - eps))


def harmonic(n: int) -> Fraction:
    """Exact n-th harmonic number."""
    if n < 1:
        raise ValueError("need n >= 1")
    return sum(Fraction(1, k) for k in range(1, n + 1))


@lru_cache(maxsize=None)
def harmonic_float(n: int) -> float:
    """Floating harmonic number, usable at large n (e.g. 2^20)."""
    if n < 1:
        raise ValueError("need n >= 1")
    return math.fsum(1.0 / k for k in range(1, n + 1))


# ---------------------------------------------------------------------------
# Weight schemes.
# ---------------------------------------------------------------------------

SEARCH_TAG = "search"
SORT_TAG = "sort"
ED_TAG = "element-distinctness"
PROBLEM_TAGS = (SEARCH_TAG, SORT_TAG, ED_TAG)


def weight_search(x: OrderedOracle, y: OrderedOracle) -> Fraction:
    """1 / (f(y) - f(x)) when f(x) < f(y), else 0."""
    if x.n != y.n:
        raise ValueError("weights need equal-size inputs")
    if x.f < y.f:
        return Fraction(1, y.f - x.f)
    return Fraction(0)


def find_kd(sigma: Permutation, tau: Permutation) -> Optional[Tuple[int, int]]:
    """The unique (k, d) with tau = sigma^(k,d), if it exists."""
    if sigma.n != tau.n:
        raise ValueError("permutations of different sizes")
    n = sigma.n
    inv = sigma.inverse()
    rho = tuple(tau(inv[v]) for v in range(n))  # tau composed after sigma^-1
    moved = [v for v in range(n) if rho[v] != v]
    if not moved:
        return None
    k, top = moved[0], moved[-1]
    if moved != list(range(k, top + 1)):
        return None
    if rho[top] != k or any(rho[v] != v + 1 for v in range(k, top)):
        return None
    return k, top - k


def weight_sort(sigma: Permutation, tau: Permutation) -> Fraction:
    """1/d when tau = sigma^(k,d) for (the unique) valid (k, d), else 0."""
    kd = find_kd(sigma, tau)
    return Fraction(1, kd[1]) if kd else Fraction(0)


def weight_ed(sigma: Permutation, tau: AnnotatedPermutation) -> Fraction:
    """Same 1/d scheme, additionally requiring the marker to sit at rank k."""
    kd = find_kd(sigma, tau.perm)
    if kd and tau.marker == kd[0]:
        return Fraction(1, kd[1])
    return Fraction(0)


def total_weight(problem: str, n: int) -> Fraction:
    """Closed-form W_0: n H_n - n for search, n! (n H_n - n) otherwise."""
    if n < 2:
        raise ValueError("need n >= 2")
    base = n * harmonic(n) - n
    if problem == SEARCH_TAG:
        return base
    if problem in (SORT_TAG, ED_TAG):
        return math.factorial(n) * base
    raise ValueError(f"unknown problem tag {problem!r}")


InputKey = Union[OrderedOracle, Permutation, AnnotatedPermutation]


@dataclass(frozen=True)
class WeightScheme:
    """A problem tag plus the pairwise weight function at one size."""

    problem: str
    n: int

    def expected_keys(self) -> set:
        if self.problem == SEARCH_TAG:
            return set(all_inputs(self.n))
        if self.problem == SORT_TAG:
            return set(all_permutations(self.n))
        if self.problem == ED_TAG:
            return set(all_permutations(self.n)) | set(all_annotated(self.n))
        raise ValueError(f"unknown problem tag {self.problem!r}")

    def weighted_pairs(self) -> Iterable[Tuple[InputKey, InputKey, Fraction]]:
        """All ordered pairs carrying nonzero weight."""
        n = self.n
        if self.problem == SEARCH_TAG:
            xs = all_inputs(n)
            for a in range(n - 1):
                for b in range(a + 1, n):
                    yield xs[a], xs[b], Fraction(1, b - a)
            return
        for sigma in all_permutations(n):
            for k in range(n - 1):
                for d in range(1, n - k):
                    tau = sigma_kd(sigma, k, d)
                    if self.problem == SORT_TAG:
                        yield sigma, tau, Fraction(1, d)
                    else:
                        yield sigma, annotate(tau, k), Fraction(1, d)

    def pair_weight(self, a: InputKey, b: InputKey) -> Fraction:
        if self.problem == SEARCH_TAG:
            return weight_search(a, b)
        if self.problem == SORT_TAG:
            return weight_sort(a, b)
        return weight_ed(a, b)


def progress_W(states: Mapping[InputKey, PureState], scheme: WeightScheme) -> complex:
    """Sum of weight(a, b) <psi_a | psi_b> over the scheme's weighted pairs.

    The full input family must be present; the value is complex and the
    trace layer asserts near-realness for the shipped schemes.
    """
    missing = scheme.expected_keys() - set(states)
    if missing:
        raise EnsembleError(
            f"incomplete ensemble for {scheme.problem}: {len(missing)} inputs missing"
        )
    total = 0.0 + 0.0j
    for a, b, w in scheme.weighted_pairs():
        total += float(w) * inner_product(states[a], states[b])
    return total


def step_delta_bound(
    sx: PureState, sy: PureState, diff_indices: Iterable[int]
) -> float:
    """Per-query progress cap: 2 sum over differing i of |P_i x| |P_i y|."""
    if sx.schema != sy.schema:
        raise ValueError("states from different schemas")
    total = 0.0
    for i in diff_indices:
        total += project_query_index(sx, i).norm() * project_query_index(sy, i).norm()
    return 2.0 * total


# ---------------------------------------------------------------------------
# Spectral bounds.
# ---------------------------------------------------------------------------


def hilbert_entry(k: int, l: int) -> Fraction:
    """1 / (k + l - 1) for 1-based indices."""
    if k < 1 or l < 1:
        raise ValueError("indices are 1-based")
    return Fraction(1, k + l - 1)


@dataclass(frozen=True)
class SpectralMatrix:
    """Hilbert matrix section, or its anti-triangular truncation."""

    n: int
    kind: str  # "hilbert" | "truncated"

    def entry(self, k: int, l: int) -> Fraction:
        if not (1 <= k <= self.n and 1 <= l <= self.n):
            raise ValueError(f"indices out of range for n={self.n}")
        if self.kind == "truncated" and k + l > self.n + 1:
            return Fraction(0)
        return hilbert_entry(k, l)

    def to_numpy(self) -> np.ndarray:
        k = np.arange(1, self.n + 1, dtype=float)
        m = 1.0 / (k[:, None] + k[None, :] - 1.0)
        if self.kind == "truncated":
            m[k[:, None] + k[None, :] > self.n + 1] = 0.0
        return m


def b_matrix(n: int) -> SpectralMatrix:
    """Entries 1/(k+l-1) when k + l <= n + 1, zero on the anti-triangle."""
    if n < 1:
        raise ValueError("need n >= 1")
    return SpectralMatrix(n, "truncated")


def hilbert_matrix(n: int) -> SpectralMatrix:
    if n < 1:
        raise ValueError("need n >= 1")
    return SpectralMatrix(n, "hilbert")


def _power_iteration(
    a: np.ndarray,
    tol: float,
    seed: int,
    max_iter: int,
    warm_start: Optional[np.ndarray],
) -> Tuple[float, np.ndarray]:
    n = a.shape[0]
    if n == 1:
        return abs(float(a[0, 0])), np.ones(1)
    rng = np.random.default_rng(seed)
    if warm_start is not None and warm_start.shape == (n,):
        x = warm_start.astype(float)
    else:
        x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    prev = -1.0
    for _ in range(max_iter):
        y = a @ (a @ x)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            x = rng.standard_normal(n)
            x /= np.linalg.norm(x)
            continue
        rayleigh = float(x @ y)  # x' A^2 x >= 0
        x = y / ny
        if prev >= 0.0 and abs(rayleigh - prev) < tol * max(1.0, rayleigh):
            return math.sqrt(rayleigh), x
        prev = rayleigh
    residual = float(np.linalg.norm(a @ (a @ x) - prev * x))
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} steps "
        f"(last Rayleigh {prev:.6g}, residual {residual:.3g})"
    )


def spectral_norm(
    m: SpectralMatrix,
    tol: float = 1e-12,
    seed: int = 0,
    max_iter: int = 1_000_000,
    warm_start: Optional[np.ndarray] = None,
) -> float:
    """Largest singular value by power iteration on the squared matrix.

    The inputs here are symmetric, so this is the dominant |eigenvalue|;
    successive Rayleigh quotients within `tol` stop the iteration.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    return _power_iteration(m.to_numpy(), tol, seed, max_iter, warm_start)[0]


def spectral_norm_sweep(
    n_max: int, tol: float = 1e-12, seed: int = 0, max_iter: int = 1_000_000
) -> List[float]:
    """Norms of the truncated matrices for n = 1..n_max, warm-starting each
    size with the previous dominant eigenvector (the spectra nest)."""
    norms: List[float] = []
    vec: Optional[np.ndarray] = None
    for n in range(1, n_max + 1):
        warm = None if vec is None else np.append(vec, vec[-1])
        value, vec = _power_iteration(
            b_matrix(n).to_numpy(), tol, seed, max_iter, warm
        )
        norms.append(value)
    return norms


# ---------------------------------------------------------------------------
# Theorem-level bound values.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    problem: str
    n: int
    eps: float
    bound: float
    formula: str

    def to_json_dict(self) -> Dict[str, object]:
        return {"problem": self.problem, "n": self.n, "eps": self.eps, "bound": self.bound}


def theorem_bound(problem: str, n: int, eps: float) -> BoundReport:
    """Query/comparison lower bounds: (1-eps')(H_n - 1) times 1/pi,
    n/(2 pi), or sqrt(n)/(2 pi) for search, sorting, distinctness."""
    if n < 2:
        raise ValueError("need n >= 2")
    ep = eps_prime(eps)
    h = harmonic_float(n)
    if problem == SEARCH_TAG:
        value = (1.0 - ep) * (h - 1.0) / math.pi
        formula = "(1-eps') (H_n - 1) / pi"
    elif problem == SORT_TAG:
        value = (1.0 - ep) * n * (h - 1.0) / (2.0 * math.pi)
        formula = "(1-eps') n (H_n - 1) / (2 pi)"
    elif problem == ED_TAG:
        value = (1.0 - ep) * math.sqrt(n) * (h - 1.0) / (2.0 * math.pi)
        formula = "(1-eps') sqrt(n) (H_n - 1) / (2 pi)"
    else:
        raise ValueError(f"unknown problem tag {problem!r}")
    return BoundReport(problem, n, eps, value, formula)


# ---------------------------------------------------------------------------
# Progress traces over instrumented runs.
# ---------------------------------------------------------------------------


@dataclass
class ProgressTrace:
    """W_0..W_T with the per-step bound for one problem family."""

    problem: str
    n: int
    eps: float
    w: List[complex]
    bound: float

    @property
    def queries(self) -> int:
        return len(self.w) - 1

    @property
    def eps_prime(self) -> float:
        return eps_prime(self.eps)

    def deltas(self) -> List[float]:
        return [
            abs(self.w[j].real - self.w[j + 1].real) for j in range(len(self.w) - 1)
        ]

    def violations(self, tol: float = 1e-9) -> List[str]:
        out = []
        w0 = self.w[0].real
        expected = float(total_weight(self.problem, self.n))
        if abs(w0 - expected) > tol * max(1.0, expected):
            out.append(f"W_0 = {w0!r} != total weight {expected!r}")
        for j, wj in enumerate(self.w):
            if abs(wj.imag) > tol:
                out.append(f"W_{j} has imaginary part {wj.imag:.3g}")
        for j, d in enumerate(self.deltas()):
            if d > self.bound + tol:
                out.append(f"|W_{j} - W_{j + 1}| = {d:.6g} exceeds bound {self.bound:.6g}")
        return out

    def csv_rows(self) -> List[Tuple[int, float, float, float]]:
        rows = []
        for j, wj in enumerate(self.w):
            delta = 0.0 if j == 0 else self.w[j].real - self.w[j - 1].real
            rows.append((j, wj.real, delta, self.bound))
        return rows


def step_bound_value(problem: str, n: int) -> float:
    if problem == SEARCH_TAG:
        return math.pi * n
    if problem == SORT_TAG:
        return 2.0 * math.pi * math.factorial(n)
    if problem == ED_TAG:
        return 2.0 * math.pi * math.factorial(n) * math.sqrt(n)
    raise ValueError(f"unknown problem tag {problem!r}")


def search_progress_trace(n: int) -> ProgressTrace:
    """Instrument the tree-search algorithm over every size-n input and
    assemble the progress sequence at query boundaries."""
    from .search import run_search

    scheme = WeightScheme(SEARCH_TAG, n)
    snapshots: Dict[OrderedOracle, List[PureState]] = {}
    queries = None
    for x in all_inputs(n):
        outcome = run_search(x, record_trace=True)
        snaps = [outcome.trace[0].state]
        snaps.extend(step.state for step in outcome.trace if step.query)
        if outcome.queries:
            snaps[-1] = outcome.trace[-1].state  # final state stands in for W_T
        snapshots[x] = snaps
        if queries is None:
            queries = outcome.queries
        elif queries != outcome.queries:
            raise EnsembleError("query schedule varied across the ensemble")
    w = [
        progress_W({x: snaps[j] for x, snaps in snapshots.items()}, scheme)
        for j in range(queries + 1)
    ]
    return ProgressTrace(SEARCH_TAG, n, 0.0, w, step_bound_value(SEARCH_TAG, n))


def _comparison_labels(n: int, workspace: int) -> List[Tuple[int, int, int]]:
    return [
        (z, i, ip)
        for z in range(workspace)
        for i in range(n)
        for ip in range(n)
        if i != ip
    ]


def random_isometry_op(
    labels: Sequence[Tuple[int, ...]], schema: int, seed: int, real: bool = False
) -> LinearOp:
    """Dense Haar-style unitary over an explicit label list (QR of a
    seeded Gaussian matrix), wrapped as a label-rewrite operator."""
    dim = len(labels)
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((dim, dim))
    if not real:
        g = g + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    q = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
    index = {l: k for k, l in enumerate(labels)}
    cols = [
        [(labels[j], complex(q[j, k])) for j in range(dim)] for k in range(dim)
    ]

    def domain(regs) -> bool:
        return regs in index

    def rule(regs):
        return cols[index[regs]]

    return LinearOp(f"random-isometry-{seed}", schema, domain, rule)


def comparison_progress_trace(
    problem: str, n: int, steps: int = 4, seed: int = 7, workspace: int = 2
) -> ProgressTrace:
    """Progress of a generic real-amplitude comparison algorithm (a fixed
    seeded orthogonal mixer alternating with the comparison oracle) over
    all n! permutations; annotated inputs share their permutation's states."""
    if problem not in (SORT_TAG, ED_TAG):
        raise ValueError("comparison traces cover sort and element-distinctness")
    labels = _comparison_labels(n, workspace)
    mixer = random_isometry_op(labels, COMPARISON, seed, real=True)
    scheme = WeightScheme(problem, n)

    perms = all_permutations(n)
    snapshots: Dict[Permutation, List[PureState]] = {}
    for sigma in perms:
        state = make_basis_state(COMPARISON, labels[0])
        state = apply_op(mixer, state)
        snaps = [state.copy()]
        for _ in range(steps):
            state = comparison_oracle_apply(sigma, state)
            state = apply_op(mixer, state)
            snaps.append(state.copy())
        snapshots[sigma] = snaps

    w = []
    for j in range(steps + 1):
        states: Dict[InputKey, PureState] = {
            sigma: snaps[j] for sigma, snaps in snapshots.items()
        }
        if problem == ED_TAG:
            for tau in all_annotated(n):
                states[tau] = snapshots[tau.perm][j]
        w.append(progress_W(states, scheme))
    return ProgressTrace(problem, n, 0.5, w, step_bound_value(problem, n))
