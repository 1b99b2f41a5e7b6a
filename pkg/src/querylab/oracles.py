"""Input families and their oracle operators.

Three families: ordered bit-strings queried through a phase oracle,
permutations queried through a comparison oracle, and annotated
permutations (a permutation with one marked rank) for the
element-distinctness adversary.  Also the cycle-composition machinery
that produces the adjacent inputs used by the sorting weight scheme.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import FrozenSet, List, Set, Tuple

from .states import COMPARISON, GENERIC, DomainError, PureState


@dataclass(frozen=True)
class OrderedOracle:
    """Monotone 0^k 1^{n-k} bit-string with at least one 1 bit.

    The forced trailing 1 encodes the convention that the searched-for
    element always exists, so f(x) = first index holding a 1 is total.
    """

    n: int
    bits: Tuple[int, ...]

    def __post_init__(self):
        if self.n < 1 or len(self.bits) != self.n:
            raise ValueError(f"need n >= 1 bits, got n={self.n}")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("bits must be 0/1")
        if any(a > b for a, b in zip(self.bits, self.bits[1:])):
            raise ValueError("bits must be monotone non-decreasing")
        if self.bits[-1] != 1:
            raise ValueError("all-zero input rejected: last bit must be 1")

    @property
    def f(self) -> int:
        return self.bits.index(1)


def from_target(n: int, target: int) -> OrderedOracle:
    """The unique input of size n whose answer is `target`."""
    if not 0 <= target < n:
        raise ValueError(f"target {target} out of range for n={n}")
    return OrderedOracle(n, (0,) * target + (1,) * (n - target))


def f_of(x: OrderedOracle) -> int:
    """Least index holding a 1 bit."""
    return x.f


def all_inputs(n: int) -> List[OrderedOracle]:
    """All n valid inputs of size n, in order of their f-value."""
    if n < 1:
        raise ValueError("need n >= 1")
    return [from_target(n, k) for k in range(n)]


def phase_oracle_apply(x: OrderedOracle, s: PureState) -> PureState:
    """Flip the sign of |z; i> when bit i of x is set; identity for i >= n."""
    if s.schema != GENERIC:
        raise DomainError("phase oracle acts on the generic schema")
    out = {}
    for label, a in s.amp.items():
        i = label[1]
        if i < 0:
            raise DomainError(f"negative query index in label {label}")
        if i < x.n and x.bits[i]:
            out[label] = -a
        else:
            out[label] = a
    return PureState(GENERIC, out)


# ---------------------------------------------------------------------------
# Permutations and comparisons.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Permutation:
    """Bijection on {0..n-1}, stored as its image sequence."""

    images: Tuple[int, ...]

    def __post_init__(self):
        n = len(self.images)
        if sorted(self.images) != list(range(n)):
            raise ValueError(f"not a bijection on 0..{n - 1}: {self.images}")

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i]

    def inverse(self) -> Tuple[int, ...]:
        inv = [0] * self.n
        for i, v in enumerate(self.images):
            inv[v] = i
        return tuple(inv)


def identity_perm(n: int) -> Permutation:
    return Permutation(tuple(range(n)))


def all_permutations(n: int) -> List[Permutation]:
    return [Permutation(p) for p in itertools.permutations(range(n))]


@dataclass(frozen=True)
class ComparisonMatrix:
    """0/1 matrix with m[i][i'] = 1 iff sigma(i) < sigma(i')."""

    n: int
    entries: Tuple[Tuple[int, ...], ...]


def comparison_matrix(sigma: Permutation) -> ComparisonMatrix:
    n = sigma.n
    rows = tuple(
        tuple(1 if sigma(i) < sigma(ip) else 0 for ip in range(n)) for i in range(n)
    )
    return ComparisonMatrix(n, rows)


def comparison_oracle_apply(sigma: Permutation, s: PureState) -> PureState:
    """Phase (-1)^{m_ii'} on each |z; i, i'> label."""
    if s.schema != COMPARISON:
        raise DomainError("comparison oracle acts on the comparison schema")
    n = sigma.n
    out = {}
    for label, a in s.amp.items():
        i, ip = label[1], label[2]
        if i >= n or ip >= n:
            raise DomainError(f"index out of range in label {label} (n={n})")
        out[label] = -a if sigma(i) < sigma(ip) else a
    return PureState(COMPARISON, out)


def sigma_kd(sigma: Permutation, k: int, d: int) -> Permutation:
    """Compose the forward cycle (k, k+1, ..., k+d) with sigma.

    The cycle sends k -> k+1, ..., k+d -> k and is applied after sigma;
    this convention is pinned down by the inverse-relation identity
    (tau inverse of k equals sigma inverse of k+d), which the tests
    enforce exhaustively.
    """
    n = sigma.n
    if not (0 <= k <= n - 2):
        raise ValueError(f"k={k} out of range for n={n}")
    if not (1 <= d <= n - 1 - k):
        raise ValueError(f"d={d} out of range for k={k}, n={n}")

    def cycle(v: int) -> int:
        if k <= v < k + d:
            return v + 1
        if v == k + d:
            return k
        return v

    return Permutation(tuple(cycle(sigma(i)) for i in range(n)))


def diff_entries(sigma: Permutation, k: int, d: int) -> Set[FrozenSet[int]]:
    """The d unordered index pairs where M_sigma and M_{sigma^(k,d)} differ."""
    if not (0 <= k <= sigma.n - 2 and 1 <= d <= sigma.n - 1 - k):
        raise ValueError(f"(k={k}, d={d}) out of range for n={sigma.n}")
    inv = sigma.inverse()
    pairs = {frozenset((inv[k + d], inv[k + i])) for i in range(d)}
    assert len(pairs) == d
    return pairs


@dataclass(frozen=True)
class AnnotatedPermutation:
    """Permutation with a single marked rank r, 0 <= r < n-1."""

    perm: Permutation
    marker: int

    def __post_init__(self):
        if not 0 <= self.marker < self.perm.n - 1:
            raise ValueError(
                f"marker {self.marker} out of range: need 0 <= r < {self.perm.n - 1}"
            )

    @property
    def n(self) -> int:
        return self.perm.n


def annotate(tau: Permutation, r: int) -> AnnotatedPermutation:
    return AnnotatedPermutation(tau, r)


def all_annotated(n: int) -> List[AnnotatedPermutation]:
    return [
        AnnotatedPermutation(p, r)
        for p in all_permutations(n)
        for r in range(n - 1)
    ]


# ---------------------------------------------------------------------------
# Serialization.
# ---------------------------------------------------------------------------


def oracle_to_json(x: OrderedOracle) -> str:
    return json.dumps({"n": x.n, "f": x.f})


def oracle_from_json(text: str) -> OrderedOracle:
    doc = json.loads(text)
    return from_target(int(doc["n"]), int(doc["f"]))


def perm_to_json(sigma: Permutation) -> str:
    return json.dumps(list(sigma.images))


def perm_from_json(text: str) -> Permutation:
    return Permutation(tuple(int(v) for v in json.loads(text)))
