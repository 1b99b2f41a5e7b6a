"""Sparse state-vector core for oracle-model simulations.

A pure state is a finite map from basis labels (integer register tuples)
to complex amplitudes.  Operators are label-rewrite rules with explicit
domain predicates; every operator shipped by this package is an isometry
on its declared domain, so norms are preserved up to floating-point dust.
The label space is unbounded (workspace integers can grow), which is why
states are sparse maps rather than dense vectors.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Sequence, Tuple

Regs = Tuple[int, ...]

# Stored amplitudes below this magnitude are dropped as numerical dust.
PRUNE_TOL = 1e-15
# User-visible checks (norms, probabilities, exactness).
NORM_TOL = 1e-9
# Internal algebraic identities.
ALGEBRA_TOL = 1e-12
# Gram-matrix isometry verification.
GRAM_TOL = 1e-10


class SchemaError(ValueError):
    """Register tuple does not fit the declared schema."""


class DomainError(ValueError):
    """A support label falls outside an operator's domain."""


class NormError(ArithmeticError):
    """An operator application failed to preserve the norm."""


# ---------------------------------------------------------------------------
# Schemas: named register layouts.
# ---------------------------------------------------------------------------

GENERIC = 0      # (z, i): workspace and query index
COMPARISON = 1   # (z, i, i'): workspace and an ordered index pair
SEARCH = 2       # (d, c_0..c_{d-1}, kind, a, b): tree-search machine labels
FREE = 9         # unconstrained integer tuples, for ad-hoc tests

# Label kinds used by the SEARCH schema.
K_START = 0   # machine not yet started
K_VERTEX = 1  # |v>, bare internal vertex
K_VBIT = 2    # |v; bit>, vertex with a written oracle bit
K_VCOLOR = 3  # |v; c>, vertex with a color register
K_VSLOT = 4   # |v; k>, vertex with an un-colored slot register (k >= 1)
K_LEAF = 5    # |leaf>


def _generic_ok(regs: Regs) -> bool:
    return len(regs) == 2 and regs[0] >= 0 and regs[1] >= 0


def _comparison_ok(regs: Regs) -> bool:
    return len(regs) == 3 and all(r >= 0 for r in regs)


def _search_ok(regs: Regs) -> bool:
    if len(regs) < 4:
        return False
    d = regs[0]
    if d < 0 or len(regs) != d + 4:
        return False
    kind = regs[d + 1]
    return K_START <= kind <= K_LEAF and all(c >= 0 for c in regs[1 : d + 1])


def _free_ok(regs: Regs) -> bool:
    return all(isinstance(r, int) for r in regs)


@dataclass(frozen=True)
class Schema:
    ident: int
    name: str
    checker: Callable[[Regs], bool]


SCHEMAS: Dict[int, Schema] = {
    GENERIC: Schema(GENERIC, "generic", _generic_ok),
    COMPARISON: Schema(COMPARISON, "comparison", _comparison_ok),
    SEARCH: Schema(SEARCH, "search", _search_ok),
    FREE: Schema(FREE, "free", _free_ok),
}


def check_label(schema_id: int, regs: Regs) -> Regs:
    """Validate a register tuple against its schema and return it."""
    schema = SCHEMAS.get(schema_id)
    if schema is None:
        raise SchemaError(f"unknown schema id {schema_id}")
    regs = tuple(int(r) for r in regs)
    if not schema.checker(regs):
        raise SchemaError(f"label {regs} invalid for schema {schema.name!r}")
    return regs


@dataclass(frozen=True)
class BasisLabel:
    """A basis vector name: schema id plus register values."""

    schema: int
    regs: Regs


# ---------------------------------------------------------------------------
# States.
# ---------------------------------------------------------------------------


@dataclass
class PureState:
    """Finite complex-amplitude map over labels of one schema.

    Algorithm-produced states are unit-norm; projections return
    sub-normalized instances of the same type.
    """

    schema: int
    amp: Dict[Regs, complex] = field(default_factory=dict)

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.amp.values()))

    def copy(self) -> "PureState":
        return PureState(self.schema, dict(self.amp))

    def support(self) -> List[Regs]:
        return sorted(self.amp)

    def prune(self) -> "PureState":
        """Drop amplitudes below the dust threshold, in place."""
        dead = [l for l, a in self.amp.items() if abs(a) < PRUNE_TOL]
        for l in dead:
            del self.amp[l]
        return self

    def __len__(self) -> int:
        return len(self.amp)


def make_basis_state(schema_id: int, regs: Sequence[int]) -> PureState:
    """Unit state with a single support label."""
    label = check_label(schema_id, tuple(regs))
    return PureState(schema_id, {label: 1.0 + 0.0j})


def inner_product(a: PureState, b: PureState) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    if a.schema != b.schema:
        raise SchemaError(
            f"inner product across schemas {a.schema} and {b.schema}"
        )
    if len(a.amp) > len(b.amp):
        return complex(
            sum(b.amp[l].conjugate() * a.amp[l] for l in b.amp if l in a.amp)
        ).conjugate()
    return complex(sum(a.amp[l].conjugate() * b.amp[l] for l in a.amp if l in b.amp))


# ---------------------------------------------------------------------------
# Operators.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearOp:
    """Label-rewrite operator: a rule plus an explicit domain predicate.

    The rule maps one domain label to a finite list of (label, coefficient)
    terms.  On its domain the induced linear map must be an isometry; this
    is what `check_isometry` verifies and `apply_op` monitors via norms.
    """

    name: str
    schema: int
    domain: Callable[[Regs], bool]
    rule: Callable[[Regs], List[Tuple[Regs, complex]]]


def apply_op(op: LinearOp, s: PureState) -> PureState:
    """Linear extension of the rule to the whole support of `s`."""
    if op.schema != s.schema:
        raise SchemaError(f"operator {op.name!r} expects schema {op.schema}")
    out: Dict[Regs, complex] = {}
    for label, a in s.amp.items():
        if not op.domain(label):
            raise DomainError(f"operator {op.name!r} undefined on label {label}")
        for new_label, coeff in op.rule(label):
            out[new_label] = out.get(new_label, 0.0j) + a * coeff
    result = PureState(s.schema, out).prune()
    n_in, n_out = s.norm(), result.norm()
    if abs(n_out - n_in) > NORM_TOL * max(1.0, n_in):
        raise NormError(
            f"operator {op.name!r} changed the norm: {n_in:.12g} -> {n_out:.12g}"
        )
    return result


def identity_op(schema_id: int) -> LinearOp:
    return LinearOp("identity", schema_id, lambda l: True, lambda l: [(l, 1.0)])


def check_isometry(op: LinearOp, labels: Iterable[Regs], tol: float = GRAM_TOL) -> bool:
    """Verify the Gram matrix of rule images over `labels` is the identity."""
    images = []
    for l in labels:
        if not op.domain(l):
            raise DomainError(f"label {l} outside domain of {op.name!r}")
        vec: Dict[Regs, complex] = {}
        for nl, c in op.rule(l):
            vec[nl] = vec.get(nl, 0.0j) + c
        images.append(vec)
    for i, u in enumerate(images):
        for j in range(i, len(images)):
            v = images[j]
            g = sum(u[l].conjugate() * v[l] for l in u if l in v)
            want = 1.0 if i == j else 0.0
            if abs(g - want) > tol:
                return False
    return True


# ---------------------------------------------------------------------------
# Projections and measurement.
# ---------------------------------------------------------------------------


class InvalidPairError(ValueError):
    """A comparison projector needs two distinct indices."""


def project_query_index(s: PureState, i: int) -> PureState:
    """P_i: keep amplitudes whose query register equals i (unnormalized).

    Negative i yields the zero vector (the zero projection).
    """
    if s.schema != GENERIC:
        raise SchemaError("query-index projection needs the generic schema")
    if i < 0:
        return PureState(GENERIC, {})
    return PureState(GENERIC, {l: a for l, a in s.amp.items() if l[1] == i})


def project_comparison_pair(s: PureState, i: int, ip: int) -> PureState:
    """P_{ii'}: keep amplitudes comparing the unordered pair {i, i'}."""
    if s.schema != COMPARISON:
        raise SchemaError("pair projection needs the comparison schema")
    if i == ip:
        raise InvalidPairError(f"comparison pair needs distinct indices, got {i}")
    pair = {i, ip}
    return PureState(
        COMPARISON, {l: a for l, a in s.amp.items() if {l[1], l[2]} == pair}
    )


@dataclass(frozen=True)
class MeasurementResult:
    """Born-rule marginal distribution of one register."""

    distribution: Dict[int, float]

    def most_likely(self) -> Tuple[int, float]:
        value = max(self.distribution, key=lambda v: self.distribution[v])
        return value, self.distribution[value]


def measure_register(s: PureState, position: int) -> MeasurementResult:
    """Marginal of squared magnitudes over the register at `position`."""
    dist: Dict[int, float] = {}
    for label, a in s.amp.items():
        if position >= len(label):
            raise SchemaError(
                f"register position {position} out of range for label {label}"
            )
        v = label[position]
        dist[v] = dist.get(v, 0.0) + abs(a) ** 2
    total = sum(dist.values())
    if abs(total - 1.0) > NORM_TOL:
        raise NormError(f"measurement on a non-unit state (norm^2 = {total:.12g})")
    return MeasurementResult(dist)


# ---------------------------------------------------------------------------
# Serialization.
# ---------------------------------------------------------------------------


def state_to_json(s: PureState) -> str:
    terms = [
        {"label": list(l), "re": a.real, "im": a.imag}
        for l, a in sorted(s.amp.items())
    ]
    return json.dumps({"schema": s.schema, "terms": terms})


def state_from_json(text: str) -> PureState:
    doc = json.loads(text)
    amp = {
        tuple(int(r) for r in t["label"]): complex(t["re"], t["im"])
        for t in doc["terms"]
    }
    return PureState(int(doc["schema"]), amp)
