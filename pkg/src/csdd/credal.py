"""Interval credal sets over k-state categorical variables.

A credal set here is the polytope of probability mass functions
``{p : lower <= p <= upper, sum(p) = 1}``.  Sets are kept *reachable*
(every endpoint attainable by some member), which lets every local linear
program close in O(k log k) with a greedy mass allocation instead of a
general LP solver.  Vertices of the polytope have at most one coordinate
strictly between its bounds; they are enumerated in a deterministic order
so optimizers can be compared by index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

__all__ = [
    "CredalSetError",
    "IntervalCredalSet",
    "Vertex",
    "normalize_reachable",
    "minimize_linear",
    "maximize_linear",
    "enumerate_vertices",
    "max_ratio",
]

EQ_TOL = 1e-12          # comparisons between probabilities / optima
BUILD_TOL = 1e-9        # constructor rejects violations beyond this
VERTEX_GUARD_K = 12


class CredalSetError(ValueError):
    """Empty or malformed credal set, or a guard violation."""


@dataclass(frozen=True)
class Vertex:
    """An extreme point; ``index`` refers to the deterministic enumeration."""

    point: tuple[float, ...]
    index: int | None = None


@dataclass(frozen=True)
class IntervalCredalSet:
    """Reachable probability-interval credal set.

    ``lower[i] == upper[i] == 0`` encodes a forbidden state.  Construction
    validates bounds, non-emptiness and reachability within ``BUILD_TOL``;
    use :func:`normalize_reachable` to tighten raw bounds first.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self) -> None:
        lower, upper = self.lower, self.upper
        if len(lower) != len(upper) or not lower:
            raise CredalSetError("lower/upper must be equal-length, non-empty vectors")
        for i, (l, u) in enumerate(zip(lower, upper)):
            if not (-BUILD_TOL <= l <= u <= 1 + BUILD_TOL):
                raise CredalSetError(f"state {i}: invalid interval [{l}, {u}]")
        sl, su = math.fsum(lower), math.fsum(upper)
        if sl > 1 + BUILD_TOL or su < 1 - BUILD_TOL:
            raise CredalSetError(f"empty credal set: sum(lower)={sl}, sum(upper)={su}")
        for i in range(len(lower)):
            rest_u = su - upper[i]
            rest_l = sl - lower[i]
            if lower[i] + rest_u < 1 - BUILD_TOL or upper[i] + rest_l > 1 + BUILD_TOL:
                raise CredalSetError(f"state {i}: bounds are not reachable")

    @classmethod
    def point(cls, pmf: Sequence[float]) -> "IntervalCredalSet":
        p = tuple(float(x) for x in pmf)
        return cls(p, p)

    @property
    def k(self) -> int:
        return len(self.lower)

    @property
    def width(self) -> float:
        return max(u - l for l, u in zip(self.lower, self.upper))

    def is_point(self, tol: float = EQ_TOL) -> bool:
        return self.width <= tol

    def contains(self, pmf: Sequence[float], tol: float = BUILD_TOL) -> bool:
        if abs(math.fsum(pmf) - 1.0) > tol:
            return False
        return all(l - tol <= p <= u + tol for p, l, u in zip(pmf, self.lower, self.upper))


def normalize_reachable(lower: Sequence[float], upper: Sequence[float]) -> IntervalCredalSet:
    """Tighten raw interval bounds to reachable form (same feasible set)."""
    lower = tuple(float(x) for x in lower)
    upper = tuple(float(x) for x in upper)
    if len(lower) != len(upper) or not lower:
        raise CredalSetError("lower/upper must be equal-length, non-empty vectors")
    sl, su = math.fsum(lower), math.fsum(upper)
    if sl > 1 + BUILD_TOL or su < 1 - BUILD_TOL:
        raise CredalSetError(f"empty credal set: sum(lower)={sl}, sum(upper)={su}")
    new_lower = [min(max(l, 1.0 - (su - u)), u) for l, u in zip(lower, upper)]
    new_upper = [max(min(u, 1.0 - (sl - l)), l) for l, u in zip(lower, upper)]
    # the tightened bounds can cross by a rounding ulp; repair pairwise
    for i, (l, u) in enumerate(zip(new_lower, new_upper)):
        if l > u:
            new_lower[i] = u
    return IntervalCredalSet(tuple(new_lower), tuple(new_upper))


def _greedy_min_point(cs: IntervalCredalSet, coeffs: Sequence[float]) -> tuple[float, ...]:
    # start at the lower bounds, hand the remaining mass to the cheapest states
    theta = list(cs.lower)
    remaining = 1.0 - math.fsum(theta)
    if remaining > 0:
        for i in sorted(range(cs.k), key=coeffs.__getitem__):
            room = cs.upper[i] - theta[i]
            if room <= 0:
                continue
            add = room if room < remaining else remaining
            theta[i] += add
            remaining -= add
            if remaining <= EQ_TOL:
                break
    return tuple(theta)


def minimize_linear(cs: IntervalCredalSet, coeffs: Sequence[float]) -> tuple[float, Vertex]:
    """Exact minimum of ``sum(coeffs * theta)`` over the credal set.

    Ties between equal coefficients break toward the lower state index, so
    the returned optimizer is deterministic.
    """
    if len(coeffs) != cs.k:
        raise CredalSetError(f"expected {cs.k} coefficients, got {len(coeffs)}")
    point = _greedy_min_point(cs, coeffs)
    value = math.fsum(c * t for c, t in zip(coeffs, point))
    return value, Vertex(point, _vertex_index(cs, point))


def maximize_linear(cs: IntervalCredalSet, coeffs: Sequence[float]) -> tuple[float, Vertex]:
    """Dual of :func:`minimize_linear`; equals ``-minimize(-coeffs)``."""
    value, vertex = minimize_linear(cs, tuple(-c for c in coeffs))
    return -value, vertex


def _min_fast(cs: IntervalCredalSet, coeffs: Sequence[float]) -> tuple[float, tuple[float, ...]]:
    # hot-path variant: optimizer as a bare point, no enumeration index
    point = _greedy_min_point(cs, coeffs)
    return math.fsum(c * t for c, t in zip(coeffs, point)), point


def _max_fast(cs: IntervalCredalSet, coeffs: Sequence[float]) -> tuple[float, tuple[float, ...]]:
    point = _greedy_min_point(cs, tuple(-c for c in coeffs))
    return math.fsum(c * t for c, t in zip(coeffs, point)), point


def enumerate_vertices(cs: IntervalCredalSet) -> list[Vertex]:
    """All extreme points, deduplicated, in ascending lexicographic order."""
    if cs.k > VERTEX_GUARD_K:
        raise CredalSetError(f"vertex enumeration guarded at k <= {VERTEX_GUARD_K}, got {cs.k}")
    return list(_vertex_cache(cs))


@lru_cache(maxsize=4096)
def _vertex_cache(cs: IntervalCredalSet) -> tuple[Vertex, ...]:
    k = cs.k
    points: list[tuple[float, ...]] = []
    if k == 1:
        points.append((1.0,))
    else:
        # a vertex has at most one coordinate strictly inside its interval
        for free in range(k):
            others = [i for i in range(k) if i != free]
            for bits in range(1 << (k - 1)):
                theta = [0.0] * k
                total = 0.0
                for j, i in enumerate(others):
                    theta[i] = cs.upper[i] if bits >> j & 1 else cs.lower[i]
                    total += theta[i]
                residual = 1.0 - total
                if cs.lower[free] - EQ_TOL <= residual <= cs.upper[free] + EQ_TOL:
                    theta[free] = min(max(residual, cs.lower[free]), cs.upper[free])
                    points.append(tuple(theta))
    points.sort()
    unique: list[tuple[float, ...]] = []
    for p in points:
        if unique and all(abs(a - b) <= EQ_TOL for a, b in zip(unique[-1], p)):
            continue
        unique.append(p)
    return tuple(Vertex(p, i) for i, p in enumerate(unique))


def _vertex_index(cs: IntervalCredalSet, point: tuple[float, ...]) -> int | None:
    if cs.k > VERTEX_GUARD_K:
        return None
    for vertex in _vertex_cache(cs):
        if all(abs(a - b) <= 1e-9 for a, b in zip(vertex.point, point)):
            return vertex.index
    return None


def max_ratio(cs: IntervalCredalSet, i: int, j: int, scale: float = 1.0) -> float:
    """Maximum of ``scale * theta[i] / theta[j]`` over the credal set.

    The optimum of a linear-fractional objective sits at a vertex; here it
    is the one with ``theta[j]`` at its lower bound and ``theta[i]`` as
    large as the remaining mass allows.  Requires ``lower[j] > 0``.
    """
    value, _ = _max_ratio_vertex(cs, i, j, scale)
    return value


def _max_ratio_vertex(
    cs: IntervalCredalSet, i: int, j: int, scale: float = 1.0
) -> tuple[float, tuple[float, ...]]:
    if i == j:
        raise CredalSetError("numerator and denominator states must differ")
    if not (0 <= i < cs.k and 0 <= j < cs.k):
        raise CredalSetError("state index out of range")
    if cs.lower[j] <= 0:
        raise CredalSetError(
            f"state {j} has zero lower probability; the ratio is unbounded"
        )
    rest_lower = math.fsum(cs.lower[m] for m in range(cs.k) if m not in (i, j))
    theta_i = min(cs.upper[i], 1.0 - cs.lower[j] - rest_lower)
    theta = list(cs.lower)
    theta[i] = theta_i
    remaining = 1.0 - math.fsum(theta)
    if remaining > EQ_TOL:
        for m in range(cs.k):
            if m in (i, j):
                continue
            room = cs.upper[m] - theta[m]
            add = room if room < remaining else remaining
            theta[m] += add
            remaining -= add
            if remaining <= EQ_TOL:
                break
    return scale * theta_i / cs.lower[j], tuple(theta)
