"""Polynomial coordinates on barcode space.

A barcode is a finite multiset of intervals ``(x, y)`` with ``x <= y``.  The
functions here are polynomials in the endpoints that are symmetric under
reordering the intervals and that do not change when an interval of length
zero ``(c, c)`` is adjoined.  That subring (written D_n, B_n or Omega in the
literature, depending on whether a fixed number of bars or the stable limit is
meant) is called the *zero-bar-insensitive ring* throughout this package.

It is a polynomial ring, freely generated by

    p_{a+1,b} - p_{a,b+1},     a, b >= 0,

where ``p_{a,b} = sum_i x_i**a * y_i**b`` are the multisymmetric power sums.
There are ``k`` generators of degree ``k``, so the Hilbert series of the ring
is ``prod_{k>=1} (1 - t**k)**(-k)``.  In the coordinates
``xi = x + y``, ``eta = y - x`` a vector-space basis is given by the orbit sums
of monomials ``prod xi_i**a_i * eta_i**b_i`` with ``a_i > 0 => b_i > 0``.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

Interval = tuple[float, float]
Barcode = Sequence[Interval]
ExponentPair = tuple[int, int]
BasisMonomial = tuple[ExponentPair, ...]


@dataclass(frozen=True)
class XiEta:
    xi: float
    eta: float


@dataclass(frozen=True, order=True)
class PowerSumIndex:
    a: int
    b: int

    def __post_init__(self):
        if self.a < 0 or self.b < 0 or (self.a, self.b) == (0, 0):
            raise ValueError(f"invalid power-sum index ({self.a}, {self.b})")


@dataclass(frozen=True, order=True)
class GeneratorIndex:
    """Index ``(a, b)`` of the generator ``p_{a+1,b} - p_{a,b+1}``."""

    a: int
    b: int

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValueError(f"invalid generator index ({self.a}, {self.b})")

    @property
    def degree(self) -> int:
        return self.a + self.b + 1


def _pair(idx) -> tuple[int, int]:
    if isinstance(idx, (PowerSumIndex, GeneratorIndex)):
        return idx.a, idx.b
    a, b = idx
    return int(a), int(b)


def to_xi_eta(iv: Interval) -> XiEta:
    x, y = iv
    return XiEta(x + y, y - x)


def eval_power_sum(bc: Barcode, idx) -> float:
    """``sum_i x_i**a * y_i**b`` with ``0**0 == 1``."""
    a, b = _pair(PowerSumIndex(*_pair(idx)))
    total = 0.0
    for x, y in bc:
        total += x**a * y**b
    return total


def eval_generator(bc: Barcode, g) -> float:
    """Evaluate ``p_{a+1,b} - p_{a,b+1}`` on a barcode.

    Each interval contributes ``x**a * y**b * (x - y)``, so a zero-length
    interval contributes an exact ``0.0`` and the result is bit-for-bit
    unchanged by adjoining one.
    """
    a, b = _pair(GeneratorIndex(*_pair(g)))
    total = 0.0
    for x, y in bc:
        total += x**a * y**b * (x - y)
    return total


def generators_up_to(max_degree: int) -> list[GeneratorIndex]:
    out = []
    for k in range(1, max_degree + 1):
        out.extend(generators_in_degree(k))
    return out


def generators_in_degree(k: int) -> list[GeneratorIndex]:
    if k < 1:
        raise ValueError("generator degree must be >= 1")
    return [GeneratorIndex(a, k - 1 - a) for a in range(k - 1, -1, -1)]


def count_generators_in_degree(k: int) -> tuple[int, list[GeneratorIndex]]:
    """Number of free generators of degree ``k`` and their indices."""
    gens = generators_in_degree(k)
    return len(gens), gens


# --- basis of the invariant ring -------------------------------------------


def allowed_pairs(degree: int) -> list[ExponentPair]:
    """Exponent pairs ``(a, b)`` (xi, eta) of total ``degree`` with a>0 => b>0."""
    if degree < 1:
        return []
    return [(a, degree - a) for a in range(degree)]


def pair_key(p: ExponentPair) -> tuple[int, int]:
    """Canonical sort key: higher degree first, then smaller xi-exponent."""
    return (-(p[0] + p[1]), p[0])


def phi_index(p: ExponentPair) -> int:
    """Position of ``p`` in the enumeration (1,0),(1,1),(2,0),(1,2),(2,1),...

    That enumeration is stated for exponents of ``(x - y, y)``; an allowed
    (xi, eta) pair ``(a, b)`` corresponds to ``(b, a)`` there.
    """
    z, w = p[1], p[0]
    if z < 1 or w < 0:
        raise ValueError(f"{p} is not an allowed exponent pair")
    d = z + w
    return (d - 1) * d // 2 + (z - 1)


def basis_monomials(degree: int, key: Callable[[ExponentPair], object] = pair_key) -> list[BasisMonomial]:
    """All orbit representatives of basis monomials of the given degree.

    A representative is a multiset of allowed exponent pairs, stored as a tuple
    sorted by ``key``; the list is sorted lexicographically under the same key.
    Pass ``key=phi_index`` for the alternative enumeration order.
    """
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    pairs = sorted((p for d in range(1, degree + 1) for p in allowed_pairs(d)), key=key)
    out: list[BasisMonomial] = []

    def extend(prefix: list[ExponentPair], start: int, remaining: int):
        if remaining == 0:
            out.append(tuple(prefix))
            return
        for i in range(start, len(pairs)):
            p = pairs[i]
            d = p[0] + p[1]
            if d <= remaining:
                prefix.append(p)
                extend(prefix, i, remaining - d)
                prefix.pop()

    extend([], 0, degree)
    out.sort(key=lambda m: [key(p) for p in m])
    return out


def hilbert_coefficients(max_degree: int) -> list[int]:
    """Coefficients of ``prod_{k>=1} (1 - t**k)**(-k)`` through ``t**max_degree``."""
    if max_degree < 0:
        raise ValueError("max_degree must be nonnegative")
    coeffs = [1] + [0] * max_degree
    for k in range(1, max_degree + 1):
        for _ in range(k):
            # multiply by 1/(1 - t^k)
            for i in range(k, max_degree + 1):
                coeffs[i] += coeffs[i - k]
    return coeffs


def eval_orbit_sum(bc: Barcode, m: Iterable[ExponentPair]) -> float:
    """Orbit sum of the monomial ``m`` evaluated in (xi, eta) coordinates.

    Each distinct monomial of the orbit is counted once.  Computed by dynamic
    programming over the intervals; the state is the multiset of exponent
    pairs not yet assigned.
    """
    counts = Counter(tuple(p) for p in m)
    kinds = list(counts)
    if sum(counts.values()) > len(bc):
        return 0.0
    full = tuple(counts[k] for k in kinds)
    table: dict[tuple[int, ...], float] = {full: 1.0}
    for x, y in bc:
        xi, eta = x + y, y - x
        weights = [xi**a * eta**b for a, b in kinds]
        nxt = dict(table)
        for state, val in table.items():
            for t, c in enumerate(state):
                if c:
                    s = state[:t] + (c - 1,) + state[t + 1:]
                    nxt[s] = nxt.get(s, 0.0) + val * weights[t]
        table = nxt
    return table.get(tuple(0 for _ in kinds), 0.0)


# --- numerical verification oracles ----------------------------------------


@dataclass
class DerivationCheck:
    """Outcome of :func:`check_derivation_condition`.

    ``failure`` holds ``(i, point, residual)`` for the first failing check.
    """

    passed: bool
    failure: tuple[int, np.ndarray, float] | None = None
    checks: int = 0

    def __bool__(self) -> bool:
        return self.passed


def _as_barcode(v: np.ndarray) -> list[Interval]:
    return [(float(v[2 * i]), float(v[2 * i + 1])) for i in range(len(v) // 2)]


def check_derivation_condition(
    f: Callable[[Barcode], float],
    n: int,
    trials: int = 100,
    h: float = 1e-5,
    tol: float = 1e-6,
    rng: np.random.Generator | int | None = 0,
) -> DerivationCheck:
    """Check that ``(d/dx_i + d/dy_i) f`` vanishes on every diagonal ``y_i = x_i``.

    Points are drawn uniformly from ``[-1, 1]^(2n)`` and projected onto the
    diagonal of interval ``i``; the directional derivative is estimated by a
    central difference with step ``h``.
    """
    if n < 1 or trials < 1 or h <= 0 or tol <= 0:
        raise ValueError("n, trials, h and tol must be positive")
    rng = np.random.default_rng(rng)
    checks = 0
    for _ in range(trials):
        base = rng.uniform(-1.0, 1.0, size=2 * n)
        for i in range(n):
            p = base.copy()
            p[2 * i + 1] = p[2 * i]
            plus, minus = p.copy(), p.copy()
            plus[2 * i: 2 * i + 2] += h
            minus[2 * i: 2 * i + 2] -= h
            residual = (f(_as_barcode(plus)) - f(_as_barcode(minus))) / (2 * h)
            checks += 1
            if not abs(residual) <= tol:
                return DerivationCheck(False, (i, p, float(residual)), checks)
    return DerivationCheck(True, None, checks)


@dataclass
class RankReport:
    n_generators: int
    n_variables: int
    rank: int
    singular_values: np.ndarray
    point: np.ndarray

    @property
    def full_rank(self) -> bool:
        return self.rank == self.n_generators


def generator_jacobian(gens: Sequence[GeneratorIndex], point: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian of the generators at a flat endpoint vector."""
    J = np.empty((len(gens), len(point)))
    for j in range(len(point)):
        plus, minus = point.copy(), point.copy()
        plus[j] += h
        minus[j] -= h
        bp, bm = _as_barcode(plus), _as_barcode(minus)
        for r, g in enumerate(gens):
            J[r, j] = (eval_generator(bp, g) - eval_generator(bm, g)) / (2 * h)
    return J


def check_free_generation(
    max_degree: int,
    n: int,
    h: float = 1e-5,
    tol: float = 1e-8,
    rng: np.random.Generator | int | None = 0,
) -> RankReport:
    """Numerical rank of the generator Jacobian at a generic barcode of ``n`` bars.

    Algebraic independence of the ``N`` generators of degree ``<= max_degree``
    shows up as rank ``N``.  ``tol`` is relative to the largest singular value.
    """
    gens = generators_up_to(max_degree)
    N = len(gens)
    if 2 * n < N:
        raise ValueError(f"underdetermined: {N} generators but only {2 * n} variables")
    rng = np.random.default_rng(rng)
    x = rng.uniform(-1.0, 1.0, size=n)
    y = x + rng.uniform(0.1, 1.0, size=n)
    point = np.column_stack([x, y]).ravel()
    s = np.linalg.svd(generator_jacobian(gens, point, h), compute_uv=False)
    rank = int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0
    return RankReport(N, 2 * n, rank, s, point)


# --- reports ----------------------------------------------------------------


def hilbert_report(max_degree: int) -> dict:
    """JSON-ready table of Hilbert coefficients and basis representatives."""
    coeffs = hilbert_coefficients(max_degree)
    return {
        "coefficients": {str(k): c for k, c in enumerate(coeffs)},
        "basis": {
            str(k): [[list(p) for p in m] for m in basis_monomials(k)]
            for k in range(max_degree + 1)
        },
    }
