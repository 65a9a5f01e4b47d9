"""Closed-form and series constants for minimal Riesz energy asymptotics.

Ball volumes, sphere areas, the Riemann zeta function, the hexagonal lattice
zeta function and the theoretical limits of the normalized minimal energy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from fractions import Fraction

import numpy as np

__all__ = [
    "LatticeSum",
    "TheoreticalLimit",
    "ball_volume",
    "sphere_area",
    "sphere_d_constant",
    "riemann_zeta",
    "hexagonal_zeta",
    "hexagonal_tail_bound",
    "hexagonal_bound_constant",
    "cube_lattice_zeta",
    "tiling_constant",
    "cube_lower_constant",
    "theoretical_limit",
    "predict_split",
]

# B_2, B_4, ..., B_16
_BERNOULLI = [Fraction(1, 6), Fraction(-1, 30), Fraction(1, 42), Fraction(-1, 30),
              Fraction(5, 66), Fraction(-691, 2730), Fraction(7, 6), Fraction(-3617, 510)]


@dataclass(frozen=True)
class LatticeSum:
    """A truncated lattice series together with a rigorous bound on the omitted tail."""

    value: float
    error_bound: float
    radius: int

    def __float__(self):
        return self.value


def ball_volume(d: int) -> float:
    """Lebesgue measure of the closed unit ball in R^d, ``2 pi^(d/2) / (d Gamma(d/2))``.

    Evaluated by the recursion V_d = (2 pi / d) V_(d-2) from V_0 = 1, V_1 = 2, which
    keeps small dimensions within a few ulps (V_1 = 2 and V_2 = pi exactly).
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    v = 2.0 if d % 2 else 1.0
    for k in range(2 + d % 2, d + 1, 2):
        v *= 2.0 * math.pi / k
    return v


def sphere_area(d: int) -> float:
    """d-dimensional measure of the unit sphere S^d in R^(d+1), equal to 2 pi |B^(d-1)|."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return 2.0 * math.pi * (ball_volume(d - 1) if d > 1 else 1.0)


def sphere_d_constant(d: int) -> float:
    """Limit of E_d(S^d, N) / (N^2 log N), ``Gamma((d+1)/2) / (d sqrt(pi) Gamma(d/2))``.

    Equals ``ball_volume(d) / sphere_area(d)``, which is how it is evaluated.
    """
    return ball_volume(d) / sphere_area(d)


def riemann_zeta(s: float, terms: int = 16) -> float:
    """Riemann zeta for real s > 1 by Euler-Maclaurin summation.

    A partial sum over k < ``terms`` is followed by the integral, the boundary
    half-term and eight Bernoulli corrections. Absolute error is below 1e-12
    for every s > 1.
    """
    s = float(s)
    if not s > 1.0:
        raise ValueError(f"riemann_zeta requires s > 1, got {s}")
    n = terms
    partial = math.fsum(k ** -s for k in range(1, n))
    tail = [n ** (1.0 - s) / (s - 1.0), 0.5 * n ** -s]
    rising = s  # s (s+1) ... (s+2j-2)
    fact = 2.0  # (2j)!
    for j, b in enumerate(_BERNOULLI, start=1):
        tail.append(float(b) / fact * rising * n ** (-s - 2 * j + 1))
        rising *= (s + 2 * j - 1) * (s + 2 * j)
        fact *= (2 * j + 1) * (2 * j + 2)
    return partial + math.fsum(tail)


def hexagonal_tail_bound(s: float, radius: int) -> float:
    """Upper bound on sum of |v|^-s over hexagonal-lattice vectors v = m(1,0) + n(1/2, sqrt3/2)
    with max(|m|, |n|) > radius.

    Each lattice point owns a Voronoi hexagon of area sqrt3/2 and circumradius
    c = 1/sqrt3, and |v| >= (sqrt3/2) max(|m|, |n|). Comparing every omitted
    term with the integral of (|x| - c)^-s over its hexagon gives
    ``(4 pi / sqrt3) (T^(2-s)/(s-2) + c T^(1-s)/(s-1))`` with
    ``T = (sqrt3/2)(radius+1) - 2c``.
    """
    if s <= 2:
        raise ValueError("hexagonal lattice sum diverges for s <= 2")
    c = 1.0 / math.sqrt(3.0)
    t = 0.5 * math.sqrt(3.0) * (radius + 1) - 2.0 * c
    if t <= 0:
        return math.inf
    return 4.0 * math.pi / math.sqrt(3.0) * (t ** (2.0 - s) / (s - 2.0) + c * t ** (1.0 - s) / (s - 1.0))


def _hexagonal_direct(s: float, radius: int, chunk: int = 256) -> float:
    m = np.arange(-radius, radius + 1, dtype=np.float64)
    rows = []
    for start in range(-radius, radius + 1, chunk):
        n = np.arange(start, min(start + chunk, radius + 1), dtype=np.float64)[:, None]
        r2 = m * m + m * n + n * n
        r2[r2 == 0] = np.inf
        rows.extend(np.sum(r2 ** (-0.5 * s), axis=1).tolist())
    return math.fsum(rows)


def hexagonal_zeta(s: float, target_error: float = 1e-10, max_radius: int = 10_000) -> LatticeSum:
    """Zeta function of the unit hexagonal lattice, summed directly over max(|m|,|n|) <= R.

    R is the smallest radius whose tail bound is below ``target_error``.
    """
    if s <= 2:
        raise ValueError(f"hexagonal_zeta requires s > 2, got {s}")
    if target_error <= 0:
        raise ValueError("target_error must be positive")
    lo, hi = 1, 1
    while hexagonal_tail_bound(s, hi) > target_error:
        lo, hi = hi, 2 * hi
        if lo > max_radius:
            raise ValueError(f"target_error {target_error:g} needs radius > {max_radius} at s={s}")
    while lo < hi:
        mid = (lo + hi) // 2
        if hexagonal_tail_bound(s, mid) > target_error:
            lo = mid + 1
        else:
            hi = mid
    radius = lo
    if radius > max_radius:
        raise ValueError(f"target_error {target_error:g} needs radius {radius} > {max_radius} at s={s}")
    return LatticeSum(_hexagonal_direct(s, radius), hexagonal_tail_bound(s, radius), radius)


def hexagonal_bound_constant(s: float, target_error: float = 1e-8, max_radius: int = 3000) -> float:
    """Hexagonal-lattice upper bound ``(sqrt3/2)^(s/2) zeta_L(s)`` for C_{s,2}.

    The tail bound is added to the truncated sum, so the result stays an upper
    bound even when ``target_error`` cannot be met within ``max_radius``.
    """
    try:
        z = hexagonal_zeta(s, target_error, max_radius=max_radius)
        total = z.value + z.error_bound
    except ValueError:
        if s <= 2:
            raise
        total = _hexagonal_direct(s, max_radius) + hexagonal_tail_bound(s, max_radius)
    return (0.5 * math.sqrt(3.0)) ** (0.5 * s) * total


def cube_lattice_zeta(s: float, d: int, terms: int = 100_000) -> LatticeSum:
    """K = sum over nonzero k in Z^d of ||k||_inf^-s, summed shell by shell.

    Shell j holds (2j+1)^d - (2j-1)^d <= 2d (3j)^(d-1) vectors, which gives the
    tail bound ``2d 3^(d-1) J^(d-s) / (s-d)`` after J shells.
    """
    if s <= d:
        raise ValueError("cube lattice sum diverges for s <= d")
    j = np.arange(1, terms + 1, dtype=np.float64)
    shells = (2 * j + 1) ** d - (2 * j - 1) ** d
    partial = math.fsum((shells * j ** -s).tolist())
    tail = 2 * d * 3.0 ** (d - 1) * terms ** (d - s) / (s - d)
    return LatticeSum(partial, tail, terms)


def tiling_constant(s: float, d: int) -> float:
    """C = 3^d + 2^s K of the self-similar tiling inequality, with K rounded up by its tail bound."""
    k = cube_lattice_zeta(s, d)
    return 3.0 ** d + 2.0 ** s * (k.value + k.error_bound)


def cube_lower_constant(s: float, d: int) -> float:
    """C0 = C^(s/d) 2^-s with C = 2^-d |B^d|: E_s(U^d, N) >= C0 N^(1+s/d) for any N points."""
    c = 0.5 ** d * ball_volume(d)
    return c ** (s / d) * 2.0 ** -s


@dataclass
class TheoreticalLimit:
    s: float
    d: int
    measure: float
    kind: str  # exact_sd | exact_d1 | bound_hex | unknown
    value: float | None
    bound: float | None
    description: str

    @property
    def reference(self) -> float | None:
        """The number a finite-N study is compared against (value, else bound)."""
        return self.value if self.value is not None else self.bound

    def to_dict(self) -> dict:
        return asdict(self)


def theoretical_limit(params, manifold) -> TheoreticalLimit:
    """Limit (or best known bound) of E_s(A, N) / tau_{s,d}(N) for the set ``manifold``."""
    s, d = float(params.s), int(params.d)
    h = float(manifold.hausdorff_measure)
    if h <= 0:
        raise ValueError("limit infinite: manifold has zero Hausdorff measure")
    if s == d:
        value = ball_volume(d) / h
        return TheoreticalLimit(s, d, h, "exact_sd", value, None,
                                f"|B^{d}| / H_{d}(A) = {ball_volume(d):.17g} / {h:.17g}")
    if d == 1 and s > 1:
        value = 2.0 * riemann_zeta(s) / h ** s
        return TheoreticalLimit(s, d, h, "exact_d1", value, None,
                                f"2 zeta({s:g}) / H_1(A)^{s:g}")
    if d == 2 and s > 2:
        bound = hexagonal_bound_constant(s) / h ** (0.5 * s)
        return TheoreticalLimit(s, d, h, "bound_hex", None, bound,
                                f"upper bound (sqrt3/2)^({s:g}/2) zeta_L({s:g}) / H_2(A)^({s:g}/2)")
    return TheoreticalLimit(s, d, h, "unknown", None, None,
                            f"C_{{{s:g},{d}}} / H_{d}(A)^({s:g}/{d}) with C_{{s,d}} unknown")


def predict_split(measure_a: float, measure_b: float) -> float:
    """Limiting fraction of optimal points on A when A and B are well separated."""
    if measure_a < 0 or measure_b < 0:
        raise ValueError("measures must be nonnegative")
    if measure_a == 0 and measure_b == 0:
        raise ValueError("both measures are zero")
    return measure_a / (measure_a + measure_b)
