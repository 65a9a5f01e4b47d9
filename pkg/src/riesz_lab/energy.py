"""Riesz s-energy, its gradient and nearest-neighbour statistics.

Energies are sums over ordered pairs, so every unordered pair is counted
twice. The pair terms are reduced with ``math.fsum``, which returns the
correctly rounded sum; the result therefore does not depend on block size,
point order or worker count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

__all__ = [
    "DuplicatePointsError",
    "RieszParams",
    "EnergyReport",
    "riesz_energy",
    "riesz_gradient",
    "tau",
    "nearest_neighbor_distances",
    "energy_report",
    "nearest_neighbor_bound",
]

# pair-matrix entries per block
_BLOCK_ENTRIES = 1 << 21


class DuplicatePointsError(ValueError):
    """Raised when two points of a configuration coincide (the energy would be infinite)."""

    def __init__(self, msg="infinite energy: duplicate points"):
        super().__init__(msg)


@dataclass(frozen=True)
class RieszParams:
    s: float
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("intrinsic dimension d must be >= 1")
        if not self.s >= self.d:
            raise ValueError(f"only s >= d is supported (s={self.s}, d={self.d})")

    @property
    def regime(self) -> str:
        return "s=d" if self.s == self.d else "s>d"


def _points(config) -> np.ndarray:
    pts = getattr(config, "points", config)
    return np.atleast_2d(np.asarray(pts, dtype=np.float64))


def _sq_dist(a, b):
    # fixed coordinate order so a pair's distance never depends on where it was computed
    sq = (a[:, None, 0] - b[None, :, 0]) ** 2
    for k in range(1, a.shape[1]):
        sq = sq + (a[:, None, k] - b[None, :, k]) ** 2
    return sq


def _row_blocks(n, width):
    step = max(1, _BLOCK_ENTRIES // max(width, 1))
    for start in range(0, n, step):
        yield start, min(n, start + step)


def riesz_energy(config, s: float, exact: bool = True) -> float:
    """E_s = sum over ordered pairs i != j of |x_i - x_j|^-s; 0 for fewer than two points.

    ``exact=False`` swaps the correctly rounded sum for numpy's pairwise summation:
    several times faster, deterministic for a fixed point order, but no longer
    exactly permutation invariant.
    """
    total = math.fsum if exact else np.sum
    x = _points(config)
    n = len(x)
    if n < 2:
        return 0.0
    if n * (n - 1) // 2 <= _BLOCK_ENTRIES * 4:
        dist = pdist(x)
        if np.any(dist == 0.0):
            raise DuplicatePointsError()
        return 2.0 * float(total(dist ** -s))
    terms = []
    for a, b in _row_blocks(n, n):
        sq = _sq_dist(x[a:b], x[a:])
        iu = np.triu_indices(b - a, 1, sq.shape[1])
        upper = sq[iu]
        if np.any(upper == 0.0):
            raise DuplicatePointsError()
        terms.append(np.sqrt(upper) ** -s)  # same rounding as the pdist path
    return 2.0 * float(total(np.concatenate(terms)))


def riesz_gradient(config, s: float) -> np.ndarray:
    """Gradient of :func:`riesz_energy` with respect to every point, shape (N, d')."""
    x = _points(config)
    n = len(x)
    grad = np.zeros_like(x)
    if n < 2:
        return grad
    for a, b in _row_blocks(n, n):
        sq = _sq_dist(x[a:b], x)
        rows = np.arange(b - a)
        sq[rows, rows + a] = np.inf
        if np.any(sq == 0.0):
            raise DuplicatePointsError()
        w = sq ** (-0.5 * s - 1.0)
        for k in range(x.shape[1]):
            grad[a:b, k] = -2.0 * s * np.sum(w * (x[a:b, None, k] - x[None, :, k]), axis=1)
    return grad


def tau(n: int, params: RieszParams) -> float:
    """Normalizing sequence: N^(1+s/d) for s > d, N^2 ln N for s = d."""
    if params.s == params.d:
        if n < 2:
            raise ValueError("tau for s = d needs N >= 2")
        return float(n) ** 2 * math.log(n)
    return float(n) ** (1.0 + params.s / params.d)


def nearest_neighbor_distances(config) -> np.ndarray:
    """r_i = min over j != i of |x_i - x_j|."""
    x = _points(config)
    if len(x) < 2:
        raise ValueError("nearest neighbours need at least two points")
    dist, _ = cKDTree(x).query(x, k=2)
    if np.any(dist[:, 1] == 0):
        raise DuplicatePointsError()
    return dist[:, 1]


@dataclass
class EnergyReport:
    N: int
    s: float
    d: int
    energy: float
    tau: float
    normalized: float
    min_separation: float
    nearest_neighbor_distances: np.ndarray

    def to_dict(self, with_distances: bool = True) -> dict:
        out = asdict(self)
        out["nearest_neighbor_distances"] = (
            self.nearest_neighbor_distances.tolist() if with_distances else None)
        return out


def energy_report(config, params: RieszParams) -> EnergyReport:
    x = _points(config)
    n = len(x)
    if n < 2:
        raise ValueError("energy_report needs N >= 2")
    energy = riesz_energy(x, params.s)
    t = tau(n, params)
    r = nearest_neighbor_distances(x)
    return EnergyReport(n, float(params.s), int(params.d), energy, t, energy / t, float(r.min()), r)


def nearest_neighbor_bound(r, s: float, d: int) -> float:
    """Energy lower bound N (N / sum r_i^d)^(s/d) valid for any configuration with gaps r_i."""
    r = np.asarray(r, dtype=np.float64)
    n = len(r)
    return n * (n / math.fsum((r ** d).tolist())) ** (s / d)
