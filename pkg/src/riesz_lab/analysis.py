"""Scaling-law fits, equidistribution counts, separation statistics and split fractions."""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.spatial import cKDTree

from .constants import TheoreticalLimit, cube_lower_constant, predict_split, theoretical_limit
from .energy import RieszParams, tau
from .manifold import ManifoldSpec, locate_charts
from .optimize import OptimizerOptions, best_of_restarts, init_lattice_cube

__all__ = [
    "ScalingRow",
    "ScalingStudyResult",
    "EquidistReport",
    "SeparationReport",
    "SplitReport",
    "scaling_study",
    "scaling_from_energies",
    "equidist_test",
    "separation_study",
    "split_fraction_test",
    "CSV_HEADER",
]

CSV_HEADER = ["N", "energy", "tau", "normalized", "min_sep", "scaled_sep", "restarts", "seed", "runtime_s"]


def scaled_separation(n: int, delta: float, params: RieszParams) -> float:
    """delta N^(1/d) for s > d, delta (N ln N)^(1/d) for s = d."""
    base = n * math.log(n) if params.s == params.d else n
    return delta * base ** (1.0 / params.d)


# --------------------------------------------------------------------------- scaling

@dataclass
class ScalingRow:
    N: int
    energy: float
    tau: float
    normalized: float
    min_sep: float | None
    scaled_sep: float | None
    restarts: int = 1
    seed: int = 0
    runtime_s: float = 0.0


@dataclass
class ScalingStudyResult:
    manifold: str
    s: float
    d: int
    rows: list
    exponent: float | None  # least-squares slope of log E on log N (s > d only)
    constant: float  # exp(intercept) for s > d, normalized energy at the largest N for s = d
    limit: TheoreticalLimit
    lower_bound: float | None = None  # C0 of the cube lower estimate, cube manifolds only

    def __post_init__(self):
        ns = [r.N for r in self.rows]
        if len(ns) < 3:
            raise ValueError("a scaling study needs at least three values of N")
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("N values must be strictly increasing")
        if any(not r.normalized > 0 for r in self.rows):
            raise ValueError("normalized energies must be positive")

    @property
    def normalized(self) -> list:
        return [r.normalized for r in self.rows]

    @property
    def expected_exponent(self) -> float | None:
        return None if self.s == self.d else 1.0 + self.s / self.d

    @property
    def relative_gap(self) -> float | None:
        """(G(N_max) - reference) / reference, reference being the limit or its upper bound."""
        ref = self.limit.reference
        return None if ref is None else (self.rows[-1].normalized - ref) / ref

    @property
    def is_increasing(self) -> bool:
        g = self.normalized
        return all(b > a for a, b in zip(g, g[1:]))

    def gap_decreasing(self, last: int = 3) -> bool | None:
        """True when |G - reference| strictly decreases over the ``last`` largest N."""
        ref = self.limit.reference
        if ref is None:
            return None
        gaps = [abs(g - ref) for g in self.normalized[-last:]]
        return all(b < a for a, b in zip(gaps, gaps[1:]))

    def lower_bound_ok(self) -> list | None:
        if self.lower_bound is None:
            return None
        return [r.normalized >= self.lower_bound for r in self.rows]

    def to_dict(self) -> dict:
        return {
            "manifold": self.manifold, "s": self.s, "d": self.d,
            "rows": [asdict(r) for r in self.rows],
            "exponent": self.exponent, "expected_exponent": self.expected_exponent,
            "constant": self.constant, "limit": self.limit.to_dict(),
            "relative_gap": self.relative_gap, "is_increasing": self.is_increasing,
            "gap_decreasing": self.gap_decreasing(), "lower_bound": self.lower_bound,
            "lower_bound_ok": self.lower_bound_ok(),
            "tolerance_note": "finite-N tolerances are engineering choices; the limits carry no rate",
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in self.rows:
            writer.writerow([_fmt(getattr(r, k)) for k in CSV_HEADER])
        return buf.getvalue()


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def scaling_from_energies(m: ManifoldSpec, params: RieszParams, ns, energies, min_seps=None,
                          restarts: int = 1, seed: int = 0, runtimes=None) -> ScalingStudyResult:
    """Fit a scaling study from already computed energies (no optimization)."""
    ns = [int(n) for n in ns]
    energies = [float(e) for e in energies]
    if len(ns) != len(energies):
        raise ValueError("N list and energy list differ in length")
    if any(not e > 0 for e in energies):
        raise ValueError("energies must be positive")
    min_seps = list(min_seps) if min_seps is not None else [None] * len(ns)
    runtimes = list(runtimes) if runtimes is not None else [0.0] * len(ns)
    rows = []
    for n, e, delta, rt in zip(ns, energies, min_seps, runtimes):
        t = tau(n, params)
        scaled = None if delta is None else scaled_separation(n, delta, params)
        rows.append(ScalingRow(n, e, t, e / t, delta, scaled, restarts, seed, rt))
    if params.s == params.d:
        exponent, constant = None, rows[-1].normalized if rows else math.nan
    else:
        slope, intercept = np.polyfit(np.log(ns), np.log(energies), 1)
        exponent, constant = float(slope), float(math.exp(intercept))
    lower = cube_lower_constant(params.s, params.d) if m.kind == "cube" and params.s > params.d else None
    return ScalingStudyResult(str(m), float(params.s), int(params.d), rows, exponent, constant,
                              theoretical_limit(params, m), lower)


def _study_point(job):
    m, n, params, opts, init, timing = job
    start = time.perf_counter()
    res = best_of_restarts(m, n, params, opts, init)
    elapsed = time.perf_counter() - start if timing else 0.0
    return res, elapsed


def scaling_study(m: ManifoldSpec, params: RieszParams, n_list, opts: OptimizerOptions | None = None,
                  init="lattice", jobs: int = 1, timing: bool = False, keep_configs: bool = False):
    """Optimize every N (best of ``opts.restarts``) and fit the scaling law.

    Runs for different N are independent and may use ``jobs`` worker processes;
    results are collected in N order. ``runtime_s`` is recorded only when
    ``timing`` is set, so output is reproducible by default. With ``keep_configs``
    the optimized configurations are returned alongside the study.
    """
    opts = opts or OptimizerOptions()
    n_list = [int(n) for n in n_list]
    if len(n_list) < 3:
        raise ValueError("a scaling study needs at least three values of N")
    work = [(m, n, params, opts, init, timing) for n in n_list]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(work))) as pool:
            out = list(pool.map(_study_point, work))
    else:
        out = [_study_point(w) for w in work]
    study = scaling_from_energies(m, params, n_list, [r.energy for r, _ in out],
                                  [r.report.min_separation for r, _ in out],
                                  opts.restarts, opts.seed, [t for _, t in out])
    if keep_configs:
        return study, [r.config for r, _ in out]
    return study


# --------------------------------------------------------------------------- equidistribution

@dataclass
class EquidistReport:
    partition: str
    cells: list
    counts: list
    expected: list  # H_d(cell) / H_d(A)
    discrepancy: float
    standardized: list  # (count - N p) / sqrt(N p (1 - p))

    @property
    def N(self) -> int:
        return int(sum(self.counts))

    @property
    def max_standardized(self) -> float:
        return max(abs(z) for z in self.standardized)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["N"] = self.N
        return out


def _grid_index(u, k):
    # boundary points go to the lower cell, i.e. the lexicographically first one containing them
    return np.clip(np.ceil(u * k).astype(int) - 1, 0, k - 1)


def _flat(idx, k):
    out = np.zeros(len(idx), dtype=int)
    for col in range(idx.shape[1]):
        out = out * k + idx[:, col]
    return out


def _cells(x: np.ndarray, m: ManifoldSpec, cells):
    """Cell index of every point, cell names and cell measures."""
    p = m.p
    if not isinstance(cells, str):  # explicit boxes [(lo, hi), ...] on cubes and intervals
        if m.kind not in ("cube", "interval"):
            raise ValueError("explicit box cells need a cube or interval")
        boxes = [(np.atleast_1d(np.asarray(lo, float)), np.atleast_1d(np.asarray(hi, float))) for lo, hi in cells]
        index = np.full(len(x), -1)
        for j, (lo, hi) in enumerate(boxes):
            inside = np.all((x >= lo) & (x <= hi), axis=1) & (index < 0)
            index[inside] = j
        if np.any(index < 0):
            raise ValueError("invalid partition: some points lie in no cell")
        measures = [float(np.prod(hi - lo)) for lo, hi in boxes]
        names = [f"[{lo.tolist()}, {hi.tolist()}]" for lo, hi in boxes]
        return index, names, measures
    kind, _, arg = cells.partition(":")
    k = int(arg) if arg else None
    if k is not None and k < 1:
        raise ValueError("cell count must be >= 1")
    d = m.intrinsic_dim
    if m.kind in ("cube", "interval") and kind in ("grid", "quadrants"):
        k = 2 if kind == "quadrants" else k
        if k is None:
            raise ValueError("grid cells need a size, e.g. grid:4")
        side = p["length"] if m.kind == "interval" else 1.0
        index = _flat(_grid_index(x / side, k), k)
        labels = [str(i) for i in np.ndindex(*([k] * d))]
        return index, labels, [m.hausdorff_measure / k ** d] * k ** d
    if m.kind == "sphere" and d == 1 and kind == "arcs":
        k = k or 4
        angle = np.mod(np.arctan2(x[:, 1], x[:, 0]), 2 * math.pi)
        index = _grid_index(angle / (2 * math.pi), k)
        return index, [f"arc {j}" for j in range(k)], [2 * math.pi / k] * k
    if m.kind == "sphere" and d == 2 and kind == "zones":
        # equal-height bands have equal area (Archimedes); band 0 is the south cap
        k = k or 4
        index = _grid_index((x[:, 2] + 1.0) / 2.0, k)
        return index, [f"zone {j}" for j in range(k)], [m.hausdorff_measure / k] * k
    if m.kind in ("sphere", "ball") and kind == "orthants":
        dim = x.shape[1]
        index = _flat((x > 0).astype(int), 2)  # points on a coordinate hyperplane go to the negative side
        return index, [str(i) for i in np.ndindex(*([2] * dim))], [m.hausdorff_measure / 2 ** dim] * 2 ** dim
    if m.kind == "torus" and kind == "tube-halves":
        major, minor = p["R"], p["r"]
        outer = np.hypot(x[:, 0], x[:, 1]) >= major  # cos(theta) >= 0
        index = np.where(outer, 0, 1)
        half = 2 * math.pi * minor * math.pi * major
        bulge = 2 * math.pi * minor * 2 * minor
        return index, ["outer", "inner"], [half + bulge, half - bulge]
    if m.kind == "torus" and kind == "sectors":
        k = k or 4
        phi = np.mod(np.arctan2(x[:, 1], x[:, 0]), 2 * math.pi)
        return _grid_index(phi / (2 * math.pi), k), [f"sector {j}" for j in range(k)], [m.hausdorff_measure / k] * k
    if m.kind == "atlas" and kind == "charts":
        index, _ = locate_charts(x, m)
        return index, [str(c) for c in m.charts], [c.measure for c in m.charts]
    raise ValueError(f"cell partition {cells!r} is not defined on {m.kind}")


def equidist_test(config, m: ManifoldSpec, cells="quadrants") -> EquidistReport:
    """Count points per cell and compare with the normalized Hausdorff measure of each cell.

    ``cells`` is one of ``quadrants`` or ``grid:k`` (cubes, intervals), ``arcs:k``
    (circle), ``zones:k`` (S^2), ``orthants`` (spheres, balls), ``tube-halves`` or
    ``sectors:k`` (torus), ``charts`` (atlas), or an explicit list of closed boxes
    ``[(lo, hi), ...]``. A point on a shared boundary counts for the first cell
    containing it in the listed (lexicographic) order.
    """
    x = np.atleast_2d(np.asarray(getattr(config, "points", config), dtype=np.float64))
    n = len(x)
    if n == 0:
        raise ValueError("empty configuration")
    index, names, measures = _cells(x, m, cells)
    total = math.fsum(measures)
    if abs(total - m.hausdorff_measure) > 1e-9 * max(1.0, m.hausdorff_measure):
        raise ValueError(f"invalid partition: cell measures sum to {total!r}, expected {m.hausdorff_measure!r}")
    probs = [mu / total for mu in measures]
    counts = np.bincount(index, minlength=len(names)).tolist()
    disc = max(abs(c / n - q) for c, q in zip(counts, probs))
    z = [(c - n * q) / math.sqrt(n * q * (1 - q)) if 0 < q < 1 else 0.0 for c, q in zip(counts, probs)]
    return EquidistReport(str(cells), names, counts, probs, disc, z)


# --------------------------------------------------------------------------- separation

@dataclass
class SeparationReport:
    s: float
    d: int
    N: list
    separations: list
    scaled: list
    constant: float  # min of the scaled statistic
    violation: bool  # scaled statistic fell below half its value within a decade of N

    def to_dict(self) -> dict:
        return asdict(self)


def separation_study(pairs, params: RieszParams) -> SeparationReport:
    """Scaled minimal separation across N from (N, delta_N) pairs or objects carrying them.

    Accepts tuples, :class:`ScalingRow`, energy reports or optimizer results.
    """
    ns, deltas = [], []
    for item in pairs:
        if isinstance(item, tuple):
            n, delta = item
        elif hasattr(item, "min_sep"):
            n, delta = item.N, item.min_sep
        else:
            report = getattr(item, "report", item)
            n, delta = report.N, report.min_separation
        if not delta > 0:
            raise ValueError(f"separation must be positive (N={n})")
        ns.append(int(n))
        deltas.append(float(delta))
    order = np.argsort(ns, kind="stable")
    ns = [ns[i] for i in order]
    deltas = [deltas[i] for i in order]
    scaled = [scaled_separation(n, dl, params) for n, dl in zip(ns, deltas)]
    violation = any(scaled[j] < 0.5 * scaled[i]
                    for i in range(len(ns)) for j in range(i + 1, len(ns)) if ns[j] <= 10 * ns[i])
    return SeparationReport(float(params.s), int(params.d), ns, deltas, scaled, min(scaled), violation)


# --------------------------------------------------------------------------- split fraction

@dataclass
class SplitReport:
    N: int
    n_a: int
    observed: float
    predicted: float
    energy: float
    energies: dict = field(default_factory=dict)  # n_A -> best energy found

    def to_dict(self) -> dict:
        out = asdict(self)
        out["energies"] = {str(k): v for k, v in sorted(self.energies.items())}
        return out


def _chart_samples(chart, per_side=64):
    unit = init_lattice_cube(chart.dim, per_side ** chart.dim).points
    corners = np.vstack([unit, np.ones((1, chart.dim))])
    return chart.evaluate(chart.lower + corners * (chart.upper - chart.lower))[0]


def _pad(x, dim):
    return np.hstack([x, np.zeros((len(x), dim - x.shape[1]))]) if x.shape[1] < dim else x


def _part_gap(a: ManifoldSpec, b: ManifoldSpec) -> float:
    dim = max(a.ambient_dim, b.ambient_dim)
    xa = _pad(np.vstack([_chart_samples(c) for c in a.charts]), dim)
    xb = _pad(np.vstack([_chart_samples(c) for c in b.charts]), dim)
    return float(cKDTree(xb).query(xa)[0].min())


def split_fraction_test(part_a: ManifoldSpec, part_b: ManifoldSpec | None, params: RieszParams, n: int,
                        opts: OptimizerOptions | None = None, init="lattice") -> SplitReport:
    """Optimize N points on the union of two atlas parts and report the share on ``part_a``.

    The number n_A of points on A is found by an integer descent on the best
    energy E(n_A), starting from the equal split with step N/8 halved down to 1;
    each E(n_A) is an optimization with that chart allocation. The parts must be
    a positive distance apart (checked on a dense sample of each chart).
    """
    opts = opts or OptimizerOptions()
    if part_a.kind != "atlas" or (part_b is not None and part_b.kind != "atlas"):
        raise ValueError("split parts must be atlas manifolds")
    if part_b is None or part_b.hausdorff_measure == 0:
        return SplitReport(n, n, 1.0, predict_split(part_a.hausdorff_measure, 0.0), math.nan)
    gap = _part_gap(part_a, part_b)
    sample_step = max(c.measure ** (1.0 / c.dim) for c in part_a.charts + part_b.charts) / 32
    if gap <= sample_step:
        raise ValueError("parts overlap or touch; they must be a positive distance apart")
    union = ManifoldSpec.atlas(part_a.charts + part_b.charts)
    ka = len(part_a.charts)
    wa = np.array([c.measure for c in part_a.charts])
    wb = np.array([c.measure for c in part_b.charts])
    cache = {}

    def split_counts(weights, total):
        share = weights / weights.sum() * total
        counts = np.floor(share).astype(int)
        order = np.argsort(-(share - counts), kind="stable")
        counts[order[: total - counts.sum()]] += 1
        return counts

    def energy(n_a):
        if n_a not in cache:
            counts = np.concatenate([split_counts(wa, n_a), split_counts(wb, n - n_a)])
            cache[n_a] = best_of_restarts(union, n, params, opts, init, counts=counts)
        return cache[n_a].energy

    n_a = n // 2
    step = max(1, n // 8)
    while step >= 1:
        moved = False
        for cand in (n_a - step, n_a + step):
            if 1 <= cand <= n - 1 and energy(cand) < energy(n_a):
                n_a, moved = cand, True
                break
        if not moved:
            step //= 2
    energy(n_a)
    return SplitReport(n, n_a, n_a / n, predict_split(part_a.hausdorff_measure, part_b.hausdorff_measure),
                       cache[n_a].energy, {k: v.energy for k, v in cache.items()})
