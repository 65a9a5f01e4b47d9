"""Constructive initial configurations and projected-gradient energy minimization."""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .constants import ball_volume
from .energy import (DuplicatePointsError, EnergyReport, RieszParams, energy_report,
                     riesz_energy, riesz_gradient)
from .manifold import (ManifoldSpec, PointConfiguration, _block_box, _torus_tube_angles, atlas_points,
                       locate_charts, on_manifold, project_to_manifold, sample_uniform, tangent_project)

__all__ = [
    "OptimizerOptions",
    "OptimizeResult",
    "init_lattice_cube",
    "init_lattice_ball",
    "tile_cube_configuration",
    "initial_configuration",
    "optimize_config",
    "best_of_restarts",
]

INIT_STRATEGIES = ("random", "lattice", "tiled", "file")


@dataclass
class OptimizerOptions:
    max_iterations: int = 500
    gradient_tolerance: float | None = None  # absolute sup-norm of the admissible gradient
    relative_tolerance: float = 1e-6  # used when gradient_tolerance is None, see optimize_config
    shrink: float = 0.5
    sufficient_decrease: float = 1e-4
    initial_step: float | None = None  # default 1 / (s N^(2/d))
    energy_tolerance: float = 1e-12  # relative energy drop over stall_window iterations; 0 disables
    stall_window: int = 50
    restarts: int = 1
    seed: int = 0
    jitter: float = 0.25  # perturbation of deterministic starts for restarts > 0, in units of spacing

    def __post_init__(self):
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if self.gradient_tolerance is not None and not self.gradient_tolerance > 0:
            raise ValueError("gradient_tolerance must be positive")
        if not self.relative_tolerance > 0:
            raise ValueError("relative_tolerance must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink factor must lie in (0, 1)")
        if not 0 < self.sufficient_decrease <= 0.5:
            raise ValueError("sufficient-decrease constant must lie in (0, 0.5]")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class OptimizeResult:
    config: PointConfiguration
    report: EnergyReport
    iterations: int
    converged: bool
    status: str
    energy_trace: list
    gradient_norm: float  # sup-norm of the admissible gradient at the final iterate
    tolerance: float  # the gradient tolerance in force at the final iterate
    restart_energies: list = field(default_factory=list)

    @property
    def energy(self) -> float:
        return self.report.energy


# --------------------------------------------------------------------------- constructions

def _cube_lattice_indices(d: int, m: int):
    """Index vectors of {0..m}^d: the block {0..m-1}^d first, then the rest, each lexicographic."""
    inner = list(itertools.product(range(m), repeat=d))
    outer = [j for j in itertools.product(range(m + 1), repeat=d) if max(j) == m]
    return inner + outer


def init_lattice_cube(d: int, n: int) -> PointConfiguration:
    """n points of (Z^d / m) in the unit cube, m the largest integer with m^d <= n."""
    if n < 1:
        raise ValueError("need n >= 1")
    m = max(1, int(round(n ** (1.0 / d))))
    while m ** d > n:
        m -= 1
    while (m + 1) ** d <= n:
        m += 1
    idx = np.array(_cube_lattice_indices(d, m)[:n], dtype=np.float64)
    return PointConfiguration(idx / m, manifold=f"cube:{d}", generator=f"lattice-cube(m={m})")


def ball_lattice_size(d: int, n: int) -> int:
    return math.ceil((n / ball_volume(d)) ** (1.0 / d) + math.sqrt(d))


def ball_lattice(d: int, m: int) -> np.ndarray:
    """All points of (Z^d / m) in the closed unit ball, lexicographic in the integer coordinates."""
    idx = np.array(list(itertools.product(range(-m, m + 1), repeat=d)), dtype=np.int64)
    return idx[np.sum(idx * idx, axis=1) <= m * m] / m


def init_lattice_ball(d: int, n: int) -> PointConfiguration:
    """Lexicographic prefix of (Z^d / m) in the unit ball with m = ceil((n/|B^d|)^(1/d) + sqrt d)."""
    if n < 2:
        raise ValueError("need n >= 2")
    m = ball_lattice_size(d, n)
    pts = ball_lattice(d, m)
    if len(pts) < n:  # cannot happen for the m above; guards rounding in ball_volume
        raise RuntimeError(f"lattice of size {m} holds only {len(pts)} points")
    return PointConfiguration(pts[:n], manifold=f"ball:{d}:1.0", generator=f"lattice-ball(m={m})")


def tile_cube_configuration(base: PointConfiguration, m: int, gamma: float) -> PointConfiguration:
    """Place a gamma-scaled copy of ``base`` at the centre of each of the m^d subcubes of side 1/m.

    Copies are ordered lexicographically by subcube index.
    """
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    if m < 1 or int(m) != m:
        raise ValueError("m must be a positive integer")
    x = base.points
    if np.any(x < 0) or np.any(x > 1):
        raise ValueError("base configuration must lie in the unit cube")
    d = x.shape[1]
    shrunk = gamma * x + 0.5 * (1.0 - gamma)
    copies = [(shrunk + np.array(i, dtype=np.float64)) / m for i in itertools.product(range(m), repeat=d)]
    return PointConfiguration(np.vstack(copies), manifold=f"cube:{d}", s=base.s,
                              generator=f"tiled(m={m},gamma={gamma!r})", seed=base.seed)


def _fibonacci_sphere(n):
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    phi = math.pi * (1.0 + math.sqrt(5.0)) * i
    r = np.sqrt(1.0 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def _fibonacci_torus(n, major, minor):
    # golden-ratio sequence in the tube angle, pushed through the area-weighted inverse CDF
    golden = 0.5 * (math.sqrt(5.0) - 1.0)
    theta = _torus_tube_angles((np.arange(n) * golden + 0.5 / n) % 1.0, major, minor)
    phi = 2 * math.pi * (np.arange(n) + 0.5) / n
    ring = major + minor * np.cos(theta)
    return np.stack([ring * np.cos(phi), ring * np.sin(phi), minor * np.sin(theta)], axis=1)


def _largest_remainder(weights, n):
    share = np.asarray(weights, dtype=np.float64) / np.sum(weights) * n
    counts = np.floor(share).astype(int)
    order = np.argsort(-(share - counts), kind="stable")
    counts[order[: n - counts.sum()]] += 1
    return counts


def _lattice(m: ManifoldSpec, n: int, counts=None):
    p = m.p
    if m.kind == "cube":
        return init_lattice_cube(m.intrinsic_dim, n).points, None, None
    if m.kind == "interval":
        return init_lattice_cube(1, n).points * p["length"], None, None
    if m.kind == "ball":
        return init_lattice_ball(m.intrinsic_dim, n).points * p["radius"], None, None
    if m.kind == "sphere" and m.intrinsic_dim == 1:
        t = 2 * math.pi * np.arange(n) / n
        return np.stack([np.cos(t), np.sin(t)], axis=1), None, None
    if m.kind == "sphere" and m.intrinsic_dim == 2:
        return _fibonacci_sphere(n), None, None
    if m.kind == "torus":
        return _fibonacci_torus(n, p["R"], p["r"]), None, None
    if m.kind == "atlas":
        if counts is None:
            counts = _largest_remainder([c.measure for c in m.charts], n)
        index = np.repeat(np.arange(len(m.charts)), counts)
        params = np.zeros((n, m.intrinsic_dim))
        for k, chart in enumerate(m.charts):
            if counts[k]:
                unit = init_lattice_cube(chart.dim, int(counts[k])).points
                params[index == k] = chart.lower + unit * (chart.upper - chart.lower)
        return atlas_points(m, index, params), index, params
    return None


def _perturb(m: ManifoldSpec, points, index, params, amount, rng):
    if amount <= 0:
        return points, index, params
    spacing = (m.hausdorff_measure / len(points)) ** (1.0 / m.intrinsic_dim)
    if m.kind == "atlas":
        params = params + amount * spacing * rng.standard_normal(params.shape)
        lo = np.array([m.charts[k].lower for k in index])
        hi = np.array([m.charts[k].upper for k in index])
        params = np.clip(params, lo, hi)
        return atlas_points(m, index, params), index, params
    moved = points + amount * spacing * rng.standard_normal(points.shape)
    return project_to_manifold(moved, m), index, params


def initial_configuration(m: ManifoldSpec, n: int, strategy="lattice", seed: int = 0,
                          perturb: float = 0.0, counts=None, params: RieszParams | None = None
                          ) -> PointConfiguration:
    """Starting configuration for the optimizer.

    ``lattice`` uses the deterministic construction of the manifold kind (cube and
    ball lattices, equal spacing on the circle, Fibonacci spirals on S^2 and the torus, chart-wise
    lattices on atlases) and falls back to uniform sampling elsewhere. ``tiled``
    (cubes only) tiles an optimized smaller configuration. ``perturb`` > 0 jitters
    the start by that fraction of the typical spacing, seeded by ``seed``.
    """
    rng = np.random.default_rng(seed)
    if isinstance(strategy, PointConfiguration):
        pts = strategy.points
        if strategy.N != n:
            raise ValueError(f"initial configuration has {strategy.N} points, expected {n}")
        if m.kind == "atlas":
            index, prm = locate_charts(pts, m)
            pts = atlas_points(m, index, prm)
        else:
            index, prm = None, None
            pts = project_to_manifold(pts, m)
        gen = "file"
    elif strategy == "random":
        cfg = sample_uniform(m, n, seed)
        pts, index, prm, gen = cfg.points, cfg.chart_index, cfg.chart_params, "random"
    elif strategy == "lattice":
        built = _lattice(m, n, counts)
        if built is None:
            cfg = sample_uniform(m, n, seed)
            built = cfg.points, cfg.chart_index, cfg.chart_params
        (pts, index, prm), gen = built, "lattice"
    elif strategy == "tiled":
        pts, index, prm = _tiled_start(m, n, params, seed), None, None
        gen = "tiled"
    else:
        raise ValueError(f"unknown init strategy {strategy!r}; expected one of {INIT_STRATEGIES}")
    pts, index, prm = _perturb(m, pts, index, prm, perturb, rng)
    return PointConfiguration(pts, manifold=str(m), s=params.s if params else None, generator=gen,
                              seed=seed, chart_index=index, chart_params=prm)


def _tiled_start(m: ManifoldSpec, n: int, params: RieszParams | None, seed: int):
    if m.kind != "cube":
        raise ValueError("tiled initialization is only defined on cubes")
    if params is None:
        raise ValueError("tiled initialization needs Riesz parameters")
    d = m.intrinsic_dim
    k = max((k for k in range(2, n + 1) if n % k ** d == 0 and n // k ** d >= 2), default=None)
    if k is None:
        raise ValueError(f"tiled initialization needs N = k^d * N0 with k >= 2, N0 >= 2 (N={n}, d={d})")
    n0 = n // k ** d
    base = optimize_config(m, n0, params, "lattice", OptimizerOptions(max_iterations=200, seed=seed))
    root = n0 ** (1.0 / d)
    return tile_cube_configuration(base.config, k, root / (root + 1.0)).points


# --------------------------------------------------------------------------- descent

class _Primitive:
    def __init__(self, m, s):
        self.m, self.s = m, s

    def start(self, config):
        return config.points.copy()

    def points(self, x):
        return x

    def gradient(self, x):
        return riesz_gradient(x, self.s)

    def direction(self, x, g):
        return tangent_project(-g, x, self.m)

    def retract(self, x):
        return project_to_manifold(x, self.m)

    def finish(self, x, config):
        return config.replace(points=x)


class _Atlas:
    def __init__(self, m, s):
        self.m, self.s = m, s

    def start(self, config):
        if config.chart_index is None:
            self.index, u = locate_charts(config.points, self.m)
        else:
            self.index, u = np.asarray(config.chart_index), np.asarray(config.chart_params, dtype=np.float64)
        self.lo = np.array([self.m.charts[k].lower for k in self.index])
        self.hi = np.array([self.m.charts[k].upper for k in self.index])
        return np.clip(u, self.lo, self.hi)

    def points(self, u):
        return atlas_points(self.m, self.index, u)

    def gradient(self, u):
        gx = riesz_gradient(self.points(u), self.s)
        gu = np.zeros_like(u)
        for k, chart in enumerate(self.m.charts):
            sel = self.index == k
            if np.any(sel):
                _, jac = chart.evaluate(u[sel])
                gu[sel] = np.einsum("nkd,nk->nd", jac, gx[sel, :chart.ambient_dim])
        return gu

    def direction(self, u, g):
        return _block_box(-g, u, self.lo, self.hi)

    def retract(self, u):
        return np.clip(u, self.lo, self.hi)

    def finish(self, u, config):
        return config.replace(points=self.points(u), chart_index=self.index.copy(), chart_params=u)


def _energy_or_inf(points, s):
    try:
        return riesz_energy(points, s, exact=False)
    except DuplicatePointsError:
        return math.inf


def optimize_config(m: ManifoldSpec, n: int, params: RieszParams, init="lattice",
                    opts: OptimizerOptions | None = None, counts=None, perturb: float = 0.0
                    ) -> OptimizeResult:
    """Projected-gradient descent with Armijo backtracking from one starting configuration.

    The step direction is the admissible part of minus the gradient (chart-parameter
    gradient pulled back through the Jacobian on atlases); candidates are mapped back
    onto the manifold and accepted only on sufficient decrease, so the energy trace
    is strictly decreasing. Stops when the direction's largest per-point norm falls
    below ``gradient_tolerance`` (or, when that is unset, below ``relative_tolerance``
    times the natural scale s (E/N) / spacing with spacing (H_d/N)^(1/d)), when the
    energy stalls, after ``max_iterations``, or when the step collapses.
    """
    opts = opts or OptimizerOptions()
    if n < 2:
        raise ValueError("optimization needs N >= 2")
    if params.d != m.intrinsic_dim:
        raise ValueError(f"Riesz parameter d={params.d} does not match manifold dimension {m.intrinsic_dim}")
    if isinstance(init, PointConfiguration) and init.N != n:
        raise ValueError(f"initial configuration has {init.N} points, expected {n}")
    start = init if isinstance(init, PointConfiguration) and perturb == 0 else \
        initial_configuration(m, n, init, opts.seed, perturb, counts, params)
    problem = _Atlas(m, params.s) if m.kind == "atlas" else _Primitive(m, params.s)
    x = problem.start(start)
    if m.kind != "atlas":
        x = problem.retract(x)
    energy = riesz_energy(problem.points(x), params.s, exact=False)  # raises on duplicate start points
    trace = [energy]
    spacing = (m.hausdorff_measure / n) ** (1.0 / params.d)
    alpha = opts.initial_step or 1.0 / (params.s * n ** (2.0 / params.d))
    status, converged, gnorm, tol, it = "max-iterations", False, math.inf, math.nan, 0
    for it in range(opts.max_iterations + 1):
        g = problem.gradient(x)
        step = problem.direction(x, g)
        gnorm = float(np.max(np.linalg.norm(step, axis=1)))
        tol = opts.gradient_tolerance or opts.relative_tolerance * params.s * energy / n / spacing
        if gnorm <= tol:
            status, converged = "converged", True
            break
        if it == opts.max_iterations:
            break
        while True:
            cand = problem.retract(x + alpha * step)
            e_new = _energy_or_inf(problem.points(cand), params.s)
            model = -float(np.sum(step * (cand - x)))  # first-order change along the admissible direction
            if e_new < energy and e_new <= energy + opts.sufficient_decrease * model:
                break
            alpha *= opts.shrink
            if alpha * gnorm < 1e-16:
                status = "step-collapse"
                break
        if status == "step-collapse":
            break
        x, energy = cand, e_new
        trace.append(energy)
        alpha /= opts.shrink
        w = opts.stall_window
        if opts.energy_tolerance > 0 and len(trace) > w and trace[-w - 1] - energy <= opts.energy_tolerance * energy:
            status = "stalled"
            it += 1
            break
    config = problem.finish(x, start)
    config.s = params.s
    config.manifold = str(m)
    if not np.all(on_manifold(config.points, m)):
        raise RuntimeError("optimizer left the manifold")
    return OptimizeResult(config, energy_report(config, params), it, converged, status, trace, gnorm, tol)


def _restart(job):
    m, n, params, init, opts, counts, k = job
    run_opts = OptimizerOptions(**{**opts.to_dict(), "seed": opts.seed + k})
    deterministic = isinstance(init, PointConfiguration) or init in ("lattice", "tiled")
    perturb = opts.jitter if (deterministic and k > 0) else 0.0
    return optimize_config(m, n, params, init, run_opts, counts, perturb)


def best_of_restarts(m: ManifoldSpec, n: int, params: RieszParams, opts: OptimizerOptions | None = None,
                     init="lattice", jobs: int = 1, counts=None) -> OptimizeResult:
    """Run ``opts.restarts`` optimizations with seeds seed, seed+1, ... and keep the lowest energy.

    Deterministic starts (lattice, tiled, file) are jittered for every restart after the first.
    """
    opts = opts or OptimizerOptions()
    jobs_list = [(m, n, params, init, opts, counts, k) for k in range(opts.restarts)]
    if jobs > 1 and len(jobs_list) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(jobs_list))) as pool:
            results = list(pool.map(_restart, jobs_list))
    else:
        results = [_restart(job) for job in jobs_list]
    best = min(results, key=lambda r: r.energy)  # first minimum wins ties, i.e. lowest seed
    best.restart_energies = [r.energy for r in results]
    return best
