"""Compact sets carrying point configurations.

Primitive kinds (interval, cube, ball, sphere, torus) have closed-form
measures, nearest-point projections and exact samplers. Atlas manifolds are
finite unions of charts taken from a small registry of parametric families
with analytic Jacobians.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .constants import ball_volume, sphere_area

__all__ = [
    "ON_MANIFOLD_TOL",
    "Chart",
    "ManifoldSpec",
    "PointConfiguration",
    "CHART_FAMILIES",
    "parse_manifold",
    "project_to_manifold",
    "tangent_project",
    "on_manifold",
    "sample_uniform",
    "stereographic_project",
    "stereographic_inverse",
    "chart_evaluate",
]

ON_MANIFOLD_TOL = 1e-12
PRIMITIVE_KINDS = ("interval", "cube", "ball", "sphere", "torus")


# --------------------------------------------------------------------------- charts

@dataclass(frozen=True)
class _Family:
    dim: int
    defaults: dict
    bounds: tuple  # names of (lo, hi) pairs, one per parameter axis


CHART_FAMILIES = {
    "helix": _Family(1, {"c": 1.0, "r": 1.0, "t0": 0.0, "t1": 2 * math.pi}, (("t0", "t1"),)),
    "circle-arc": _Family(1, {"r": 1.0, "cx": 0.0, "cy": 0.0, "t0": 0.0, "t1": math.pi},
                          (("t0", "t1"),)),
    "graph-patch": _Family(2, {"a": 1.0, "b": 1.0, "u0": -1.0, "u1": 1.0, "v0": -1.0, "v1": 1.0},
                           (("u0", "u1"), ("v0", "v1"))),
    "affine-box": _Family(2, {"dim": 2.0, "u0": 0.0, "u1": 1.0, "v0": 0.0, "v1": 1.0, "ox": 0.0, "oy": 0.0},
                          (("u0", "u1"), ("v0", "v1"))),
}


def _bounds(family, p):
    pairs = CHART_FAMILIES[family].bounds
    return pairs[:int(p["dim"])] if family == "affine-box" else pairs


@dataclass(frozen=True)
class Chart:
    """One member of a registered parametric family restricted to a parameter box.

    ``affine-box`` is the translated box ``[u0,u1] x [v0,v1] + (ox, oy)`` in the plane;
    ``graph-patch`` is the surface ``(u, v, a u^2 + b v^2)``; ``helix`` is
    ``(r cos t, r sin t, c t)``; ``circle-arc`` is ``(cx + r cos t, cy + r sin t)``.
    """

    family: str
    params: tuple  # sorted (name, value) pairs

    @classmethod
    def make(cls, family: str, **params) -> "Chart":
        if family not in CHART_FAMILIES:
            raise ValueError(f"unknown chart family {family!r}; expected one of {sorted(CHART_FAMILIES)}")
        fam = CHART_FAMILIES[family]
        unknown = set(params) - set(fam.defaults)
        if unknown:
            raise ValueError(f"unknown parameter(s) {sorted(unknown)} for chart family {family!r}")
        merged = {**fam.defaults, **{k: float(v) for k, v in params.items()}}
        if family == "affine-box" and merged["dim"] not in (1.0, 2.0):
            raise ValueError("affine-box: dim must be 1 or 2")
        for lo, hi in _bounds(family, merged):
            if not merged[hi] > merged[lo]:
                raise ValueError(f"{family}: need {hi} > {lo}")
        if family == "circle-arc" and merged["t1"] - merged["t0"] >= 2 * math.pi:
            raise ValueError("circle-arc: parameter range must be shorter than 2 pi")
        if family in ("helix", "circle-arc") and merged["r"] <= 0:
            raise ValueError(f"{family}: radius must be positive")
        return cls(family, tuple(sorted(merged.items())))

    @property
    def p(self) -> dict:
        return dict(self.params)

    @property
    def dim(self) -> int:
        if self.family == "affine-box":
            return int(self.p["dim"])
        return CHART_FAMILIES[self.family].dim

    @property
    def ambient_dim(self) -> int:
        return {"helix": 3, "circle-arc": 2, "graph-patch": 3, "affine-box": self.dim}[self.family]

    @property
    def lower(self) -> np.ndarray:
        p = self.p
        return np.array([p[lo] for lo, _ in _bounds(self.family, p)])

    @property
    def upper(self) -> np.ndarray:
        p = self.p
        return np.array([p[hi] for _, hi in _bounds(self.family, p)])

    def in_domain(self, u, tol: float = ON_MANIFOLD_TOL) -> np.ndarray:
        u = np.atleast_2d(u)
        return np.all((u >= self.lower - tol) & (u <= self.upper + tol), axis=1)

    def evaluate(self, u):
        """Vectorized chart map: ``u`` of shape (n, dim) -> points (n, D) and Jacobians (n, D, dim)."""
        u = np.atleast_2d(np.asarray(u, dtype=np.float64))
        p = self.p
        n = len(u)
        if self.family == "helix":
            t = u[:, 0]
            x = np.stack([p["r"] * np.cos(t), p["r"] * np.sin(t), p["c"] * t], axis=1)
            jac = np.stack([-p["r"] * np.sin(t), p["r"] * np.cos(t), np.full(n, p["c"])], axis=1)[:, :, None]
        elif self.family == "circle-arc":
            t = u[:, 0]
            x = np.stack([p["cx"] + p["r"] * np.cos(t), p["cy"] + p["r"] * np.sin(t)], axis=1)
            jac = np.stack([-p["r"] * np.sin(t), p["r"] * np.cos(t)], axis=1)[:, :, None]
        elif self.family == "graph-patch":
            a, b = p["a"], p["b"]
            x = np.stack([u[:, 0], u[:, 1], a * u[:, 0] ** 2 + b * u[:, 1] ** 2], axis=1)
            jac = np.zeros((n, 3, 2))
            jac[:, 0, 0] = 1.0
            jac[:, 1, 1] = 1.0
            jac[:, 2, 0] = 2 * a * u[:, 0]
            jac[:, 2, 1] = 2 * b * u[:, 1]
        else:  # affine-box
            k = self.dim
            x = u + np.array([p["ox"], p["oy"]][:k])
            jac = np.broadcast_to(np.eye(k), (n, k, k)).copy()
        return x, jac

    def inverse(self, x) -> np.ndarray:
        """Parameters of points assumed to lie on the chart image."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        p = self.p
        if self.family == "helix":
            return (x[:, 2] / p["c"])[:, None] if p["c"] != 0 else self._unwrap(np.arctan2(x[:, 1], x[:, 0]))
        if self.family == "circle-arc":
            return self._unwrap(np.arctan2(x[:, 1] - p["cy"], x[:, 0] - p["cx"]))
        if self.family == "graph-patch":
            return x[:, :2].copy()
        return x - np.array([p["ox"], p["oy"]][:self.dim])

    def _unwrap(self, angle):
        t0 = self.p["t0"]
        return (t0 + np.mod(angle - t0, 2 * math.pi))[:, None]

    @property
    def measure(self) -> float:
        p = self.p
        if self.family == "helix":
            return math.hypot(p["r"], p["c"]) * (p["t1"] - p["t0"])
        if self.family == "circle-arc":
            return p["r"] * (p["t1"] - p["t0"])
        if self.family == "affine-box":
            return float(np.prod(self.upper - self.lower))
        # graph patch: area element sqrt(1 + 4a^2u^2 + 4b^2v^2), Gauss-Legendre tensor rule
        nodes, weights = np.polynomial.legendre.leggauss(96)
        uu = 0.5 * (p["u1"] - p["u0"]) * nodes + 0.5 * (p["u1"] + p["u0"])
        vv = 0.5 * (p["v1"] - p["v0"]) * nodes + 0.5 * (p["v1"] + p["v0"])
        area = np.sqrt(1 + 4 * p["a"] ** 2 * uu[:, None] ** 2 + 4 * p["b"] ** 2 * vv[None, :] ** 2)
        return float(weights @ area @ weights) * 0.25 * (p["u1"] - p["u0"]) * (p["v1"] - p["v0"])

    def volume_element(self, u) -> np.ndarray:
        _, jac = self.evaluate(u)
        return np.sqrt(np.linalg.det(np.einsum("nki,nkj->nij", jac, jac)))

    def __str__(self):
        defaults = CHART_FAMILIES[self.family].defaults
        p = self.p
        keep = {name for pair in _bounds(self.family, p) for name in pair}
        parts = [self.family]
        for k, v in self.params:
            if self.family == "affine-box" and p["dim"] == 1 and k in ("v0", "v1", "oy"):
                continue
            if v != defaults[k] or k in keep:
                parts.append(f"{k}={v:g}" if k == "dim" else f"{k}={v!r}")
        return ":".join(parts)


def chart_evaluate(chart: Chart, u):
    """Point and Jacobian (D x dim) of one parameter point; rejects parameters outside the box."""
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    if u.shape != (chart.dim,):
        raise ValueError(f"expected {chart.dim} parameter(s), got shape {u.shape}")
    if not chart.in_domain(u)[0]:
        raise ValueError("parameter out of chart domain")
    x, jac = chart.evaluate(u[None, :])
    return x[0], jac[0]


# --------------------------------------------------------------------------- manifolds

@dataclass(frozen=True)
class ManifoldSpec:
    """A compact set A with intrinsic dimension d, ambient dimension d' and measure H_d(A)."""

    kind: str
    intrinsic_dim: int
    ambient_dim: int
    hausdorff_measure: float
    params: tuple = ()
    charts: tuple = ()

    @classmethod
    def interval(cls, length: float = 1.0) -> "ManifoldSpec":
        if length <= 0:
            raise ValueError("interval length must be positive")
        return cls("interval", 1, 1, float(length), (("length", float(length)),))

    @classmethod
    def cube(cls, d: int) -> "ManifoldSpec":
        if d < 1:
            raise ValueError("cube dimension must be >= 1")
        return cls("cube", d, d, 1.0, (("d", d),))

    @classmethod
    def ball(cls, d: int, radius: float = 1.0) -> "ManifoldSpec":
        if d < 1 or radius <= 0:
            raise ValueError("ball needs d >= 1 and positive radius")
        return cls("ball", d, d, radius ** d * ball_volume(d), (("d", d), ("radius", float(radius))))

    @classmethod
    def sphere(cls, d: int) -> "ManifoldSpec":
        if d < 1:
            raise ValueError("sphere dimension must be >= 1")
        return cls("sphere", d, d + 1, sphere_area(d), (("d", d),))

    @classmethod
    def torus(cls, major: float, minor: float) -> "ManifoldSpec":
        if not 0 < minor < major:
            raise ValueError("torus needs 0 < r < R")
        return cls("torus", 2, 3, 4 * math.pi ** 2 * major * minor,
                   (("R", float(major)), ("r", float(minor))))

    @classmethod
    def atlas(cls, charts) -> "ManifoldSpec":
        charts = tuple(charts)
        if not charts:
            raise ValueError("atlas needs at least one chart")
        dims = {c.dim for c in charts}
        if len(dims) != 1:
            raise ValueError("all charts of an atlas must share the intrinsic dimension")
        return cls("atlas", dims.pop(), max(c.ambient_dim for c in charts),
                   math.fsum(c.measure for c in charts), (), charts)

    @property
    def p(self) -> dict:
        return dict(self.params)

    @property
    def is_primitive(self) -> bool:
        return self.kind in PRIMITIVE_KINDS

    def __str__(self):
        p = self.p
        if self.kind == "interval":
            return f"interval:{p['length']!r}"
        if self.kind in ("cube", "sphere"):
            return f"{self.kind}:{p['d']}"
        if self.kind == "ball":
            return f"ball:{p['d']}:{p['radius']!r}"
        if self.kind == "torus":
            return f"torus:{p['R']!r}:{p['r']!r}"
        return "atlas:" + "+".join(str(c) for c in self.charts)


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def _num(text: str, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"bad number {text!r} for {what}") from None


def parse_manifold(text: str) -> ManifoldSpec:
    """Parse ``sphere:2``, ``cube:3``, ``ball:2:1.0``, ``interval:1.0``, ``torus:2.0:0.5`` or
    ``atlas:<family>:k=v:...[+<family>:k=v:...]``."""
    text = text.strip()
    kind, _, rest = text.partition(":")
    args = rest.split(":") if rest else []
    try:
        if kind == "atlas":
            charts = []
            for chunk in re.split(r"\+(?=[a-z])", rest):
                family, *kvs = chunk.split(":")
                params = {}
                for kv in kvs:
                    key, sep, val = kv.partition("=")
                    if not sep:
                        raise ValueError(f"chart parameter {kv!r} is not key=value")
                    params[key] = _num(val, key)
                charts.append(Chart.make(family, **params))
            return ManifoldSpec.atlas(charts)
        if kind == "interval":
            return ManifoldSpec.interval(_num(args[0], "length") if args else 1.0)
        if kind in ("cube", "sphere"):
            (d,) = args
            return getattr(ManifoldSpec, kind)(int(d))
        if kind == "ball":
            d, *radius = args
            return ManifoldSpec.ball(int(d), _num(radius[0], "radius") if radius else 1.0)
        if kind == "torus":
            major, minor = args
            return ManifoldSpec.torus(_num(major, "R"), _num(minor, "r"))
    except (ValueError, TypeError) as exc:
        raise ValueError(f"invalid manifold {text!r}: {exc}") from None
    raise ValueError(f"invalid manifold {text!r}: unknown kind {kind!r}")


# --------------------------------------------------------------------------- configurations

@dataclass
class PointConfiguration:
    """N distinct points in R^d' plus provenance.

    Atlas-based configurations also carry the chart index and chart parameter of every point.
    """

    points: np.ndarray
    manifold: str = ""
    s: float | None = None
    generator: str = ""
    seed: int | None = None
    chart_index: np.ndarray | None = None
    chart_params: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.array(self.points, dtype=np.float64, ndmin=2)
        if self.points.size == 0:
            self.points = self.points.reshape(0, self.points.shape[-1] if self.points.ndim == 2 else 1)

    @property
    def N(self) -> int:
        return len(self.points)

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    def replace(self, **changes) -> "PointConfiguration":
        fields = dict(points=self.points, manifold=self.manifold, s=self.s, generator=self.generator,
                      seed=self.seed, chart_index=self.chart_index, chart_params=self.chart_params,
                      meta=dict(self.meta))
        fields.update(changes)
        return PointConfiguration(**fields)

    def is_distinct(self) -> bool:
        return len(np.unique(self.points, axis=0)) == self.N


# --------------------------------------------------------------------------- geometry

def _as_batch(x, dim):
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim <= 1
    arr = arr.reshape(1, -1) if single else arr
    if arr.shape[1] != dim:
        raise ValueError(f"expected points in R^{dim}, got shape {np.shape(x)}")
    return arr, single


def _torus_frame(x, major):
    rho = np.hypot(x[:, 0], x[:, 1])
    if np.any(rho == 0):
        raise ValueError("ambiguous projection: point on the torus axis")
    center = np.zeros_like(x)
    center[:, 0] = major * x[:, 0] / rho
    center[:, 1] = major * x[:, 1] / rho
    off = x - center
    dist = np.linalg.norm(off, axis=1)
    if np.any(dist == 0):
        raise ValueError("ambiguous projection: point on the torus core circle")
    return center, off / dist[:, None]


def project_to_manifold(x, m: ManifoldSpec):
    """Nearest point of a primitive manifold (radial normalization, clamps, tube projection)."""
    if not m.is_primitive:
        raise ValueError("project_to_manifold needs a primitive manifold; atlas manifolds use chart parameters")
    arr, single = _as_batch(x, m.ambient_dim)
    p = m.p
    if m.kind == "sphere":
        norm = np.linalg.norm(arr, axis=1)
        if np.any(norm == 0):
            raise ValueError("ambiguous projection: origin has no nearest point on the sphere")
        out = arr / norm[:, None]
    elif m.kind == "cube":
        out = np.clip(arr, 0.0, 1.0)
    elif m.kind == "interval":
        out = np.clip(arr, 0.0, p["length"])
    elif m.kind == "ball":
        norm = np.linalg.norm(arr, axis=1)
        scale = np.where(norm > p["radius"], p["radius"] / np.where(norm > 0, norm, 1.0), 1.0)
        out = arr * scale[:, None]
    else:
        center, normal = _torus_frame(arr, p["R"])
        out = center + p["r"] * normal
    return out[0] if single else out


def tangent_project(g, x, m: ManifoldSpec):
    """Restrict a step direction ``g`` at on-manifold point ``x`` to admissible motions.

    Sphere and torus: drop the normal component. Cube, interval, ball: unchanged
    in the interior, outward components zeroed on active boundary faces.
    """
    garr, single = _as_batch(g, m.ambient_dim)
    xarr, _ = _as_batch(x, m.ambient_dim)
    garr = garr.copy()
    p = m.p
    if m.kind == "sphere":
        n = xarr / np.linalg.norm(xarr, axis=1)[:, None]
        garr -= np.sum(garr * n, axis=1)[:, None] * n
    elif m.kind == "torus":
        _, n = _torus_frame(xarr, p["R"])
        garr -= np.sum(garr * n, axis=1)[:, None] * n
    elif m.kind in ("cube", "interval"):
        hi = 1.0 if m.kind == "cube" else p["length"]
        garr = _block_box(garr, xarr, 0.0, hi)
    elif m.kind == "ball":
        norm = np.linalg.norm(xarr, axis=1)
        radial = np.sum(garr * xarr, axis=1)
        active = (norm >= p["radius"] * (1 - ON_MANIFOLD_TOL)) & (radial > 0)
        if np.any(active):
            n = xarr[active] / norm[active, None]
            garr[active] -= np.sum(garr[active] * n, axis=1)[:, None] * n
    else:
        raise ValueError("tangent_project needs a primitive manifold")
    return garr[0] if single else garr


def _block_box(v, x, lo, hi, tol=ON_MANIFOLD_TOL):
    v = v.copy()
    v[(x <= lo + tol) & (v < 0)] = 0.0
    v[(x >= hi - tol) & (v > 0)] = 0.0
    return v


def on_manifold(x, m: ManifoldSpec, tol: float = ON_MANIFOLD_TOL) -> np.ndarray:
    """Boolean membership test per point, to absolute tolerance ``tol``."""
    arr, _ = _as_batch(x, m.ambient_dim)
    p = m.p
    if m.kind == "sphere":
        return np.abs(np.linalg.norm(arr, axis=1) - 1.0) <= tol
    if m.kind in ("cube", "interval"):
        hi = 1.0 if m.kind == "cube" else p["length"]
        return np.all((arr >= -tol) & (arr <= hi + tol), axis=1)
    if m.kind == "ball":
        return np.linalg.norm(arr, axis=1) <= p["radius"] + tol
    if m.kind == "torus":
        rho = np.hypot(arr[:, 0], arr[:, 1])
        return np.abs(np.hypot(rho - p["R"], arr[:, 2]) - p["r"]) <= tol
    ok = np.zeros(len(arr), dtype=bool)
    for chart in m.charts:
        sub = arr[:, :chart.ambient_dim]
        u = chart.inverse(sub)
        back, _ = chart.evaluate(u)
        ok |= (chart.in_domain(u, tol) & np.all(np.abs(back - sub) <= tol, axis=1)
               & np.all(arr[:, chart.ambient_dim:] == 0, axis=1))
    return ok


def locate_charts(x, m: ManifoldSpec, tol: float = 1e-9):
    """Chart index and parameters of points lying on an atlas manifold (first matching chart)."""
    arr = np.atleast_2d(np.asarray(x, dtype=np.float64))
    index = np.full(len(arr), -1)
    params = np.zeros((len(arr), m.intrinsic_dim))
    for k, chart in enumerate(m.charts):
        sub = arr[:, :chart.ambient_dim]
        u = chart.inverse(sub)
        back, _ = chart.evaluate(u)
        hit = (index < 0) & chart.in_domain(u, tol) & np.all(np.abs(back - sub) <= tol, axis=1)
        index[hit] = k
        params[hit] = np.clip(u[hit], chart.lower, chart.upper)
    if np.any(index < 0):
        raise ValueError(f"{int(np.sum(index < 0))} point(s) are not on any chart of the atlas")
    return index, params


def atlas_points(m: ManifoldSpec, index, params) -> np.ndarray:
    out = np.zeros((len(index), m.ambient_dim))
    for k, chart in enumerate(m.charts):
        sel = index == k
        if np.any(sel):
            out[sel, :chart.ambient_dim] = chart.evaluate(params[sel])[0]
    return out


# --------------------------------------------------------------------------- sampling

def _torus_tube_angles(u, major, minor):
    # inverse CDF of (R + r cos t) / (2 pi R) on [0, 2 pi)
    cdf = lambda t, q: (major * t + minor * math.sin(t)) / (2 * math.pi * major) - q
    return np.array([brentq(cdf, 0.0, 2 * math.pi, args=(q,), xtol=1e-15) for q in u])


def _sample_chart(chart: Chart, n, rng):
    lo, hi = chart.lower, chart.upper
    if chart.family != "graph-patch":
        return lo + (hi - lo) * rng.random((n, chart.dim))
    corners = np.array([[a, b] for a in (lo[0], hi[0]) for b in (lo[1], hi[1])])
    cap = chart.volume_element(corners).max()
    out = np.empty((0, 2))
    while len(out) < n:
        u = lo + (hi - lo) * rng.random((2 * (n - len(out)) + 8, 2))
        keep = rng.random(len(u)) * cap <= chart.volume_element(u)
        out = np.vstack([out, u[keep]])
    return out[:n]


def _draw(m: ManifoldSpec, n, rng):
    p = m.p
    if m.kind == "interval":
        return rng.random((n, 1)) * p["length"], None, None
    if m.kind == "cube":
        return rng.random((n, m.intrinsic_dim)), None, None
    if m.kind == "sphere":
        g = rng.standard_normal((n, m.ambient_dim))
        return g / np.linalg.norm(g, axis=1)[:, None], None, None
    if m.kind == "ball":
        d = m.intrinsic_dim
        g = rng.standard_normal((n, d))
        g /= np.linalg.norm(g, axis=1)[:, None]
        return g * (p["radius"] * rng.random(n) ** (1.0 / d))[:, None], None, None
    if m.kind == "torus":
        theta = _torus_tube_angles(rng.random(n), p["R"], p["r"])
        phi = 2 * math.pi * rng.random(n)
        ring = p["R"] + p["r"] * np.cos(theta)
        return np.stack([ring * np.cos(phi), ring * np.sin(phi), p["r"] * np.sin(theta)], axis=1), None, None
    weights = np.array([c.measure for c in m.charts])
    index = rng.choice(len(m.charts), size=n, p=weights / weights.sum())
    params = np.zeros((n, m.intrinsic_dim))
    for k, chart in enumerate(m.charts):
        sel = index == k
        params[sel] = _sample_chart(chart, int(sel.sum()), rng)
    return atlas_points(m, index, params), index, params


def sample_uniform(m: ManifoldSpec, n: int, seed=None) -> PointConfiguration:
    """n i.i.d. points distributed as normalized H_d on m; deterministic given ``seed``."""
    if n < 1:
        raise ValueError("sample_uniform needs n >= 1")
    rng = np.random.default_rng(seed)
    points, index, params = _draw(m, n, rng)
    while len(np.unique(points, axis=0)) < n:  # measure-zero event, redraw
        points, index, params = _draw(m, n, rng)
    return PointConfiguration(points, manifold=str(m), generator="uniform", seed=seed,
                              chart_index=index, chart_params=params)


# --------------------------------------------------------------------------- stereographic map

def stereographic_project(x):
    """Map R^d onto S^d minus the north pole: P(x) = (t x, 1 - t), t = 2 / (|x|^2 + 1)."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim <= 1
    arr = np.atleast_2d(arr.reshape(1, -1) if single else arr)
    t = 2.0 / (np.sum(arr * arr, axis=1) + 1.0)
    out = np.hstack([t[:, None] * arr, (1.0 - t)[:, None]])
    return out[0] if single else out


def stereographic_inverse(y):
    """Inverse of :func:`stereographic_project` on S^d without the north pole."""
    arr = np.asarray(y, dtype=np.float64)
    single = arr.ndim <= 1
    arr = np.atleast_2d(arr.reshape(1, -1) if single else arr)
    t = 1.0 - arr[:, -1]
    if np.any(t == 0):
        raise ValueError("north pole has no preimage")
    out = arr[:, :-1] / t[:, None]
    return out[0] if single else out
