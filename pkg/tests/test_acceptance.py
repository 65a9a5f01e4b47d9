"""End-to-end acceptance checks, one per criterion.

Run under pytest (a PASS/FAIL summary is printed at the end of the session) or
directly with ``python3 tests/test_acceptance.py``.
"""
import itertools
import json
import math
import os
import sys
import time

import numpy as np
import pytest
from scipy import special

from riesz_lab.analysis import equidist_test, scaling_study, separation_study, split_fraction_test
from riesz_lab.constants import (ball_volume, hexagonal_tail_bound, hexagonal_zeta, riemann_zeta,
                                 theoretical_limit, tiling_constant)
from riesz_lab.energy import RieszParams, nearest_neighbor_distances, riesz_energy, riesz_gradient, tau
from riesz_lab.formats import RunConfig, format_config, parse_config, to_json
from riesz_lab.manifold import ManifoldSpec, parse_manifold, sample_uniform, stereographic_project
from riesz_lab.optimize import OptimizerOptions, best_of_restarts, tile_cube_configuration

JOBS = os.cpu_count() or 1
RESULTS = {}


def record(number, title, ok, detail):
    RESULTS[number] = (bool(ok), title, detail)
    return bool(ok)


def timed_study(m, params, ns, restarts=1):
    start = time.perf_counter()
    study = scaling_study(m, params, ns, OptimizerOptions(restarts=restarts), jobs=JOBS)
    return study, time.perf_counter() - start


def criterion_1():
    study, secs = timed_study(ManifoldSpec.interval(1.0), RieszParams(2.0, 1), [50, 100, 200, 400], restarts=3)
    limit = math.pi ** 2 / 3
    gap = study.normalized[-1] / limit - 1
    ok = abs(gap) <= 0.05 and study.is_increasing and secs < 120
    return record(1, "interval s=2 limit 2*zeta(2)", ok,
                  f"G(400)={study.normalized[-1]:.6f} vs {limit:.6f} (gap {gap:+.2%}, tol 5%), "
                  f"increasing={study.is_increasing}, {secs:.1f}s (< 120s)")


def criterion_2():
    study, secs = timed_study(ManifoldSpec.sphere(1), RieszParams(2.0, 1), [32, 64, 128])
    exact = 128 * (128 ** 2 - 1) / 12 / 128 ** 3  # equally spaced points
    gap = study.normalized[-1] / (1 / 12) - 1
    ok = abs(gap) <= 0.02 and secs < 60
    return record(2, "circle s=2 limit 1/12", ok,
                  f"G(128)={study.normalized[-1]:.8f} vs 1/12 (gap {gap:+.3%}, tol 2%), "
                  f"equally spaced {exact:.8f}, {secs:.1f}s (< 60s)")


def criterion_3():
    study, secs = timed_study(ManifoldSpec.interval(1.0), RieszParams(1.0, 1), [100, 400, 1600])
    gaps = [abs(g - 2.0) for g in study.normalized]
    approaching = study.gap_decreasing()
    rel = study.normalized[-1] / 2.0 - 1
    ok = approaching and abs(rel) <= 0.30
    return record(3, "interval s=d=1 limit 2", ok,
                  f"G={[round(g, 5) for g in study.normalized]}, |G-2|={[round(v, 5) for v in gaps]} "
                  f"strictly decreasing={approaching}, G(1600) gap {rel:+.2%} (tol 30%), {secs:.1f}s")


def criterion_4():
    study, secs = timed_study(ManifoldSpec.sphere(2), RieszParams(2.0, 2), [100, 300, 900])
    gaps = [abs(g - 0.25) for g in study.normalized]
    approaching = study.gap_decreasing()
    rel = study.normalized[-1] / 0.25 - 1
    ok = approaching and abs(rel) <= 0.35 and secs < 600
    return record(4, "sphere s=d=2 limit 1/4", ok,
                  f"G={[round(g, 5) for g in study.normalized]}, |G-1/4|={[round(v, 5) for v in gaps]} "
                  f"strictly decreasing={approaching}, G(900) gap {rel:+.2%} (tol 35%), {secs:.1f}s (< 600s)")


def criterion_5():
    ns = [50, 100, 200, 400, 800]
    study, secs = timed_study(ManifoldSpec.cube(2), RieszParams(3.0, 2), ns)
    rep = separation_study(study.rows, RieszParams(3.0, 2))
    floor = 0.5 * rep.scaled[0]
    ok = min(rep.scaled) >= floor
    return record(5, "separation on cube(2), s=3", ok,
                  f"delta*N^(1/2)={[round(v, 4) for v in rep.scaled]}, min {min(rep.scaled):.4f} "
                  f">= {floor:.4f} (half of N=50 value), {secs:.1f}s")


def criterion_6():
    cube = ManifoldSpec.cube(2)
    a = best_of_restarts(cube, 500, RieszParams(3.0, 2), OptimizerOptions(), jobs=JOBS)
    qa = equidist_test(a.config, cube, "quadrants")
    torus = ManifoldSpec.torus(2.0, 0.5)
    b = best_of_restarts(torus, 600, RieszParams(3.0, 2), OptimizerOptions(), jobs=JOBS)
    qb = equidist_test(b.config, torus, "tube-halves")
    ok = qa.max_standardized <= 4 and qb.max_standardized <= 4
    return record(6, "equidistribution", ok,
                  f"cube quadrants {qa.counts} max|z|={qa.max_standardized:.3f}; torus halves {qb.counts} "
                  f"expected {[round(p * 600, 1) for p in qb.expected]} max|z|={qb.max_standardized:.3f} (tol 4)")


def criterion_7():
    small = parse_manifold("atlas:affine-box:u0=0:u1=1:v0=0:v1=1")
    large = parse_manifold("atlas:affine-box:u0=0:u1=1:v0=0:v1=2:ox=2")
    n = 300
    rep = split_fraction_test(small, large, RieszParams(3.0, 2), n)
    half_width = 3 / math.sqrt(n)
    ok = abs(rep.observed - 1 / 3) <= half_width
    return record(7, "split between squares of area 1 and 2", ok,
                  f"fraction on smaller square {rep.n_a}/{n}={rep.observed:.4f}, predicted {rep.predicted:.4f}, "
                  f"allowed [{1 / 3 - half_width:.4f}, {1 / 3 + half_width:.4f}]")


def criterion_8():
    s, d = 3.0, 2
    params = RieszParams(s, d)
    c = tiling_constant(s, d)
    worst, checks = -math.inf, 0
    for n0 in (10, 20):
        base = best_of_restarts(ManifoldSpec.cube(d), n0, params, OptimizerOptions()).config
        g0 = riesz_energy(base.points, s) / tau(n0, params)
        for m, gamma in itertools.product((2, 3), (0.5, 0.8)):
            tiled = tile_cube_configuration(base, m, gamma)
            lhs = riesz_energy(tiled.points, s) / tau(tiled.N, params)
            rhs = gamma ** -s * g0 + c * (1 - gamma) ** -s * n0 ** (1 - s / d)
            worst = max(worst, lhs / rhs)
            checks += lhs <= rhs
    return record(8, "tiling inequality", checks == 8,
                  f"{checks}/8 cases hold exactly with C=3^d+2^sK={c:.6f}, max lhs/rhs={worst:.4f}")


def hex_brute(s, radius):
    total = 0.0
    m = np.arange(-radius, radius + 1, dtype=np.float64)
    for n in range(-radius, radius + 1):
        x = m + 0.5 * n
        y = 0.5 * math.sqrt(3.0) * n
        r2 = x * x + y * y
        total += float(np.sum(r2[r2 > 0] ** (-0.5 * s)))
    return total


def criterion_9():
    closed = {1: 2.0, 2: math.pi, 3: 4 * math.pi / 3, 4: math.pi ** 2 / 2, 5: 8 * math.pi ** 2 / 15}
    vol_err = max(abs(ball_volume(d) - v) / v for d, v in closed.items())
    zeta_err = max(abs(riemann_zeta(2) - math.pi ** 2 / 6), abs(riemann_zeta(4) - math.pi ** 4 / 90))
    hz = hexagonal_zeta(4.0, 1e-6)
    radius = 1500
    hex_err = abs(hz.value - hex_brute(4.0, radius))
    hex_allowed = hz.error_bound + hexagonal_tail_bound(4.0, radius)
    # independent closed form 6 zeta(2) L(2, chi_-3) via Hurwitz zeta
    hex_closed = 6 * special.zeta(2.0) * 3.0 ** -2 * (special.zeta(2.0, 1 / 3) - special.zeta(2.0, 2 / 3))
    study, _ = timed_study(ManifoldSpec.cube(2), RieszParams(4.0, 2), [100, 200, 400])
    bound = theoretical_limit(RieszParams(4.0, 2), ManifoldSpec.cube(2)).bound
    estimate = max(study.normalized)
    ok = (vol_err <= 1e-13 and zeta_err <= 1e-12 and hex_err <= hex_allowed
          and abs(hz.value - hex_closed) <= hz.error_bound and estimate <= 1.05 * bound)
    return record(9, "constants", ok,
                  f"ball volume rel err {vol_err:.1e} (tol 1e-13); zeta err {zeta_err:.1e} (tol 1e-12); "
                  f"zeta_L(4)={hz.value:.12f} brute diff {hex_err:.2e} <= {hex_allowed:.2e}; "
                  f"C_4,2 estimate {estimate:.4f} <= 1.05*{bound:.4f}")


def criterion_10():
    fd_worst = 0.0
    cases = [(m, s) for m in (ManifoldSpec.sphere(2), ManifoldSpec.cube(2), ManifoldSpec.interval(1.0),
                              ManifoldSpec.torus(2.0, 0.5), ManifoldSpec.ball(3)) for s in (1.0, 2.0, 3.0, 4.5)]
    for seed, (m, s) in enumerate(cases):
        x = sample_uniform(m, 10, seed=seed).points
        g = riesz_gradient(x, s)
        h = 1e-4 * nearest_neighbor_distances(x).min()
        fd = np.zeros_like(x)
        for i, k in itertools.product(range(x.shape[0]), range(x.shape[1])):
            xp, xm = x.copy(), x.copy()
            xp[i, k] += h
            xm[i, k] -= h
            fd[i, k] = (riesz_energy(xp, s) - riesz_energy(xm, s)) / (2 * h)
        fd_worst = max(fd_worst, np.linalg.norm(fd - g) / np.linalg.norm(g))

    rng = np.random.default_rng(10)
    stereo_worst = 0.0
    for d in (1, 2, 3):
        x, y = rng.normal(size=(1000, d)) * 3, rng.normal(size=(1000, d)) * 3
        lhs = np.linalg.norm(stereographic_project(x) - stereographic_project(y), axis=1)
        rhs = 2 * np.linalg.norm(x - y, axis=1) / np.sqrt((1 + np.sum(x * x, 1)) * (1 + np.sum(y * y, 1)))
        stereo_worst = max(stereo_worst, float(np.max(np.abs(lhs - rhs) / rhs)))

    pts = rng.integers(0, 1 << 20, (300, 3)) / float(1 << 20)
    e = riesz_energy(pts, 3.0)
    motions = [pts[rng.permutation(300)], pts[:, [1, 2, 0]], pts * [1.0, -1.0, -1.0], pts + [0.25, -4.0, 2.5]]
    rigid = all(riesz_energy(p, 3.0) == e for p in motions)

    cfg = sample_uniform(ManifoldSpec.sphere(2), 50, seed=1).replace(s=3.0)
    cfg_ok = np.array_equal(parse_config(format_config(cfg)).points, cfg.points)
    rc = RunConfig("scaling", "cube:2", 3.0, None, [50, 100], "lattice", OptimizerOptions().to_dict(), 0, {})
    rc_ok = RunConfig.from_json(rc.to_json()) == rc
    floats = rng.random(100).tolist()
    json_ok = json.loads(to_json(floats)) == floats

    ok = fd_worst <= 1e-6 and stereo_worst <= 1e-12 and rigid and cfg_ok and rc_ok and json_ok
    return record(10, "numerical hygiene", ok,
                  f"gradient vs FD max rel {fd_worst:.1e} on {len(cases)} cases (tol 1e-6); stereographic "
                  f"identity max rel {stereo_worst:.1e} on 3x1000 pairs (tol 1e-12); rigid motions exact={rigid}; "
                  f"round trips config={cfg_ok} run={rc_ok} json={json_ok}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("check", CRITERIA, ids=[f"criterion_{k}" for k in range(1, 11)])
def test_acceptance(check):
    k = CRITERIA.index(check) + 1
    assert check(), RESULTS[k][2]


def summary_lines():
    return [f"{'PASS' if ok else 'FAIL'} criterion {k}: {title}: {detail}"
            for k, (ok, title, detail) in sorted(RESULTS.items())]


if __name__ == "__main__":
    for k, check in enumerate(CRITERIA, 1):
        check()
        ok, title, detail = RESULTS[k]
        print(f"{'PASS' if ok else 'FAIL'} criterion {k}: {title}: {detail}", flush=True)
    sys.exit(0 if all(ok for ok, _, _ in RESULTS.values()) else 1)
