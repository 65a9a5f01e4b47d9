import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from riesz_lab.energy import riesz_energy, riesz_gradient
from riesz_lab.formats import format_config, parse_config
from riesz_lab.manifold import (ManifoldSpec, PointConfiguration, on_manifold, project_to_manifold,
                                stereographic_inverse, stereographic_project, tangent_project)
from riesz_lab.optimize import tile_cube_configuration

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
MANIFOLDS = [ManifoldSpec.sphere(2), ManifoldSpec.cube(3), ManifoldSpec.ball(3), ManifoldSpec.torus(2.0, 0.5)]


def distinct(x):
    return len(np.unique(x, axis=0)) == len(x) and np.min(
        np.linalg.norm(x[:, None] - x[None], axis=2)[np.triu_indices(len(x), 1)]) > 1e-3


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 12), st.just(3)), elements=st.floats(-2, 2)),
       st.floats(1.0, 6.0), st.randoms(use_true_random=False))
def test_energy_symmetric_and_positive(x, s, rnd):
    assume(distinct(x))
    e = riesz_energy(x, s)
    perm = list(range(len(x)))
    rnd.shuffle(perm)
    assert e > 0 and riesz_energy(x[perm], s) == e
    assert np.allclose(riesz_gradient(x, s).sum(axis=0), 0.0, atol=1e-9 * np.abs(riesz_gradient(x, s)).max())


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(range(len(MANIFOLDS))), arrays(np.float64, (5, 3), elements=finite))
def test_projection_lands_on_manifold_and_is_idempotent(k, x):
    m = MANIFOLDS[k]
    assume(m.kind != "torus" or np.all(np.hypot(x[:, 0], x[:, 1]) > 1e-6))
    assume(m.kind != "sphere" or np.all(np.linalg.norm(x, axis=1) > 1e-6))
    y = project_to_manifold(x, m)
    assert np.all(on_manifold(y, m))
    assert np.allclose(project_to_manifold(y, m), y, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (4, 3), elements=st.floats(-1, 1)), arrays(np.float64, (4, 3), elements=finite))
def test_sphere_tangent_is_orthogonal(x, g):
    assume(np.all(np.linalg.norm(x, axis=1) > 1e-3))
    x = project_to_manifold(x, ManifoldSpec.sphere(2))
    t = tangent_project(g, x, ManifoldSpec.sphere(2))
    scale = 1.0 + np.abs(g).max()
    assert np.all(np.abs(np.sum(t * x, axis=1)) <= 1e-12 * scale)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (6, 2), elements=st.floats(-50, 50)))
def test_stereographic_round_trip(y):
    x = stereographic_project(y)
    assert np.allclose(np.linalg.norm(x, axis=1), 1.0, atol=1e-14)
    assert np.allclose(stereographic_inverse(x), y, rtol=1e-9, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 4)),
              elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_config_text_round_trip(x):
    back = parse_config(format_config(PointConfiguration(x, manifold="cube:1")))
    assert np.array_equal(back.points, x)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 8), st.just(2)), elements=st.floats(0, 1)),
       st.integers(1, 3), st.floats(0.1, 0.95))
def test_tiling_cardinality_and_containment(x, m, gamma):
    t = tile_cube_configuration(PointConfiguration(x), m, gamma)
    assert t.N == m * m * len(x)
    assert np.all((t.points >= 0) & (t.points <= 1))
    if distinct(x):
        assert t.is_distinct()
