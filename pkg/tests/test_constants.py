import math

import numpy as np
import pytest
from scipy import special

from riesz_lab.constants import (ball_volume, cube_lattice_zeta, cube_lower_constant, hexagonal_bound_constant,
                                 hexagonal_tail_bound, hexagonal_zeta, predict_split, riemann_zeta,
                                 sphere_area, sphere_d_constant, theoretical_limit, tiling_constant)
from riesz_lab.energy import RieszParams
from riesz_lab.manifold import ManifoldSpec


def hex_zeta_oracle(s):
    """zeta_L(s) = 6 zeta(s/2) L(s/2, chi_-3), with the L-function from Hurwitz zeta values."""
    t = s / 2
    l_chi = 3.0 ** -t * (special.zeta(t, 1 / 3) - special.zeta(t, 2 / 3))
    return 6.0 * special.zeta(t) * l_chi


def hex_brute(s, radius):
    # Cartesian coordinates of m(1,0) + n(1/2, sqrt3/2), summed in a different order from the library
    total = 0.0
    m = np.arange(-radius, radius + 1, dtype=np.float64)
    for n in range(-radius, radius + 1):
        x = m + 0.5 * n
        y = 0.5 * math.sqrt(3.0) * n
        r2 = x * x + y * y
        r2 = r2[r2 > 0]
        total += float(np.sum(r2 ** (-0.5 * s)))
    return total


@pytest.mark.parametrize("d,closed", [(1, 2.0), (2, math.pi), (3, 4 * math.pi / 3),
                                      (4, math.pi ** 2 / 2), (5, 8 * math.pi ** 2 / 15)])
def test_ball_volume_closed_forms(d, closed):
    assert ball_volume(d) == pytest.approx(closed, rel=1e-13, abs=0)


def test_ball_volume_gamma_recursion():
    for d in range(2, 11):
        ratio = math.sqrt(math.pi) * math.gamma((d + 1) / 2) / math.gamma(d / 2 + 1)
        assert abs(ball_volume(d) - ball_volume(d - 1) * ratio) <= 1e-13 * ball_volume(d)


def test_ball_volume_rejects_zero_dimension():
    with pytest.raises(ValueError):
        ball_volume(0)


def test_sphere_constants():
    assert sphere_d_constant(2) == pytest.approx(0.25, abs=1e-15)
    assert sphere_d_constant(1) == pytest.approx(1 / math.pi, rel=1e-15)
    assert sphere_area(2) == pytest.approx(4 * math.pi, rel=1e-15)
    for d in range(1, 8):
        assert abs(sphere_d_constant(d) * sphere_area(d) - ball_volume(d)) <= 1e-14 * ball_volume(d)
        gamma_form = math.gamma((d + 1) / 2) / (d * math.sqrt(math.pi) * math.gamma(d / 2))
        assert sphere_d_constant(d) == pytest.approx(gamma_form, rel=1e-14)


def test_riemann_zeta_closed_forms():
    assert abs(riemann_zeta(2) - math.pi ** 2 / 6) <= 1e-12
    assert abs(riemann_zeta(4) - math.pi ** 4 / 90) <= 1e-12
    assert 0 < riemann_zeta(20) - 1 < 1e-6


@pytest.mark.parametrize("s", [1.1, 1.5, 2.5, 3.0, 3.7, 6.0, 11.5, 30.0])
def test_riemann_zeta_matches_scipy(s):
    assert abs(riemann_zeta(s) - special.zeta(s)) <= 1e-12


@pytest.mark.parametrize("s", [1.0, 0.5, -2.0])
def test_riemann_zeta_domain(s):
    with pytest.raises(ValueError):
        riemann_zeta(s)


def test_hexagonal_zeta_large_s():
    z = hexagonal_zeta(40, 1e-10)
    assert 6.0 <= z.value <= 6.0 + 1e-4


def test_hexagonal_zeta_matches_brute_force():
    z = hexagonal_zeta(4.0, 1e-6)
    brute = hex_brute(4.0, 2000)
    assert abs(z.value - brute) <= z.error_bound + hexagonal_tail_bound(4.0, 2000)
    assert abs(z.value - hex_zeta_oracle(4.0)) <= z.error_bound
    # 30-digit value of 6 zeta(2) L(2, chi_-3)
    assert hex_zeta_oracle(4.0) == pytest.approx(7.7111457329048964, rel=1e-13)


@pytest.mark.parametrize("s", [2.5, 3.0, 4.0, 6.0, 9.0])
@pytest.mark.parametrize("radius", [5, 50, 400])
def test_hexagonal_tail_bound_is_sound(s, radius):
    bound = hexagonal_tail_bound(s, radius)
    if bound < 1e-11:
        pytest.skip("tail below double-precision resolution of the oracle difference")
    true_tail = hex_zeta_oracle(s) - hex_brute(s, radius)
    assert 0 < true_tail <= bound


def test_hexagonal_zeta_refinement_within_bounds():
    for s, target in ((3.0, 1e-2), (4.0, 1e-6), (6.0, 1e-9)):
        coarse = hexagonal_zeta(s, target)
        fine = hexagonal_zeta(s, target / 2)
        assert abs(coarse.value - fine.value) < max(coarse.error_bound, fine.error_bound)


def test_hexagonal_zeta_monotone_in_s():
    values = [hexagonal_zeta(s, 1e-2).value for s in (3, 4, 6, 8)]
    assert all(b < a for a, b in zip(values, values[1:]))


def test_hexagonal_zeta_domain():
    with pytest.raises(ValueError):
        hexagonal_zeta(2.0)


@pytest.mark.parametrize("s", [3.0, 4.0, 6.0])
def test_hexagonal_bound_constant_finite_and_above_lattice_value(s):
    c = hexagonal_bound_constant(s)
    assert 0 < c < math.inf
    assert c >= 0.75 ** (s / 4) * hex_zeta_oracle(s)


def cube_k_oracle(s, d):
    # sum over shells of ((2j+1)^d - (2j-1)^d) j^-s expanded binomially into zeta values
    return sum(math.comb(d, k) * 2 ** k * (1 - (-1) ** (d - k)) * special.zeta(s - k) for k in range(d))


@pytest.mark.parametrize("s,d", [(3.0, 2), (4.0, 2), (4.5, 3), (2.5, 1)])
def test_cube_lattice_zeta(s, d):
    k = cube_lattice_zeta(s, d)
    oracle = cube_k_oracle(s, d)
    assert k.value <= oracle <= k.value + k.error_bound
    assert tiling_constant(s, d) >= 3 ** d + 2 ** s * oracle


def test_cube_lattice_zeta_planar_identity():
    assert cube_lattice_zeta(3.0, 2).value == pytest.approx(8 * math.pi ** 2 / 6, rel=1e-4)


def test_cube_lower_constant():
    assert cube_lower_constant(3.0, 2) == pytest.approx((math.pi / 4) ** 1.5 / 8, rel=1e-15)


def test_theoretical_limit_kinds():
    lim = theoretical_limit(RieszParams(2, 2), ManifoldSpec.sphere(2))
    assert lim.kind == "exact_sd" and lim.value == pytest.approx(0.25, abs=1e-15)
    lim = theoretical_limit(RieszParams(2, 1), ManifoldSpec.sphere(1))
    assert lim.kind == "exact_d1" and lim.value == pytest.approx(1 / 12, rel=1e-12)
    lim = theoretical_limit(RieszParams(3, 1), ManifoldSpec.interval(1.0))
    assert lim.value == pytest.approx(2 * special.zeta(3), rel=1e-12)
    lim = theoretical_limit(RieszParams(4, 2), ManifoldSpec.cube(2))
    assert lim.kind == "bound_hex" and lim.value is None
    exact = 0.75 * hex_zeta_oracle(4)
    assert exact <= lim.bound <= exact + 0.75 * hexagonal_tail_bound(4.0, 3000)
    lim = theoretical_limit(RieszParams(4, 3), ManifoldSpec.cube(3))
    assert lim.kind == "unknown" and lim.reference is None


def test_theoretical_limit_interval_scaling():
    for s in (1.5, 2.0, 3.0, 5.0):
        one = theoretical_limit(RieszParams(s, 1), ManifoldSpec.interval(1.0)).value
        two = theoretical_limit(RieszParams(s, 1), ManifoldSpec.interval(2.0)).value
        assert two == one / 2 ** s


def test_predict_split():
    assert predict_split(1.0, 1.0) == 0.5
    assert predict_split(1.0, 2.0) == pytest.approx(1 / 3, abs=1e-16)
    assert predict_split(3.0, 0.0) == 1.0
    with pytest.raises(ValueError):
        predict_split(0.0, 0.0)
