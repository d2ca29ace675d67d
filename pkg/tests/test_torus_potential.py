import math

import numpy as np
import pytest

from qps.errors import QpsError
from qps.potential import (
    CutoffFunction,
    VariationSpec,
    eval_variation,
    implied_remainder,
    perturbed_potential,
    potential_preset,
    variation_deriv,
    verify_variation_derivative_bounds,
)
from qps.torus import TorusPoint, torus_dist

from conftest import rng


def test_torus_point_wraps():
    p = TorusPoint(0.7) + TorusPoint(0.6)
    assert abs(p.value - 0.3) < 1e-15
    assert 0.0 <= TorusPoint(-0.2).value < 1.0
    # commutativity
    assert (TorusPoint(0.9) + 0.4).value == (TorusPoint(0.4) + 0.9).value


def test_torus_point_always_in_range():
    g = rng(1)
    for _ in range(100):
        a = TorusPoint(g.uniform(-10, 10))
        b = a + g.uniform(-10, 10)
        assert 0.0 <= b.value < 1.0


def test_preset_metadata_cos(cos_pot):
    assert cos_pot.m0 == 2
    # |V'| + |V''| >= 2c with c = 2*pi for V = 2cos(2 pi x)
    assert abs(cos_pot.morse_c - 2 * math.pi) < 1e-3
    rep = cos_pot.validate()
    assert rep["deriv_consistent"]
    assert rep["morse_ok"]


def test_preset_metadata_twowave(twowave_pot):
    assert twowave_pot.m0 == 4
    assert twowave_pot.morse_c > 0
    rep = twowave_pot.validate()
    assert rep["deriv_consistent"]
    assert rep["morse_ok"]


def test_zero_preset(zero_pot):
    g = np.linspace(0, 1, 11)
    assert np.all(zero_pot.eval(g) == 0.0)
    assert zero_pot.morse_c == 0.0


def test_cutoff_junction_smoothness():
    chi = CutoffFunction.for_bump_count(10)
    assert chi.value(0.0) == 1.0
    assert chi.value(1.0 / 80) == 1.0  # inside inner radius 1/40
    assert chi.value(0.06) == 0.0  # beyond outer radius 1/20
    # derivatives through order 3 continuous across both junctions
    h = 1e-6
    for x0 in (chi.inner_radius, chi.outer_radius, -chi.inner_radius):
        for order in range(4):
            left = chi.deriv(x0 - 2 * h, order)
            right = chi.deriv(x0 + 2 * h, order)
            scale = max(1.0, 40.0 ** (order + 1))
            assert abs(float(left) - float(right)) < 1e-3 * scale


def test_variation_gate_delta():
    with pytest.raises(QpsError):
        VariationSpec.zero(10, 1e-3)  # violates delta <= T^-5


def test_eval_variation_trivials():
    var = VariationSpec.zero(10, 1e-6)
    g = rng(2)
    xs = g.uniform(size=100)
    assert np.all(eval_variation(var, xs) == 0.0)
    # outside every bump support the variation vanishes identically
    var2 = VariationSpec.random(10, 1e-6, g)
    # midpoints between centers are outside every bump support
    mids = (np.arange(10) + 0.5) / 10
    assert np.all(eval_variation(var2, mids) == 0.0)


def test_eval_variation_center_value():
    # T=10, eta_3 = 1e-6 (others 0), x = 3/10: chi(0) = 1 so W = eta_3
    T, delta = 10, 1e-6
    eta = np.zeros(T)
    eta[2] = 1e-6  # bump m=3 is index 2
    var = VariationSpec(T, delta, eta, np.zeros(T), np.zeros(T))
    assert abs(float(eval_variation(var, 0.3)) - 1e-6) < 1e-20


def test_support_property_random_points():
    g = rng(3)
    var = VariationSpec.random(7, 1e-6, g)
    xs = g.uniform(size=10**4)
    vals = eval_variation(var, xs)
    d_center = np.abs(xs[:, None] - (np.arange(1, 8) / 7)[None, :])
    d_center = np.minimum(d_center, 1 - d_center)
    outside = np.all(d_center >= 1.0 / 14, axis=1)
    assert np.all(vals[outside] == 0.0)


def test_implied_remainder_values():
    T, delta = 10, 1e-6
    g = rng(4)
    var = VariationSpec.random(T, delta, g)
    # inside the flat core the remainder vanishes
    assert float(implied_remainder(var, 3, 1.0 / (8 * T))) == 0.0
    # all-zero jets: identically 0
    z = VariationSpec.zero(T, delta)
    assert float(implied_remainder(z, 1, 0.013)) == 0.0
    # outside the support: R = -x^-3 * jet, evaluated literally
    eta = np.zeros(T)
    eta[0] = delta
    v2 = VariationSpec(T, delta, eta, np.zeros(T), np.zeros(T))
    x = 1.0 / (2 * T)
    expect = -delta * (2 * T) ** 3
    assert abs(float(implied_remainder(v2, 1, x)) - expect) < 1e-9 * abs(expect)
    with pytest.raises(QpsError):
        implied_remainder(var, 1, 0.0)


def test_derivative_bounds_report():
    g = rng(5)
    var = VariationSpec.random(10, 1e-6, g)
    rep = verify_variation_derivative_bounds(var, grid_n=4096)
    assert np.isfinite(rep["max_abs_by_order"]).all()
    z = VariationSpec.zero(10, 1e-6)
    rep0 = verify_variation_derivative_bounds(z, grid_n=4096)
    assert max(rep0["max_abs_by_order"]) == 0.0
    assert rep0["passed"]


def test_variation_derivatives_match_fd():
    g = rng(6)
    var = VariationSpec.random(10, 1e-6, g)
    xs = g.uniform(size=500)
    h = 1e-6
    fd1 = (eval_variation(var, xs + h) - eval_variation(var, xs - h)) / (2 * h)
    an1 = variation_deriv(var, xs, 1)
    # skip points within a stencil of a support boundary
    centers = np.round(xs * 10) / 10
    u = np.abs(xs - centers)
    good = (np.abs(u - 1.0 / 40) > 2 * h) & (np.abs(u - 1.0 / 20) > 2 * h)
    assert np.max(np.abs((fd1 - an1)[good])) < 1e-8


def test_perturbed_potential(cos_pot):
    # empty list: identity
    assert perturbed_potential(cos_pot, []) is cos_pot
    # zero-parameter variation: identical samples
    z = VariationSpec.zero(10, 1e-6)
    p0 = perturbed_potential(cos_pot, [z])
    g = np.linspace(0, 1, 257)
    assert np.all(p0.eval(g) == cos_pot.eval(g))
    # random parameters: max pointwise change bounded by T*delta
    gr = rng(7)
    var = VariationSpec.random(10, 1e-6, gr)
    p1 = perturbed_potential(cos_pot, [var])
    gg = np.linspace(0, 1, 4097)
    assert np.max(np.abs(p1.eval(gg) - cos_pot.eval(gg))) <= 10 * 1e-6
    rep = p1.validate()
    assert rep["deriv_consistent"]
    assert p1.morse_c > 0
