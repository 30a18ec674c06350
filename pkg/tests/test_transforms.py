import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from curvedecay import curves as C
from curvedecay import measures as M
from curvedecay import transforms as T


def test_mu_hat_point_mass():
    pm = M.point_mass(3)
    xi = np.random.default_rng(0).normal(size=(20, 3)) * 50
    assert np.allclose(T.mu_hat(pm, xi), 1.0)
    assert T.mu_hat(pm, np.array([1.0, 2.0, 3.0])) == 1.0


def test_mu_hat_segment_sinc_zero():
    seg = M.segment_measure(2, 4000, -1.0, 1.0)
    assert abs(T.mu_hat(seg, np.array([np.pi, 0.0]))) <= 1e-6
    assert T.mu_hat(seg, np.array([1.0, 0.0])).real == pytest.approx(math.sin(1.0), abs=1e-6)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=20, deadline=None)
def test_mu_hat_conjugate_symmetry(seed):
    rng = np.random.default_rng(seed)
    m = M.DiscreteMeasure.from_points(rng.uniform(-0.5, 0.5, (30, 3)), rng.random(30))
    xi = rng.normal(size=(5, 3)) * 20
    assert np.array_equal(T.mu_hat(m, -xi), np.conj(T.mu_hat(m, xi)))


def test_mu_hat_linearity():
    a = M.cantor_product_measure(2, 1.2, 4)
    b = M.cube_measure(2, 8)
    xi = np.random.default_rng(1).normal(size=(12, 2)) * 30
    c = M.combine([a, b], [0.3, 1.7])
    assert np.allclose(T.mu_hat(c, xi), 0.3 * T.mu_hat(a, xi) + 1.7 * T.mu_hat(b, xi), atol=1e-12)


def test_curve_average_point_mass_is_one():
    g = C.moment_curve(3, 3)
    for lam in (1.0, 64.0, 1024.0):
        assert T.curve_average(M.point_mass(3), g, lam).value == pytest.approx(1.0, abs=1e-12)


def test_curve_average_two_atoms_oracle():
    x1, x2 = np.array([0.3, -0.2, 0.1]), np.array([-0.4, 0.25, 0.5])
    w1, w2 = 0.7, 0.3
    m = M.DiscreteMeasure.from_points([x1, x2], [w1, w2])
    g = C.helix_curve()
    lam = 40.0
    diff = x1 - x2

    def re(t):
        return math.cos(lam * float(g(t)[0] @ diff))

    osc, _ = integrate.quad(re, 0, 1, limit=500, epsabs=1e-13)
    oracle = w1**2 + w2**2 + 2 * w1 * w2 * osc
    spec = T.QuadratureSpec(tolerance=1e-10, max_doublings=8)
    assert T.curve_average(m, g, lam, spec).value == pytest.approx(oracle, rel=1e-8)


def test_curve_average_refinement_audit():
    m = M.cantor_product_measure(3, 2.0, 4)
    r = T.curve_average(m, C.moment_curve(3, 3), 256.0)
    (_, prev), (_, last) = r.audit[-2:]
    assert abs(last - prev) <= T.QuadratureSpec().tolerance * abs(last)
    with pytest.raises(ValueError):
        T.curve_average(m, C.moment_curve(3, 3), 0.5)


def test_quadrature_error_reports_values():
    spec = T.QuadratureSpec(oversample=2, max_doublings=1, tolerance=1e-14, min_nodes=2)
    m = M.cantor_product_measure(3, 2.0, 4)
    with pytest.raises(T.QuadratureError) as err:
        T.curve_average(m, C.moment_curve(3, 3), 512.0, spec)
    assert len(err.value.last_values) == 2


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        T.QuadratureSpec(oversample=1)
    with pytest.raises(ValueError):
        T.QuadratureSpec(rule="gauss")
    with pytest.raises(ValueError):
        T.QuadratureSpec(tolerance=0)


def test_ball_average_point_mass_and_seed():
    assert T.ball_average(M.point_mass(2), 100.0, n_mc=2000).value == pytest.approx(1.0)
    m = M.cantor_product_measure(2, 1.2, 5)
    a = T.ball_average(m, 50.0, n_mc=5000, seed=7)
    b = T.ball_average(m, 50.0, n_mc=5000, seed=7)
    c = T.ball_average(m, 50.0, n_mc=5000, seed=8)
    assert a == b
    assert a.value != c.value
    assert a.stderr > 0
    with pytest.raises(ValueError):
        T.ball_average(m, 50.0, n_mc=10)


def test_uniform_ball_sample_inside():
    x = T.uniform_ball_sample(T.seeded_rng(0), 10_000, 3)
    r = np.linalg.norm(x, axis=1)
    assert r.max() <= 1
    # radial law P(|x| <= s) = s^3
    assert np.mean(r <= 0.5) == pytest.approx(0.125, abs=0.01)


def test_extension_op_low_frequency():
    g = C.moment_curve(3, 3)
    x = np.array([[0.0, 0.0, 0.0], [0.01, 0.0, 0.0]])
    F = T.extension_op(g, lambda t: np.ones_like(t), 1.0, x, cutoff=None)
    assert np.allclose(np.abs(F.values), 1.0, atol=0.02)


def test_extension_op_spike_modulus():
    g = C.moment_curve(3, 3)
    t0, width = 0.4, 1e-3
    spike = lambda t: np.where(np.abs(t - t0) <= width / 2, 1.0, 0.0)
    x = T.uniform_ball_sample(T.seeded_rng(3), 50, 3) * 0.9
    spec = T.QuadratureSpec(min_nodes=40_000, refine_check=False)
    F = T.extension_op(g, spike, 4.0, x, cutoff=None, spec=spec)
    mod = np.abs(F.values)
    # the phase varies by at most lam * width over the spike
    assert np.ptp(mod) <= 1e-5 * mod.max()
    assert mod.mean() == pytest.approx(width, rel=0.03)


def test_extension_op_rejects_points_outside_ball():
    with pytest.raises(ValueError):
        T.extension_op(C.moment_curve(3, 3), lambda t: t, 4.0, np.array([[2.0, 0, 0]]))


def test_extension_l2_decays():
    g = C.moment_curve(3, 3)
    f = lambda t: np.sin(np.pi * t) ** 2
    x = T.uniform_ball_sample(T.seeded_rng(0), 4000, 3)
    lams = np.array([32.0, 64.0, 128.0, 256.0])
    norms = [np.sqrt(np.mean(np.abs(T.extension_op(g, f, lam, x, cutoff=None).values) ** 2)) for lam in lams]
    slope = np.polyfit(np.log(lams), np.log(norms), 1)[0]
    assert slope <= -0.5 + 0.1


def test_lq_norm_examples():
    m = M.cantor_product_measure(2, 1.2, 4)
    c = 3.0
    vals = np.full(m.size, c)
    for q in (1, 2, 7.5):
        assert T.lq_norm_mu(vals, m, q) == pytest.approx(c * m.total_mass ** (1 / q))
    v = np.random.default_rng(0).random(m.size)
    assert T.lq_norm_mu(v, m, math.inf) == v.max()
    with pytest.raises(ValueError):
        T.lq_norm_mu(v[:-1], m, 2)


@given(st.integers(0, 2**31 - 1), st.floats(1.0, 20.0), st.floats(1.0, 20.0))
@settings(max_examples=40, deadline=None)
def test_lq_holder(seed, q1, q2):
    q_small, q_big = sorted((q1, q2))
    rng = np.random.default_rng(seed)
    m = M.DiscreteMeasure.from_points(rng.uniform(-0.5, 0.5, (25, 2)), rng.random(25) * 0.2)
    v = rng.random(25) * 5
    lhs = T.lq_norm_mu(v, m, q_small)
    rhs = T.lq_norm_mu(v, m, q_big) * m.total_mass ** (1 / q_small - 1 / q_big)
    assert lhs <= rhs * (1 + 1e-10)


@given(st.integers(0, 2**31 - 1), st.floats(1.0, 10.0), st.floats(1.0, 10.0), st.floats(0.0, 1.0))
@settings(max_examples=40, deadline=None)
def test_lq_log_convex(seed, p0, p1, theta):
    rng = np.random.default_rng(seed)
    m = M.DiscreteMeasure.from_points(rng.uniform(-0.5, 0.5, (25, 2)), rng.random(25))
    v = rng.random(25) * 3 + 0.01
    inv = (1 - theta) / p0 + theta / p1
    mid = T.lq_norm_mu(v, m, 1 / inv)
    bound = T.lq_norm_mu(v, m, p0) ** (1 - theta) * T.lq_norm_mu(v, m, p1) ** theta
    assert mid <= bound * (1 + 1e-10)


def test_plancherel_spot_check():
    # for a grid measure the mean of |mu^|^2 over one period cell equals sum w_i^2
    n, step = 8, 1 / 8
    m = M.cube_measure(2, n)
    period = 2 * np.pi / step
    rng = T.seeded_rng(2)
    xi = rng.random((200_000, 2)) * period
    mean = float(np.mean(np.abs(m.ft(xi)) ** 2))
    assert mean == pytest.approx(float(np.sum(m.weights**2)), rel=0.05)


def test_neighborhood_indicator_norm_and_peak():
    g = C.moment_curve(3, 3)
    norms = []
    for lam in (16.0, 64.0, 256.0):
        F, norm = T.neighborhood_ghat(g, lam, "indicator_sqrt_lambda", np.zeros((1, 3)))
        norms.append(norm)
        assert abs(F.values[0]) >= 0.5 * lam**0.5
    assert max(norms) / min(norms) <= 2


def test_neighborhood_rejects_unknown_profile():
    with pytest.raises(ValueError):
        T.neighborhood_ghat(C.moment_curve(3, 3), 16.0, "nope", np.zeros((1, 3)))
