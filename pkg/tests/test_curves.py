import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvedecay import curves as C


def test_moment_curve_values():
    g = C.moment_curve(3, 3)
    assert np.allclose(g(1.0)[0], [1, 0.5, 1 / 6])
    assert np.allclose(g.derivative(0.3, 4), 0)
    with pytest.raises(ValueError):
        C.moment_curve(4, 3)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_moment_torsion_is_one(d):
    t = np.linspace(0, 1, 101)
    assert np.allclose(C.torsion_det(C.moment_curve(d, d), t), 1.0)


def test_helix_torsion_is_one():
    t = np.linspace(0, 1, 101)
    assert np.allclose(C.torsion_det(C.helix_curve(), t), 1.0)
    with pytest.raises(ValueError):
        C.helix_curve(4)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_reversed_torsion_sign(d):
    # column m picks up (-1)^m, so the determinant gets (-1)^(1+2+...+d)
    det = C.torsion_det(C.reversed_curve(C.moment_curve(d, d)), 0.4)
    assert det == pytest.approx((-1) ** (d * (d + 1) // 2))


def test_perturbed_curve():
    base = C.moment_curve(3, 3)
    assert C.perturbed_curve(base, 0.0, 5.0) is base
    g = C.perturbed_curve(base, 0.01, 3.0)
    assert C.min_abs_torsion(g) > 1e-3
    with pytest.raises(ValueError, match="torsion"):
        C.perturbed_curve(base, 1.0, 10.0)


@pytest.mark.parametrize("spec", ["moment", "helix", "perturbed:a=0.02,f=3"])
def test_zoo_torsion_nonvanishing(spec):
    assert C.min_abs_torsion(C.curve_from_id(spec)) > 0


def test_taylor_frame_examples():
    g = C.moment_curve(3, 3)
    assert np.allclose(C.taylor_frame(g, 0.0, 3).M, np.eye(3))
    M = C.taylor_frame(g, 0.5, 3).M
    assert np.allclose(np.triu(M, 1), 0) and np.allclose(np.diag(M), 1)
    assert np.linalg.det(C.taylor_frame(C.helix_curve(), 0.0, 3).M) == pytest.approx(1.0)
    f = C.taylor_frame(g, 0.2, 2, h=0.5)
    assert np.allclose(np.diag(f.D), [0.5, 0.25, 1])
    with pytest.raises(ValueError):
        C.taylor_frame(g, 1.5, 3)


def test_singular_frame_rejected():
    flat = C.moment_curve(2, 3)
    with pytest.raises(ValueError, match="singular"):
        C.taylor_frame(flat, 0.3, 3)


@given(st.floats(0.01, 1.0))
@settings(max_examples=30, deadline=None)
def test_normalize_moment_fixed_point(h):
    g = C.moment_curve(3, 3)
    assert C.c_norm_distance(C.normalize_curve(g, 0.0, h, 3), g, 4) <= 1e-9


def test_normalize_rejects_escape():
    g = C.moment_curve(3, 3)
    with pytest.raises(ValueError):
        C.normalize_curve(g, 0.9, 0.2, 3)
    with pytest.raises(ValueError):
        C.normalize_curve(g, 0.5, 0.0, 3)


def test_normalize_perturbed_converges_linearly():
    g = C.perturbed_curve(C.moment_curve(3, 3), 0.02, 3.0)
    ref = C.moment_curve(3, 3)
    hs = 2.0 ** -np.arange(3, 11)
    dist = [C.c_norm_distance(C.normalize_curve(g, 0.3, h, 3), ref, 4) for h in hs]
    slope = np.polyfit(np.log(hs), np.log(dist), 1)[0]
    assert slope >= 0.9


def test_normalize_negative_h_is_admissible():
    g = C.perturbed_curve(C.moment_curve(3, 3), 0.02, 3.0)
    n = C.normalize_curve(g, 0.6, -0.05, 3)
    assert C.min_abs_torsion(n) > 0.5
    assert C.c_norm_distance(n, C.moment_curve(3, 3), 4) < 0.1


def test_c_norm_distance_closed_form():
    g = C.moment_curve(3, 3)
    a = 0.3

    def fn(t):
        return g(t) + np.outer(a * t**4, [0, 0, 1])

    bumped = C.finite_difference_curve(3, fn)
    # sup over derivatives of a*t^4 on [0,1] is the third derivative, 24 a
    assert C.c_norm_distance(g, g, 4) == 0.0
    assert C.c_norm_distance(bumped, g, 3) == pytest.approx(24 * a, rel=1e-3)
    with pytest.raises(ValueError):
        C.c_norm_distance(g, g, 5)


@pytest.mark.parametrize("spec", ["moment", "helix"])
def test_finite_difference_agrees_with_exact(spec):
    g = C.curve_from_id(spec)
    fd = C.finite_difference_curve(3, lambda t: g(t))
    t = np.linspace(0.05, 0.95, 17)
    err = np.abs(fd.derivative(t, 1) - g.derivative(t, 1)).max()
    assert err <= 1e-6 * np.abs(g.derivative(t, 1)).max()


def test_tangent_normal_frame_orthonormal():
    F = C.tangent_normal_frame(C.helix_curve(), np.linspace(0, 1, 9))
    eye = np.einsum("tji,tjk->tik", F, F)
    assert np.allclose(eye, np.eye(3))
    v = C.helix_curve().derivative(np.linspace(0, 1, 9), 1)
    cos = np.einsum("ti,ti->t", F[:, :, 0], v) / np.linalg.norm(v, axis=1)
    assert np.allclose(cos, 1)


def test_scaling_matrix():
    assert np.allclose(np.diag(C.scaling_matrix(4, 2, 0.5)), [0.5, 0.25, 1, 1])
