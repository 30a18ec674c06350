import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvedecay import measures as M

CANTOR_1D = math.log(2) / math.log(3)


def test_point_mass_and_total_mass():
    pm = M.point_mass(3, mass=2.5)
    assert pm.total_mass == 2.5
    for m in (
        M.cantor_product_measure(2, 1.2, 5),
        M.cantor_product_measure(3, 3.0, 3),
        M.cube_measure(2, 16),
        M.segment_measure(2, 100),
        M.comb_measure(3, 2.5, 2**8),
    ):
        assert m.total_mass == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize(
    "build",
    [
        lambda: M.cantor_product_measure(2, 1.2, 5),
        lambda: M.cantor_product_measure(3, 2.5, 3),
        lambda: M.comb_measure(3, 2.5, 2**10),
        lambda: M.sharpness_measure(3, 2.5, 16),
        lambda: M.aniso_bump_measure(3, 2.5, 0, 64.0, 32),
        lambda: M.uniform_ball_measure(3, 12),
    ],
)
def test_support_and_ft_oracle(build):
    m = build()
    assert m.support_radius() <= 1 + 1e-12
    assert np.all(m.weights >= 0)
    if m.has_analytic_ft:
        assert m.ft_self_check(n=100, radius=10.0) <= 1e-6 * m.total_mass


def test_segment_energy():
    # int int |x - y|^{-1/2} over [0, 1]^2 = 8/3
    seg = M.segment_measure(1, 10_000, 0.0, 1.0)
    assert M.energy_direct(seg, 0.5) == pytest.approx(8 / 3, rel=0.02)


def test_two_atom_energy():
    two = M.DiscreteMeasure.from_points([[0.0, 0.0], [1.0, 0.0]], [1.0, 1.0])
    alpha = 0.7
    # nearest spacing 1 caps the diagonal at 1 per atom
    off = M.energy_direct(two, alpha, closure="cap") - 2 * 1.0**-alpha
    assert off == pytest.approx(2.0)


def test_energy_monotone_in_alpha():
    m = M.cantor_product_measure(2, 1.2, 5).pushforward(np.eye(2) * 0.5)
    vals = [M.energy_direct(m, a, closure="cap") for a in (0.3, 0.6, 0.9, 1.1)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_energy_fourier_proportional_to_direct():
    ratios = []
    for depth in (4, 5, 6):
        c = M.cantor_product_measure(2, 1.2, depth)
        ratios.append(M.energy_fourier(c, 1.0, 200.0) / M.energy_direct(c, 1.0))
    assert max(ratios) / min(ratios) <= 1.1


def test_growth_point_mass():
    pm = M.point_mass(3, mass=0.5)
    for alpha, r_min in ((2.0, 1 / 64), (1.3, 1 / 8)):
        rep = M.growth_norm(pm, alpha, r_min)
        assert rep.value == pytest.approx(0.5 * M.dyadic_radii(r_min).min() ** -alpha)


def test_growth_witness_attains_value():
    m = M.cantor_product_measure(2, 1.2, 5)
    rep = M.growth_norm(m, 1.2, 1 / 64)
    d = np.linalg.norm(m.points - rep.witness_center, axis=1)
    mass = m.weights[d <= rep.witness_radius].sum()
    assert mass * rep.witness_radius**-1.2 == pytest.approx(rep.value, rel=1e-9)
    assert rep.value >= max(rep.profile.values()) - 1e-12


def test_cantor_growth_bounded_in_depth():
    vals = [M.growth_norm(M.cantor_product_measure(1, CANTOR_1D, k), CANTOR_1D, 3.0**-k).value for k in (6, 8, 10, 12)]
    assert max(vals) / min(vals) <= 2.0


def test_lebesgue_cube_growth_constant_in_depth():
    vals = [M.growth_norm(M.cantor_product_measure(2, 2.0, k), 2.0, 2.0**-k).value for k in (4, 5, 6)]
    assert max(vals) == pytest.approx(min(vals), rel=1e-9)


def test_uniform_ball_growth_order_one():
    # unit mass on the unit ball: mu(B(x, r)) r^{-d} tends to 1/vol(B) times the overlap factor
    val = M.growth_norm(M.uniform_ball_measure(2, 64), 2.0, 1 / 32).value
    assert 1 / math.pi <= val <= 2.0


def test_sharpness_measure_structure():
    m = M.sharpness_measure(3, 2.5, 16)
    assert m.params["pinned"] == 0 and m.params["power"] == pytest.approx(0.5)
    m = M.sharpness_measure(3, 1.5, 16)
    assert m.params["pinned"] == 1
    assert np.all(m.points[:, 0] == 0)


def test_sharpness_growth_stable_under_refinement():
    a = M.growth_norm(M.sharpness_measure(3, 2.5, 16), 2.5, 1 / 8).value
    b = M.growth_norm(M.sharpness_measure(3, 2.5, 32), 2.5, 1 / 8).value
    assert abs(a - b) <= 0.1 * b


def test_comb_growth_uniform_in_lambda():
    vals = []
    for lam in (2**8, 2**12, 2**16):
        cm = M.comb_measure(3, 2.5, lam)
        vals.append(M.growth_norm(cm, 2.5, 2 * M.atom_floor(cm)).value)
    assert max(vals) / min(vals) <= 1.5


def test_comb_single_slab():
    # T = floor(lam^{(alpha-d+1)/2}) = 1 at alpha = d - 1
    cm = M.comb_measure(3, 2.0, 2**8)
    assert M.comb_teeth(3, 2.0, 2**8) == 1
    assert cm.total_mass == pytest.approx(1.0)


def test_aniso_bump_ft_on_dual_box():
    lam, d, ell = 256.0, 3, 0
    m = M.aniso_bump_measure(d, 2.5, ell, lam, 32)
    scales = lam ** (1 - np.arange(1, d + 1) / (d - ell))
    corners = np.array(np.meshgrid(*[[-s, s] for s in scales])).reshape(d, -1).T
    assert np.min(np.abs(m.ft(corners))) >= 0.1


def test_rescale_pushforward():
    m = M.cantor_product_measure(3, 2.0, 3)
    A = np.array([[1.0, 0.2, 0.0], [0.0, 1.0, 0.1], [0.0, 0.0, 1.0]])
    r = M.rescale_measure(m, A, 0.5, 2)
    D = np.diag([0.5, 0.25, 1.0])
    assert np.allclose(r.points, m.points @ (D @ A).T)
    assert r.total_mass == pytest.approx(m.total_mass)
    same = M.rescale_measure(m, np.eye(3), 1.0, 3)
    assert np.allclose(same.points, m.points)
    with pytest.raises(ValueError):
        M.rescale_measure(m, np.zeros((3, 3)), 0.5, 2)


def test_wolff_partition_is_exact():
    c = M.cantor_product_measure(2, 1.2, 5)
    pieces = M.wolff_decompose(c, 64, 1.0)
    assert len(pieces) <= math.ceil(math.log2(64)) + 2
    assert math.fsum(p.total_mass for p in pieces) == c.total_mass
    stacked = np.sort(np.concatenate([p.weights for p in pieces]))
    assert np.array_equal(stacked, np.sort(c.weights))


def test_wolff_cube_single_piece():
    cube = M.cube_measure(2, 32)
    pieces = M.wolff_decompose(cube, 16, 2.0)
    assert len(pieces) == 1
    const = M.wolff_constants(pieces, 1.5, 16, M.energy_direct(cube, 1.5))
    assert 0.1 <= const[0] <= 10


def test_wolff_constants_bounded_in_R():
    c = M.cantor_product_measure(2, 1.2, 6)
    e = M.energy_direct(c, 1.0)
    consts = [M.wolff_constants(M.wolff_decompose(c, R, 1.0), 1.0, R, e).max() for R in (16, 64, 256, 1024)]
    assert max(consts) / min(consts) <= 4


def test_export_import_round_trip(tmp_path):
    m = M.cantor_product_measure(2, 1.2, 4)
    for binary in (False, True):
        path = tmp_path / ("m.bin" if binary else "m.csv")
        M.export_measure(m, path, binary=binary)
        back = M.import_measure(path, binary=binary)
        assert np.array_equal(back.points, m.points)
        assert np.array_equal(back.weights, m.weights)


@given(st.integers(1, 40), st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_combine_is_linear(n, seed):
    rng = np.random.default_rng(seed)
    a = M.DiscreteMeasure.from_points(rng.uniform(-0.5, 0.5, (n, 2)), rng.random(n))
    b = M.DiscreteMeasure.from_points(rng.uniform(-0.5, 0.5, (n, 2)), rng.random(n))
    c = M.combine([a, b], [2.0, 0.5])
    xi = rng.normal(size=(8, 2)) * 5
    assert np.allclose(c.ft(xi), 2.0 * a.ft(xi) + 0.5 * b.ft(xi), atol=1e-12)


def test_rejects_negative_weights():
    with pytest.raises(ValueError):
        M.DiscreteMeasure.from_points([[0.0, 0.0]], [-1.0])
