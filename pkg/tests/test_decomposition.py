import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from curvedecay import curves as C
from curvedecay import decomposition as D

MOMENT = C.moment_curve(3, 3)


def test_related_examples():
    I = D.DyadicInterval(2, 0)
    assert D.related(I, D.DyadicInterval(2, 2))
    assert not D.related(I, D.DyadicInterval(2, 1))
    assert D.related(I, D.DyadicInterval(2, 3))
    assert not D.related(D.DyadicInterval(3, 0), D.DyadicInterval(3, 4))
    with pytest.raises(ValueError):
        D.related(I, D.DyadicInterval(3, 0))
    with pytest.raises(ValueError):
        D.related(D.DyadicInterval(1, 0), D.DyadicInterval(1, 1))


@given(st.integers(2, 10).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, 2**n - 1), st.integers(0, 2**n - 1))))
def test_related_symmetric(args):
    n, i, j = args
    I, J = D.DyadicInterval(n, i), D.DyadicInterval(n, j)
    assert D.related(I, J) == D.related(J, I)


def test_dyadic_interval_validation():
    assert D.DyadicInterval(3, 5).as_tuple() == (0.625, 0.75)
    assert D.DyadicInterval(3, 5).parent == D.DyadicInterval(2, 2)
    with pytest.raises(ValueError):
        D.DyadicInterval(2, 4)


def test_whitney_cover_256():
    cover = D.whitney_cover(256)
    assert cover.levels == [2, 3, 4]
    counts = [len(cover.pairs_at(n)) for n in cover.levels]
    # 3 * 2^n - 6 ordered pairs per level
    assert counts == [3 * 2**n - 6 for n in cover.levels]
    g = (np.arange(64) + 0.5) / 64
    grid = np.array(np.meshgrid(g, g)).reshape(2, -1).T
    mult = cover.multiplicity(grid)
    assert mult.min() >= 1 and mult.max() <= 8


def test_whitney_diagonal_only_in_D():
    cover = D.whitney_cover(1024)
    x = np.linspace(0, 1, 301)
    diag = np.column_stack([x, x])
    n_pairs = len(cover.pairs)
    b = cover.boxes()[:n_pairs]
    inside = (diag[:, :1] >= b[:, 0]) & (diag[:, :1] <= b[:, 1]) & (diag[:, 1:] >= b[:, 2]) & (diag[:, 1:] <= b[:, 3])
    assert not inside.any()


def test_whitney_rejects_small_lambda():
    with pytest.raises(ValueError):
        D.whitney_cover(8)


def test_whitney_csv(tmp_path):
    cover = D.whitney_cover(64)
    path = tmp_path / "cover.csv"
    cover.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "kind,level,i_index,j_index"
    assert len(lines) == 1 + len(cover.pairs) + len(cover.diagonal)


def _partition(k):
    e = np.linspace(0, 1, k + 1)
    return list(zip(e[:-1], e[1:]))


def test_omega_curve_points_go_home():
    lam, ivs = 4096.0, _partition(8)
    t = np.concatenate([np.linspace(a, b, 12)[1:-1] for a, b in ivs])
    res = D.omega_partition(MOMENT, lam, ivs, lam * MOMENT(t))
    expected = np.minimum((t * 8).astype(int), 7)
    assert np.array_equal(res.labels, expected)


def test_omega_total_and_single_valued():
    lam, ivs = 4096.0, _partition(16)
    x, _ = D.tube_sample(MOMENT, lam, 100_000, seed=1, interval=(0.01, 0.99))
    res = D.omega_partition(MOMENT, lam, ivs, x)
    assert res.unassigned == 0
    assert res.ambiguous == 0


def test_omega_endpoint_intervals_one_sided():
    lam, ivs = 1024.0, _partition(4)
    # beyond the start of the curve only the first interval's one-sided test applies
    x = lam * MOMENT(0.0) - 5 * MOMENT.derivative(0.0, 1)
    assert D.omega_partition(MOMENT, lam, ivs, x).labels[0] == 0
    x = lam * MOMENT(1.0) + 5 * MOMENT.derivative(1.0, 1)
    assert D.omega_partition(MOMENT, lam, ivs, x).labels[0] == 3


def test_omega_rejects_bad_partitions():
    with pytest.raises(ValueError):
        D.omega_partition(MOMENT, 1024.0, [(0, 0.5), (0.6, 1)], np.zeros((1, 3)))
    with pytest.raises(ValueError):
        D.omega_partition(MOMENT, 16.0, _partition(64), np.zeros((1, 3)))


def test_hull_small_constant():
    for lam in (2.0**10, 2.0**14):
        L = lam**-0.5
        hull = D.parallelotope_hull(MOMENT, (0.3, 0.3 + L), lam)
        assert hull.ok and hull.C <= 8
        x, _ = D.tube_sample(MOMENT, lam, 2000, seed=5, interval=(0.3, 0.3 + L))
        assert hull.contains(x).all()


def test_hull_volume_exponents():
    # volume = lam^d (C L)(C L^2)^{d-1}: exponents d in lam and 2d-1 in L
    d = 3
    lams = 2.0 ** np.arange(10, 15)
    Ls = np.array([0.05, 0.1, 0.2, 0.4])
    rows, vals = [], []
    for lam in lams:
        for L in Ls:
            h = D.parallelotope_hull(MOMENT, (0.1, 0.1 + L), lam)
            rows.append([1.0, math.log(lam), math.log(L)])
            vals.append(math.log(h.volume / h.C**d))
    coef, *_ = np.linalg.lstsq(np.array(rows), np.array(vals), rcond=None)
    assert coef[1] == pytest.approx(d, abs=0.1)
    assert coef[2] == pytest.approx(2 * d - 1, abs=0.1)


def test_hull_full_interval_contains_tube():
    lam = 256.0
    hull = D.parallelotope_hull(MOMENT, (0.0, 1.0), lam)
    x, _ = D.tube_sample(MOMENT, lam, 5000, seed=2)
    assert hull.contains(x).all()


def test_intersection_symmetric_under_swap():
    lam, n = 2.0**12, 4
    I, J = D.DyadicInterval(n, 3), D.DyadicInterval(n, 5)
    mid = lambda K: MOMENT(0.5 * (K.lo + K.hi))[0]
    y = lam * (mid(J) - mid(I)) + np.array([0.7, -0.4, 0.3])
    a = D.intersection_measure(MOMENT, I, J, lam, y=y, n_mc=100_000, seed=1)
    b = D.intersection_measure(MOMENT, J, I, lam, y=-y, n_mc=100_000, seed=2)
    assert a.value > 0 and b.value > 0
    assert abs(a.value - b.value) <= 4 * math.hypot(a.stderr, b.stderr)


def test_intersection_far_shift_is_zero():
    I, J = D.DyadicInterval(3, 1), D.DyadicInterval(3, 4)
    est = D.intersection_measure(MOMENT, I, J, 4096.0, y=np.array([1e6, 0, 0]), n_mc=5000)
    assert est.value == 0.0


def test_intersection_rejects_equal_intervals():
    I = D.DyadicInterval(3, 1)
    with pytest.raises(ValueError):
        D.intersection_measure(MOMENT, I, I, 4096.0)
