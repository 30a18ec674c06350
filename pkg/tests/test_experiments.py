import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvedecay import experiments as X
from curvedecay import measures as M


def test_fit_exact_power():
    lams = 2.0 ** np.arange(4, 10)
    rep = X.fit_loglog(lams, lams**-2.0)
    assert rep.slope == pytest.approx(-2.0, abs=1e-12)
    assert rep.r_squared == pytest.approx(1.0, abs=1e-12)


def test_fit_noisy_power():
    rng = np.random.default_rng(0)
    lams = 2.0 ** np.arange(4, 14)
    vals = 3.0 * lams**-0.75 * (1 + 0.05 * rng.standard_normal(lams.size))
    assert X.fit_loglog(lams, vals).slope == pytest.approx(-0.75, abs=0.05)


def test_fit_constant():
    rep = X.fit_loglog([4, 8, 16, 32], [0.3] * 4)
    assert rep.slope == 0.0 and rep.r_squared == 1.0


def test_fit_rejects_bad_input():
    with pytest.raises(ValueError):
        X.fit_loglog([4, 8, 16, 32], [1.0, 0.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        X.fit_loglog([4, 8, 16], [1.0, 1.0, 1.0])


@given(st.lists(st.floats(1e-6, 1e6), min_size=4, max_size=12))
def test_fit_r_squared_in_unit_interval(vals):
    lams = 4.0 * 2.0 ** np.arange(len(vals))
    r2 = X.fit_loglog(lams, vals).r_squared
    assert 0.0 <= r2 <= 1.0


def test_ladder_validation_and_budget():
    lad = X.LambdaLadder.powers(6, 14)
    assert lad.values[0] == 64 and lad.values[-1] == 2**14
    assert np.all(np.diff(lad.values) > 0)
    for bad in (dict(lambda_0=2), dict(lambda_0=8, ratio=1.0), dict(lambda_0=8, count=3)):
        with pytest.raises(ValueError):
            X.LambdaLadder(**bad)
    with pytest.warns(RuntimeWarning):
        assert lad.capped(2**10).values[-1] == 2**10
    with pytest.raises(X.BudgetError):
        _ = lad.capped(200).values


def _report(slope, r2=1.0):
    return X.FitReport([1, 2, 3, 4], [1, 1, 1, 1], slope, 0.0, r2, [0, 0, 0, 0])


@pytest.mark.parametrize(
    "slope, rule, upper, verdict",
    [
        (-0.80, "le", None, X.PASS),
        (-0.40, "le", None, X.FAIL),
        (-0.30, "ge", None, X.PASS),
        (-0.60, "ge", None, X.FAIL),
        (-0.52, "band", None, X.PASS),
        (-0.40, "band", None, X.FAIL),
        (-0.30, "range", -0.2, X.PASS),
        (-0.10, "range", -0.2, X.FAIL),
    ],
)
def test_judge_rules(slope, rule, upper, verdict):
    assert X.judge(_report(slope), -0.5, 0.05 if rule != "range" else 0.5, rule, upper=upper).verdict == verdict


def test_judge_low_r2_is_inconclusive():
    assert X.judge(_report(-1.0, r2=0.5), -0.5, 0.05, "le").verdict == X.INCONCLUSIVE
    with pytest.raises(ValueError):
        X.judge(_report(-1.0), -0.5, 0.05, "between")


def test_point_mass_decay_fails():
    lad = X.LambdaLadder.powers(6, 10)
    rep = X.run_decay(M.point_mass(3), "moment", 2.5, lad)
    assert rep.slope == pytest.approx(0.0, abs=1e-9)
    assert rep.verdict == X.FAIL
    assert rep.extra["growth_audit"]["ok"] is False


def test_cube_decay_passes():
    rep = X.run_decay("cube", "moment", 3.0 - 1e-9, X.LambdaLadder.powers(4, 9), d=3)
    assert rep.verdict == X.PASS


def test_decay_report_is_deterministic():
    lad = X.LambdaLadder.powers(6, 9)
    a = X.run_decay(M.cantor_product_measure(3, 1.5, 6), "helix", 1.5, lad).to_dict()
    b = X.run_decay(M.cantor_product_measure(3, 1.5, 6), "helix", 1.5, lad).to_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_growth_audit_distinguishes_point_mass():
    assert not X.growth_audit(M.point_mass(3), 2.5, 1e-3)["ok"]
    cube = M.cantor_product_measure(3, 3.0, 6)
    assert X.growth_audit(cube, 3.0, 1e-3)["ok"]


def test_separated_intervals():
    ivs = X.separated_intervals(3, 0.25)
    assert ivs[0][0] == 0 and ivs[-1][1] == pytest.approx(1.0)
    gaps = [b[0] - a[1] for a, b in zip(ivs, ivs[1:])]
    assert np.allclose(gaps, 0.25)
    with pytest.raises(ValueError):
        X.separated_intervals(3, 0.6)


def test_sharpness_resolution():
    assert X.sharpness_resolution(16.0) == 64
    assert X.sharpness_resolution(2**12) == int(np.ceil(8 * 2**12 / (2 * np.pi)))


def test_rescale_growth_lebesgue_cube():
    rep = X.run_rescale_growth(3, 3, 3.0)
    assert rep.verdict == X.PASS
    assert rep.slope == pytest.approx(-6.0, abs=0.15)
