"""Lambda-ladder drivers: measure a quantity along a geometric ladder, fit the
log-log slope and compare it with the predicted exponent."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import exponents
from . import measures as M
from . import transforms as T
from .curves import Curve, curve_from_id, moment_curve, taylor_frame

PASS, FAIL, INCONCLUSIVE, INFORMATIONAL = "PASS", "FAIL", "INCONCLUSIVE", "INFORMATIONAL"
MIN_R2 = 0.9
CANTOR_ALPHA = 2 * math.log(2) / math.log(3)  # four-corner Cantor set in the plane


class BudgetError(RuntimeError):
    """The requested ladder does not fit the compute budget."""


@dataclass(frozen=True)
class LambdaLadder:
    lambda_0: float
    ratio: float = 2.0
    count: int = 9
    max_lambda: float | None = None

    def __post_init__(self):
        if self.lambda_0 < 4:
            raise ValueError(f"lambda_0 must be at least 4, got {self.lambda_0}")
        if self.ratio <= 1:
            raise ValueError(f"ratio must exceed 1, got {self.ratio}")
        if self.count < 4:
            raise ValueError(f"a ladder needs at least 4 rungs, got {self.count}")

    @classmethod
    def powers(cls, lo: int, hi: int, base: float = 2.0, max_lambda: float | None = None) -> "LambdaLadder":
        return cls(base**lo, base, hi - lo + 1, max_lambda)

    @property
    def full(self) -> np.ndarray:
        return self.lambda_0 * self.ratio ** np.arange(self.count)

    @property
    def values(self) -> np.ndarray:
        lams = self.full
        if self.max_lambda is None:
            return lams
        kept = lams[lams <= self.max_lambda * (1 + 1e-12)]
        if kept.size < 4:
            raise BudgetError(f"max lambda {self.max_lambda:g} leaves {kept.size} rungs; need 4")
        if kept.size < lams.size:
            warnings.warn(f"ladder truncated at lambda={kept[-1]:g} by the budget", RuntimeWarning, stacklevel=2)
        return kept

    def capped(self, max_lambda: float | None) -> "LambdaLadder":
        if max_lambda is None:
            return self
        cap = max_lambda if self.max_lambda is None else min(max_lambda, self.max_lambda)
        return LambdaLadder(self.lambda_0, self.ratio, self.count, cap)


@dataclass
class FitReport:
    lambdas: list[float]
    values: list[float]
    slope: float
    intercept: float
    r_squared: float
    residuals: list[float]
    predicted: float | None = None
    margin: float | None = None
    rule: str = ""
    verdict: str = INFORMATIONAL
    name: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _plain(asdict(self))

    def line(self) -> str:
        pred = "" if self.predicted is None else f" predicted {self.predicted:+.4f} ({self.rule})"
        return f"{self.name}: slope {self.slope:+.4f} r2 {self.r_squared:.4f}{pred} -> {self.verdict}"


def _plain(obj):
    """Recursively turn numpy scalars and arrays into JSON-friendly values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def fit_loglog(lambdas, values, name: str = "") -> FitReport:
    """Least squares line through ``(log lambda, log value)``."""
    x = np.asarray(lambdas, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.shape != y.shape or x.size < 4:
        raise ValueError("need at least 4 (lambda, value) pairs")
    if np.any(y <= 0) or np.any(x <= 0):
        raise ValueError("log-log fit needs positive lambdas and values")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    res = ly - (slope * lx + intercept)
    ss = float(np.sum((ly - ly.mean()) ** 2))
    # a flat line is fitted perfectly; treat it as r^2 = 1
    r2 = 1.0 if ss <= 1e-24 * max(1.0, float(np.sum(ly**2))) else max(0.0, 1.0 - float(np.sum(res**2)) / ss)
    if abs(slope) < 1e-13:
        slope = 0.0
    return FitReport(x.tolist(), y.tolist(), float(slope), float(intercept), r2, res.tolist(), name=name)


def judge(report: FitReport, predicted: float, margin: float, rule: str, min_r2: float = MIN_R2, upper: float | None = None) -> FitReport:
    """Attach a verdict.

    ``rule`` is ``"le"`` (slope at most predicted + margin), ``"ge"`` (at least
    predicted - margin), ``"band"`` (within margin either side) or
    ``"range"`` (between predicted - margin and ``upper``).
    """
    s = report.slope
    if rule == "le":
        ok = s <= predicted + margin
    elif rule == "ge":
        ok = s >= predicted - margin
    elif rule == "band":
        ok = abs(s - predicted) <= margin
    elif rule == "range":
        ok = predicted - margin <= s <= upper
        report.extra["upper"] = upper
    else:
        raise ValueError(f"unknown rule {rule!r}")
    report.predicted, report.margin, report.rule = float(predicted), float(margin), rule
    if report.r_squared < min_r2:
        report.verdict = INCONCLUSIVE
    else:
        report.verdict = PASS if ok else FAIL
    report.extra["min_r2"] = min_r2
    return report


# -- measure and curve specs --------------------------------------------------

MeasureFamily = Callable[[float], M.DiscreteMeasure]


def sharpness_resolution(lam: float, oversample: float = 8.0) -> int:
    """Power-axis resolution that keeps ``oversample`` atoms per wavelength."""
    return max(64, int(math.ceil(oversample * lam / (2 * math.pi))))


def measure_family(name: str, d: int, alpha: float, **params) -> MeasureFamily:
    """``lambda -> measure``; only ``sharpness`` refines with lambda."""
    if name == "sharpness":
        over = float(params.get("oversample", 8.0))
        return lambda lam: M.sharpness_measure(d, alpha, sharpness_resolution(lam, over))
    if name == "cantor":
        fixed = M.cantor_product_measure(d, alpha, int(params.get("depth", 14)))
    else:
        fixed = M.measure_from_id(name, d, alpha, **params)
    return lambda lam: fixed


def _family(measure, d: int | None = None, alpha: float | None = None) -> MeasureFamily:
    if isinstance(measure, M.DiscreteMeasure):
        return lambda lam: measure
    if isinstance(measure, str):
        return measure_family(measure, d, alpha)
    return measure


def _curve(curve, d: int) -> Curve:
    return curve_from_id(curve, d) if isinstance(curve, str) else curve


def growth_audit(measure: M.DiscreteMeasure, alpha: float, r_min: float, decades: int = 4) -> dict:
    """Slope of ``r -> sup_x mu(Q(x, r)) / r^alpha`` over the smallest resolved radii.

    An ``alpha``-dimensional measure keeps this bounded as ``r`` shrinks; a
    point mass makes it grow like ``r^{-alpha}``.  The audit passes when the
    fitted slope stays above ``-alpha / 2``.  Radii stop at twice the atom
    spacing, below which every discrete measure looks like a point mass.
    """
    # gaps of a self-similar construction are genuine, only its last generation is not
    floor = measure.cell if "similarity" in measure.params else M.atom_floor(measure)
    r = max(r_min, 2 * floor)
    if r * 2**decades > 2.0:
        return {"checked": False, "reason": "radius range too short"}
    if M.product_axes(measure) is not None:
        rep = M.growth_norm_box(measure, alpha, r)
    elif measure.size <= 200_000:
        rep = M.growth_norm(measure, alpha, r)
    else:
        return {"checked": False, "reason": "measure too large for the ball audit"}
    radii = sorted(rep.profile)[: decades + 1]
    vals = [rep.profile[x] for x in radii]
    if min(vals) <= 0:
        return {"checked": False, "reason": "empty balls at the smallest radii"}
    slope = float(np.polyfit(np.log(radii), np.log(vals), 1)[0])
    return {"checked": True, "r_min": r, "value": rep.value, "slope": slope, "ok": slope >= -alpha / 2}


# -- experiments --------------------------------------------------------------


def run_decay(
    measure,
    curve,
    alpha: float,
    ladder: LambdaLadder,
    spec: T.QuadratureSpec = T.QuadratureSpec(),
    margin: float = 0.05,
    d: int = 3,
    audit: bool = True,
) -> FitReport:
    """Curve average ``int_0^1 |mu^(lam gamma(t))|^2 dt`` against ``lambda^{-delta}``."""
    fam = _family(measure, d, alpha)
    lams = ladder.values
    first = fam(lams[0])
    d = first.d
    g = _curve(curve, d)
    vals = [T.curve_average(fam(lam), g, lam, spec).value for lam in lams]
    rep = fit_loglog(lams, vals, name=f"decay[{first.label},{g.label},alpha={alpha:g}]")
    delta = exponents.delta_theorem(d, alpha).value
    judge(rep, -delta, margin, "le")
    rep.extra["delta_upper"] = exponents.delta_upper(d, alpha).value
    rep.extra["within_upper"] = rep.slope >= -rep.extra["delta_upper"] - margin
    if audit:
        a = growth_audit(fam(lams[-1]), alpha, 1.0 / lams[-1])
        rep.extra["growth_audit"] = a
        if a.get("checked") and not a["ok"]:
            rep.verdict = FAIL
            rep.extra["note"] = "growth audit failed: the measure is not alpha-dimensional at these scales"
    return rep


def run_sharpness_lower(
    d: int,
    alpha: float,
    ell: int,
    ladder: LambdaLadder,
    resolution: int = 32,
    c: float = 0.25,
    margin: float = 0.05,
    min_r2: float = MIN_R2,
    energy_margin: float = 0.1,
    curve: Curve | None = None,
    spec: T.QuadratureSpec = T.QuadratureSpec(),
) -> FitReport:
    """Curve average of the anisotropic bump against ``lambda^{-1/(d-ell)}``.

    The bump is built in the coordinates of the curve's Taylor frame at 0
    (identity for the moment curve).  Besides the full average the report
    carries the average over ``[0, c lambda^{-1/(d-ell)}]`` and the energy
    exponent against ``h([d - alpha])``.
    """
    g = curve if curve is not None else moment_curve(d, d)
    frame = taylor_frame(g, 0.0, d).M
    frame = None if np.allclose(frame, np.eye(d)) else frame
    lams = ladder.values
    full, window, energy = [], [], []
    for lam in lams:
        mu = M.aniso_bump_measure(d, alpha, ell, lam, resolution, frame=frame)
        full.append(T.curve_average(mu, g, lam, spec).value)
        window.append(T.curve_average(mu, g, lam, spec, interval=(0.0, c * lam ** (-1.0 / (d - ell)))).value)
        energy.append(M.gaussian_product_energy(mu.params["shrink"] / M.aniso_scales(d, ell, lam), alpha))
    rep = fit_loglog(lams, full, name=f"sharpness[d={d},alpha={alpha:g},ell={ell}]")
    judge(rep, -1.0 / (d - ell), margin, "band", min_r2=min_r2)
    win = fit_loglog(lams, window)
    en = fit_loglog(lams, energy)
    n = exponents.frac_parts(d - alpha).whole
    h = exponents.h_profile(d, alpha, ell, n)
    rep.extra.update(
        {
            "window_values": window,
            "window_slope": win.slope,
            "window_r2": win.r_squared,
            "energy_values": energy,
            "energy_slope": en.slope,
            "energy_predicted": h,
            "energy_ok": abs(en.slope - h) <= energy_margin,
            "h_argmax": exponents.h_argmax(d, alpha, ell),
        }
    )
    if rep.verdict == PASS and not rep.extra["energy_ok"]:
        rep.verdict = FAIL
    return rep


def extension_prediction(d: int, alpha: float, q: float, ell: int, profile: str) -> float:
    if profile == "comb":
        if not (d - 1 <= alpha <= d):
            raise ValueError("the comb profile needs d - 1 <= alpha <= d")
        return (d - alpha) / 4.0
    return exponents.kappa_circ(d, alpha, q, ell).value


def _extension_value(d, alpha, q, ell, lam, profile, g, c, resolution):
    if profile == "comb":
        mu = M.comb_measure(d, alpha, lam)
        F, nrm = T.neighborhood_ghat(g, lam, "comb_G3", mu.points, teeth=mu.params["teeth"], shift=mu.params["shift"])
        return T.lq_norm_mu(F, mu, q) / nrm
    n = exponents.frac_parts(d - alpha).whole
    free = d - n
    if profile == "indicator":
        mu = M.sharpness_measure(d, alpha, resolution, window=[(-c / lam, c / lam)] * free)
        F, nrm = T.neighborhood_ghat(g, lam, "indicator_sqrt_lambda", mu.points)
        return T.lq_norm_mu(F, mu, q) / nrm
    if profile == "sub_interval":
        m = d - ell
        sides = [c * lam ** (j / m - 1.0) if j <= m else c for j in range(1, d + 1)]
        mu = M.sharpness_measure(d, alpha, resolution, window=[(0.0, s) for s in sides[n:]])
        frame = taylor_frame(g, 0.0, d).M
        mu = mu.pushforward(np.linalg.inv(frame).T, label="sharpness|window|frame")
        F, nrm = T.neighborhood_ghat(g, lam, "sub_interval", mu.points, interval=(0.0, lam ** (-1.0 / m)))
        return T.lq_norm_mu(F, mu, q) / nrm
    raise ValueError(f"unknown profile {profile!r}")


def run_extension_lower(
    d: int,
    alpha: float,
    q: float,
    ell: int,
    ladder: LambdaLadder,
    profile: str | None = None,
    c: float = 0.25,
    resolution: int = 4,
    margin: float = 0.07,
    curve: Curve | None = None,
) -> FitReport:
    """``||g^||_{L^q(mu)} / ||g||_2`` for the test pairs behind the lower bound on kappa.

    ``profile``: ``comb`` (comb measure against the modulated tensor profile),
    ``indicator`` (``ell = -1``: tube indicator against the measure near the
    origin) or ``sub_interval`` (``ell >= 0``: the tube over
    ``[0, lambda^{-1/(d-ell)}]`` against the measure on the small box where
    its transform is large).  The measure is restricted to the region the
    lower-bound argument uses, which can only lower the norm.
    """
    if profile is None:
        profile = "indicator" if ell == -1 else "sub_interval"
    if profile == "indicator" and ell != -1:
        raise ValueError("the indicator profile belongs to ell = -1")
    g = curve if curve is not None else moment_curve(d, d)
    predicted = extension_prediction(d, alpha, q, ell, profile)
    lams = ladder.values
    vals = [_extension_value(d, alpha, q, ell, lam, profile, g, c, resolution) for lam in lams]
    rep = fit_loglog(lams, vals, name=f"extension[{profile},d={d},alpha={alpha:g},q={q:g},ell={ell}]")
    judge(rep, predicted, margin, "ge")
    if profile == "sub_interval" and rep.verdict == INCONCLUSIVE:
        rep.verdict = INFORMATIONAL
    return rep


@dataclass
class DualReport:
    tube: FitReport
    curve: FitReport
    gap: float
    verdict: str
    margin: float = 0.15

    def to_dict(self) -> dict:
        return {"tube": self.tube.to_dict(), "curve": self.curve.to_dict(), "gap": self.gap, "verdict": self.verdict, "margin": self.margin}

    def line(self) -> str:
        return f"dual[{self.curve.name}]: tube {self.tube.slope:+.4f} curve {self.curve.slope:+.4f} gap {self.gap:.4f} -> {self.verdict}"


def run_dual_check(
    measure,
    curve,
    ladder: LambdaLadder,
    margin: float = 0.15,
    d: int = 3,
    alpha: float | None = None,
    seed: int = 0,
    spec: T.QuadratureSpec = T.QuadratureSpec(),
) -> DualReport:
    """Tube integral over ``lam gamma + O(1)`` against the curve average; the slopes differ by 1."""
    fam = _family(measure, d, alpha)
    lams = ladder.values
    first = fam(lams[0])
    g = _curve(curve, first.d)
    tube, avg = [], []
    for i, lam in enumerate(lams):
        mu = fam(lam)
        tube.append(T.tube_integral(mu, g, lam, spec, seed=seed + i).value)
        avg.append(T.curve_average(mu, g, lam, spec).value)
    name = f"{first.label},{g.label}"
    rt = fit_loglog(lams, tube, name=f"tube[{name}]")
    rc = fit_loglog(lams, avg, name=f"curve[{name}]")
    gap = rt.slope - rc.slope
    if rc.slope > -0.05:
        verdict = INFORMATIONAL  # no decay at all: the comparison says nothing
    elif min(rt.r_squared, rc.r_squared) < MIN_R2:
        verdict = INCONCLUSIVE
    else:
        verdict = PASS if abs(gap - 1.0) <= margin else FAIL
    return DualReport(rt, rc, float(gap), verdict, margin)


def separated_intervals(k: int, L: float) -> list[tuple[float, float]]:
    """``k`` equal intervals filling [0, 1] with gaps exactly ``L`` between neighbours."""
    length = (1.0 - (k - 1) * L) / k
    if length <= 0:
        raise ValueError(f"{k} intervals with separation {L} do not fit in [0, 1]")
    return [(i * (length + L), i * (length + L) + length) for i in range(k)]


def multilinear_norm(
    curve: Curve,
    lam: float,
    intervals: Sequence[tuple[float, float]],
    profiles: Sequence[Callable[[np.ndarray], np.ndarray]] | None = None,
    over_x: float = 2.0,
    over_t: float = 12.0,
    budget: float = 5e7,
) -> tuple[float, list[int]]:
    """``|| a prod_i E f_i ||_{L^2}`` with ``a`` the smooth cutoff of ``B(0, 1)``.

    The x-grid on ``[-1, 1]^d`` is a trapezoid rule at ``over_x`` times the
    Nyquist rate of ``|prod E f_i|^2`` along each axis (the sum of the ranges
    of ``gamma_j`` over the intervals).  Each ``E f_i`` factorises over
    coordinates, so a slab in the last coordinate costs one matrix product per
    interval.
    """
    d = curve.d
    if d < 2:
        raise ValueError("need d >= 2")
    ts, ws, gs = [], [], []
    speed = curve.speed_bound()
    for i, (a, b) in enumerate(intervals):
        n = max(64, int(math.ceil(over_t * lam * speed * (b - a) / (2 * math.pi))))
        n += n % 2
        t = np.linspace(a, b, n + 1)
        w = T._weights(n, a, b, "simpson")
        if profiles is not None:
            w = w * profiles[i](t)
        ts.append(t)
        ws.append(w)
        gs.append(curve(t))
    spread = np.sum([np.ptp(g_, axis=0) for g_ in gs], axis=0)
    band = lam * spread + 16.0  # the extra 16 covers the cutoff's own bandwidth
    sizes = [int(math.ceil(2 * over_x * f / (2 * math.pi))) + 1 for f in band]
    if float(np.prod(sizes, dtype=float)) > budget:
        raise BudgetError(f"x-grid {sizes} exceeds the budget of {budget:g} points at lambda={lam:g}")
    axes = [np.linspace(-1.0, 1.0, s) for s in sizes]
    phases = [[np.exp(1j * lam * np.outer(ax, g_[:, j])) for j, ax in enumerate(axes)] for g_ in gs]
    X = np.meshgrid(*axes[:-1], indexing="ij")
    flat = np.stack([x.ravel() for x in X], axis=1)
    total = 0.0
    for s, xs in enumerate(axes[-1]):
        pts = np.hstack([flat, np.full((flat.shape[0], 1), xs)])
        a = T.smooth_cutoff(pts)
        if not a.any():
            continue
        prod = a.astype(complex)
        for P, w in zip(phases, ws):
            prod = prod * _slab_sum(P, P[-1][s] * w).ravel()
        total += float(np.sum(np.abs(prod) ** 2))
    h = math.prod(ax[1] - ax[0] for ax in axes)
    return math.sqrt(total * h), sizes


def _slab_sum(P: list[np.ndarray], w: np.ndarray) -> np.ndarray:
    """``sum_t w(t) prod_{j < d-1} P_j[x_j, t]`` on the grid of the first ``d - 1`` axes."""
    if len(P) == 2:
        return P[0] @ w
    acc = P[0] * w
    for Pj in P[1:-2]:
        acc = acc[..., None, :] * Pj
    return acc @ P[-2].T


def run_multilinear(
    d: int,
    k: int,
    L: float,
    ladder: LambdaLadder,
    margin: float = 0.1,
    budget: float = 5e7,
    over_x: float = 2.0,
    over_t: float = 12.0,
) -> FitReport:
    """``|| a prod_{i<=k} E 1_{I_i} ||_2`` on the moment curve against ``lambda^{-k/2}``.

    Rungs whose grid exceeds ``budget`` points are dropped with a warning.
    The report also carries the exact whole-space value for ``k = d``,
    ``(2 pi / lam)^{d/2} (int |J|^{-1})^{1/2}`` with ``J`` the Jacobian of
    ``t -> sum_i gamma(t_i)``, which bounds every measured value from above.
    """
    if not (1 <= k <= d):
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={d}")
    g = moment_curve(d, d)
    ivs = separated_intervals(k, L)
    lams, vals, sizes = [], [], []
    for lam in ladder.values:
        try:
            v, sz = multilinear_norm(g, lam, ivs, over_x=over_x, over_t=over_t, budget=budget)
        except BudgetError as exc:
            warnings.warn(f"{exc}; stopping the ladder", RuntimeWarning, stacklevel=2)
            break
        lams.append(float(lam))
        vals.append(v)
        sizes.append(sz)
    if len(lams) < 4:
        raise BudgetError("fewer than 4 ladder rungs fit the grid budget")
    rep = fit_loglog(lams, vals, name=f"multilinear[d={d},k={k},L={L:g}]")
    judge(rep, -k / 2.0, margin, "le")
    rep.extra.update({"intervals": ivs, "grid_sizes": sizes, "local_slopes": np.diff(np.log(vals)) / np.diff(np.log(lams))})
    if k == d:
        c = plancherel_constant(g, ivs)
        bound = [(2 * math.pi / lam) ** (d / 2) * c for lam in lams]
        rep.extra["whole_space_values"] = bound
        rep.extra["below_whole_space"] = bool(all(v <= b * (1 + 1e-3) for v, b in zip(vals, bound)))
    return rep


def plancherel_constant(curve: Curve, intervals, n: int = 48) -> float:
    """``(int_{I_1 x ... x I_d} |det(gamma'(t_1), ..., gamma'(t_d))|^{-1} dt)^{1/2}`` by Gauss-Legendre."""
    d = curve.d
    if len(intervals) != d:
        raise ValueError("need exactly d intervals")
    x, w = np.polynomial.legendre.leggauss(n)
    nodes, weights = [], []
    for a, b in intervals:
        nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    tangents = [curve.derivative(t, 1) for t in nodes]
    grids = np.meshgrid(*[np.arange(n)] * d, indexing="ij")
    idx = [gr.ravel() for gr in grids]
    mats = np.stack([tangents[i][idx[i]] for i in range(d)], axis=2)
    jac = np.abs(np.linalg.det(mats))
    wt = np.prod([weights[i][idx[i]] for i in range(d)], axis=0)
    return math.sqrt(float(np.sum(wt / jac)))


def rescale_base(d: int, alpha: float, k: int, h: float) -> tuple[M.DiscreteMeasure, float]:
    """Base measure resolved finely enough for the growth norm of its ``D_h^k`` image."""
    diag = np.array([h**j if j <= k else 1.0 for j in range(1, d + 1)])
    r_min = h**k / 8
    per_axis = [int(math.ceil(4 * dj / r_min)) for dj in diag]
    if alpha == d:
        return M.cube_measure(d, per_axis), r_min
    n = exponents.frac_parts(d - alpha).whole
    return M.sharpness_measure(d, alpha, per_axis[n:]), r_min


def run_rescale_growth(
    d: int,
    k: int,
    alpha: float,
    hs: Sequence[float] = tuple(2.0 ** -np.arange(1, 7)),
    lower_margin: float = 0.15,
    upper_margin: float = 0.5,
) -> FitReport:
    """Growth constant of the ``D_h^k`` rescaled measure against ``|h|^{-beta_k(alpha - d + k)}``.

    The growth norm is the exact cube version for product measures, taken
    down to ``r = h^k / 8`` where the rescaled atoms are still below scale.
    """
    if alpha - d + k <= 0:
        raise ValueError(f"need alpha - d + k > 0, got {alpha - d + k:g}")
    hs = np.asarray(hs, dtype=float)
    if hs.size < 4 or np.any(hs <= 0) or np.any(hs > 1):
        raise ValueError("need at least 4 values of h in (0, 1]")
    vals = []
    for h in hs:
        base, r_min = rescale_base(d, alpha, k, h)
        mu = M.rescale_measure(base, np.eye(d), h, k)
        vals.append(M.growth_norm_box(mu, alpha, r_min).value)
    rep = fit_loglog(hs, vals, name=f"rescale[d={d},k={k},alpha={alpha:g}]")
    b = exponents.beta(k, alpha - d + k)
    judge(rep, -b, lower_margin, "range", upper=-b + upper_margin)
    rep.extra["beta"] = b
    return rep


def run_ball_baseline(
    measure,
    alpha: float,
    ladder: LambdaLadder,
    n_mc: int = 100_000,
    seed: int = 0,
    margin: float = 0.15,
    d: int = 2,
) -> FitReport:
    """Mean of ``|mu^(lam xi)|^2`` over the unit ball against ``lambda^{-alpha}``."""
    fam = _family(measure, d, alpha)
    lams = ladder.values
    vals, errs = [], []
    for lam in lams:
        est = T.ball_average(fam(lam), lam, n_mc, seed=seed)
        vals.append(est.value)
        errs.append(est.stderr)
    rep = fit_loglog(lams, vals, name=f"ball[{fam(lams[0]).label},alpha={alpha:g}]")
    judge(rep, -alpha, margin, "le")
    rep.extra["stderr"] = errs
    if rep.slope > -0.05:
        rep.extra["note"] = "no decay: the measure has no positive dimension at these scales"
    return rep


def run_cantor_decay(d: int, curve, ladder: LambdaLadder | None = None, depth: int = 14, margin: float = 0.05) -> FitReport:
    """Decay of the lifted four-corner Cantor measure on the ratio-3 ladder that matches its self-similarity."""
    ladder = ladder or LambdaLadder(64.0, 3.0, 6)
    mu = M.cantor_product_measure(d, CANTOR_ALPHA, depth)
    return run_decay(mu, curve, CANTOR_ALPHA, ladder, margin=margin)


@dataclass
class GeometryReport:
    checks: dict
    verdict: str

    def to_dict(self) -> dict:
        return _plain({"checks": self.checks, "verdict": self.verdict})

    def line(self) -> str:
        c = self.checks
        return (
            f"geometry: cover multiplicity [{c['cover_min']}, {c['cover_max']}], "
            f"omega unassigned {c['omega_unassigned']} ambiguous {c['omega_ambiguous']}, "
            f"overlap ratio spread {c['overlap_spread']:.3f} -> {self.verdict}"
        )


def run_geometry(
    curve="moment",
    d: int = 3,
    cover_lambda: float = 256.0,
    tube_lambda: float = 2.0**12,
    n_points: int = 100_000,
    levels: Sequence[int] = range(2, 7),
    n_mc: int = 100_000,
    seed: int = 0,
    max_spread: float = 4.0,
) -> GeometryReport:
    """Whitney cover multiplicity, Omega partition totality and the tube-overlap law."""
    from . import decomposition as G

    g = _curve(curve, d)
    cover = G.whitney_cover(cover_lambda)
    side = 1 << 6
    grid = np.arange(side + 1) / side
    pts = np.stack(np.meshgrid(grid, grid, indexing="ij"), -1).reshape(-1, 2)
    mult = cover.multiplicity(pts)

    width = 1 << int(math.floor(0.5 * math.log2(tube_lambda)))
    ivs = [(i / width, (i + 1) / width) for i in range(width)]
    x, _ = G.tube_sample(g, tube_lambda, n_points, seed=seed)
    omega = G.omega_partition(g, tube_lambda, ivs, x)

    vols, errs = [], []
    for n in levels:
        h = 2.0**-n
        est = G.intersection_measure(g, (0.0, h), (2 * h, 3 * h), tube_lambda, n_mc=n_mc, seed=seed + n)
        vols.append(est.value)
        errs.append(est.stderr)
    ratios = np.array(vols) / 2.0 ** np.asarray(list(levels))
    spread = float(ratios.max() / ratios.min())
    checks = {
        "cover_lambda": cover_lambda,
        "cover_pairs": len(cover.pairs),
        "cover_min": int(mult.min()),
        "cover_max": int(mult.max()),
        "omega_points": n_points,
        "omega_unassigned": omega.unassigned,
        "omega_ambiguous": omega.ambiguous,
        "levels": list(levels),
        "overlap_volumes": vols,
        "overlap_stderr": errs,
        "overlap_ratios": ratios,
        "overlap_spread": spread,
    }
    ok = 1 <= mult.min() and mult.max() <= 8 and omega.unassigned == 0 and omega.ambiguous == 0 and spread <= max_spread
    return GeometryReport(checks, PASS if ok else FAIL)
