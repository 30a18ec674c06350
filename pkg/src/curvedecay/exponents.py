"""Piecewise exponent formulas for averaged decay over nondegenerate curves.

Every function here is a pure evaluation.  Inputs may be floats or
:class:`fractions.Fraction`; with ``exact=True`` floats are converted to
fractions first so that branch junctions can be compared without rounding.

Notation used in the code:

* ``n = floor(d - alpha)`` and ``frac = (d - alpha) - n``;
* ``ell`` ranges over ``-1 .. d - 1 - n``;
* ``beta(j, a)`` is the scaling exponent that generalises ``d(d+1)/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np

Real = Union[float, int, Fraction]

_CONTINUITY_TOL = 1e-12


@dataclass(frozen=True)
class FracParts:
    whole: int
    frac: Real


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]``; ``hi = inf`` marks a right-unbounded one."""

    lo: Real
    hi: Real

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.hi)

    @property
    def length(self) -> float:
        return math.inf if self.unbounded else self.hi - self.lo

    def contains(self, x: Real, tol: float = 0.0) -> bool:
        # adding a float tolerance would round exact endpoints
        lo, hi = (self.lo - tol, self.hi + tol) if tol else (self.lo, self.hi)
        if x < lo:
            return False
        return self.unbounded or x <= hi

    def __str__(self) -> str:
        hi = "inf)" if self.unbounded else f"{float(self.hi):g}]"
        return f"[{float(self.lo):g}, {hi}"


@dataclass(frozen=True)
class ExponentResult:
    value: Real
    branch: str
    domain: object
    extra: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return float(self.value)


def _as_exact(x: Real) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def _prep(exact: bool, *xs: Real):
    return tuple(_as_exact(x) for x in xs) if exact else xs


def frac_parts(x: Real) -> FracParts:
    """Integer and fractional part of a nonnegative number."""
    if x < 0:
        raise ValueError(f"frac_parts needs x >= 0, got {x}")
    whole = math.floor(x)
    return FracParts(int(whole), x - whole)


def _check_dim(d: int) -> None:
    if int(d) != d or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d}")


def _check_alpha(d: int, alpha: Real, closed: bool = True) -> None:
    upper_ok = alpha <= d if closed else alpha < d
    if not (alpha > 0 and upper_ok):
        bracket = "]" if closed else ")"
        raise ValueError(f"alpha must lie in (0, {d}{bracket}, got {alpha}")


def ell_range(d: int, alpha: Real) -> range:
    """Legal values of ``ell`` for the pair ``(d, alpha)``."""
    _check_dim(d)
    _check_alpha(d, alpha)
    n = frac_parts(d - alpha).whole
    return range(-1, d - n)


def _check_ell(d: int, alpha: Real, ell: int) -> int:
    legal = ell_range(d, alpha)
    if ell not in legal:
        raise ValueError(
            f"ell={ell} is outside its legal range [-1, {legal[-1]}] "
            f"for d={d}, alpha={alpha}"
        )
    return frac_parts(d - alpha).whole


def beta(j: int, alpha: Real, exact: bool = False) -> Real:
    """``beta_j(alpha) = (m+1) alpha + (j-1-m)(j-m)/2`` with ``m = floor(j-alpha)``."""
    (alpha,) = _prep(exact, alpha)
    if int(j) != j or j < 1:
        raise ValueError(f"beta needs an integer j >= 1, got {j}")
    if not (0 < alpha <= j):
        raise ValueError(f"beta_{j} needs alpha in (0, {j}], got {alpha}")
    m = math.floor(j - alpha)
    # (j-1-m)(j-m) is a product of consecutive integers, hence even
    return (m + 1) * alpha + (j - 1 - m) * (j - m) // 2


def interval_J(d: int, alpha: Real, ell: int, exact: bool = False) -> Interval:
    """The q-interval on which the ``ell``-th branch of kappa is defined."""
    (alpha,) = _prep(exact, alpha)
    n = _check_ell(d, alpha, ell)
    if ell == -1:
        return Interval(2 * beta(d, alpha), math.inf)
    if ell <= d - 3 - n:
        return Interval(2 * beta(d - ell - 1, alpha - ell - 1), 2 * beta(d - ell, alpha - ell))
    if ell == d - 2 - n:
        return Interval(2 * (n + 1), 2 * beta(d - ell, alpha - ell))
    return Interval(1, 2 * (n + 1))


def interval_J_circ(d: int, alpha: Real, ell: int, exact: bool = False) -> Interval:
    """q-intervals for the lower-bound exponent ``kappa_circ``."""
    (alpha,) = _prep(exact, alpha)
    n = _check_ell(d, alpha, ell)
    if ell <= d - 3 - n:
        return interval_J(d, alpha, ell)
    if ell == d - 2 - n:
        return Interval(2 * beta(d - ell - 1, alpha - ell - 1), 2 * beta(d - ell, alpha - ell))
    frac = frac_parts(d - alpha).frac
    return Interval(1, 2 * beta(n + 1, 1 - frac))


def jay_factor(d: int, alpha: Real, exact: bool = False) -> Real:
    """Denominator replacing ``d - ell`` in the ``ell = d-2-floor(d-alpha)`` branch.

    Equals 2 when ``floor(d - alpha) = 0`` and half the length of
    ``J(d-2-floor(d-alpha))`` otherwise.  For ``alpha <= 1`` that index is
    ``-1``, whose interval is unbounded, so the factor is infinite (and no
    kappa branch uses it).
    """
    (alpha,) = _prep(exact, alpha)
    _check_dim(d)
    _check_alpha(d, alpha)
    n = frac_parts(d - alpha).whole
    if n == 0:
        return 2
    ell = d - 2 - n
    if ell == -1:
        return math.inf
    J = interval_J(d, alpha, ell)
    return (J.hi - J.lo) / 2


def _generic_kappa(d, alpha, q, ell, denom):
    b = beta(d - ell, alpha - ell)
    return Fraction(1, 2) - (alpha - ell) / q + (b / q - Fraction(1, 2)) / denom


def kappa(d: int, alpha: Real, q: Real, ell: int, exact: bool = False) -> ExponentResult:
    """Upper exponent in ``||g^||_{L^q(mu)} <~ lambda^kappa ||g||_2`` on ``J(ell)``."""
    alpha, q = _prep(exact, alpha, q)
    n = _check_ell(d, alpha, ell)
    J = interval_J(d, alpha, ell)
    if not J.contains(q):
        raise ValueError(f"q={q} lies outside J({ell}) = {J} for d={d}, alpha={alpha}")
    if ell == -1:
        value, branch = Fraction(1, 2) - alpha / q, "ell=-1"
    elif ell <= d - 3 - n:
        value, branch = _generic_kappa(d, alpha, q, ell, d - ell), "generic"
    elif ell == d - 2 - n:
        value, branch = _generic_kappa(d, alpha, q, ell, jay_factor(d, alpha)), "jay"
    else:
        value, branch = min((d - alpha) / 4, (d - alpha) / (2 * (n + 1))), "holder"
    if not exact:
        value = float(value)
    return ExponentResult(value, branch, J)


def kappa_circ(d: int, alpha: Real, q: Real, ell: int, exact: bool = False) -> ExponentResult:
    """Lower exponent produced by the explicit test pairs, defined on ``J_circ(ell)``."""
    alpha, q = _prep(exact, alpha, q)
    _check_ell(d, alpha, ell)
    if ell >= 0 and alpha - ell <= 0:
        raise ValueError(f"kappa_circ needs alpha > ell, got alpha={alpha}, ell={ell}")
    J = interval_J_circ(d, alpha, ell)
    if not J.contains(q):
        raise ValueError(f"q={q} lies outside J_circ({ell}) = {J} for d={d}, alpha={alpha}")
    if ell == -1:
        value, branch = Fraction(1, 2) - alpha / q, "ell=-1"
    else:
        value, branch = _generic_kappa(d, alpha, q, ell, d - ell), "generic"
    if not exact:
        value = float(value)
    return ExponentResult(value, branch, J)


def kappa_bilinear(d: int, alpha: Real, q: Real) -> float:
    """``max(1/4 + (d-alpha-1)/(2q), 1/2 + (d-alpha-2)/q)`` for ``d-1 <= alpha <= d``."""
    _check_dim(d)
    if not (d - 1 <= alpha <= d):
        raise ValueError(f"bilinear exponent needs alpha in [{d-1}, {d}], got {alpha}")
    if q < 2:
        raise ValueError(f"bilinear exponent needs q >= 2, got {q}")
    return max(0.25 + (d - alpha - 1) / (2 * q), 0.5 + (d - alpha - 2) / q)


def delta_formula(d: int, alpha: Real) -> float:
    """The two-branch decay exponent as written for general ``0 < alpha < d``."""
    _check_dim(d)
    _check_alpha(d, alpha, closed=False)
    if alpha >= d - 1:
        return (alpha - d + 2) / 2
    fp = frac_parts(d - alpha)
    n, s = fp.whole, fp.frac
    return max((1 - s) / (n + 1), (2 - s) / ((n + 1) * (2 - s) + 1))


def delta_theorem(d: int, alpha: Real) -> ExponentResult:
    """Guaranteed averaged decay exponent.

    For ``alpha <= 1`` the value is the optimal ``min(alpha, 1/d)``, which is
    what the minimisation of kappa produces there; the general formula, which
    is smaller on ``(0, 1)``, is kept in ``extra['formula']``.
    """
    formula = delta_formula(d, alpha)
    if alpha >= d - 1:
        return ExponentResult(formula, "d-1<=alpha<d", (d - 1, d))
    if alpha <= 1:
        optimal = min(alpha, 1 / d)
        return ExponentResult(optimal, "alpha<=1", (0, 1), {"formula": formula, "optimal": optimal})
    n = frac_parts(d - alpha).whole
    return ExponentResult(formula, f"floor(d-alpha)={n}", (d - n - 1, d - n))


def delta_upper(d: int, alpha: Real) -> ExponentResult:
    """Upper bound on any admissible decay exponent, from the bump examples."""
    _check_dim(d)
    _check_alpha(d, alpha, closed=False)
    if alpha > d - 1:
        return ExponentResult(1 - (d - alpha) / 2, "a", (d - 1, d))
    if alpha <= 1:
        return ExponentResult(min(alpha, 1 / d), "c", (0, 1))
    n = frac_parts(d - alpha).whole
    value = min(1 - (d - alpha) / (n + 2), 1 / (n + 1))
    return ExponentResult(value, "b", (d - n - 1, d - n))


def h_profile(d: int, alpha: Real, ell: int, k: int) -> float:
    """Energy exponent of the anisotropic bump on the k-th dyadic frequency shell."""
    if not (0 <= k <= d - ell - 1):
        raise ValueError(f"k must lie in [0, {d - ell - 1}], got {k}")
    a = alpha - ell - 1
    m = d - ell
    return a - ((k + 1) * a + (m - k - 2) * (m - k - 1) / 2) / m


def h_argmax(d: int, alpha: Real, ell: int) -> int:
    ks = range(d - ell)
    return max(ks, key=lambda k: (h_profile(d, alpha, ell, k), -k))


# -- interpolated exponent eta on the regions A(ell) ------------------------


def _region_of(d, alpha, p, q):
    """Return the ell whose region ``A(ell)`` contains ``(1/p, 1/q)``, else None."""
    n = frac_parts(d - alpha).whole
    s = frac_parts(d - alpha).frac
    ip, iq = 1 / p, 1 / q
    if beta(d, alpha) * iq + ip < 1:
        return -1
    for ell in range(0, d - 2 - n):
        lower = beta(d - ell - 1, alpha - ell - 1) * iq + ip
        upper = beta(d - ell, alpha - ell) * iq + ip
        if lower < 1 <= upper:
            return ell
    ell = d - 2 - n
    if ell >= 0 and (n + 1) * iq + ip <= 1 <= beta(n + 2, 2 - s) * iq + ip:
        return ell
    if _kappa_range(d, alpha, p, q):
        return d - 1 - n
    return None


def _kappa_range(d, alpha, p, q) -> bool:
    fp = frac_parts(d - alpha)
    n, s = fp.whole, fp.frac
    ip, iq = 1 / p, 1 / q
    return (
        (1 - ip) / (n + 1) <= iq <= 1 - ip
        and q >= n + 1
        and beta(n + 1, 1 - s) * iq + ip < 1
    )


def eta_interp(d: int, alpha: Real, p: Real, q: Real) -> ExponentResult:
    """Decay exponent ``eta`` of the extension operator at the point ``(1/p, 1/q)``."""
    _check_dim(d)
    _check_alpha(d, alpha)
    if not (1 <= p <= 2):
        raise ValueError(f"eta needs p in [1, 2], got {p}")
    ell = _region_of(d, alpha, p, q)
    if ell is None:
        raise ValueError(f"(1/p, 1/q) = ({1/p:g}, {1/q:g}) lies in no region A(ell)")
    n = frac_parts(d - alpha).whole
    region = f"A({ell})"
    if ell == -1:
        value = alpha / q
    elif ell <= d - 2 - n:
        J = interval_J(d, alpha, ell)
        value = (alpha - ell) / q - (2 / J.length) * (beta(d - ell, alpha - ell) / q + 1 / p - 1)
    else:
        value = (alpha - d) / q + 1 - 1 / p
    return ExponentResult(float(value), region, region, {"ell": ell})


def admissible_estimates(d: int, alpha: Real, p: Real, q: Real) -> list[tuple[str, int, float]]:
    """All oscillatory estimates whose simplified ranges contain ``(p, q)``.

    Each entry is ``(theorem, ell, exponent)`` meaning a bound by
    ``lambda^(-exponent) ||f||_{L^p}``.
    """
    _check_dim(d)
    _check_alpha(d, alpha)
    out: list[tuple[str, int, float]] = []
    ip = 1 / p
    iq = 0.0 if math.isinf(q) else 1 / q
    for ell in range(0, d):
        a = alpha - ell
        if a <= 0:
            break
        b = beta(d - ell, a)
        m = d - ell
        if a > 2:
            ok = b * iq + ip < 1 and (math.isinf(q) or q > b + 1)
        elif a > 1:
            ok = b * iq + ip < 1 and q >= 2 * m
        else:
            ok = m * iq + ip <= 1 and q >= 2 * m
        if ok:
            out.append(("oscillatory-fixed-k", ell, a * iq))
    if not math.isinf(q) and _kappa_range(d, alpha, p, q):
        out.append(("oscillatory-endpoint", d - 1 - frac_parts(d - alpha).whole, (alpha - d) / q + 1 - ip))
    return out


# -- minimisation of kappa over (q, ell) ------------------------------------


@dataclass(frozen=True)
class KappaMin:
    value: float
    q: float
    ell: int


def min_kappa(d: int, alpha: Real) -> KappaMin:
    """Minimum of ``kappa(alpha, q, ell)`` over ``ell`` and ``q`` in ``J(ell) cap [2, inf)``.

    On each branch kappa has the form ``A + B/q``, so the minimum over an
    interval sits at one of its ends; all ends are enumerated.
    """
    _check_dim(d)
    _check_alpha(d, alpha, closed=False)
    best: KappaMin | None = None
    for ell in ell_range(d, alpha):
        J = interval_J(d, alpha, ell)
        lo = max(float(J.lo), 2.0)
        if not J.contains(lo):
            continue
        candidates = [lo] if J.unbounded else [lo, float(J.hi)]
        for q in candidates:
            v = float(kappa(d, alpha, q, ell).value)
            if best is None or v <= best.value + 1e-15:
                best = KappaMin(v, q, ell)
    assert best is not None
    return best


def min_kappa_grid(d: int, alpha: float, step: float = 1e-3) -> KappaMin:
    """Brute-force version of :func:`min_kappa` on a q-grid, used as a cross-check."""
    best: KappaMin | None = None
    for ell in ell_range(d, alpha):
        J = interval_J(d, alpha, ell)
        lo = max(float(J.lo), 2.0)
        hi = float(J.hi) if not J.unbounded else max(lo, 4 * float(beta(d, alpha))) + 50.0
        if lo > hi:
            continue
        qs = np.append(np.arange(lo, hi, step), hi)
        for q in qs:
            if not J.contains(q):
                continue
            v = float(kappa(d, alpha, q, ell).value)
            if best is None or v < best.value:
                best = KappaMin(v, float(q), ell)
    assert best is not None
    return best


def min_kappa_closed_form(d: int, alpha: float) -> float:
    """The two closed-form candidates for the minimum (``1 < alpha < d``)."""
    fp = frac_parts(d - alpha)
    n, s = fp.whole, fp.frac
    if n == 0:
        return (d - alpha) / 4
    first = 0.5 - (2 - s) / (2 * (n + 1) * (2 - s) + 2)
    second = (d - alpha) / (2 * (n + 1))
    return min(first, second)


def kappa_junctions(d: int, alpha: Real, exact: bool = False):
    """Yield ``(ell, q)`` where branches ``ell`` and ``ell+1`` meet."""
    for ell in list(ell_range(d, alpha))[:-1]:
        q = interval_J(d, alpha, ell + 1, exact=exact).hi
        yield ell, q


def continuity_tol() -> float:
    return _CONTINUITY_TOL
