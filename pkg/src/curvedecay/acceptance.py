"""The ten acceptance criteria as callable checks, shared by the CLI and the test suite."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import exponents as E
from . import experiments as X
from . import measures as M

P = X.LambdaLadder.powers


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: list[str] = field(default_factory=list)
    seconds: float = 0.0
    reports: list = field(default_factory=list)

    def line(self) -> str:
        return f"criterion {self.number:2d} {'PASS' if self.passed else 'FAIL'} {self.title} ({self.seconds:.1f} s)"


def _timed(number: int, title: str, body: Callable[[], tuple[bool, list[str], list]]) -> CriterionResult:
    t0 = time.perf_counter()
    ok, details, reports = body()
    return CriterionResult(number, title, bool(ok), details, time.perf_counter() - t0, reports)


def _verdicts(reports) -> tuple[bool, list[str]]:
    return all(r.verdict == X.PASS for r in reports), [r.line() for r in reports]


def criterion_1() -> CriterionResult:
    def body():
        details = []
        ok_beta = all(E.beta(d, d) == d * (d + 1) // 2 for d in range(2, 7))
        worst = 0.0
        for m in range(2, 12):
            for a in np.linspace(1.0, m, 101)[1:]:
                worst = max(worst, abs(E.beta(m, a) - E.beta(m - 1, a - 1) - m))
        ok_tel = worst <= 1e-12
        deltas = {a: E.delta_theorem(3, a).value for a in (2.5, 2.0, 1.5)}
        ok_delta = deltas == {2.5: 0.75, 2.0: 0.5, 1.5: 0.375}
        gap = 0.0
        for d in (3, 4, 5):
            for a in np.round(np.arange(0.01, d, 0.01), 10):
                gap = max(gap, abs(1 - 2 * E.min_kappa(d, a).value - E.delta_theorem(d, a).value))
        ok_min = gap <= 1e-10
        details += [
            f"beta_d(d) = d(d+1)/2 for d=2..6: {ok_beta}",
            f"telescoping worst error {worst:.2e}",
            f"delta(3, 2.5/2/1.5) = {deltas[2.5]}/{deltas[2.0]}/{deltas[1.5]}",
            f"max |1 - 2 min kappa - delta| = {gap:.2e}",
        ]
        return ok_beta and ok_tel and ok_delta and ok_min, details, []

    return _timed(1, "exponent engine exactness", body)


def _circ_rise(d: int, a: float) -> float:
    """Largest increase of kappa_circ from branch ell to ell + 1 at their shared q-endpoint."""
    worst = -math.inf
    legal = [ell for ell in E.ell_range(d, a) if ell < 0 or a > ell]
    for ell in legal[:-1]:
        lo = E.interval_J_circ(d, a, ell)
        hi = E.interval_J_circ(d, a, ell + 1)
        q = float(hi.hi)
        if hi.lo > hi.hi or lo.lo > (lo.hi if not lo.unbounded else math.inf) or abs(q - float(lo.lo)) > 1e-12:
            continue
        worst = max(worst, E.kappa_circ(d, a, q, ell + 1).value - E.kappa_circ(d, a, lo.lo, ell).value)
    return worst


def criterion_2() -> CriterionResult:
    def body():
        jump = 0.0
        mono = 0.0
        for d in (3, 4, 5):
            for a in np.round(np.arange(0.01, d + 1e-9, 0.01), 10):
                for ell, q in E.kappa_junctions(d, a):
                    jump = max(jump, abs(E.kappa(d, a, q, ell).value - E.kappa(d, a, q, ell + 1).value))
                mono = max(mono, _circ_rise(d, a))
        ok = jump <= E.continuity_tol() and mono <= 1e-12
        return ok, [f"largest kappa jump at a junction {jump:.2e}", f"largest kappa_circ rise in ell {mono:.2e}"], []

    return _timed(2, "branch continuity", body)


def criterion_3() -> CriterionResult:
    def body():
        reps = [X.run_sharpness_lower(3, 2.5, ell, P(6, 14), min_r2=0.95) for ell in (0, 1, 2)]
        ok, lines = _verdicts(reps)
        for r in reps:
            lines.append(f"  energy slope {r.extra['energy_slope']:.4f} vs h {r.extra['energy_predicted']:.4f}")
        return ok, lines, reps

    return _timed(3, "sharpness reproduction", body)


def criterion_4() -> CriterionResult:
    def body():
        reps = []
        for curve in ("moment", "helix"):
            for a in (1.5, 2.5):
                reps.append(X.run_decay("sharpness", curve, a, P(6, 14)))
            reps.append(X.run_cantor_decay(3, curve))
        ok, lines = _verdicts(reps)
        return ok, lines, reps

    return _timed(4, "theorem-direction decay", body)


def criterion_5() -> CriterionResult:
    def body():
        reps = [
            X.run_extension_lower(3, 2.5, 2.0, 0, P(6, 14), profile="comb"),
            X.run_extension_lower(3, 2.5, 2 * E.beta(3, 2.5), -1, P(6, 13), profile="indicator"),
        ]
        ok, lines = _verdicts(reps)
        return ok, lines, reps

    return _timed(5, "extension lower bounds", body)


def criterion_6() -> CriterionResult:
    def body():
        reps = [
            X.run_dual_check("sharpness", "moment", P(6, 12), alpha=2.5),
            X.run_dual_check(M.cantor_product_measure(3, X.CANTOR_ALPHA, 14), "moment", X.LambdaLadder(64.0, 3.0, 6)),
        ]
        return all(r.verdict == X.PASS for r in reps), [r.line() for r in reps], reps

    return _timed(6, "dual-estimate foliation", body)


def criterion_7() -> CriterionResult:
    def body():
        reps = [X.run_rescale_growth(d, k, a) for d, k, a in ((3, 3, 3.0), (3, 2, 2.5), (3, 3, 2.5))]
        ok, lines = _verdicts(reps)
        return ok, lines, reps

    return _timed(7, "rescaling law", body)


def criterion_8() -> CriterionResult:
    def body():
        rep = X.run_multilinear(3, 3, 0.25, P(4, 9))
        lines = [rep.line(), "  local slopes " + " ".join(f"{s:+.3f}" for s in rep.extra["local_slopes"])]
        lines.append(f"  below the whole-space Plancherel value at every rung: {rep.extra['below_whole_space']}")
        return rep.verdict == X.PASS, lines, [rep]

    return _timed(8, "multilinear decay", body)


def criterion_9() -> CriterionResult:
    def body():
        rep = X.run_geometry()
        return rep.verdict == X.PASS, [rep.line()], [rep]

    return _timed(9, "geometry suite", body)


def criterion_10() -> CriterionResult:
    def body():
        mu = M.cantor_product_measure(2, X.CANTOR_ALPHA, 12)
        rep = X.run_ball_baseline(mu, X.CANTOR_ALPHA, P(4, 12), d=2)
        return rep.verdict == X.PASS, [rep.line()], [rep]

    return _timed(10, "ball-average baseline", body)


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 11)}


def run_all(numbers=None) -> list[CriterionResult]:
    return [CRITERIA[i]() for i in (numbers or sorted(CRITERIA))]
