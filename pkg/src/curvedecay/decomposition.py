"""Whitney cover of the unit square, the Omega partition of a curve tube, and
the two tube-geometry bounds (parallelotope hull, pairwise tube overlap)."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .curves import Curve, taylor_frame
from .transforms import MCEstimate, seeded_rng, uniform_ball_sample

HULL_MAX_C = 64.0
HULL_SAMPLES = 10_000
TUBE_RADIUS = 2.0


@dataclass(frozen=True, order=True)
class DyadicInterval:
    level: int
    index: int

    def __post_init__(self):
        if self.level < 0 or not (0 <= self.index < (1 << self.level)):
            raise ValueError(f"no dyadic interval with level={self.level}, index={self.index}")

    @property
    def lo(self) -> float:
        return self.index / (1 << self.level)

    @property
    def hi(self) -> float:
        return (self.index + 1) / (1 << self.level)

    @property
    def length(self) -> float:
        return 1.0 / (1 << self.level)

    @property
    def parent(self) -> "DyadicInterval":
        if self.level == 0:
            raise ValueError("[0, 1] has no parent")
        return DyadicInterval(self.level - 1, self.index >> 1)

    def touches(self, other: "DyadicInterval") -> bool:
        """Closed intervals of the same level share a point."""
        return abs(self.index - other.index) <= 1

    def as_tuple(self) -> tuple[float, float]:
        return (self.lo, self.hi)


def related(I: DyadicInterval, J: DyadicInterval) -> bool:
    """``I ~ J``: same level, not touching, parents touching (or equal)."""
    if I.level != J.level:
        raise ValueError(f"level mismatch: {I.level} vs {J.level}")
    if I.level < 2:
        raise ValueError("the relation is only used from level 2 on")
    return not I.touches(J) and I.parent.touches(J.parent)


@dataclass
class WhitneyCover:
    lam: float
    pairs: list[tuple[DyadicInterval, DyadicInterval]]
    diagonal: list[tuple[DyadicInterval, DyadicInterval]]

    @property
    def levels(self) -> list[int]:
        return sorted({I.level for I, _ in self.pairs})

    def pairs_at(self, level: int) -> list[tuple[DyadicInterval, DyadicInterval]]:
        return [p for p in self.pairs if p[0].level == level]

    def boxes(self) -> np.ndarray:
        """All boxes as rows ``(x_lo, x_hi, y_lo, y_hi)``, pairs first."""
        rows = [(I.lo, I.hi, J.lo, J.hi) for I, J in self.pairs + self.diagonal]
        return np.array(rows, dtype=float)

    def multiplicity(self, pts: np.ndarray) -> np.ndarray:
        """How many closed boxes contain each point of ``pts`` (shape (n, 2))."""
        b = self.boxes()
        x, y = pts[:, 0:1], pts[:, 1:2]
        inside = (x >= b[:, 0]) & (x <= b[:, 1]) & (y >= b[:, 2]) & (y <= b[:, 3])
        return inside.sum(axis=1)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["kind", "level", "i_index", "j_index"])
            for kind, group in (("pair", self.pairs), ("diagonal", self.diagonal)):
                for I, J in group:
                    w.writerow([kind, I.level, I.index, J.index])


def whitney_cover(lam: float) -> WhitneyCover:
    """Related pairs for ``4 <= 2^n <= lam^(1/2)`` plus near-diagonal boxes at the finest level."""
    if lam < 16:
        raise ValueError(f"lambda must be at least 16, got {lam}")
    top = int(math.floor(0.5 * math.log2(lam) + 1e-12))
    pairs = []
    for n in range(2, top + 1):
        size = 1 << n
        for i in range(size):
            I = DyadicInterval(n, i)
            # candidates are the children of the parent and of its two neighbours
            p = i >> 1
            for j in range(max(0, 2 * p - 2), min(size, 2 * p + 4)):
                J = DyadicInterval(n, j)
                if related(I, J):
                    pairs.append((I, J))
    size = 1 << top
    diagonal = [
        (DyadicInterval(top, i), DyadicInterval(top, j))
        for i in range(size)
        for j in range(max(0, i - 1), min(size, i + 2))
    ]
    return WhitneyCover(float(lam), pairs, diagonal)


# -- Omega partition ----------------------------------------------------------


@dataclass
class OmegaAssignment:
    labels: np.ndarray  # interval index per point, -1 if none
    hits: np.ndarray  # number of intervals whose condition holds

    @property
    def unassigned(self) -> int:
        return int(np.sum(self.labels < 0))

    @property
    def ambiguous(self) -> int:
        return int(np.sum(self.hits > 1))


def _check_partition(intervals: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    ivs = sorted((float(a), float(b)) for a, b in intervals)
    if not ivs or abs(ivs[0][0]) > 1e-12 or abs(ivs[-1][1] - 1.0) > 1e-12:
        raise ValueError("intervals must start at 0 and end at 1")
    for (a0, b0), (a1, b1) in zip(ivs, ivs[1:]):
        if abs(b0 - a1) > 1e-12:
            raise ValueError(f"intervals [{a0}, {b0}] and [{a1}, {b1}] leave a gap or overlap")
    for a, b in ivs:
        if b <= a:
            raise ValueError(f"empty interval [{a}, {b}]")
    return ivs


def omega_partition(curve: Curve, lam: float, intervals, tube_points: np.ndarray) -> OmegaAssignment:
    """Assign points of ``lam gamma([0,1]) + O(1)`` to the intervals of a partition.

    The half-space tests compare against ``lam gamma(a)`` and ``lam gamma(b)``
    so that they live at the same scale as the points.  The first interval
    (the leftmost one) wins a tie.
    """
    ivs = _check_partition(intervals)
    min_len = min(b - a for a, b in ivs)
    if min_len < lam ** -0.5 * (1 - 1e-9):
        raise ValueError(f"interval length {min_len:g} is below lambda^(-1/2) = {lam ** -0.5:g}")
    x = np.atleast_2d(np.asarray(tube_points, dtype=float))
    ends = np.array([a for a, _ in ivs] + [1.0])
    jet = curve.jet(ends, 1)
    # side[k] = gamma'(e_k) . (x - lam gamma(e_k)) for every endpoint e_k
    side = np.einsum("kj,nkj->nk", jet[1], x[:, None, :] - lam * jet[0][None, :, :])
    m = len(ivs)
    ok = np.ones((x.shape[0], m), dtype=bool)
    for i in range(m):
        if i > 0:
            ok[:, i] &= side[:, i] >= 0
        if i < m - 1:
            ok[:, i] &= side[:, i + 1] <= 0
    hits = ok.sum(axis=1)
    labels = np.where(hits > 0, np.argmax(ok, axis=1), -1)
    return OmegaAssignment(labels, hits)


def tube_sample(curve: Curve, lam: float, n: int, seed: int = 0, radius: float = 1.0, interval=(0.0, 1.0)):
    """``lam gamma(t) + v`` with ``t`` uniform on the interval and ``v`` uniform in ``B(0, radius)``."""
    rng = seeded_rng(seed)
    a, b = interval
    t = a + (b - a) * rng.random(n)
    v = radius * uniform_ball_sample(rng, n, curve.d)
    return lam * curve(t) + v, t


# -- Lemma-type geometry ------------------------------------------------------


@dataclass
class Parallelotope:
    M: np.ndarray
    half_sides: np.ndarray  # in frame coordinates, before the factor lam
    center: np.ndarray
    C: float
    lam: float
    length: float
    ok: bool = True

    @property
    def volume(self) -> float:
        return float(self.lam**self.M.shape[0] * abs(np.linalg.det(self.M)) * np.prod(2 * self.half_sides))

    def contains(self, x: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        c = np.linalg.solve(self.M, (np.atleast_2d(x) - self.center).T / self.lam).T
        return np.all(np.abs(c) <= self.half_sides * (1 + tol), axis=1)


def parallelotope_hull(curve: Curve, interval, lam: float, samples: int = HULL_SAMPLES, seed: int = 0) -> Parallelotope:
    """Smallest ``C`` with ``lam gamma(I) + B(0,1)`` inside ``lam M R_L + lam gamma(tau1)``.

    ``R_L`` is the centred box with sides ``C L, C L^2, ..., C L^2`` in the
    Taylor frame at the left endpoint.  ``ok`` is False when ``C > 64``.
    """
    tau1, tau2 = map(float, interval)
    L = tau2 - tau1
    if L <= 0:
        raise ValueError("empty interval")
    if L < 0.5 * lam**-0.5:
        raise ValueError(f"interval length {L:g} is far below lambda^(-1/2)")
    d = curve.d
    M = taylor_frame(curve, tau1, d).M
    x, _ = tube_sample(curve, lam, samples, seed, interval=(tau1, tau2))
    # the endpoints of the arc are the extreme points along the tangent
    ends = lam * curve(np.array([tau1, tau2]))
    x = np.vstack([x, ends])
    centre = lam * curve(tau1)[0]
    coords = np.linalg.solve(M, (x - centre).T / lam).T
    scale = np.full(d, L * L)
    scale[0] = L
    C = float(np.max(2 * np.abs(coords) / scale))
    return Parallelotope(M, C * scale / 2, centre, C, float(lam), L, ok=C <= HULL_MAX_C)


def _dwell(curve: Curve, lam: float, t0: np.ndarray, v: np.ndarray, interval, radius: float) -> np.ndarray:
    """Length of ``{t in I : |lam gamma(t0) + v - lam gamma(t)| <= radius}``.

    The arc is linearised at ``t0``; the error is of relative order
    ``radius / lam``.
    """
    g = lam * curve.derivative(t0, 1)
    gg = np.sum(g * g, axis=1)
    vg = np.sum(v * g, axis=1)
    disc = np.sqrt(np.maximum(vg**2 - gg * (np.sum(v * v, axis=1) - radius**2), 0.0))
    lo = (vg - disc) / gg
    hi = (vg + disc) / gg
    a, b = interval
    lo = np.maximum(lo, a - t0)
    hi = np.minimum(hi, b - t0)
    return np.maximum(hi - lo, 0.0)


def intersection_measure(
    curve: Curve,
    I,
    J,
    lam: float,
    y=None,
    n_mc: int = 100_000,
    seed: int = 0,
    radius: float = TUBE_RADIUS,
) -> MCEstimate:
    """Volume of ``(y + lam gamma(I) + B(0,C)) cap (lam gamma(J) + B(0,C))`` by Monte Carlo.

    Points are drawn from the first tube by picking ``t`` uniform in ``I`` and a
    uniform offset in the ball; each accepted point is weighted by the inverse
    proposal density, which needs the time the arc spends near it.  ``y``
    defaults to the shift that superposes the two arc midpoints.
    """
    I = tuple(map(float, I.as_tuple() if isinstance(I, DyadicInterval) else I))
    J = tuple(map(float, J.as_tuple() if isinstance(J, DyadicInterval) else J))
    if I == J:
        raise ValueError("I and J must be distinct")
    d = curve.d
    if y is None:
        y = lam * (curve(0.5 * (J[0] + J[1]))[0] - curve(0.5 * (I[0] + I[1]))[0])
    y = np.asarray(y, dtype=float).reshape(d)
    rng = seeded_rng(seed)
    t = I[0] + (I[1] - I[0]) * rng.random(n_mc)
    v = radius * uniform_ball_sample(rng, n_mc, d)
    x = y + lam * curve(t) + v

    # membership in the second tube: nearest sample of the arc, sampled finely
    speed = curve.speed_bound()
    step = 0.05 * radius
    m = max(64, int(math.ceil(lam * speed * (J[1] - J[0]) / step)) + 1)
    tree = cKDTree(lam * curve(np.linspace(J[0], J[1], m)))
    far = np.linalg.norm(x - lam * curve(0.5 * (J[0] + J[1]))[0], axis=1) > lam * speed * (J[1] - J[0]) + 2 * radius
    inside = np.zeros(n_mc, dtype=bool)
    near = ~far
    if near.any():
        dist, _ = tree.query(x[near])
        inside[near] = dist <= radius

    dwell = _dwell(curve, lam, t, v, I, radius)
    ball = math.pi ** (d / 2) / math.gamma(d / 2 + 1) * radius**d
    density = dwell / ((I[1] - I[0]) * ball)
    weight = np.zeros(n_mc)
    weight[inside] = 1.0 / density[inside]
    mean = float(weight.mean())
    err = float(weight.std(ddof=1) / math.sqrt(n_mc))
    return MCEstimate(mean, err, n_mc)
