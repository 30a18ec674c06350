"""Discrete stand-ins for alpha-dimensional measures in the unit ball.

A :class:`DiscreteMeasure` is a weighted point cloud.  Most constructions
here are tensor products of one-dimensional factors pushed forward by a
linear map, ``x = L y + offset``; those keep their factors so that

* the Fourier transform factorises, ``mu^(xi) = prod_j nu_j^((L^T xi)_j)``,
* box-growth norms reduce to one-dimensional sliding windows,
* the full point cloud is only materialised on demand.

The Fourier convention is ``mu^(xi) = sum_i w_i exp(-i xi . x_i)``.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import special
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from . import exponents

FT = Callable[[np.ndarray], np.ndarray]

MAX_MATERIALISED = 6_000_000
_CHUNK = 1 << 22

# one-dimensional smooth bump: Gaussian truncated at 8 standard deviations
BUMP_SIGMA = 1.0 / 16.0
BUMP_HALF_WIDTH = 0.5


# -- one-dimensional factors --------------------------------------------------


def _exp_sum(omega: np.ndarray, nodes: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``sum_i w_i exp(-i omega x_i)`` evaluated in memory-bounded blocks."""
    omega = np.asarray(omega, dtype=float)
    flat = omega.ravel()
    out = np.empty(flat.size, dtype=complex)
    step = max(1, _CHUNK // max(nodes.size, 1))
    for s in range(0, flat.size, step):
        block = flat[s : s + step]
        out[s : s + step] = np.exp(-1j * np.outer(block, nodes)) @ weights
    return out.reshape(omega.shape)


@dataclass(frozen=True)
class AxisFactor:
    """A one-dimensional discrete measure with an optional closed-form transform."""

    nodes: np.ndarray
    weights: np.ndarray
    ft: FT | None = None
    cell: float = 0.0
    label: str = ""
    cheap: bool = True

    @property
    def mass(self) -> float:
        return float(np.sum(self.weights))

    def transform(self, omega) -> np.ndarray:
        if self.ft is not None:
            return self.ft(np.asarray(omega, dtype=float))
        return _exp_sum(omega, self.nodes, self.weights)

    def discrete_transform(self, omega) -> np.ndarray:
        return _exp_sum(omega, self.nodes, self.weights)

    def max_window_mass(self, radius: float) -> tuple[float, float]:
        """Largest mass in a half-open interval of half-width ``radius`` and its centre."""
        order = np.argsort(self.nodes, kind="stable")
        x = self.nodes[order]
        cw = np.concatenate(([0.0], np.cumsum(self.weights[order])))
        # half-open windows [x_i, x_i + 2r) so grids are not double counted
        right = np.searchsorted(x, x + 2 * radius, side="left")
        masses = cw[right] - cw[np.arange(x.size)]
        i = int(np.argmax(masses))
        return float(masses[i]), float(x[i] + radius)


def _bump_norm(sigma: float, half: float) -> float:
    return special.erf(half / (sigma * math.sqrt(2.0)))


def bump_cell_masses(edges: np.ndarray, sigma: float = BUMP_SIGMA, half: float = BUMP_HALF_WIDTH) -> np.ndarray:
    """Exact masses of the unit-mass truncated Gaussian on consecutive cells."""
    edges = np.clip(edges, -half, half)
    cdf = special.erf(edges / (sigma * math.sqrt(2.0)))
    return np.diff(cdf) / (2.0 * _bump_norm(sigma, half))


def bump_ft(omega: np.ndarray, scale: float = 1.0, sigma: float = BUMP_SIGMA) -> np.ndarray:
    """Transform of the bump stretched by ``scale`` (the truncation is below 1e-14)."""
    s = sigma * scale
    return np.exp(-0.5 * (s * omega) ** 2).astype(complex)


def bump_factor(scale: float, resolution: int, sigma: float = BUMP_SIGMA) -> AxisFactor:
    """The bump on ``[-scale/2, scale/2]`` sampled at ``resolution`` midpoints.

    Weights are density samples times the spacing, not cell integrals: by
    Poisson summation the grid sum then equals the Gaussian transform up to
    aliasing of size ``exp(-(2 pi sigma / h - sigma |omega|)^2 / 2)``.
    """
    if resolution < 32:
        raise ValueError("bump factors need at least 32 nodes")
    step = 2 * BUMP_HALF_WIDTH / resolution
    unit = -BUMP_HALF_WIDTH + step * (np.arange(resolution) + 0.5)
    w = step * np.exp(-0.5 * (unit / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
    nodes = unit * scale
    return AxisFactor(
        nodes, w, lambda om: bump_ft(om, scale, sigma), cell=scale / resolution, label=f"bump(scale={scale:.3g})"
    )


def _power_cell_integral(a: np.ndarray, b: np.ndarray, s: float) -> np.ndarray:
    """Exact ``int_a^b |x|^{-s} dx`` for cells not straddling 0 (``0 <= s < 1``)."""
    lo, hi = np.minimum(np.abs(a), np.abs(b)), np.maximum(np.abs(a), np.abs(b))
    return (hi ** (1 - s) - lo ** (1 - s)) / (1 - s)


def _power_cell_moment(a: np.ndarray, b: np.ndarray, s: float) -> np.ndarray:
    """Exact ``int_a^b x |x|^{-s} dx``."""
    sgn = np.where(a + b >= 0, 1.0, -1.0)
    lo, hi = np.minimum(np.abs(a), np.abs(b)), np.maximum(np.abs(a), np.abs(b))
    return sgn * (hi ** (2 - s) - lo ** (2 - s)) / (2 - s)


def graded_edges(lo: float, hi: float, spacing: float, inner: float, ratio: float = 1.25) -> np.ndarray:
    """Cell edges on ``[lo, hi]``: geometric toward 0 (if inside), else uniform.

    The innermost cell is ``[0, inner]`` (merged with its mirror image when 0
    is interior); from there the edges grow geometrically with the given
    ratio until the cells reach ``spacing``, and beyond that they are uniform.
    """
    if not lo < hi:
        raise ValueError("empty interval")

    def half_line(length: float) -> np.ndarray:
        # edges on [0, length] starting at 0, inner cell [0, inner]
        if length <= inner:
            return np.array([0.0, length])
        pts = [0.0, inner]
        while pts[-1] < length:
            step = min(pts[-1] * (ratio - 1.0), spacing)
            pts.append(min(pts[-1] + step, length))
        return np.asarray(pts)

    if lo >= 0 or hi <= 0:
        n = max(1, int(math.ceil((hi - lo) / spacing)))
        if lo >= 0 and lo < 4 * spacing:
            e = half_line(hi)
            e = e[e > lo]
            return np.concatenate(([lo], e))
        if hi <= 0 and hi > -4 * spacing:
            e = -half_line(-lo)[::-1]
            e = e[e < hi]
            return np.concatenate((e, [hi]))
        return np.linspace(lo, hi, n + 1)
    right = half_line(hi)
    left = -half_line(-lo)[::-1]
    # merge: the inner cells [-inner, 0] and [0, inner] become one cell
    return np.concatenate((left[:-1], right[1:]))


def power_factor(
    s: float,
    resolution: int,
    window: tuple[float, float] = (-BUMP_HALF_WIDTH, BUMP_HALF_WIDTH),
    inner: float | None = None,
    ratio: float = 1.25,
    sigma: float = BUMP_SIGMA,
) -> AxisFactor:
    """``bump(x) |x|^{-s} dx`` on ``window`` with a grid graded toward the singularity.

    ``resolution`` uniform cells span the window; near 0 they are refined
    geometrically.  Each cell carries the exact power integral times the bump
    at the cell's power-weighted centre, and its atom sits at that centre.
    """
    lo, hi = window
    spacing = (hi - lo) / resolution
    if inner is None:
        inner = spacing / 256
    edges = graded_edges(lo, hi, spacing, inner, ratio)
    a, b = edges[:-1], edges[1:]
    straddle = (a < 0) & (b > 0)
    mass = np.empty(a.size)
    centre = np.empty(a.size)
    ok = ~straddle
    mass[ok] = _power_cell_integral(a[ok], b[ok], s)
    centre[ok] = _power_cell_moment(a[ok], b[ok], s) / mass[ok]
    if np.any(straddle):
        aa, bb = -a[straddle], b[straddle]
        m = (aa ** (1 - s) + bb ** (1 - s)) / (1 - s)
        mom = (bb ** (2 - s) - aa ** (2 - s)) / (2 - s)
        mass[straddle] = m
        centre[straddle] = mom / m
    bump = np.exp(-0.5 * (centre / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi) * _bump_norm(sigma, BUMP_HALF_WIDTH))
    inside = np.abs(centre) <= BUMP_HALF_WIDTH
    w = mass * bump * inside
    keep = w > 0
    return AxisFactor(
        centre[keep],
        w[keep],
        None,
        cell=float(np.min(b - a)),
        label=f"power(s={s:g})",
        cheap=False,
    )


def cantor_factor(contraction: float, depth: int, half: float = 0.5) -> AxisFactor:
    """Self-similar two-map measure on ``[-half, half]`` with the given contraction."""
    r = contraction
    steps = (1 - r) * half * r ** np.arange(depth)
    nodes = np.zeros(1)
    for st in steps:
        nodes = np.concatenate((nodes - st, nodes + st))
    w = np.full(nodes.size, 2.0**-depth)

    def ft(omega):
        out = np.ones(np.shape(omega), dtype=complex)
        for st in steps:
            out *= np.cos(omega * st)
        return out

    return AxisFactor(nodes, w, ft, cell=2 * half * r**depth, label=f"cantor(r={r:.4g},depth={depth})")


def _dirichlet(omega: np.ndarray, count: int, step: float) -> np.ndarray:
    """``sum_{k<count} exp(-i omega k step)`` in closed form."""
    theta = np.asarray(omega, dtype=float) * step
    half = 0.5 * theta
    num = np.sin(count * half)
    den = np.sin(half)
    small = np.abs(den) < 1e-12
    ratio = np.where(small, count * np.cos(count * half) / np.where(small, np.cos(half), 1.0), num / np.where(small, 1.0, den))
    return ratio * np.exp(-1j * (count - 1) * half)


def uniform_factor(lo: float, hi: float, count: int, mass: float = 1.0) -> AxisFactor:
    """``count`` equal atoms at the cell midpoints of ``[lo, hi]``."""
    step = (hi - lo) / count
    nodes = lo + step * (np.arange(count) + 0.5)
    w = np.full(count, mass / count)

    def ft(omega):
        return mass / count * np.exp(-1j * np.asarray(omega) * nodes[0]) * _dirichlet(omega, count, step)

    return AxisFactor(nodes, w, ft, cell=step, label=f"uniform[{lo:g},{hi:g}]x{count}")


def comb_factor(teeth: int, width: float, per_tooth: int, density: float, offset: float = 0.0) -> AxisFactor:
    """``teeth`` slabs of the given width at spacing ``1/teeth``, uniform inside."""
    step = width / per_tooth
    base = offset + step * (np.arange(per_tooth) + 0.5)
    shifts = offset + np.arange(teeth) / teeth
    nodes = (shifts[:, None] + (base - offset)[None, :]).ravel()
    atom = density * step
    w = np.full(nodes.size, atom)

    def ft(omega):
        omega = np.asarray(omega, dtype=float)
        teeth_sum = _dirichlet(omega, teeth, 1.0 / teeth)
        tooth_sum = _dirichlet(omega, per_tooth, step)
        return atom * np.exp(-1j * omega * base[0]) * teeth_sum * tooth_sum

    return AxisFactor(nodes, w, ft, cell=step, label=f"comb(T={teeth},w={width:.3g})")


# -- the measure class --------------------------------------------------------


class DiscreteMeasure:
    """Weighted point cloud in ``B(0, 1)``, optionally with product structure."""

    def __init__(
        self,
        d: int,
        *,
        points: np.ndarray | None = None,
        weights: np.ndarray | None = None,
        factors: Sequence[AxisFactor] | None = None,
        linear: np.ndarray | None = None,
        offset: np.ndarray | None = None,
        analytic_ft: FT | None = None,
        cell: float | None = None,
        label: str = "measure",
        params: dict | None = None,
        check_support: bool = True,
    ):
        self.d = int(d)
        self.label = label
        self.params = dict(params or {})
        self._analytic = analytic_ft
        self.factors = tuple(factors) if factors is not None else None
        if self.factors is not None:
            m = len(self.factors)
            self.linear = np.eye(d)[:, :m] if linear is None else np.asarray(linear, dtype=float)
            if self.linear.shape != (d, m):
                raise ValueError(f"linear map must have shape {(d, m)}, got {self.linear.shape}")
            self.offset = np.zeros(d) if offset is None else np.asarray(offset, dtype=float)
            self._pts = None
            self._w = None
            cells = [f.cell for f in self.factors if f.cell > 0]
            self.cell = float(cell if cell is not None else (min(cells) if cells else 0.0))
        else:
            if points is None or weights is None:
                raise ValueError("either factors or points and weights are required")
            pts = np.atleast_2d(np.asarray(points, dtype=float))
            if pts.shape[1] != d:
                raise ValueError(f"points must have {d} columns")
            w = np.asarray(weights, dtype=float).ravel()
            if w.size != pts.shape[0]:
                raise ValueError("one weight per point is required")
            if np.any(w < 0):
                raise ValueError("weights must be nonnegative")
            pts.setflags(write=False)
            w.setflags(write=False)
            self._pts, self._w = pts, w
            self.linear = None
            self.offset = None
            self.cell = float(cell if cell is not None else 0.0)
        if check_support:
            r = self.support_radius()
            if r > 1.0 + 1e-12:
                raise ValueError(f"{label}: support reaches radius {r:.4f} > 1")

    # construction helpers

    @classmethod
    def from_points(cls, points, weights, label: str = "points", cell: float | None = None, **kw) -> "DiscreteMeasure":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return cls(pts.shape[1], points=pts, weights=weights, label=label, cell=cell, **kw)

    # basic data

    @property
    def is_product(self) -> bool:
        return self.factors is not None

    @property
    def size(self) -> int:
        if self.is_product:
            return int(np.prod([f.nodes.size for f in self.factors]))
        return self._pts.shape[0]

    @property
    def total_mass(self) -> float:
        if self.is_product:
            return float(np.prod([f.mass for f in self.factors]))
        return float(np.sum(self._w))

    def _materialise(self):
        if self._pts is None:
            if self.size > MAX_MATERIALISED:
                raise MemoryError(f"{self.label}: {self.size} points exceed the materialisation budget")
            grids = np.meshgrid(*[f.nodes for f in self.factors], indexing="ij")
            y = np.stack([g.ravel() for g in grids], axis=1)
            wg = np.meshgrid(*[f.weights for f in self.factors], indexing="ij")
            w = np.prod(np.stack([g.ravel() for g in wg], axis=1), axis=1)
            pts = y @ self.linear.T + self.offset
            pts.setflags(write=False)
            w.setflags(write=False)
            self._pts, self._w = pts, w
        return self._pts, self._w

    @property
    def points(self) -> np.ndarray:
        return self._materialise()[0]

    @property
    def weights(self) -> np.ndarray:
        return self._materialise()[1]

    def support_radius(self) -> float:
        if self.is_product and self._pts is None:
            # vertices of the bounding box in factor coordinates bound |x|
            lo = np.array([f.nodes.min() for f in self.factors])
            hi = np.array([f.nodes.max() for f in self.factors])
            if len(self.factors) <= 12:
                corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(len(lo), -1).T
                return float(np.max(np.linalg.norm(corners @ self.linear.T + self.offset, axis=1)))
            return float(np.linalg.norm(self.offset) + np.linalg.norm(self.linear, 2) * np.linalg.norm(np.maximum(abs(lo), abs(hi))))
        if self.size == 0:
            return 0.0
        return float(np.max(np.linalg.norm(self.points, axis=1)))

    # Fourier transform

    @property
    def has_analytic_ft(self) -> bool:
        return self._analytic is not None or (self.is_product and all(f.ft is not None for f in self.factors))

    def ft(self, xi) -> np.ndarray:
        """``mu^(xi)`` for an array of frequencies of shape ``(..., d)``."""
        xi = np.asarray(xi, dtype=float)
        if self._analytic is not None:
            return self._analytic(xi)
        if self.is_product:
            return self.factor_ft(xi)
        return self.point_sum_ft(xi)

    def factor_ft(self, xi, prune: float = 0.0) -> np.ndarray:
        """Product of one-dimensional transforms; expensive factors are evaluated last.

        With ``prune > 0`` the expensive factors are skipped wherever the
        product of the cheap ones is already below ``prune`` (a factor of a
        positive measure never exceeds its mass, so the skipped values are
        bounded by ``prune`` times that mass).
        """
        xi = np.asarray(xi, dtype=float)
        shape = xi.shape[:-1]
        flat = xi.reshape(-1, self.d)
        omega = flat @ self.linear + 0.0  # (N, m): (L^T xi)_j
        shift = np.exp(-1j * (flat @ self.offset))
        out = shift.astype(complex)
        costly = []
        for j, f in enumerate(self.factors):
            if f.cheap:
                out *= f.transform(omega[:, j])
            else:
                costly.append(j)
        if costly:
            alive = np.abs(out) > prune if prune > 0 else np.ones(out.size, dtype=bool)
            idx = np.nonzero(alive)[0]
            for j in costly:
                out[idx] *= self.factors[j].transform(omega[idx, j])
            out[~alive] = 0.0
        return out.reshape(shape)

    def point_sum_ft(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        shape = xi.shape[:-1]
        flat = xi.reshape(-1, self.d)
        pts, w = self.points, self.weights
        out = np.empty(flat.shape[0], dtype=complex)
        step = max(1, _CHUNK // max(pts.shape[0], 1))
        for s in range(0, flat.shape[0], step):
            out[s : s + step] = np.exp(-1j * (flat[s : s + step] @ pts.T)) @ w
        return out.reshape(shape)

    def ft_self_check(self, n: int = 100, radius: float = 10.0, seed: int = 0) -> float:
        """Largest ``|analytic - point sum| / mass`` at random frequencies with ``|xi| <= radius``."""
        rng = np.random.default_rng(seed)
        dirs = rng.normal(size=(n, self.d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        xi = dirs * radius * rng.random(n)[:, None] ** (1.0 / self.d)
        return float(np.max(np.abs(self.ft(xi) - self.point_sum_ft(xi))) / self.total_mass)

    # transformations

    def pushforward(self, A: np.ndarray, label: str | None = None, check_support: bool = False) -> "DiscreteMeasure":
        A = np.asarray(A, dtype=float)
        label = label or f"pushforward({self.label})"
        analytic = None
        if self._analytic is not None:
            base = self._analytic
            analytic = lambda xi: base(np.asarray(xi) @ A)
        if self.is_product and self._pts is None:
            return DiscreteMeasure(
                self.d,
                factors=self.factors,
                linear=A @ self.linear,
                offset=A @ self.offset,
                analytic_ft=analytic,
                cell=self.cell,
                label=label,
                params=self.params,
                check_support=check_support,
            )
        return DiscreteMeasure(
            self.d,
            points=self.points @ A.T,
            weights=self.weights,
            analytic_ft=analytic,
            cell=self.cell,
            label=label,
            params=self.params,
            check_support=check_support,
        )

    def restrict(self, mask: np.ndarray, label: str | None = None) -> "DiscreteMeasure":
        return DiscreteMeasure(
            self.d,
            points=self.points[mask],
            weights=self.weights[mask],
            cell=self.cell,
            label=label or f"{self.label}|restricted",
            params=self.params,
            check_support=False,
        )

    def __repr__(self) -> str:
        kind = "product" if self.is_product else "points"
        return f"DiscreteMeasure({self.label!r}, d={self.d}, {kind}, size={self.size}, mass={self.total_mass:.4g})"


def combine(measures: Sequence[DiscreteMeasure], coeffs: Sequence[float], label: str = "combination") -> DiscreteMeasure:
    """Nonnegative combination of measures as one point cloud."""
    d = measures[0].d
    pts = np.concatenate([m.points for m in measures])
    w = np.concatenate([c * m.weights for m, c in zip(measures, coeffs)])
    return DiscreteMeasure(d, points=pts, weights=w, label=label, cell=min(m.cell for m in measures))


# -- elementary measures ------------------------------------------------------


def point_mass(d: int, at=None, mass: float = 1.0) -> DiscreteMeasure:
    x = np.zeros((1, d)) if at is None else np.asarray(at, dtype=float).reshape(1, d)
    shift = x[0]
    return DiscreteMeasure(
        d,
        points=x,
        weights=[mass],
        analytic_ft=lambda xi: mass * np.exp(-1j * (np.asarray(xi) @ shift)),
        label="point-mass",
    )


def segment_measure(d: int, n: int, lo: float = -1.0, hi: float = 1.0) -> DiscreteMeasure:
    """Unit mass spread uniformly over ``[lo, hi] e_1`` by ``n`` midpoint atoms."""
    f = uniform_factor(lo, hi, n)
    lin = np.zeros((d, 1))
    lin[0, 0] = 1.0
    return DiscreteMeasure(d, factors=[f], linear=lin, label=f"segment[{lo:g},{hi:g}]", params={"n": n, "similarity": 1.0 / n})


def _per_axis(value, count: int) -> list[int]:
    vals = [int(value)] * count if np.ndim(value) == 0 else [int(v) for v in value]
    if len(vals) != count:
        raise ValueError(f"expected {count} per-axis resolutions, got {len(vals)}")
    return vals


def cube_measure(d: int, per_axis, half: float = 0.5) -> DiscreteMeasure:
    """Unit mass uniformly on ``[-half, half]^d`` (grid midpoints; resolution may differ per axis)."""
    counts = _per_axis(per_axis, d)
    fs = [uniform_factor(-half, half, c) for c in counts]
    params = {"per_axis": per_axis, "half": half}
    if len(set(counts)) == 1:
        params["similarity"] = 1.0 / counts[0]
    return DiscreteMeasure(d, factors=fs, label="cube", params=params)


def uniform_ball_measure(d: int, per_axis: int) -> DiscreteMeasure:
    """Unit mass uniformly on ``B(0, 1)``, sampled at the grid midpoints inside it."""
    f = uniform_factor(-1.0, 1.0, per_axis)
    grids = np.meshgrid(*([f.nodes] * d), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    pts = pts[np.linalg.norm(pts, axis=1) <= 1.0]
    w = np.full(pts.shape[0], 1.0 / pts.shape[0])
    return DiscreteMeasure(d, points=pts, weights=w, cell=f.cell, label="ball", params={"per_axis": per_axis})


# -- the constructions --------------------------------------------------------


def cantor_product_measure(d: int, alpha: float, depth: int) -> DiscreteMeasure:
    """Product of ``ceil(alpha)`` Cantor-type factors of dimension ``alpha/ceil(alpha)`` each.

    The factor dimensions add up to ``alpha``; for ``alpha = d`` every factor
    is the uniform dyadic grid.  Remaining coordinates are zero.
    """
    if not (0 < alpha <= d):
        raise ValueError(f"alpha must lie in (0, {d}], got {alpha}")
    if not (1 <= depth <= 14):
        raise ValueError(f"depth must lie in [1, 14], got {depth}")
    m = int(math.ceil(alpha - 1e-12))
    s = alpha / m
    r = 2.0 ** (-1.0 / s)
    half = 0.5 if m <= 3 else 0.99 / math.sqrt(m)
    factors = [cantor_factor(r, depth, half) for _ in range(m)]
    lin = np.eye(d)[:, :m]
    return DiscreteMeasure(
        d,
        factors=factors,
        linear=lin,
        label="cantor",
        params={"alpha": alpha, "depth": depth, "axes": m, "contraction": r, "similarity": r**depth},
    )


def sharpness_measure(
    d: int,
    alpha: float,
    resolution,
    window: Sequence[tuple[float, float]] | None = None,
    inner: float | None = None,
    ratio: float = 1.25,
) -> DiscreteMeasure:
    """Discretised ``bump(x) prod_{j<=n} delta(x_j) |x_{n+1}|^{-s} dx_{n+1} ... dx_d``.

    Here ``n = floor(d - alpha)`` and ``s = frac(d - alpha)``.  The first ``n``
    coordinates are pinned at 0; coordinate ``n+1`` carries the power weight on
    a grid graded toward 0; the rest carry the bump on a uniform grid.

    ``window`` optionally restricts the free coordinates to a box (one
    ``(lo, hi)`` per free axis).  Restricted axes are graded toward 0 when the
    window contains it, so that small neighbourhoods of the origin are
    resolved.
    """
    if not (0 < alpha <= d):
        raise ValueError(f"alpha must lie in (0, {d}], got {alpha}")
    fp = exponents.frac_parts(d - alpha)
    n, s = fp.whole, float(fp.frac)
    free = d - n
    res = _per_axis(resolution, free)
    if min(res) < (16 if window is None else 4):
        raise ValueError("resolution too small to resolve the bump")
    full = (-BUMP_HALF_WIDTH, BUMP_HALF_WIDTH)
    if window is not None and len(window) != free:
        raise ValueError(f"window needs one interval per free axis ({free})")
    factors = []
    for j in range(free):
        win = full if window is None else (max(window[j][0], full[0]), min(window[j][1], full[1]))
        if j == 0 and s > 0:
            factors.append(power_factor(s, res[j], win, inner=inner, ratio=ratio))
        elif window is None:
            factors.append(bump_factor(1.0, max(res[j], 32)))
        else:
            factors.append(_bump_window_factor(win, res[j]))
    if window is None and s > 0:
        _check_graded(factors[0], s)
    lin = np.eye(d)[:, n:]
    label = "sharpness" if window is None else "sharpness|window"
    return DiscreteMeasure(
        d,
        factors=factors,
        linear=lin,
        label=label,
        params={"alpha": alpha, "resolution": resolution, "pinned": n, "power": s},
    )


def _bump_window_factor(win, resolution) -> AxisFactor:
    edges = np.linspace(win[0], win[1], resolution + 1)
    w = bump_cell_masses(edges)
    nodes = 0.5 * (edges[1:] + edges[:-1])
    keep = w > 0
    return AxisFactor(nodes[keep], w[keep], None, cell=float(edges[1] - edges[0]), label="bump|window")


def _check_graded(f: AxisFactor, s: float) -> None:
    """The graded grid must reproduce the small-interval mass law ``~ r^{1-s}``."""
    r1, r2 = 8 * f.cell, 64 * f.cell
    m1 = f.max_window_mass(r1)[0]
    m2 = f.max_window_mass(r2)[0]
    slope = math.log(m2 / m1) / math.log(r2 / r1)
    if abs(slope - (1 - s)) > 0.15:
        raise ValueError(f"graded grid too coarse: local mass exponent {slope:.3f}, expected {1 - s:.3f}")


def aniso_scales(d: int, ell: int, lam: float) -> np.ndarray:
    """Axis stretches ``lambda^{1 - j/(d-ell)}`` for ``j <= d-ell``, then 1."""
    a = np.ones(d)
    m = d - ell
    for j in range(1, m + 1):
        a[j - 1] = lam ** (1.0 - j / m)
    return a


def aniso_bump_measure(
    d: int,
    alpha: float,
    ell: int,
    lam: float,
    resolution: int,
    frame: np.ndarray | None = None,
) -> DiscreteMeasure:
    """Unit-mass anisotropic bump whose transform is ~1 on the box with sides ``lambda^{1-j/(d-ell)}``.

    The density is ``|det M^t| psi_{lambda,ell}(M^t x)``, i.e. the product
    bump pushed forward by ``M^{-t}``.  ``frame`` is ``M``; identity by
    default.  If ``M^{-t}`` would carry the support outside the unit ball, the
    whole bump is shrunk by a common factor (recorded in ``params``).
    """
    n = exponents.frac_parts(d - alpha).whole
    if not (0 <= ell <= d - 1 - n):
        raise ValueError(f"ell must lie in [0, {d - 1 - n}] for alpha={alpha}, got {ell}")
    if lam < 4:
        raise ValueError("lambda must be at least 4")
    a = aniso_scales(d, ell, lam)
    M = np.eye(d) if frame is None else np.asarray(frame, dtype=float)
    L = np.linalg.inv(M).T
    reach = np.linalg.norm(L, 2) * math.sqrt(d) * BUMP_HALF_WIDTH
    shrink = min(1.0, 0.99 / reach)
    factors = [bump_factor(shrink / aj, resolution) for aj in a]
    return DiscreteMeasure(
        d,
        factors=factors,
        linear=L,
        label="aniso-bump",
        params={"alpha": alpha, "ell": ell, "lambda": lam, "resolution": resolution, "shrink": shrink},
    )


def comb_teeth(d: int, alpha: float, lam: float) -> int:
    return int(math.floor(lam ** ((alpha - (d - 1)) / 2.0) + 1e-9))


def comb_measure(
    d: int,
    alpha: float,
    lam: float,
    per_tooth: int = 4,
    per_axis: int = 16,
    frame: np.ndarray | None = None,
) -> DiscreteMeasure:
    """Uniform density ``lambda^{(d-alpha)/2}`` on ``T`` slabs ``lambda^{-1/2} x 1 x ... x 1``.

    The slabs sit at ``k/T`` along ``e_1`` with ``T = floor(lambda^{(alpha-d+1)/2})``;
    the set is centred at the origin.  With ``frame = M`` the measure is pushed
    forward by ``M^{-t}``.
    """
    if not (d - 1 <= alpha <= d):
        raise ValueError(f"comb measure needs alpha in [{d-1}, {d}], got {alpha}")
    T = comb_teeth(d, alpha, lam)
    if T < 1:
        raise ValueError("lambda too small: fewer than one tooth")
    width = lam**-0.5
    density = lam ** ((d - alpha) / 2.0)
    extent = (T - 1) / T + width
    first = comb_factor(T, width, per_tooth, density, offset=-extent / 2)
    # original (uncentred) coordinates are x + shift
    shift = np.full(d, 0.5)
    shift[0] = extent / 2
    rest = [uniform_factor(-0.5, 0.5, per_axis) for _ in range(d - 1)]
    L = np.eye(d) if frame is None else np.linalg.inv(np.asarray(frame, dtype=float)).T
    return DiscreteMeasure(
        d,
        factors=[first, *rest],
        linear=L,
        label="comb",
        params={"alpha": alpha, "lambda": lam, "teeth": T, "width": width, "density": density, "shift": shift},
    )


# -- energy -------------------------------------------------------------------


def energy_direct(measure: DiscreteMeasure, alpha: float, block: int = 2048, closure: str = "auto") -> float:
    """Riesz energy ``sum_{i != j} w_i w_j |x_i - x_j|^{-alpha}`` plus a self-interaction term.

    ``closure="cap"`` adds ``w_i^2 cell^{-alpha}`` per atom, ``cell`` being the
    construction's finest scale (coincident distinct atoms get the same
    cap).  ``closure="self-similar"`` is for constructions whose atoms stand
    for copies of the whole measure scaled by ``rho = params["similarity"]``;
    then ``I = S + rho^{-alpha} I sum (w_i / M)^2`` is solved for ``I``, which
    removes the slow ``rho^{dim - alpha}`` drift of the cap.  ``"auto"``
    picks the latter when the tag is present and the closure is contractive.
    Row blocks are reduced in a fixed order.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if closure not in ("auto", "cap", "self-similar"):
        raise ValueError(f"unknown closure {closure!r}")
    pts, w = measure.points, measure.weights
    rho = measure.params.get("similarity")
    mass = measure.total_mass
    share = float(np.sum((w / mass) ** 2)) * rho ** (-alpha) if rho else math.inf
    if closure == "self-similar" and share >= 1:
        raise ValueError("self-similar closure diverges: alpha is at least the dimension of the construction")
    # at share ~ 1 (alpha equal to the dimension) the closure is singular; use the cap
    similar = closure == "self-similar" or (closure == "auto" and share < 1 - 1e-9)
    cap = measure.cell if measure.cell > 0 else _nearest_spacing(pts)
    kcap = 0.0 if similar else cap**-alpha
    totals = []
    for s in range(0, pts.shape[0], block):
        dist = cdist(pts[s : s + block], pts)
        with np.errstate(divide="ignore"):
            ker = np.where(dist > 0, dist ** (-alpha), kcap)
        if not similar:
            ker = np.minimum(ker, kcap)
        totals.append(float(w[s : s + block] @ (ker @ w)))
    total = math.fsum(totals)
    if similar:
        return total / (1.0 - share)
    return total


def _nearest_spacing(pts: np.ndarray) -> float:
    if pts.shape[0] < 2:
        return 1.0
    dist, _ = cKDTree(pts).query(pts, k=2)
    pos = dist[:, 1][dist[:, 1] > 0]
    return float(np.min(pos)) if pos.size else 1.0


def riesz_constant(d: int, alpha: float) -> float:
    """``C`` in ``I_alpha(mu) = C int |mu^(xi)|^2 |xi|^{alpha-d} d xi`` for the ``e^{-i xi x}`` convention."""
    c = math.pi ** (d / 2) * 2 ** (d - alpha) * math.gamma((d - alpha) / 2) / math.gamma(alpha / 2)
    return c / (2 * math.pi) ** d


def sphere_directions(d: int, n: int) -> tuple[np.ndarray, float]:
    """Nearly uniform unit vectors and the area of the unit sphere."""
    area = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    if d == 1:
        return np.array([[1.0], [-1.0]]), 2.0
    if d == 2:
        th = 2 * math.pi * (np.arange(n) + 0.5) / n
        return np.stack([np.cos(th), np.sin(th)], axis=1), area
    if d == 3:
        k = np.arange(n) + 0.5
        z = 1 - 2 * k / n
        phi = math.pi * (1 + 5**0.5) * k
        rho = np.sqrt(1 - z**2)
        return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1), area
    raise ValueError("energy_fourier supports d <= 3")


def energy_fourier(
    measure: DiscreteMeasure,
    alpha: float,
    cutoff: float,
    n_radial: int | None = None,
    n_angular: int = 400,
    tail_warn: float = 0.05,
) -> float:
    """``C_{alpha,d} int_{|xi| <= cutoff} |mu^(xi)|^2 |xi|^{alpha-d} d xi``.

    Radial Gauss-Legendre panels times a fixed sphere design.  A power-law
    tail estimate is compared with the value and a warning raised when the
    cutoff leaves more than ``tail_warn`` of the integral out.
    """
    d = measure.d
    if d > 3:
        raise ValueError("energy_fourier supports d <= 3")
    dirs, area = sphere_directions(d, n_angular)
    dirs_w = area / dirs.shape[0]
    r0 = min(1e-3, cutoff / 10)
    mass = measure.total_mass
    small = mass**2 * area * r0**alpha / alpha
    n_radial = n_radial or max(64, int(8 * cutoff))
    panels = np.linspace(r0, cutoff, n_radial // 8 + 1)
    gx, gw = np.polynomial.legendre.leggauss(8)
    rs, ws = [], []
    for a, b in zip(panels[:-1], panels[1:]):
        rs.append(0.5 * (b - a) * gx + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * gw)
    r = np.concatenate(rs)
    wr = np.concatenate(ws)
    xi = r[:, None, None] * dirs[None, :, :]
    vals = np.abs(measure.ft(xi)) ** 2
    shell = vals.sum(axis=1) * dirs_w  # integral over the sphere of radius r, per unit r^{d-1}
    value = small + float(np.sum(wr * shell * r ** (alpha - 1)))
    # tail: fit shell ~ r^{-tau} on the outer half
    outer = r > cutoff / 2
    if np.count_nonzero(outer) > 4 and np.all(shell[outer] > 0):
        tau = -np.polyfit(np.log(r[outer]), np.log(shell[outer]), 1)[0]
        ref = float(np.mean(shell[outer][-16:]))
        if tau > alpha + 1e-6:
            tail = ref * cutoff**alpha / (tau - alpha)
        else:
            tail = math.inf
        if tail > tail_warn * value:
            warnings.warn(f"energy_fourier: cutoff {cutoff:g} leaves an estimated tail of {tail:.3g} (value {value:.3g})")
    return riesz_constant(d, alpha) * value


def gaussian_product_energy(scales: Sequence[float], alpha: float, sigma: float = BUMP_SIGMA) -> float:
    """Closed-form energy of the product Gaussian with per-axis standard deviations ``sigma*scale``.

    Uses ``|z|^{-alpha} = Gamma(alpha/2)^{-1} int_0^inf t^{alpha/2-1} e^{-t|z|^2} dt``
    and the Gaussian moment generating function of ``X - Y``.
    """
    from scipy import integrate

    v = (sigma * np.asarray(scales, dtype=float)) ** 2

    def integrand(u):
        t = math.exp(u)
        return t ** (alpha / 2) / math.sqrt(float(np.prod(1 + 4 * t * v)))

    val, _ = integrate.quad(integrand, -60, 80, limit=400)
    return val / math.gamma(alpha / 2)


# -- growth -------------------------------------------------------------------


@dataclass(frozen=True)
class GrowthReport:
    value: float
    witness_center: np.ndarray
    witness_radius: float
    r_min: float
    profile: dict = field(default_factory=dict, compare=False)


def dyadic_radii(r_min: float, r_max: float = 2.0) -> np.ndarray:
    k = int(math.floor(math.log2(r_max / r_min) + 1e-12))
    return r_max * 2.0 ** -np.arange(k + 1)


def _growth_centres(pts: np.ndarray, w: np.ndarray, max_centres: int, heavy: int) -> np.ndarray:
    n = pts.shape[0]
    if n <= max_centres:
        centres = pts
    else:
        top = np.argsort(-w, kind="stable")[: max_centres // 2]
        stride = np.linspace(0, n - 1, max_centres - top.size).astype(int)
        centres = pts[np.unique(np.concatenate((top, stride)))]
    if n >= 2 and heavy > 0:
        idx = np.argsort(-w, kind="stable")[: min(heavy, n)]
        _, nb = cKDTree(pts).query(pts[idx], k=2)
        mids = 0.5 * (pts[idx] + pts[nb[:, 1]])
        centres = np.concatenate((centres, mids))
    return centres


def growth_norm(
    measure: DiscreteMeasure,
    alpha: float,
    r_min: float,
    max_centres: int = 4096,
    heavy: int = 64,
) -> GrowthReport:
    """``sup r^{-alpha} mu(B(x, r))`` over support points (and heavy-pair midpoints) and dyadic radii.

    ``profile`` maps each radius to its own supremum over centres.

    Radii run over ``2, 1, 1/2, ...`` down to ``r_min``.  For clouds larger
    than ``max_centres`` the centres are the heaviest atoms plus an even
    stride through the rest.
    """
    if r_min <= 0:
        raise ValueError("r_min must be positive")
    pts, w = measure.points, measure.weights
    radii = dyadic_radii(r_min)
    centres = _growth_centres(pts, w, max_centres, heavy)
    best = (-1.0, centres[0], radii[0])
    per_radius = np.zeros(radii.size)
    step = max(1, _CHUNK // max(pts.shape[0], 1))
    K = radii.size
    for s in range(0, centres.shape[0], step):
        c = centres[s : s + step]
        dist = cdist(c, pts)
        with np.errstate(divide="ignore"):
            k = np.floor(np.log2(radii[0] / np.maximum(dist, 1e-300)) + 1e-12).astype(int)
        # an atom at distance dist lies in B(x, r_k) for every k <= kmax
        k = np.clip(k, -1, K - 1)
        inside = k >= 0
        rows = np.repeat(np.arange(c.shape[0]), pts.shape[0])[inside.ravel()]
        hist = np.zeros((c.shape[0], K))
        np.add.at(hist, (rows, k[inside]), np.broadcast_to(w, k.shape)[inside])
        mass = np.cumsum(hist[:, ::-1], axis=1)[:, ::-1]
        ratio = mass * radii[None, :] ** (-alpha)
        per_radius = np.maximum(per_radius, ratio.max(axis=0))
        i, j = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
        if ratio[i, j] > best[0]:
            best = (float(ratio[i, j]), c[i].copy(), float(radii[j]))
    return GrowthReport(best[0], best[1], best[2], r_min, dict(zip(radii.tolist(), per_radius.tolist())))


def product_axes(measure: DiscreteMeasure) -> list[tuple[int, float]] | None:
    """For product measures whose linear map scales each factor onto its own coordinate.

    Returns ``[(coordinate, scale), ...]`` per factor, or ``None``.
    """
    if not measure.is_product:
        return None
    L = measure.linear
    out = []
    used = set()
    for j in range(L.shape[1]):
        nz = np.nonzero(np.abs(L[:, j]) > 0)[0]
        if nz.size != 1 or nz[0] in used:
            return None
        used.add(int(nz[0]))
        out.append((int(nz[0]), float(L[nz[0], j])))
    return out


def growth_norm_box(measure: DiscreteMeasure, alpha: float, r_min: float) -> GrowthReport:
    """Exact ``sup r^{-alpha} mu(Q(x, r))`` over cubes ``Q`` of half-side ``r`` (dyadic ``r``).

    Only for axis-aligned product measures, where the sup over centres
    splits into one-dimensional sliding windows.  Cubes and balls compare as
    ``B(x, r) in Q(x, r) in B(x, sqrt(d) r)``, so the ball norm lies between
    ``d^{-alpha/2}`` times this value and this value.
    """
    axes = product_axes(measure)
    if axes is None:
        raise ValueError("growth_norm_box needs an axis-aligned product measure")
    radii = dyadic_radii(r_min)
    best = (-1.0, None, None)
    profile = {}
    for r in radii:
        mass = 1.0
        centre = measure.offset.copy()
        for f, (coord, scale) in zip(measure.factors, axes):
            m, c = f.max_window_mass(r / abs(scale))
            mass *= m
            centre[coord] += c * scale
        val = mass * r ** (-alpha)
        profile[float(r)] = float(val)
        if val > best[0]:
            best = (val, centre, float(r))
    return GrowthReport(best[0], best[1], best[2], r_min, profile)


def atom_floor(measure: DiscreteMeasure) -> float:
    """Smallest radius at which the atoms of an axis-aligned product look continuous."""
    axes = product_axes(measure)
    if axes is None:
        return measure.cell
    gaps = []
    for f, (_, scale) in zip(measure.factors, axes):
        x = np.sort(f.nodes)
        if x.size > 1:
            gaps.append(abs(scale) * float(np.max(np.diff(x))))
    return max(gaps) if gaps else 0.0


# -- rescaling and decomposition ----------------------------------------------


def rescale_measure(measure: DiscreteMeasure, A: np.ndarray, h: float, k: int) -> DiscreteMeasure:
    """Pushforward under ``x -> D_h^k A x``."""
    from .curves import scaling_matrix

    A = np.asarray(A, dtype=float)
    if abs(np.linalg.det(A)) < 1e-12:
        raise ValueError("A must be nonsingular")
    if not (0 < abs(h) <= 1):
        raise ValueError("need 0 < |h| <= 1")
    D = scaling_matrix(measure.d, k, h)
    out = measure.pushforward(D @ A, label=f"rescaled({measure.label},h={h:g},k={k})")
    out.params.update({"h": h, "k": k})
    return out


def wolff_decompose(measure: DiscreteMeasure, R: float, alpha: float) -> list[DiscreteMeasure]:
    """Split ``mu`` by the dyadic level of its local density at scales ``>= 1/R``.

    The density at an atom is ``D(x) = max_{r >= 1/R dyadic} r^{-alpha} mu(B(x, r))``;
    atoms with ``2^{alpha j} <= D < 2^{alpha (j+1)}`` form the j-th piece, so
    the pieces partition the weights exactly and there are at most
    ``ceil(log2 R) + 2`` of them.
    """
    if R <= 1:
        raise ValueError("R must exceed 1")
    pts, w = measure.points, measure.weights
    radii = dyadic_radii(1.0 / R)
    dens = np.zeros(pts.shape[0])
    block = max(1, 2**22 // max(pts.shape[0], 1))
    for s in range(0, pts.shape[0], block):
        dist = cdist(pts[s : s + block], pts)
        for r in radii:
            mass = (dist <= r) @ w
            dens[s : s + block] = np.maximum(dens[s : s + block], mass * r ** (-alpha))
    level = np.floor(np.log2(dens) / alpha + 1e-12).astype(int)
    pieces = []
    for lv in np.unique(level):
        mask = level == lv
        pieces.append(measure.restrict(mask, label=f"{measure.label}|wolff[{lv}]"))
        pieces[-1].params["level"] = int(lv)
    return pieces


def wolff_constants(pieces: Sequence[DiscreteMeasure], alpha: float, R: float, energy: float) -> np.ndarray:
    """``mu_j(R^d) * sup_{r >= 1/R} r^{-alpha} mu_j(B) / I_alpha(mu)`` for each piece."""
    out = []
    for p in pieces:
        g = growth_norm(p, alpha, 1.0 / R).value
        out.append(p.total_mass * g / energy)
    return np.asarray(out)


# -- import / export ----------------------------------------------------------

_BIN_HEADER = struct.Struct("<qq")


def export_measure(measure: DiscreteMeasure, path: str | Path, binary: bool = False) -> None:
    """Write columns ``x_1 .. x_d, weight``.

    Text: one row per atom, ``%.17g``, comma separated, with a header line.
    Binary: little-endian int64 ``d`` and int64 ``count``, then ``count``
    rows of ``d + 1`` little-endian float64 values.
    """
    table = np.column_stack([measure.points, measure.weights])
    path = Path(path)
    if binary:
        with open(path, "wb") as fh:
            fh.write(_BIN_HEADER.pack(measure.d, table.shape[0]))
            fh.write(table.astype("<f8").tobytes())
    else:
        header = ",".join([f"x_{j+1}" for j in range(measure.d)] + ["weight"])
        np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.17g")


def import_measure(path: str | Path, binary: bool = False, label: str = "imported") -> DiscreteMeasure:
    path = Path(path)
    if binary:
        raw = path.read_bytes()
        d, count = _BIN_HEADER.unpack_from(raw)
        table = np.frombuffer(raw, dtype="<f8", offset=_BIN_HEADER.size).reshape(count, d + 1)
    else:
        table = np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1))
    return DiscreteMeasure.from_points(table[:, :-1], table[:, -1], label=label)


def measure_from_id(spec: str, d: int, alpha: float, **kw) -> DiscreteMeasure:
    """Construct ``cantor``, ``sharpness``, ``cube``, ``ball`` or ``point`` by name."""
    if spec == "cantor":
        return cantor_product_measure(d, alpha, kw.get("depth", 10))
    if spec == "sharpness":
        return sharpness_measure(d, alpha, kw.get("resolution", 256))
    if spec == "cube":
        return cube_measure(d, kw.get("per_axis", 16))
    if spec == "ball":
        return uniform_ball_measure(d, kw.get("per_axis", 16))
    if spec == "point":
        return point_mass(d)
    raise ValueError(f"unknown measure id {spec!r}")
