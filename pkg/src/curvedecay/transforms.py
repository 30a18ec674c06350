"""Fourier side: transforms of measures, oscillatory averages along curves,
the extension operator and ``L^q(d mu)`` norms.

Oscillatory integrals in ``t`` use composite rules whose node count follows
the largest phase rate (``lambda sup|gamma'| sup|x|``) times an oversampling
factor, optionally audited by repeated doubling.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .curves import Curve, tangent_normal_frame
from .measures import DiscreteMeasure


class QuadratureError(RuntimeError):
    """Raised when doubling the node count keeps changing the result."""

    def __init__(self, message: str, last_values: tuple[float, float]):
        super().__init__(message)
        self.last_values = last_values


@dataclass(frozen=True)
class QuadratureSpec:
    oversample: float = 8.0
    rule: str = "simpson"
    refine_check: bool = True
    tolerance: float = 1e-3
    max_doublings: int = 3
    min_nodes: int = 64

    def __post_init__(self):
        if self.oversample < 2:
            raise ValueError("oversample must be at least 2")
        if self.rule not in ("trapezoid", "simpson"):
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


@dataclass
class Field:
    """Complex samples at a set of locations, with provenance metadata."""

    points: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.values = np.asarray(self.values, dtype=complex).ravel()
        if self.values.size != self.points.shape[0]:
            raise ValueError("one value per location is required")

    def to_csv(self, path) -> None:
        d = self.points.shape[1]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow([f"x_{j+1}" for j in range(d)] + ["re", "im"])
            for p, v in zip(self.points, self.values):
                w.writerow([repr(float(c)) for c in p] + [repr(v.real), repr(v.imag)])


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    nodes: int
    audit: tuple[tuple[int, float], ...]

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float
    samples: int

    def __float__(self) -> float:
        return self.value


def mu_hat(measure: DiscreteMeasure, xi) -> np.ndarray | complex:
    """``sum_i w_i exp(-i xi . x_i)`` (closed forms used when available)."""
    xi = np.asarray(xi, dtype=float)
    out = measure.ft(xi)
    return complex(out) if xi.ndim == 1 else out


# -- composite rules ----------------------------------------------------------


def _weights(n_intervals: int, a: float, b: float, rule: str) -> np.ndarray:
    h = (b - a) / n_intervals
    if rule == "trapezoid":
        w = np.full(n_intervals + 1, h)
        w[[0, -1]] = h / 2
        return w
    w = np.full(n_intervals + 1, 2 * h / 3)
    w[1::2] = 4 * h / 3
    w[[0, -1]] = h / 3
    return w


def nyquist_nodes(lam: float, speed: float, radius: float, length: float, spec: QuadratureSpec) -> int:
    """Even interval count resolving phase rate ``lam * speed * radius`` on an interval of ``length``."""
    n = int(math.ceil(spec.oversample * lam * speed * radius * length / (2 * math.pi)))
    n = max(spec.min_nodes, n)
    return n + (n % 2)


def audited_quadrature(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    n: int,
    spec: QuadratureSpec,
    what: str = "integral",
) -> QuadratureResult:
    """Composite rule with doubling audit; previously computed samples are reused."""
    t = np.linspace(a, b, n + 1)
    vals = f(t)
    value = float(np.sum(_weights(n, a, b, spec.rule) * vals))
    audit = [(n, value)]
    if not spec.refine_check:
        return QuadratureResult(value, n, tuple(audit))
    for _ in range(spec.max_doublings):
        mids = 0.5 * (t[1:] + t[:-1])
        new = f(mids)
        merged = np.empty(2 * n + 1, dtype=vals.dtype)
        merged[0::2] = vals
        merged[1::2] = new
        t2 = np.empty(2 * n + 1)
        t2[0::2], t2[1::2] = t, mids
        t, vals, n = t2, merged, 2 * n
        prev, value = value, float(np.sum(_weights(n, a, b, spec.rule) * vals))
        audit.append((n, value))
        scale = max(abs(value), abs(prev), 1e-300)
        if abs(value - prev) <= spec.tolerance * scale:
            return QuadratureResult(value, n, tuple(audit))
    raise QuadratureError(
        f"{what}: no convergence after {spec.max_doublings} doublings (last {prev:.6g} -> {value:.6g})",
        (prev, value),
    )


# -- averages -----------------------------------------------------------------


def _squared_ft_on(measure: DiscreteMeasure, prune: float):
    if measure.is_product and measure._analytic is None:
        return lambda xi: np.abs(measure.factor_ft(xi, prune=prune)) ** 2
    return lambda xi: np.abs(measure.ft(xi)) ** 2


def curve_average(
    measure: DiscreteMeasure,
    curve: Curve,
    lam: float,
    spec: QuadratureSpec = QuadratureSpec(),
    interval: tuple[float, float] = (0.0, 1.0),
    prune: float = 1e-12,
) -> QuadratureResult:
    """``int_a^b |mu^(lam gamma(t))|^2 dt`` with the Nyquist-audited composite rule.

    For product measures the expensive one-dimensional factors are skipped
    where the cheap ones are already below ``prune`` times their mass, which
    changes the integrand by less than ``prune^2`` relative.
    """
    if lam < 1:
        raise ValueError("lambda must be at least 1")
    a, b = interval
    radius = max(measure.support_radius(), 1e-12)
    n = nyquist_nodes(lam, curve.speed_bound(), radius, b - a, spec)
    cheap_mass = 1.0
    if measure.is_product:
        cheap_mass = float(np.prod([abs(f.mass) for f in measure.factors if f.cheap]))
    sq = _squared_ft_on(measure, prune * cheap_mass)
    return audited_quadrature(lambda t: sq(lam * curve(t)), a, b, n, spec, what=f"curve average at lambda={lam:g}")


def uniform_ball_sample(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    v = rng.standard_normal((n, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * rng.random(n)[:, None] ** (1.0 / d)


def seeded_rng(seed: int) -> np.random.Generator:
    """Counter-based generator, so every seed gives the same stream on every platform."""
    return np.random.Generator(np.random.Philox(seed))


def ball_average(measure: DiscreteMeasure, lam: float, n_mc: int = 200_000, seed: int = 0, batch: int = 65536) -> MCEstimate:
    """Monte Carlo mean of ``|mu^(lam xi)|^2`` over ``xi`` uniform in ``B(0, 1)``."""
    if n_mc < 1000:
        raise ValueError("n_mc must be at least 1000")
    rng = seeded_rng(seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_mc:
        m = min(batch, n_mc - done)
        xi = uniform_ball_sample(rng, m, measure.d)
        v = np.abs(measure.ft(lam * xi)) ** 2
        total += math.fsum(v)
        total_sq += math.fsum(v * v)
        done += m
    mean = total / n_mc
    var = max(total_sq / n_mc - mean**2, 0.0)
    return MCEstimate(mean, math.sqrt(var / n_mc), n_mc)


def tube_integral(
    measure: DiscreteMeasure,
    curve: Curve,
    lam: float,
    spec: QuadratureSpec = QuadratureSpec(),
    per_node: int = 8,
    seed: int = 0,
    width: float = 1.0,
    prune: float = 1e-12,
) -> MCEstimate:
    """``int over lam gamma([0,1]) + (normal cube of side width)`` of ``|mu^|^2``.

    The tube is parametrised as ``xi = lam gamma(t) + N(t) s`` with ``N`` the
    normal part of the Gram-Schmidt frame and ``s`` uniform in the cube.  The
    Jacobian is ``lam |gamma'| - sum_j s_j N_j . T'``.  ``t`` uses the
    composite rule at Nyquist resolution, ``s`` a seeded Monte Carlo sample
    per node; the error combines the per-node sample variances.
    """
    d = curve.d
    radius = max(measure.support_radius(), 1e-12)
    n = nyquist_nodes(lam, curve.speed_bound(), radius, 1.0, spec)
    n = max(n, 2 * spec.min_nodes)
    n += n % 2
    t = np.linspace(0.0, 1.0, n + 1)
    w = _weights(n, 0.0, 1.0, spec.rule)
    jet = curve.jet(t, 2)
    g0, g1, g2 = jet[0], jet[1], jet[2]
    speed = np.linalg.norm(g1, axis=1)
    frame = tangent_normal_frame(curve, t)
    T = frame[:, :, 0]
    N = frame[:, :, 1:]
    Tdot = (g2 - np.sum(g2 * T, axis=1, keepdims=True) * T) / speed[:, None]
    rng = seeded_rng(seed)
    s = (rng.random((n + 1, per_node, d - 1)) - 0.5) * width
    xi = lam * g0[:, None, :] + np.einsum("tij,tkj->tki", N, s)
    jac = lam * speed[:, None] - np.einsum("tkj,tj->tk", s, np.einsum("tij,ti->tj", N, Tdot))
    if np.any(jac <= 0):
        raise ValueError("tube parametrisation folds: lambda too small for the tube width")
    cheap_mass = 1.0
    if measure.is_product:
        cheap_mass = float(np.prod([abs(f.mass) for f in measure.factors if f.cheap]))
    sq = _squared_ft_on(measure, prune * cheap_mass)
    vals = sq(xi.reshape(-1, d)).reshape(n + 1, per_node) * jac
    vol = width ** (d - 1)
    node_mean = vals.mean(axis=1) * vol
    node_var = vals.var(axis=1, ddof=1) * vol**2 / per_node
    value = float(np.sum(w * node_mean))
    err = float(np.sqrt(np.sum(w**2 * node_var)))
    return MCEstimate(value, err, (n + 1) * per_node)


# -- extension operator -------------------------------------------------------


def smooth_cutoff(x: np.ndarray, scale: float = 0.125) -> np.ndarray:
    """1 on ``B(0, 1 - scale)``, 0 outside ``B(0, 1)``, cosine ramp between."""
    r = np.linalg.norm(np.atleast_2d(x), axis=1)
    u = np.clip((1.0 - r) / scale, 0.0, 1.0)
    return 0.5 - 0.5 * np.cos(np.pi * u)


def _as_profile(f) -> Callable[[np.ndarray], np.ndarray]:
    if callable(f):
        return f
    arr = np.asarray(f)
    grid = np.linspace(0.0, 1.0, arr.size)
    return lambda t: np.interp(t, grid, arr.real) + 1j * np.interp(t, grid, arr.imag) if np.iscomplexobj(arr) else np.interp(t, grid, arr)


def extension_op(
    curve: Curve,
    f,
    lam: float,
    eval_points: np.ndarray,
    cutoff: Callable[[np.ndarray], np.ndarray] | None = smooth_cutoff,
    spec: QuadratureSpec = QuadratureSpec(),
    interval: tuple[float, float] = (0.0, 1.0),
    block: int = 2048,
) -> Field:
    """``a(x) int_I exp(i lam x . gamma(t)) f(t) dt`` at each evaluation point.

    ``f`` is a callable on ``[0, 1]`` or samples on a uniform grid of it.
    The node count follows the phase rate; with ``refine_check`` the whole
    field is recomputed at double resolution until the largest change
    relative to the largest value is within tolerance.
    """
    x = np.atleast_2d(np.asarray(eval_points, dtype=float))
    if np.any(np.linalg.norm(x, axis=1) > 1 + 1e-12):
        raise ValueError("evaluation points must lie in B(0, 1)")
    prof = _as_profile(f)
    a, b = interval
    radius = max(float(np.max(np.linalg.norm(x, axis=1))), 1e-12)
    n = nyquist_nodes(lam, curve.speed_bound(), radius, b - a, spec)

    def at(n_int):
        t = np.linspace(a, b, n_int + 1)
        w = _weights(n_int, a, b, spec.rule) * prof(t)
        g = curve(t) * lam
        out = np.empty(x.shape[0], dtype=complex)
        for s in range(0, x.shape[0], block):
            out[s : s + block] = np.exp(1j * (x[s : s + block] @ g.T)) @ w
        return out

    vals = at(n)
    audit = [(n, float(np.max(np.abs(vals))))]
    if spec.refine_check:
        for _ in range(spec.max_doublings):
            n *= 2
            new = at(n)
            change = float(np.max(np.abs(new - vals))) / max(float(np.max(np.abs(new))), 1e-300)
            vals = new
            audit.append((n, change))
            if change <= spec.tolerance:
                break
        else:
            raise QuadratureError(f"extension operator at lambda={lam:g} under-resolved", (audit[-2][1], audit[-1][1]))
    if cutoff is not None:
        vals = vals * cutoff(x)
    return Field(x, vals, {"lambda": lam, "curve": curve.label, "nodes": n, "audit": audit})


def lq_norm_mu(values, measure: DiscreteMeasure, q: float) -> float:
    """``(sum_i w_i |F_i|^q)^{1/q}``; the max over charged atoms when ``q`` is infinite."""
    v = values.values if isinstance(values, Field) else np.asarray(values)
    v = np.abs(np.asarray(v).ravel())
    w = measure.weights
    if v.size != w.size:
        raise ValueError(f"field has {v.size} samples but the measure has {w.size} atoms")
    if q < 1:
        raise ValueError("q must be at least 1")
    if math.isinf(q):
        return float(np.max(v[w > 0])) if np.any(w > 0) else 0.0
    top = float(np.max(v)) if v.size else 0.0
    if top == 0:
        return 0.0
    # scale out the maximum so large q does not overflow
    return top * float(np.sum(w * (v / top) ** q)) ** (1.0 / q)


# -- neighbourhood profiles ---------------------------------------------------


def tube_lattice(curve: Curve, lam: float, interval=(0.0, 1.0), spacing: float = 0.5, half: float = 0.5) -> np.ndarray:
    """Lattice points ``spacing Z^d`` within sup-distance ``half`` of ``lam gamma(interval)``."""
    a, b = interval
    n = max(8, int(math.ceil(lam * curve.speed_bound() * (b - a) / (spacing / 4))))
    c = lam * curve(np.linspace(a, b, n + 1))
    lo = np.ceil((c - half) / spacing - 1e-9).astype(np.int64)
    hi = np.floor((c + half) / spacing + 1e-9).astype(np.int64)
    span = int(np.max(hi - lo)) + 1
    d = curve.d
    offs = np.array(np.meshgrid(*([np.arange(span)] * d), indexing="ij")).reshape(d, -1).T
    chunks = []
    for s in range(0, c.shape[0], 4096):
        cand = lo[s : s + 4096, None, :] + offs[None, :, :]
        ok = np.all(cand <= hi[s : s + 4096, None, :], axis=2)
        chunks.append(cand[ok])
    idx = np.unique(np.concatenate(chunks), axis=0)
    return idx * spacing


def _lattice_ft(y: np.ndarray, amp: float, cell: float, x: np.ndarray, block: int = 1024) -> np.ndarray:
    out = np.empty(x.shape[0], dtype=complex)
    for s in range(0, x.shape[0], block):
        out[s : s + block] = np.exp(-1j * (x[s : s + block] @ y.T)).sum(axis=1)
    return amp * cell * out


@dataclass(frozen=True)
class CombProfile:
    """Closed form of the modulated tensor profile used against the comb measure.

    ``G_1(y) = lam^{-1/4} phi(y_1 / lam^{1/2}) prod_{j>1} phi(y_j)`` where
    ``phi`` is the L^2-normalised indicator of ``[0, 1]`` smoothed by a
    Gaussian of width ``smoothing``, and
    ``G_2^ = T^{-1/2} sum_k G_1^(. - (k/T) e_1)``.  A flat top uses the whole
    box ``[0, lam^{1/2}]``, which keeps the ``T`` modulations of ``G_2`` close
    to orthogonal already at moderate ``lam``.
    """

    d: int
    lam: float
    teeth: int
    smoothing: float = 1.0 / 16.0

    def phi(self, y):
        a = 1.0 / (self.smoothing * math.sqrt(2.0))
        return 0.5 * (special.erf(y * a) - special.erf((y - 1.0) * a)) / self._norm

    @cached_property
    def _norm(self) -> float:
        # ||box * gaussian||_2^2 = int (erf-difference / 2)^2, done by quadrature once
        a = 1.0 / (self.smoothing * math.sqrt(2.0))
        y = np.linspace(-8 * self.smoothing, 1 + 8 * self.smoothing, 1 << 15 | 1)
        v = (0.5 * (special.erf(y * a) - special.erf((y - 1.0) * a))) ** 2
        return math.sqrt(float(np.sum(_weights(y.size - 1, y[0], y[-1], "simpson") * v)))

    def phi_hat(self, w):
        w = np.asarray(w, dtype=float)
        small = np.abs(w) < 1e-8
        safe = np.where(small, 1.0, w)
        box = np.where(small, 1.0 - 0.5j * w, (1.0 - np.exp(-1j * w)) / (1j * safe))
        return box * np.exp(-0.5 * (self.smoothing * w) ** 2) / self._norm

    def g2_hat(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        root = math.sqrt(self.lam)
        first = np.zeros(x.shape[0], dtype=complex)
        for k in range(self.teeth):
            first += self.phi_hat(root * (x[:, 0] - k / self.teeth))
        out = self.lam**0.25 * first / math.sqrt(self.teeth)
        for j in range(1, self.d):
            out = out * self.phi_hat(x[:, j])
        return out

    def l2_norm(self, n: int = 1 << 16) -> float:
        """``||G_2||_2`` by quadrature in ``y_1`` (the other factors have unit norm)."""
        root = math.sqrt(self.lam)
        pad = 8 * self.smoothing * root
        y = np.linspace(-pad, root + pad, n + 1)
        g1 = self.lam**-0.25 * self.phi(y / root)
        mod = np.exp(1j * np.outer(y, np.arange(self.teeth) / self.teeth)).sum(axis=1) / math.sqrt(self.teeth)
        integrand = np.abs(g1 * mod) ** 2
        return math.sqrt(float(np.sum(_weights(n, y[0], y[-1], "simpson") * integrand)))


def neighborhood_ghat(
    curve: Curve,
    lam: float,
    profile: str,
    eval_points: np.ndarray,
    interval: tuple[float, float] | None = None,
    spacing: float = 0.5,
    frame: np.ndarray | None = None,
    teeth: int | None = None,
    shift: np.ndarray | None = None,
) -> tuple[Field, float]:
    """``g^`` at the evaluation points for a function ``g`` living on the curve's neighbourhood.

    Profiles:

    ``indicator_sqrt_lambda``
        ``g = lam^{-1/2}`` on the lattice tube around ``lam gamma([0, 1])``.
    ``sub_interval``
        ``g = 1`` on the lattice tube around ``lam gamma(interval)``.
    ``comb_G3``
        ``G_3(y) = |det M|^{-1/2} G_2(M^{-1} y)`` in closed form, with ``M =
        frame`` (identity by default) and ``teeth`` copies; evaluation points
        are first shifted by ``shift`` (the offset that centred the comb
        measure).

    Returns the field and ``||g||_{L^2}`` from the same discretisation.
    """
    if lam < 4:
        raise ValueError("lambda must be at least 4")
    x = np.atleast_2d(np.asarray(eval_points, dtype=float))
    meta = {"lambda": lam, "profile": profile, "curve": curve.label}
    if profile == "comb_G3":
        M = np.eye(curve.d) if frame is None else np.asarray(frame, dtype=float)
        T = teeth if teeth is not None else 1
        comb = CombProfile(curve.d, lam, T)
        xs = x if shift is None else x + shift
        vals = abs(np.linalg.det(M)) ** 0.5 * comb.g2_hat(xs @ M)
        return Field(x, vals, meta), comb.l2_norm()
    if profile == "indicator_sqrt_lambda":
        interval = interval or (0.0, 1.0)
        amp = lam**-0.5
    elif profile == "sub_interval":
        if interval is None:
            raise ValueError("sub_interval needs an interval")
        amp = 1.0
    else:
        raise ValueError(f"unknown profile {profile!r}")
    if np.max(np.linalg.norm(x, axis=1)) * spacing > math.pi / 2:
        raise ValueError("tube lattice under-resolves the evaluation points")
    y = tube_lattice(curve, lam, interval, spacing)
    cell = spacing**curve.d
    vals = _lattice_ft(y, amp, cell, x)
    norm = amp * math.sqrt(y.shape[0] * cell)
    meta.update({"tube_points": int(y.shape[0]), "spacing": spacing})
    return Field(x, vals, meta), norm
