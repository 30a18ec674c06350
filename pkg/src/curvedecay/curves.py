"""Nondegenerate space curves on [0, 1], their Taylor frames and rescalings."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

# jet(t, m) -> array of shape (m + 1, len(t), d): derivatives of orders 0..m
Jet = Callable[[np.ndarray, int], np.ndarray]

SUP_GRID_SIZE = 2049
TORSION_FLOOR = 1e-3
FRAME_SINGULAR = 1e-9


def chebyshev_grid(n: int = SUP_GRID_SIZE) -> np.ndarray:
    """Chebyshev-Lobatto points mapped to [0, 1], endpoints included."""
    return 0.5 * (1.0 - np.cos(np.pi * np.arange(n) / (n - 1)))


@dataclass(frozen=True)
class Curve:
    d: int
    jet_fn: Jet = field(repr=False)
    label: str = "curve"
    meta: dict = field(default_factory=dict, compare=False)

    def jet(self, t, m: int) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return self.jet_fn(t, m)

    def derivative(self, t, m: int) -> np.ndarray:
        return self.jet(t, m)[m]

    def __call__(self, t) -> np.ndarray:
        return self.jet(t, 0)[0]

    def speed_bound(self, n: int = 1025) -> float:
        """``sup |gamma'|`` on [0, 1], sampled on a fine grid."""
        v = self.derivative(np.linspace(0.0, 1.0, n), 1)
        return float(np.max(np.linalg.norm(v, axis=1)))

    def radius_bound(self, n: int = 1025) -> float:
        return float(np.max(np.linalg.norm(self(np.linspace(0.0, 1.0, n)), axis=1)))


def _moment_jet(k: int, d: int) -> Jet:
    def jet(t, m):
        out = np.zeros((m + 1, t.size, d))
        for order in range(m + 1):
            for j in range(max(order, 1), k + 1):
                out[order, :, j - 1] = t ** (j - order) / math.factorial(j - order)
        return out

    return jet


def moment_curve(k: int, d: int) -> Curve:
    """``(t, t^2/2!, ..., t^k/k!, 0, ..., 0)`` in ``R^d``."""
    if not (1 <= k <= d):
        raise ValueError(f"moment curve needs 1 <= k <= d, got k={k}, d={d}")
    return Curve(d, _moment_jet(k, d), f"moment{k}" if k != d else "moment", {"k": k})


def helix_curve(d: int = 3) -> Curve:
    """``(cos t, sin t, t)`` on the unit parameter interval; torsion determinant 1."""
    if d != 3:
        raise ValueError("the helix is only defined for d = 3")

    def jet(t, m):
        out = np.zeros((m + 1, t.size, 3))
        for order in range(m + 1):
            shift = order * np.pi / 2
            out[order, :, 0] = np.cos(t + shift)
            out[order, :, 1] = np.sin(t + shift)
        out[0, :, 2] = t
        if m >= 1:
            out[1, :, 2] = 1.0
        return out

    return Curve(3, jet, "helix")


def torsion_det(curve: Curve, t) -> np.ndarray | float:
    """``det(gamma'(t), ..., gamma^(d)(t))``."""
    scalar = np.ndim(t) == 0
    jet = curve.jet(t, curve.d)
    mats = np.moveaxis(jet[1:], 0, -1)  # (T, d coords, d orders)
    dets = np.linalg.det(mats)
    return float(dets[0]) if scalar else dets


def min_abs_torsion(curve: Curve, n: int = 10_000) -> float:
    """Grid minimum of ``|det|``; a sign change between samples counts as 0."""
    dets = torsion_det(curve, np.linspace(0.0, 1.0, n))
    if np.any(np.sign(dets[1:]) != np.sign(dets[:-1])):
        return 0.0
    return float(np.min(np.abs(dets)))


def perturbed_curve(base: Curve, amplitude: float, frequency: float) -> Curve:
    """Add ``amplitude * sin(frequency * t)`` to the last coordinate of ``base``.

    The construction is rejected when the torsion determinant comes within
    ``1e-3`` of zero somewhere on a 10^4-point grid.
    """
    if amplitude == 0:
        return base
    d = base.d

    def jet(t, m):
        out = base.jet(t, m).copy()
        for order in range(m + 1):
            out[order, :, d - 1] += amplitude * frequency**order * np.sin(frequency * t + order * np.pi / 2)
        return out

    label = f"perturbed:a={amplitude:g},f={frequency:g}"
    curve = Curve(d, jet, label, {"base": base.label, "a": amplitude, "f": frequency})
    floor = min_abs_torsion(curve)
    if floor < TORSION_FLOOR:
        raise ValueError(f"{label}: torsion determinant drops to {floor:.3g} on [0, 1]")
    return curve


def reversed_curve(curve: Curve) -> Curve:
    """``t -> gamma(1 - t)``; the m-th derivative picks up ``(-1)^m``."""

    def jet(t, m):
        out = curve.jet(1.0 - t, m)
        signs = (-1.0) ** np.arange(m + 1)
        return out * signs[:, None, None]

    return Curve(curve.d, jet, f"reversed({curve.label})")


def negated_curve(curve: Curve) -> Curve:
    return Curve(curve.d, lambda t, m: -curve.jet(t, m), f"negated({curve.label})")


def finite_difference_curve(d: int, fn: Callable[[np.ndarray], np.ndarray], label: str = "sampled") -> Curve:
    """Wrap a position-only map with Richardson-extrapolated central differences.

    The step grows with the derivative order (``eps**(1/(m+2))``, never below
    1e-5) since a fixed tiny step is swamped by rounding at high order.
    Expect roughly ``1e-6`` relative accuracy for first derivatives and a few
    digits fewer for each additional order.
    """

    def central(t, m, h):
        acc = 0.0
        for i in range(m + 1):
            acc = acc + (-1) ** i * math.comb(m, i) * fn(t + (m / 2 - i) * h)
        return acc / h**m

    def jet(t, m):
        out = np.zeros((m + 1, t.size, d))
        out[0] = fn(t)
        for order in range(1, m + 1):
            h = max(1e-5, np.finfo(float).eps ** (1.0 / (order + 2)))
            out[order] = (4 * central(t, order, h / 2) - central(t, order, h)) / 3
        return out

    return Curve(d, jet, label, {"finite_difference": True})


@dataclass(frozen=True)
class Frame:
    M: np.ndarray
    D: np.ndarray
    tau: float
    h: float
    k: int

    @property
    def MD(self) -> np.ndarray:
        return self.M @ self.D


def scaling_matrix(d: int, k: int, h: float) -> np.ndarray:
    """``D_h^k = diag(h, h^2, ..., h^k, 1, ..., 1)``."""
    diag = np.ones(d)
    diag[:k] = float(h) ** np.arange(1, k + 1)
    return np.diag(diag)


def taylor_frame(curve: Curve, tau: float, k: int, h: float = 1.0) -> Frame:
    """Columns ``gamma'(tau), ..., gamma^(k)(tau), e_{k+1}, ..., e_d``."""
    d = curve.d
    if not (1 <= k <= d):
        raise ValueError(f"frame order k must lie in [1, {d}], got {k}")
    if not (0.0 <= tau <= 1.0):
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    jet = curve.jet(tau, k)[:, 0, :]
    M = np.eye(d)
    M[:, :k] = jet[1 : k + 1].T
    det = np.linalg.det(M)
    if abs(det) < FRAME_SINGULAR:
        raise ValueError(f"Taylor frame of {curve.label} at tau={tau} is singular (det={det:.3g})")
    return Frame(M, scaling_matrix(d, k, h), float(tau), float(h), k)


def normalize_curve(curve: Curve, tau: float, h: float, k: int) -> Curve:
    """``t -> (M D)^{-1} (gamma(h t + tau) - gamma(tau))`` for ``t`` in [0, 1]."""
    if h == 0:
        raise ValueError("h must be nonzero")
    lo, hi = sorted((tau, tau + h))
    if lo < -1e-15 or hi > 1 + 1e-15:
        raise ValueError(f"[{lo}, {hi}] escapes the parameter interval [0, 1]")
    frame = taylor_frame(curve, tau, k, h)
    inv = np.linalg.inv(frame.MD)
    base = curve(tau)[0]

    def jet(t, m):
        raw = curve.jet(h * t + tau, m)
        raw[0] = raw[0] - base
        scale = float(h) ** np.arange(m + 1)
        return np.einsum("ij,otj->oti", inv, raw) * scale[:, None, None]

    return Curve(curve.d, jet, f"normalized({curve.label},tau={tau:g},h={h:g},k={k})")


def c_norm_distance(a: Curve, b: Curve, order: int) -> float:
    """``max_{m <= order} sup_t |a^(m)(t) - b^(m)(t)|`` on the Chebyshev grid."""
    if a.d != b.d:
        raise ValueError("curves live in different dimensions")
    if order > a.d + 1:
        raise ValueError(f"order must be at most d + 1 = {a.d + 1}")
    t = chebyshev_grid()
    diff = a.jet(t, order) - b.jet(t, order)
    return float(np.max(np.linalg.norm(diff, axis=2)))


def tangent_normal_frame(curve: Curve, t) -> np.ndarray:
    """Orthonormal frame ``(T, N_2, ..., N_d)`` from Gram-Schmidt on the derivatives.

    Returns an array of shape ``(len(t), d, d)`` whose columns are the frame.
    """
    jet = curve.jet(t, curve.d)
    mats = np.moveaxis(jet[1:], 0, -1)
    q, r = np.linalg.qr(mats)
    signs = np.sign(np.diagonal(r, axis1=1, axis2=2))
    signs[signs == 0] = 1.0
    return q * signs[:, None, :]


_PERTURBED = re.compile(r"^perturbed:(.*)$")


def curve_from_id(spec: str, d: int = 3) -> Curve:
    """Build a zoo curve from ``moment``, ``helix`` or ``perturbed:a=..,f=..``."""
    spec = spec.strip()
    if spec == "moment":
        return moment_curve(d, d)
    if spec == "helix":
        return helix_curve(d)
    m = _PERTURBED.match(spec)
    if m:
        params = {"a": 0.01, "f": 3.0}
        for item in filter(None, m.group(1).split(",")):
            key, _, val = item.partition("=")
            if key.strip() not in params:
                raise ValueError(f"unknown perturbation parameter {key!r} in {spec!r}")
            params[key.strip()] = float(val)
        return perturbed_curve(moment_curve(d, d), params["a"], params["f"])
    raise ValueError(f"unknown curve id {spec!r}")
