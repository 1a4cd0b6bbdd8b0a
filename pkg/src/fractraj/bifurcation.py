"""Rotation angle of the restart map as a function of order and frequency.

For ``A = [[a, b], [-b, a]]`` the restart map is ``|E| V`` with ``V`` the
rotation by the argument of ``E = E_alpha((a + ib) t1^alpha)``.  The unsigned
angle ``theta = arccos(Re E / |E|)`` lies in ``[0, pi]``.  This module scans
``theta`` over ``alpha`` (profiles with refined local maxima), over the
``(alpha, b)`` plane (surfaces), and fits a straight line through the
maximizing ``b`` of each ``alpha``.

Nodes where ``|E| < 1e-8`` (the angle is ill-conditioned) or where the series
refuses the argument are stored as NaN.
"""

from __future__ import annotations

import cmath
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConvergenceError, DomainError
from .mittag_leffler import check_order, ml

__all__ = [
    "MASK_ABS_E",
    "WORKERS_ENV",
    "rotation_angle",
    "masked_angle",
    "ThetaProfile",
    "theta_profile",
    "ThetaSurface",
    "theta_surface",
    "ArgmaxCurveFit",
    "fit_line",
    "argmax_line_fit",
]

MASK_ABS_E = 1e-8
TIE_TOL = 1e-8
WORKERS_ENV = "FRACTRAJ_WORKERS"


def _factor(alpha: float, a: float, b: float, t1: float) -> complex:
    lam = complex(a, b)
    if alpha == 1.0:
        return cmath.exp(lam * t1)
    return complex(ml(alpha, 1.0, lam * t1**alpha))


def rotation_angle(alpha: float, a: float, b: float, t1: float = 1.0) -> float:
    """Unsigned rotation angle ``arccos(Re E / |E|)`` of the restart map.

    Evaluated as ``|atan2(Im E, Re E)|``, the same angle without the loss of
    accuracy of ``arccos`` near 0 and pi.

    Raises
    ------
    DomainError
        If ``|E| < 1e-30``.
    """
    alpha = check_order(alpha)
    if not t1 > 0.0:
        raise DomainError(f"t1 must be positive, got {t1!r}")
    e = _factor(alpha, a, b, t1)
    if abs(e) < 1e-30:
        raise DomainError(f"|E| = {abs(e):.3g} is too small for a rotation angle")
    return abs(math.atan2(e.imag, e.real))


def masked_angle(alpha: float, a: float, b: float, t1: float = 1.0, mask: float = MASK_ABS_E) -> float:
    """:func:`rotation_angle`, or NaN where it is ill-conditioned or not computable."""
    try:
        e = _factor(check_order(alpha), a, b, t1)
    except ConvergenceError:
        return math.nan
    if abs(e) < mask:
        return math.nan
    return abs(math.atan2(e.imag, e.real))


def _default_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    return max(1, int(workers))


def _angle_row(args) -> list[float]:
    alphas, bs, a, t1, mask = args
    return [masked_angle(al, a, b, t1, mask) for al, b in zip(alphas, bs)]


def _angles(alphas, bs, a: float, t1: float, mask: float, workers: int | None) -> np.ndarray:
    alphas = np.asarray(alphas, dtype=float).ravel()
    bs = np.asarray(bs, dtype=float).ravel()
    workers = _default_workers(workers)
    if workers == 1 or alphas.size < 64:
        return np.array(_angle_row((alphas, bs, a, t1, mask)))
    chunks = np.array_split(np.arange(alphas.size), 4 * workers)
    jobs = [(alphas[c], bs[c], a, t1, mask) for c in chunks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(_angle_row, jobs))
    return np.concatenate([np.asarray(r, dtype=float) for r in rows])


def _strict_interior_maxima(values: np.ndarray) -> list[int]:
    v = values
    idx = []
    for i in range(1, v.size - 1):
        if np.isfinite(v[i - 1 : i + 2]).all() and v[i - 1] < v[i] > v[i + 1]:
            idx.append(i)
    return idx


def _golden_max(f, lo: float, mid: float, hi: float, xtol: float) -> tuple[float, float]:
    res = minimize_scalar(lambda x: -f(x), bracket=(lo, mid, hi), method="golden", options={"xtol": xtol})
    x = float(res.x)
    if not lo <= x <= hi:
        x = mid
    return x, float(f(x))


@dataclass(frozen=True)
class ThetaProfile:
    """``theta`` over an ``alpha`` grid with its refined interior maxima."""

    alphas: np.ndarray
    thetas: np.ndarray
    maxima: tuple[tuple[float, float], ...]


def theta_profile(
    a: float,
    b: float,
    t1: float = 1.0,
    alpha_range: tuple[float, float] = (0.001, 1.0),
    n_points: int = 400,
    xtol: float = 1e-9,
    mask: float = MASK_ABS_E,
    workers: int | None = None,
) -> ThetaProfile:
    """Scan ``theta(alpha)`` uniformly and refine each strict interior maximum.

    A grid point is a maximum when it exceeds both neighbours; it is refined
    by golden-section search inside the neighbouring grid cells.  Flat runs
    (for instance ``theta = pi`` for a negative real factor) are not maxima.
    """
    lo, hi = alpha_range
    if not 0.0 < lo < hi <= 1.0:
        raise DomainError(f"alpha range must lie in (0, 1], got {alpha_range!r}")
    if n_points < 16:
        raise DomainError("a profile needs at least 16 points")
    alphas = np.linspace(lo, hi, n_points)
    thetas = _angles(alphas, np.full(n_points, b), a, t1, mask, workers)

    def f(al):
        v = masked_angle(al, a, b, t1, mask)
        return -math.inf if math.isnan(v) else v

    maxima = tuple(
        _golden_max(f, alphas[i - 1], alphas[i], alphas[i + 1], xtol) for i in _strict_interior_maxima(thetas)
    )
    return ThetaProfile(alphas, thetas, maxima)


@dataclass(frozen=True)
class ThetaSurface:
    """``theta[i, j]`` at ``(alphas[i], bs[j])``; rows follow ``alpha``."""

    alphas: np.ndarray
    bs: np.ndarray
    theta: np.ndarray

    def rows(self):
        """Yield ``(alpha, b, theta)`` in row-major order (alpha outer)."""
        for i, al in enumerate(self.alphas):
            for j, b in enumerate(self.bs):
                yield float(al), float(b), float(self.theta[i, j])


def theta_surface(
    alphas=None,
    bs=None,
    a: float = 1.0,
    t1: float = 1.0,
    mask: float = MASK_ABS_E,
    workers: int | None = None,
) -> ThetaSurface:
    """``theta`` on the ``alpha x b`` grid; defaults are 200 x 200 over ``(0.01, 1] x [0, 3]``."""
    alphas = np.linspace(0.01, 1.0, 200) if alphas is None else np.asarray(alphas, dtype=float).ravel()
    bs = np.linspace(0.0, 3.0, 200) if bs is None else np.asarray(bs, dtype=float).ravel()
    if alphas.size == 0 or bs.size == 0:
        raise DomainError("surface grids must be non-empty")
    for al in alphas:
        check_order(al)
    ag, bg = np.meshgrid(alphas, bs, indexing="ij")
    theta = _angles(ag, bg, a, t1, mask, workers).reshape(ag.shape)
    return ThetaSurface(alphas, bs, theta)


@dataclass(frozen=True)
class ArgmaxCurveFit:
    """Least-squares line ``b* = intercept + slope * alpha`` through the argmax points.

    ``excluded`` lists the ``alpha`` values whose maximum sat on the search
    boundary or next to a masked node.
    """

    points: np.ndarray
    slope: float
    intercept: float
    rms: float
    excluded: tuple[float, ...] = ()


def fit_line(x, y) -> tuple[float, float, float]:
    """Ordinary least squares ``y = intercept + slope x``; returns ``(slope, intercept, rms)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise DomainError("a line fit needs at least two points")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (intercept + slope * x)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))


def argmax_line_fit(
    alphas=None,
    b_range: tuple[float, float] = (0.0, 3.0),
    a: float = 1.0,
    t1: float = 1.0,
    n_b: int = 200,
    xtol: float = 1e-9,
    mask: float = MASK_ABS_E,
    workers: int | None = None,
) -> ArgmaxCurveFit:
    """For each ``alpha`` find the ``b`` maximizing ``theta``, then fit a line.

    The maximum over a uniform ``b`` grid of ``n_b`` points is refined by
    golden-section search inside its neighbouring cells.  Maxima on the grid
    boundary or beside a masked node are excluded from the fit.

    Raises
    ------
    DomainError
        If no ``alpha`` has an interior maximum.
    """
    alphas = np.linspace(0.05, 0.95, 19) if alphas is None else np.asarray(alphas, dtype=float).ravel()
    b_lo, b_hi = b_range
    if not b_hi > b_lo:
        raise DomainError(f"empty b range {b_range!r}")
    bs = np.linspace(b_lo, b_hi, n_b)
    ag, bg = np.meshgrid(alphas, bs, indexing="ij")
    surface = _angles(ag, bg, a, t1, mask, workers).reshape(ag.shape)

    points = []
    excluded = []
    for al, row in zip(alphas, surface):
        if not np.isfinite(row).any():
            excluded.append(float(al))
            continue
        k = int(np.nanargmax(row))
        if k == 0 or k == row.size - 1 or not np.isfinite(row[k - 1 : k + 2]).all():
            excluded.append(float(al))
            continue

        def f(b, al=al):
            v = masked_angle(al, a, b, t1, mask)
            return -math.inf if math.isnan(v) else v

        # theta can touch pi at several b (cusps); refine every interior
        # maximum and break near-ties towards the smallest b
        cands = [_golden_max(f, bs[i - 1], bs[i], bs[i + 1], xtol) for i in _strict_interior_maxima(row)]
        if not cands:
            cands = [_golden_max(f, bs[k - 1], bs[k], bs[k + 1], xtol)]
        best = max(v for _, v in cands)
        b_star = min(b for b, v in cands if v >= best - TIE_TOL)
        points.append((float(al), b_star))

    if not points:
        raise DomainError("no interior maximum of theta in b for any alpha")
    pts = np.array(points)
    if pts.shape[0] < 2:
        raise DomainError("need interior maxima for at least two alpha values")
    slope, intercept, rms = fit_line(pts[:, 0], pts[:, 1])
    return ArgmaxCurveFit(pts, slope, intercept, rms, tuple(excluded))
