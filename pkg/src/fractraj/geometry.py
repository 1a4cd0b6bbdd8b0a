"""Self-intersections and loop measurements of sampled planar curves.

The routines accept any curve object with ``times`` and ``states`` arrays plus
``evaluate(t)`` and ``velocity(t)`` for the exact curve, such as
:class:`~fractraj.trajectory.Trajectory`.  Crossings are seeded from the
polyline and then refined on the exact curve, so the reported times do not
depend on the sampling density.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import directed_hausdorff

from .errors import DegenerateSegmentWarning, DomainError

__all__ = [
    "SelfIntersection",
    "LoopMetrics",
    "segment_crossings",
    "self_intersections",
    "loop_metrics",
    "hausdorff_distance",
]

TRANSVERSAL_EPS = 1e-12


@dataclass(frozen=True)
class SelfIntersection:
    """A transversal self-crossing ``X(t_early) = X(t_late)``.

    ``i`` and ``j`` are the polyline segments that seeded it; ``residual`` is
    ``|X(t_early) - X(t_late)|`` after refinement on the exact curve.
    """

    t_early: float
    t_late: float
    point: np.ndarray
    i: int
    j: int
    residual: float = 0.0


@dataclass(frozen=True)
class LoopMetrics:
    duration: float
    arc_length: float
    mean_speed: float


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def segment_crossings(points: np.ndarray, eps: float = TRANSVERSAL_EPS) -> list[tuple[int, int, float, float]]:
    """All transversal crossings between non-adjacent segments of a polyline.

    Returns ``(i, j, s, u)`` with ``i < j - 1`` meaning segment ``i`` at
    fraction ``s`` meets segment ``j`` at fraction ``u``; both fractions lie
    strictly inside ``(eps, 1 - eps)``.  Zero-length segments are skipped
    with a :class:`DegenerateSegmentWarning`.
    """
    pts = np.asarray(points, dtype=float)
    p = pts[:-1]
    r = pts[1:] - pts[:-1]
    n = r.shape[0]
    degenerate = np.all(r == 0.0, axis=1)
    if np.any(degenerate):
        warnings.warn(
            f"skipping {int(degenerate.sum())} zero-length segment(s)", DegenerateSegmentWarning, stacklevel=3
        )
    lo = np.minimum(pts[:-1], pts[1:])
    hi = np.maximum(pts[:-1], pts[1:])
    found = []
    for i in range(n - 2):
        if degenerate[i]:
            continue
        j = np.arange(i + 2, n)
        box = np.all(lo[j] <= hi[i], axis=1) & np.all(hi[j] >= lo[i], axis=1) & ~degenerate[j]
        j = j[box]
        if j.size == 0:
            continue
        w = r[j]
        qp = p[j] - p[i]
        denom = _cross(r[i, 0], r[i, 1], w[:, 0], w[:, 1])
        with np.errstate(divide="ignore", invalid="ignore"):
            s = _cross(qp[:, 0], qp[:, 1], w[:, 0], w[:, 1]) / denom
            u = _cross(qp[:, 0], qp[:, 1], r[i, 0], r[i, 1]) / denom
        ok = (denom != 0.0) & (s > eps) & (s < 1.0 - eps) & (u > eps) & (u < 1.0 - eps)
        for jj, ss, uu in zip(j[ok], s[ok], u[ok]):
            found.append((i, int(jj), float(ss), float(uu)))
    return found


def _refine(curve, s: float, u: float, window: tuple[float, float, float, float], max_iter: int = 40):
    """Newton iteration on ``F(s, u) = X(s) - X(u)`` with the exact velocity."""
    s_lo, s_hi, u_lo, u_hi = window
    xs, xu = curve.evaluate(s), curve.evaluate(u)
    f = xs - xu
    for _ in range(max_iter):
        jac = np.column_stack([curve.velocity(s), -curve.velocity(u)])
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            return None
        # halve the step until the residual drops, staying inside the window
        lam = 1.0
        fnorm = np.linalg.norm(f)
        while True:
            s_new, u_new = s + lam * step[0], u + lam * step[1]
            if s_lo <= s_new <= s_hi and u_lo <= u_new <= u_hi:
                xs_new, xu_new = curve.evaluate(s_new), curve.evaluate(u_new)
                f_new = xs_new - xu_new
                if np.linalg.norm(f_new) < fnorm or np.linalg.norm(f_new) == 0.0:
                    break
            lam *= 0.5
            if lam < 1e-6:
                return (s, u, xs, xu) if fnorm <= 1e-8 * max(1.0, np.linalg.norm(xs)) else None
        s, u, xs, xu, f = s_new, u_new, xs_new, xu_new, f_new
        if abs(lam * step[0]) <= 1e-14 * max(1.0, abs(s)) and abs(lam * step[1]) <= 1e-14 * max(1.0, abs(u)):
            break
    return s, u, xs, xu


def self_intersections(curve, eps: float = TRANSVERSAL_EPS, time_tol: float = 1e-6) -> list[SelfIntersection]:
    """Transversal self-crossings of a sampled planar curve, refined on the exact curve.

    Parameters
    ----------
    curve : object
        Has ``times``, ``states`` (shape ``(n, 2)``), ``evaluate(t)`` and
        ``velocity(t)``.
    eps : float
        Crossing fractions must lie in ``(eps, 1 - eps)`` on both segments;
        touching at endpoints or tangential contact is not reported.
    time_tol : float
        Crossings whose refined times agree within this tolerance are merged.

    Returns
    -------
    list of SelfIntersection
        Sorted by ``t_early``.
    """
    times = np.asarray(curve.times, dtype=float)
    pts = np.asarray(curve.states, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DomainError("self-intersection search needs a planar curve")
    if pts.shape[0] < 4:
        raise DomainError("self-intersection search needs at least 4 samples")

    out: list[SelfIntersection] = []
    for i, j, s, u in segment_crossings(pts, eps):
        ts = times[i] + s * (times[i + 1] - times[i])
        tu = times[j] + u * (times[j + 1] - times[j])
        # allow the refined times to drift one segment either way
        window = (
            times[max(i - 1, 0)],
            times[min(i + 2, times.size - 1)],
            times[max(j - 1, 0)],
            times[min(j + 2, times.size - 1)],
        )
        refined = _refine(curve, ts, tu, window)
        if refined is None:
            warnings.warn(
                f"crossing near t=({ts:.6g}, {tu:.6g}) did not refine; keeping the polyline estimate",
                RuntimeWarning,
                stacklevel=2,
            )
            xs = curve.evaluate(ts)
            refined = (ts, tu, xs, curve.evaluate(tu))
        ts, tu, xs, xu = refined
        if any(abs(c.t_early - ts) <= time_tol and abs(c.t_late - tu) <= time_tol for c in out):
            continue
        out.append(
            SelfIntersection(
                float(ts), float(tu), 0.5 * (np.asarray(xs) + np.asarray(xu)), i, j, float(np.linalg.norm(xs - xu))
            )
        )
    out.sort(key=lambda c: (c.t_early, c.t_late))
    return out


def loop_metrics(curve, crossing: SelfIntersection, n_sub: int = 1000, tol: float = 1e-6) -> LoopMetrics:
    """Duration, arc length and mean speed of the loop closed by ``crossing``.

    The arc length is the composite trapezoidal integral of the exact speed
    over ``n_sub`` subintervals of ``[t_early, t_late]``.
    """
    t0, t1 = crossing.t_early, crossing.t_late
    times = np.asarray(curve.times, dtype=float)
    if not t1 > t0:
        raise DomainError("loop has non-positive duration")
    if t0 < times[0] or t1 > times[-1]:
        raise DomainError("crossing times lie outside the curve's time range")
    gap = np.linalg.norm(curve.evaluate(t0) - curve.evaluate(t1))
    scale = max(1.0, float(np.linalg.norm(crossing.point)))
    if gap > tol * scale:
        raise DomainError(f"crossing does not belong to this curve (|X(t_early) - X(t_late)| = {gap:.3g})")
    if n_sub < 1000:
        raise DomainError("use at least 1000 subintervals for the arc length")
    ts = np.linspace(t0, t1, n_sub + 1)
    speed = np.array([np.linalg.norm(curve.velocity(t)) for t in ts])
    arc = float(np.trapezoid(speed, ts))
    duration = t1 - t0
    return LoopMetrics(duration, arc, arc / duration)


def hausdorff_distance(a, b) -> float:
    """Symmetric Hausdorff distance between two finite point sets."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0])
