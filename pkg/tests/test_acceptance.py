"""Acceptance criteria, one test each.

Every test records ``(passed, detail)`` in the shared table printed at the end
of the run (see ``conftest.py``) and then asserts, so a failing criterion shows
up both as a FAIL line and as a failed test.
"""

import math
import time

import numpy as np
import pytest

import oracle
from fractraj.bifurcation import argmax_line_fit, masked_angle, theta_profile
from fractraj.errors import ConvergenceError
from fractraj.frenet import frame_from_derivatives, frenet_at, restart_frenet_relations
from fractraj.geometry import hausdorff_distance, loop_metrics, self_intersections
from fractraj.mittag_leffler import ml, ml_lambda_deriv, ml_time_deriv
from fractraj.systems import ComplexPair, ComplexPairPlusReal, DistinctReal, GeneralSystem, Jordan2, matrix_ml
from fractraj.trajectory import (
    restart,
    restart_matrix,
    restart_transform,
    solve,
    time_grid,
    verify_linear_relation,
)

NODE_MATRIX = [[0.983469, 0.181075], [-0.181075, 0.983469]]


def record(acceptance, name, ok, detail):
    acceptance[name] = (bool(ok), detail)
    assert ok, f"{name}: {detail}"


def test_mittag_leffler_correctness(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    z = 10 * np.sqrt(rng.random(100)) * np.exp(1j * rng.uniform(-np.pi, np.pi, 100))
    exp_err = max(abs(ml(1, 1, w) - np.exp(w)) / abs(np.exp(w)) for w in z)
    half_err = abs(ml(0.5, 1, 1.0) - oracle.E_HALF_AT_1) / oracle.E_HALF_AT_1
    elapsed = time.perf_counter() - start
    ok = exp_err <= 1e-12 and half_err <= 1e-10 and elapsed < 1.0
    detail = f"exp rel err {exp_err:.2e} (<=1e-12), E_1/2(1) rel err {half_err:.2e} (<=1e-10), {elapsed:.2f}s (<1s)"
    record(acceptance, "Mittag-Leffler correctness", ok, detail)


RESTART_CASES = [
    ("damped-spiral", [[-1, 3], [-3, -1]], 0.7, 1.0, [1, 1], 5.0),
    ("damped-spiral", [[-1, 3], [-3, -1]], 0.3, 2.0, [1, -1], 3.0),
    ("node", NODE_MATRIX, 0.1, 50.0, [1, 1], 50.0),
    ("node", NODE_MATRIX, 0.5, 1.0, [1, 1], 3.0),
    ("lower-triangular", [[-1, 0], [1, -2]], 0.5, 1.0, [1, 1], 5.0),
    ("lower-triangular", [[-1, 0], [1, -2]], 0.9, 2.5, [2, -1], 5.0),
    ("centre", [[0, 1], [-4, 0]], 0.7, 1.0, [1, 1], 5.0),
    ("centre", [[0, 1], [-4, 0]], 0.4, 0.5, [1, 0], 5.0),
    ("real-3d", [[1, 2, -1], [0, 3, -2], [0, 2, -2]], 0.6, 1.0, [1, 1, 1], 2.0),
    ("real-3d", [[1, 2, -1], [0, 3, -2], [0, 2, -2]], 0.9, 0.5, [1, 2, 3], 1.5),
    ("mixed-3d", [[-3, 0, 0], [0, 3, -2], [0, 1, 1]], 0.7, 1.0, [1, 1, 1], 2.0),
    ("mixed-3d", [[-3, 0, 0], [0, 3, -2], [0, 1, 1]], 0.5, 0.3, [1, -1, 2], 2.0),
]


def test_restart_identity(acceptance):
    start = time.perf_counter()
    worst, scale = 0.0, 0.0
    for _, A, alpha, t1, x0, t_max in RESTART_CASES:
        grid = time_grid(t_max, 60)
        X = solve(A, alpha, x0, grid)
        Y = restart(A, alpha, x0, t1, grid)
        worst = max(worst, verify_linear_relation(X, Y, restart_matrix(A, alpha, t1)))
        scale = max(scale, float(np.abs(Y.states).max()))
    elapsed = time.perf_counter() - start
    systems = sorted({c[0] for c in RESTART_CASES})
    ok = worst <= 1e-9 and elapsed < 10.0 and len(RESTART_CASES) >= 10
    detail = (
        f"{len(RESTART_CASES)} cases on systems {','.join(systems)}: max residual {worst:.2e} (<=1e-9, "
        f"largest |Y| {scale:.3g}), {elapsed:.1f}s (<10s)"
    )
    record(acceptance, "Restart identity", ok, detail)


COINCIDENCE_CASES = [
    ("spiral", [[-2, 4], [-4, -2]], [1, 1], 0.5, 3.0),
    ("lower-triangular", [[-1, 0], [1, -2]], [1, 1], 1.0, 4.0),
    ("centre", [[0, 1], [-4, 0]], [1, 1], 1.0, 3.0),
    ("real-3d", [[1, 2, -1], [0, 3, -2], [0, 2, -2]], [1, 1, 1], 1.0, 2.0),
    ("rotation-3d", [[0, 2, 0], [-2, 0, 0], [0, 0, -3]], [1, 1, 1], 1.0, 3.0),
]


def _coincidence(A, alpha, x0, t1, t_max, n=400):
    """Hausdorff distance between Y on its grid and X on an unaligned grid over the same time window."""
    grid = time_grid(t_max, n)
    Y = restart(A, alpha, x0, t1, grid)
    lo, hi = t1 + grid[0], t1 + grid[-1]
    X = solve(A, alpha, x0, np.linspace(lo, hi, int(1.37 * n)))
    step = float(np.max(np.linalg.norm(np.diff(X.states, axis=0), axis=1)))
    return hausdorff_distance(X.states, Y.states), step


def test_classical_path_coincidence(acceptance):
    parts, ok = [], True
    for name, A, x0, t1, t_max in COINCIDENCE_CASES:
        d, step = _coincidence(A, 1.0, x0, t1, t_max)
        ok &= d <= 2 * step
        parts.append(f"{name} {d:.1e}/{2 * step:.1e}")
    # the fractional counterpart of the first case does not coincide
    d_frac, step_frac = _coincidence(COINCIDENCE_CASES[0][1], 0.7, [1, 1], 0.5, 3.0)
    detail = "Hausdorff/2*step: " + ", ".join(parts) + f"; alpha=0.7 control {d_frac:.1e}/{2 * step_frac:.1e}"
    record(acceptance, "Classical path coincidence", ok and d_frac > 2 * step_frac, detail)


FACTOR_CASES = [
    (ComplexPair(-1, 3), 0.7, 1.0),
    (ComplexPair(0.983469, 0.181075), 0.1, 50.0),
    (ComplexPair(0.983469, 0.181075), 0.1, 1.0),
    (ComplexPair(1, 2), 0.4, 2.0),
    (ComplexPair(-2, 4), 0.9, 0.5),
    (ComplexPairPlusReal(2, 1, -3), 0.8, 0.7),
    (ComplexPairPlusReal(0, 2, -3), 0.5, 1.0),
    (GeneralSystem([[-3, 0, 0], [0, 3, -2], [0, 1, 1]]), 0.7, 1.0),
    (GeneralSystem([[0, 2, 0], [-2, 0, 0], [0, 0, -3]]), 0.6, 1.5),
    (GeneralSystem([[0, 1], [-4, 0]]), 0.7, 1.0),
]

ANGLE_CASES = [(-2, 4, 0.5), (1, 2, 1.0), (0, 2, 1.0), (-1, 3, 1.0), (0.983469, 0.181075, 50.0), (0.5, -1.5, 3.0)]


def test_factorization(acceptance):
    worst_uv = worst_orth = worst_det = 0.0
    for system, alpha, t1 in FACTOR_CASES:
        f = restart_transform(system, alpha, t1)
        tc = f.U @ f.V
        T = f.T if f.basis is None else f.basis_inv @ f.T @ f.basis
        worst_uv = max(worst_uv, float(np.abs(tc - T).max() / max(1.0, np.abs(T).max())))
        worst_orth = max(worst_orth, float(np.abs(f.V @ f.V.T - np.eye(f.V.shape[0])).max()))
        worst_det = max(worst_det, abs(np.linalg.det(f.V) - 1.0))
    worst_angle = 0.0
    for a, b, t1 in ANGLE_CASES:
        theta = restart_transform(ComplexPair(a, b), 1.0, t1).theta
        unsigned = abs(math.remainder(b * t1, 2 * math.pi))
        worst_angle = max(worst_angle, abs(abs(theta) - unsigned))
    ok = max(worst_uv, worst_orth, worst_det) <= 1e-12 and worst_angle <= 1e-10
    detail = (
        f"{len(FACTOR_CASES)} cases: |UV-T| {worst_uv:.1e}, |VV^T-I| {worst_orth:.1e}, |det V-1| {worst_det:.1e} "
        f"(<=1e-12); alpha=1 angle vs b*t1 {worst_angle:.1e} (<=1e-10)"
    )
    record(acceptance, "Factorization", ok, detail)


def test_fractional_semigroup_failure(acceptance):
    s = DistinctReal((1.0, -1.0))
    gap = matrix_ml(s, 0.5, 2.0) - matrix_ml(s, 0.5, 1.0) @ matrix_ml(s, 0.5, 1.0)
    norm = float(np.linalg.norm(gap, 2))
    want = abs(oracle.SEMIGROUP_GAP_POS)
    pinned = abs(gap[0, 0] - oracle.SEMIGROUP_GAP_POS) <= 1e-12 * want and abs(
        gap[1, 1] - oracle.SEMIGROUP_GAP_NEG
    ) <= 1e-12 * abs(oracle.SEMIGROUP_GAP_NEG)
    ok = norm > 1e-3 and pinned and abs(norm - want) <= 1e-12 * want
    detail = f"gap norm {norm:.15g} (>1e-3), oracle {want:.15g}, diagonal pinned to 1e-12: {pinned}"
    record(acceptance, "Fractional semigroup failure", ok, detail)


FRENET_CASES = [
    (DistinctReal((-1.0, -2.0)), 0.5, [1.0, 2.0], 1.0, 1.0),
    (DistinctReal((-1.0, -2.0)), 0.9, [1.0, -1.0], 0.5, 2.0),
    (DistinctReal((0.5, -0.3)), 0.7, [1.0, 1.0], 2.0, 0.5),
    (DistinctReal((1.0, 2.0)), 0.3, [2.0, 1.0], 1.0, 1.5),
    (Jordan2(-1.0), 0.5, [1.0, 1.0], 1.0, 1.0),
    (Jordan2(-1.0), 0.8, [0.5, -1.0], 2.0, 2.5),
    (Jordan2(0.4), 0.6, [1.0, 2.0], 0.3, 0.7),
    (Jordan2(-2.0), 0.95, [1.0, 1.0], 0.5, 1.0),
    (ComplexPair(-1.0, 3.0), 0.7, [1.0, 1.0], 1.0, 2.0),
    (ComplexPair(-1.0, 3.0), 0.4, [1.0, -2.0], 0.5, 1.0),
    (ComplexPair(0.983469, 0.181075), 0.1, [1.0, 1.0], 50.0, 12.0),
    (ComplexPair(1.0, 2.0), 0.9, [2.0, 1.0], 1.5, 0.8),
    (ComplexPair(0.0, 2.0), 0.6, [1.0, 0.0], 1.0, 3.0),
]


def _fd_frame(system, alpha, x0, t, h=1e-4):
    pts = np.array([matrix_ml(system, alpha, t + k * h) @ x0 for k in (-2, -1, 0, 1, 2)])
    vel = (pts[0] - 8 * pts[1] + 8 * pts[3] - pts[4]) / (12 * h)
    acc = (-pts[0] + 16 * pts[1] - 30 * pts[2] + 16 * pts[3] - pts[4]) / (12 * h * h)
    return frame_from_derivatives(t, vel, acc)


def test_frenet_relations(acceptance):
    start = time.perf_counter()
    worst_rel = worst_fd = 0.0
    for system, alpha, x0, t1, t in FRENET_CASES:
        worst_rel = max(worst_rel, restart_frenet_relations(system, alpha, x0, t1, t).max_gap)
        for restart_t1 in (None, t1):
            f = frenet_at(system, alpha, x0, t, restart_t1=restart_t1)
            start_state = np.asarray(x0) if restart_t1 is None else restart_matrix(system, alpha, t1) @ x0
            g = _fd_frame(system, alpha, start_state, t)
            for p, q in ((f.nu, g.nu), (f.kappa, g.kappa), (f.tangent, g.tangent), (f.normal, g.normal)):
                p, q = np.atleast_1d(p), np.atleast_1d(q)
                worst_fd = max(worst_fd, float(np.max(np.abs(p - q)) / np.max(np.abs(q))))
    elapsed = time.perf_counter() - start
    ok = worst_rel <= 1e-9 and worst_fd <= 1e-4 and elapsed < 30.0 and len(FRENET_CASES) >= 12
    detail = (
        f"{len(FRENET_CASES)} combos: max relation gap {worst_rel:.1e} (<=1e-9), closed form vs finite "
        f"differences {worst_fd:.1e} (<=1e-4), {elapsed:.1f}s (<30s)"
    )
    record(acceptance, "Frenet relations", ok, detail)


def test_self_intersection_node(acceptance):
    start = time.perf_counter()
    grid = time_grid(50.0)
    X = solve(NODE_MATRIX, 0.1, [1, 1], grid)
    Y = restart(NODE_MATRIX, 0.1, [1, 1], 50.0, grid)
    cx, cy = self_intersections(X), self_intersections(Y)
    near = [c for c in cx if abs(c.t_early - 12.35) <= 1.0 and abs(c.t_late - 34.0) <= 1.0]
    factor = oracle.ABS_E_NODE_T50
    ok = bool(near) and len(cx) == len(cy)
    worst_t = worst_dur = worst_ratio = 0.0
    for p, q in zip(cx, cy):
        worst_t = max(worst_t, abs(p.t_early - q.t_early), abs(p.t_late - q.t_late))
        mp, mq = loop_metrics(X, p), loop_metrics(Y, q)
        worst_dur = max(worst_dur, abs(mp.duration - mq.duration))
        worst_ratio = max(worst_ratio, abs(mq.mean_speed / mp.mean_speed - factor))
    elapsed = time.perf_counter() - start
    ok = ok and worst_t <= 1e-6 and worst_dur <= 1e-6 and worst_ratio <= 1e-6 and elapsed < 60.0
    node = f"({near[0].t_early:.6f}, {near[0].t_late:.6f})" if near else "none"
    detail = (
        f"node {node} vs (12.35, 34)+-1; {len(cx)} crossings, restart time shift {worst_t:.1e}, duration "
        f"gap {worst_dur:.1e}, speed ratio vs |E| {worst_ratio:.1e} (<=1e-6), {elapsed:.1f}s (<60s)"
    )
    record(acceptance, "Self-intersection of the node system", ok, detail)


def test_bifurcation(acceptance):
    start = time.perf_counter()
    profile = theta_profile(0.983469, 0.181075)
    fit = argmax_line_fit()
    elapsed = time.perf_counter() - start
    one_max = len(profile.maxima) == 1
    alpha_star = profile.maxima[0][0] if profile.maxima else math.nan
    ok_profile = one_max and abs(alpha_star - 0.06144) <= 0.002
    ok_slope = abs(fit.slope - 2.9128) <= 0.05
    ok_intercept = abs(fit.intercept - (-0.0066)) <= 0.02
    ok = ok_profile and ok_slope and ok_intercept and elapsed < 120.0
    detail = (
        f"{len(profile.maxima)} interior max at alpha*={alpha_star:.6f} (0.06144+-0.002: {ok_profile}); "
        f"slope {fit.slope:.4f} (2.9128+-0.05: {ok_slope}); intercept {fit.intercept:.4f} "
        f"(-0.0066+-0.02: {ok_intercept}); rms {fit.rms:.3f}; {elapsed:.1f}s (<120s)"
    )
    record(acceptance, "Bifurcation", ok, detail)


def test_property_suite(acceptance):
    checks = {}

    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(50):
        alpha, beta = rng.uniform(0.2, 1.0), rng.uniform(0.2, 3.0)
        z = complex(*rng.uniform(-6, 6, 2))
        try:
            v = ml(alpha, beta, z)
        except ConvergenceError:
            continue
        worst = max(worst, abs(ml(alpha, beta, z.conjugate()) - v.conjugate()) / max(1.0, abs(v)))
    checks["conjugate symmetry"] = worst <= 1e-14

    worst = 0.0
    for alpha, lam, t in [(0.7, -1.0, 1.0), (0.4, 0.8, 2.0), (0.9, complex(-1, 3), 0.5), (0.25, -0.5, 4.0)]:
        for k in (1, 2):
            h = 1e-4 * t
            fd = (ml_time_deriv(k - 1, alpha, lam, t + h) - ml_time_deriv(k - 1, alpha, lam, t - h)) / (2 * h)
            worst = max(worst, abs(ml_time_deriv(k, alpha, lam, t) - fd) / abs(fd))
    checks["derivative vs finite difference"] = worst <= 1e-6

    worst = 0.0
    for lam, alpha, t in [(-1.0, 0.5, 1.0), (0.4, 0.7, 2.0), (-2.0, 0.9, 0.3)]:
        m = matrix_ml(Jordan2(lam), alpha, t)
        worst = max(worst, abs(m[0, 1] - ml_lambda_deriv(alpha, lam, t).real) / abs(m[0, 1]))
    checks["Jordan off-diagonal = lambda-derivative"] = worst <= 1e-13

    classical = [([[-2, 4], [-4, -2]], [1, 1]), ([[-1, 0], [1, -2]], [1, 1]), ([[0, 1], [-4, 0]], [1, 1])]
    checks["classical no self-intersection"] = all(
        self_intersections(solve(A, 1.0, x0, time_grid(3.0, 400))) == [] for A, x0 in classical
    )

    coarse = self_intersections(solve(NODE_MATRIX, 0.1, [1, 1], time_grid(50.0, 300)))
    fine = self_intersections(solve(NODE_MATRIX, 0.1, [1, 1], time_grid(50.0, 600)))
    crossings_stable = len(coarse) == len(fine) and all(
        abs(p.t_early - q.t_early) < 1e-6 and abs(p.t_late - q.t_late) < 1e-6 for p, q in zip(coarse, fine)
    )
    p1 = theta_profile(0.983469, 0.181075, n_points=200)
    p2 = theta_profile(0.983469, 0.181075, n_points=399)
    maxima_stable = len(p1.maxima) == len(p2.maxima) == 1 and abs(p1.maxima[0][0] - p2.maxima[0][0]) <= 1e-6
    checks["grid-refinement stability"] = crossings_stable and maxima_stable
    checks["theta masking sanity"] = math.isnan(masked_angle(0.05, 1.0, 3.0))

    failed = [k for k, v in checks.items() if not v]
    detail = f"{len(checks) - len(failed)}/{len(checks)} properties hold" + (f"; failing: {failed}" if failed else "")
    # the full-suite wall time is appended at the end of the session
    record(acceptance, "Property suite", not failed, detail)
