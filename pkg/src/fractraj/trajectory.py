"""Sampled solution trajectories and the restart transformation.

A trajectory of ``D^alpha X = A X`` is ``X(t) = E_alpha(A t^alpha) X0``.
Restarting the system from the point ``X(t1)`` gives ``Y(t) = T X(t)`` with
``T = E_alpha(A t1^alpha)``, because ``T`` commutes with every
``E_alpha(A t^alpha)``.  In canonical coordinates ``T`` splits into a
non-negative diagonal scaling ``U`` and a proper rotation ``V``.
"""

from __future__ import annotations

import cmath
import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist

from .errors import DomainError, FactorizationError, GridMismatchError
from .mittag_leffler import SeriesConfig, check_order, ml
from .systems import (
    ComplexPair,
    ComplexPairPlusReal,
    DistinctReal,
    Jordan2,
    as_system,
    canonical_of,
    matrix_exp,
    matrix_ml,
    matrix_ml_deriv,
    system_from_dict,
    system_to_dict,
)

__all__ = [
    "T_MIN",
    "time_grid",
    "Trajectory",
    "TransformFactorization",
    "CongruenceResult",
    "solve",
    "restart_matrix",
    "restart_transform",
    "restart",
    "verify_linear_relation",
    "congruence_check",
    "write_csv",
    "read_csv",
    "to_json",
    "from_json",
]

T_MIN = 1e-3


def time_grid(t_max: float, n: int = 2000, t_min: float = T_MIN, spacing: str = "uniform") -> np.ndarray:
    """Strictly increasing sample times on ``[t_min, t_max]``.

    ``spacing="log"`` clusters points near ``t_min``, where the speed of a
    fractional trajectory blows up like ``t**(alpha - 1)``.
    """
    if n < 2:
        raise DomainError("a time grid needs at least two points")
    if not 0.0 < t_min < t_max:
        raise DomainError(f"need 0 < t_min < t_max, got t_min={t_min!r}, t_max={t_max!r}")
    if spacing == "uniform":
        return np.linspace(t_min, t_max, n)
    if spacing == "log":
        return np.geomspace(t_min, t_max, n)
    raise DomainError(f"unknown spacing {spacing!r}; use 'uniform' or 'log'")


def _check_grid(times) -> np.ndarray:
    times = np.asarray(times, dtype=float).reshape(-1)
    if times.size == 0:
        raise DomainError("empty time grid")
    if not np.all(np.isfinite(times)) or times[0] <= 0.0:
        raise DomainError("grid times must be finite and positive")
    if np.any(np.diff(times) <= 0.0):
        raise DomainError("grid times must be strictly increasing")
    return times


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples of ``M E_alpha(A t^alpha) x0`` on a time grid.

    ``transform`` is an optional fixed matrix ``M`` applied on the left; it is
    None for plain solutions.  The exact curve stays available through
    :meth:`evaluate` and :meth:`velocity`, which the geometry routines use to
    refine crossings off the grid.
    """

    times: np.ndarray
    states: np.ndarray
    system: object
    alpha: float
    x0: np.ndarray
    transform: np.ndarray | None = None
    config: SeriesConfig | None = field(default=None, repr=False)

    def __post_init__(self):
        times = _check_grid(self.times)
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 2 or states.shape[0] != times.size:
            raise DomainError(f"states shape {states.shape} does not match {times.size} sample times")
        object.__setattr__(self, "times", _readonly(times))
        object.__setattr__(self, "states", _readonly(states))
        object.__setattr__(self, "x0", _readonly(np.asarray(self.x0, dtype=float).reshape(-1)))
        if self.transform is not None:
            object.__setattr__(self, "transform", _readonly(self.transform))

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return self.times.size

    def _apply(self, m: np.ndarray) -> np.ndarray:
        v = m @ self.x0
        return v if self.transform is None else self.transform @ v

    def evaluate(self, t: float) -> np.ndarray:
        """Exact state at time ``t`` (off-grid allowed)."""
        return self._apply(matrix_ml(self.system, self.alpha, t, self.config))

    def velocity(self, t: float) -> np.ndarray:
        """Exact first time derivative at ``t > 0``."""
        return self._apply(matrix_ml_deriv(self.system, self.alpha, t, 1, self.config))

    def acceleration(self, t: float) -> np.ndarray:
        """Exact second time derivative at ``t > 0``."""
        return self._apply(matrix_ml_deriv(self.system, self.alpha, t, 2, self.config))

    def mapped(self, m) -> "Trajectory":
        """The curve ``m X(t)`` on the same grid."""
        m = np.asarray(m, dtype=float)
        if m.shape != (self.dim, self.dim):
            raise DomainError(f"map must be {self.dim}x{self.dim}, got shape {m.shape}")
        total = m if self.transform is None else m @ self.transform
        return Trajectory(self.times, self.states @ m.T, self.system, self.alpha, self.x0, total, self.config)


def solve(system, alpha: float, x0, grid, config: SeriesConfig | None = None) -> Trajectory:
    """Sample ``X(t) = E_alpha(A t^alpha) x0`` on ``grid``.

    Parameters
    ----------
    system : canonical system, GeneralSystem or array-like matrix
    alpha : float
        Order in ``(0, 1]``.
    x0 : array-like
        Initial state.
    grid : array-like
        Strictly increasing positive times, e.g. from :func:`time_grid`.
    """
    system = as_system(system)
    alpha = check_order(alpha)
    times = _check_grid(grid)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    canon, _, _ = canonical_of(system)
    if x0.size != canon.dim:
        raise DomainError(f"x0 has {x0.size} entries, system is {canon.dim}-dimensional")
    states = np.empty((times.size, x0.size))
    for i, t in enumerate(times):
        states[i] = matrix_ml(system, alpha, t, config) @ x0
    return Trajectory(times, states, system, alpha, x0, None, config)


@dataclass(frozen=True, eq=False)
class TransformFactorization:
    """Restart map ``T`` and its scaling/rotation split.

    In canonical coordinates ``T_c = diag(signs) @ U @ V`` with ``U`` diagonal
    non-negative and ``V`` a rotation.  ``signs`` is all ones unless a real
    eigenvalue gives a negative Mittag-Leffler factor, which is recorded as a
    reflection.  For a GeneralSystem ``T = basis @ T_c @ basis_inv``; for
    canonical input ``basis`` is None and ``T = T_c``.

    ``theta`` is the counterclockwise angle ``atan2(V[1, 0], V[0, 0])`` in
    ``(-pi, pi]``; at ``alpha = 1`` it equals ``-b t1`` wrapped.
    """

    T: np.ndarray
    U: np.ndarray
    V: np.ndarray
    theta: float
    signs: np.ndarray
    basis: np.ndarray | None = None
    basis_inv: np.ndarray | None = None

    @property
    def reflection(self) -> bool:
        return bool(np.any(self.signs < 0))

    @property
    def canonical_T(self) -> np.ndarray:
        return np.diag(self.signs) @ self.U @ self.V


def restart_matrix(system, alpha: float, t1: float, config: SeriesConfig | None = None) -> np.ndarray:
    """``T = E_alpha(A t1^alpha)``, taken from the exponential at ``alpha = 1``."""
    alpha = check_order(alpha)
    if t1 <= 0.0:
        raise DomainError(f"restart time must be positive, got {t1!r}")
    if alpha == 1.0:
        return matrix_exp(system, t1)
    return matrix_ml(system, alpha, t1, config)


def _scalar_factor(alpha: float, lam: complex, t1: float, config) -> complex:
    if alpha == 1.0:
        return cmath.exp(lam * t1)
    return complex(ml(alpha, 1.0, lam * t1**alpha, config))


def _rotation(e: complex) -> tuple[np.ndarray, float]:
    r = abs(e)
    if r == 0.0:
        raise FactorizationError("complex Mittag-Leffler factor vanishes; rotation undefined")
    c, s = e.real / r, e.imag / r
    return np.array([[c, s], [-s, c]]), math.atan2(-s, c)


def restart_transform(
    system, alpha: float, t1: float, strict: bool = False, config: SeriesConfig | None = None
) -> TransformFactorization:
    """Restart map ``T`` and its split ``T = U V`` (canonical coordinates).

    Parameters
    ----------
    strict : bool
        Raise :class:`FactorizationError` instead of flagging a reflection
        when a real eigenvalue gives a negative scaling factor.

    Raises
    ------
    FactorizationError
        For a Jordan block (``T`` contains a shear and has no scaling times
        rotation form), a vanishing complex factor, or a negative real factor
        in strict mode.
    """
    system = as_system(system)
    canon, basis, basis_inv = canonical_of(system)
    T = restart_matrix(system, alpha, t1, config)
    alpha = check_order(alpha)

    if isinstance(canon, Jordan2):
        raise FactorizationError("a Jordan block restart map is a shear, not scaling times rotation")

    theta = 0.0
    if isinstance(canon, DistinctReal):
        factors = [_scalar_factor(alpha, lam, t1, config).real for lam in canon.eigenvalues]
        V = np.eye(canon.dim)
    elif isinstance(canon, ComplexPair):
        e = _scalar_factor(alpha, canon.eigenvalue, t1, config)
        factors = [abs(e), abs(e)]
        V, theta = _rotation(e)
    elif isinstance(canon, ComplexPairPlusReal):
        e = _scalar_factor(alpha, canon.eigenvalue, t1, config)
        factors = [abs(e), abs(e), _scalar_factor(alpha, canon.lam, t1, config).real]
        V = np.eye(3)
        V[:2, :2], theta = _rotation(e)
    else:  # pragma: no cover - exhaustive over canonical forms
        raise TypeError(f"unsupported canonical form {canon!r}")

    signs = np.where(np.asarray(factors) < 0.0, -1.0, 1.0)
    if strict and np.any(signs < 0):
        raise FactorizationError("negative real scaling factor; T includes a reflection")
    U = np.diag(np.abs(factors))
    return TransformFactorization(T, U, V, theta, signs, basis, basis_inv)


def restart(system, alpha: float, x0, t1: float, grid, config: SeriesConfig | None = None) -> Trajectory:
    """Trajectory of the same system started from ``X(t1)``."""
    T = restart_matrix(system, alpha, t1, config)
    return solve(system, alpha, T @ np.asarray(x0, dtype=float).reshape(-1), grid, config)


def _same_grid(X: Trajectory, Y: Trajectory) -> None:
    if X.times.shape != Y.times.shape or not np.array_equal(X.times, Y.times):
        raise GridMismatchError("trajectories are sampled on different time grids")


def verify_linear_relation(X: Trajectory, Y: Trajectory, T) -> float:
    """``max_i ||Y(t_i) - T X(t_i)||_inf`` over the shared grid."""
    _same_grid(X, Y)
    T = np.asarray(T, dtype=float)
    return float(np.max(np.abs(Y.states - X.states @ T.T)))


@dataclass(frozen=True)
class CongruenceResult:
    congruent: bool
    max_deviation: float

    def __bool__(self) -> bool:
        return self.congruent


def congruence_check(X: Trajectory, Y: Trajectory, U, tol: float = 1e-9) -> CongruenceResult:
    """Compare pairwise distances of ``X`` and ``U^-1 Y``.

    The two point sets are congruent when every distance
    ``|U^-1 Y(t_i) - U^-1 Y(t_j)|`` matches ``|X(t_i) - X(t_j)|``.  The
    deviation is measured relative to ``max(1, diameter of X)``.
    """
    _same_grid(X, Y)
    U = np.asarray(U, dtype=float)
    if np.linalg.cond(U) > 1e14:
        raise DomainError("scaling matrix U is singular")
    pulled = np.linalg.solve(U, Y.states.T).T
    dx = pdist(X.states)
    dy = pdist(pulled)
    scale = max(1.0, float(dx.max()) if dx.size else 0.0)
    dev = float(np.max(np.abs(dx - dy))) / scale if dx.size else 0.0
    return CongruenceResult(dev <= tol, dev)


# ---------------------------------------------------------------------------
# serialization


def _csv_text(traj: Trajectory) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"x{i + 1}" for i in range(traj.dim)])
    for t, row in zip(traj.times, traj.states):
        w.writerow([format(t, ".17g")] + [format(v, ".17g") for v in row])
    return buf.getvalue()


def write_csv(traj: Trajectory, path) -> None:
    """Write ``t,x1,...,xd`` with 17 significant digits."""
    Path(path).write_text(_csv_text(traj))


def read_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(times, states)`` from a file written by :func:`write_csv`."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1:]


def to_json(traj: Trajectory) -> str:
    doc = {
        "system": system_to_dict(traj.system),
        "alpha": traj.alpha,
        "x0": traj.x0.tolist(),
        "times": traj.times.tolist(),
        "states": traj.states.tolist(),
    }
    if traj.transform is not None:
        doc["transform"] = traj.transform.tolist()
    return json.dumps(doc)


def from_json(text: str) -> Trajectory:
    doc = json.loads(text)
    return Trajectory(
        np.asarray(doc["times"]),
        np.asarray(doc["states"]),
        system_from_dict(doc["system"]),
        float(doc["alpha"]),
        np.asarray(doc["x0"]),
        None if doc.get("transform") is None else np.asarray(doc["transform"]),
    )
