"""Planar Frenet apparatus of solution curves and of their restarts.

For a regular planar curve with velocity ``(x', y')`` and acceleration
``(x'', y'')``::

    nu = sqrt(x'^2 + y'^2),   T = (x', y') / nu,   N = (-y', x') / nu,
    kappa = (x' y'' - y' x'') / nu^3.

The derivatives of a solution ``X(t) = E_alpha(A t^alpha) X0`` are the term-wise
differentiated Mittag-Leffler series, so every quantity here comes from
:func:`~fractraj.mittag_leffler.ml_time_deriv` and friends.  Each canonical form
has its own closed form; planar :class:`~fractraj.systems.GeneralSystem`
input goes through the matrix derivative instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularPointError
from .mittag_leffler import (
    SeriesConfig,
    check_order,
    cos_sin_components,
    ml,
    ml_lambda_time_deriv,
    ml_time_deriv,
)
from .systems import ComplexPair, DistinctReal, GeneralSystem, Jordan2, as_system, matrix_ml_deriv
from .trajectory import restart_matrix

__all__ = [
    "SINGULAR_SPEED",
    "FrenetFrame",
    "frame_from_derivatives",
    "frenet_at",
    "Relation",
    "RelationReport",
    "restart_frenet_relations",
]

SINGULAR_SPEED = 1e-30


@dataclass(frozen=True)
class FrenetFrame:
    """Speed, unit tangent, unit normal and curvature at time ``t``.

    ``kappa`` is signed (positive when the curve turns counterclockwise);
    ``kappa_abs`` is its absolute value.
    """

    t: float
    nu: float
    tangent: np.ndarray
    normal: np.ndarray
    kappa: float

    @property
    def kappa_abs(self) -> float:
        return abs(self.kappa)


def frame_from_derivatives(t: float, velocity, acceleration) -> FrenetFrame:
    """Frame of a planar curve from its first two derivatives at ``t``."""
    vx, vy = (float(v) for v in velocity)
    ax, ay = (float(v) for v in acceleration)
    nu = math.hypot(vx, vy)
    if not nu >= SINGULAR_SPEED:
        raise SingularPointError(f"speed {nu:.3g} at t={t!r} is below {SINGULAR_SPEED:g}; curve is not regular")
    tangent = np.array([vx / nu, vy / nu])
    normal = np.array([-tangent[1], tangent[0]])
    kappa = (vx * ay - vy * ax) / nu**3
    return FrenetFrame(float(t), nu, tangent, normal, kappa)


def _derivatives(system, alpha: float, x0: np.ndarray, t: float, config) -> tuple[np.ndarray, np.ndarray]:
    c1, c2 = x0
    if isinstance(system, DistinctReal):
        l1, l2 = system.eigenvalues
        d1, d2 = (ml_time_deriv(1, alpha, lam, t, config).real for lam in (l1, l2))
        e1, e2 = (ml_time_deriv(2, alpha, lam, t, config).real for lam in (l1, l2))
        return np.array([c1 * d1, c2 * d2]), np.array([c1 * e1, c2 * e2])
    if isinstance(system, Jordan2):
        lam = system.lam
        e1 = ml_time_deriv(1, alpha, lam, t, config).real
        e2 = ml_time_deriv(2, alpha, lam, t, config).real
        d1 = ml_lambda_time_deriv(1, alpha, lam, t, config).real
        d2 = ml_lambda_time_deriv(2, alpha, lam, t, config).real
        return np.array([c1 * e1 + c2 * d1, c2 * e1]), np.array([c1 * e2 + c2 * d2, c2 * e2])
    if isinstance(system, ComplexPair):
        c, s = cos_sin_components(alpha, system.a, system.b, t, config)
        w = ml_time_deriv(2, alpha, system.eigenvalue, t, config)
        dc, ds = w.real, w.imag
        return (
            np.array([c1 * c + c2 * s, -c1 * s + c2 * c]),
            np.array([c1 * dc + c2 * ds, -c1 * ds + c2 * dc]),
        )
    if isinstance(system, GeneralSystem):
        return (
            matrix_ml_deriv(system, alpha, t, 1, config) @ x0,
            matrix_ml_deriv(system, alpha, t, 2, config) @ x0,
        )
    raise DomainError(f"Frenet frames are planar; got {system!r}")


def frenet_at(
    system,
    alpha: float,
    x0,
    t: float,
    restart_t1: float | None = None,
    config: SeriesConfig | None = None,
) -> FrenetFrame:
    """Frenet frame of ``X(t) = E_alpha(A t^alpha) x0`` at ``t > 0``.

    With ``restart_t1`` the frame belongs to the restarted curve
    ``Y(t) = E_alpha(A t^alpha) X(t1)`` instead.

    Raises
    ------
    SingularPointError
        If the speed is below ``1e-30`` (for example ``x0 = 0``).
    """
    system = as_system(system)
    alpha = check_order(alpha)
    if not t > 0.0:
        raise DomainError(f"t must be positive, got {t!r}")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    dim = system.dim
    if dim != 2:
        raise DomainError("Frenet frames are only defined here for planar systems")
    if x0.size != 2:
        raise DomainError(f"x0 must have 2 entries, got {x0.size}")
    if restart_t1 is not None:
        x0 = restart_matrix(system, alpha, restart_t1, config) @ x0
    vel, acc = _derivatives(system, alpha, x0, float(t), config)
    return frame_from_derivatives(t, vel, acc)


# ---------------------------------------------------------------------------
# cross-trajectory relations


@dataclass(frozen=True)
class Relation:
    """One relation between the frames of ``X`` and its restart ``Y``.

    ``lhs`` is computed directly from ``Y``; ``rhs`` from ``X`` through the
    relation.  ``gap`` is ``|lhs - rhs| / max(|lhs|, |rhs|)`` (0 when both
    vanish).  ``superseded`` marks a printed form that disagrees with the
    direct computation and is accompanied by a corrected relation.
    """

    name: str
    lhs: np.ndarray
    rhs: np.ndarray
    gap: float
    superseded: bool = False
    note: str = ""


@dataclass(frozen=True)
class RelationReport:
    case: str
    frame_x: FrenetFrame
    frame_y: FrenetFrame
    relations: tuple[Relation, ...]

    @property
    def max_gap(self) -> float:
        """Largest gap over the relations that are not superseded."""
        gaps = [r.gap for r in self.relations if not r.superseded]
        return max(gaps) if gaps else 0.0

    def holds(self, tol: float = 1e-9) -> bool:
        return self.max_gap <= tol

    def by_name(self, name: str) -> Relation:
        for r in self.relations:
            if r.name == name:
                return r
        raise KeyError(name)


def _relation(name, lhs, rhs, superseded=False, note="") -> Relation:
    lhs = np.atleast_1d(np.asarray(lhs, dtype=float))
    rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
    diff = float(np.max(np.abs(lhs - rhs)))
    size = max(float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))))
    gap = 0.0 if diff == 0.0 else diff / size
    return Relation(name, lhs, rhs, gap, superseded, note)


def restart_frenet_relations(
    system, alpha: float, x0, t1: float, t: float, config: SeriesConfig | None = None
) -> RelationReport:
    """Evaluate the frame relations between ``X`` and its restart from ``X(t1)``.

    Supported systems are the planar canonical forms.  Every relation is
    computed on both sides independently; where the classical hand derivation
    prints a coefficient that does not match, both the printed and the
    corrected relation are reported and the printed one is marked
    ``superseded``.
    """
    system = as_system(system)
    alpha = check_order(alpha)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    fx = frenet_at(system, alpha, x0, t, config=config)
    fy = frenet_at(system, alpha, x0, t, restart_t1=t1, config=config)
    nu1, nu2 = fx.nu, fy.nu
    k1, k2 = fx.kappa_abs, fy.kappa_abs
    c1, c2 = x0
    rels: list[Relation] = []

    if isinstance(system, DistinctReal):
        case = "distinct-real"
        l1, l2 = system.eigenvalues
        E1 = ml(alpha, 1.0, l1 * t1**alpha, config).real
        E2 = ml(alpha, 1.0, l2 * t1**alpha, config).real
        d1 = ml_time_deriv(1, alpha, l1, t, config).real
        d2 = ml_time_deriv(1, alpha, l2, t, config).real
        rels.append(_relation("nu2", nu2, math.sqrt((c1 * E1 * d1) ** 2 + (c2 * E2 * d2) ** 2)))
        rels.append(_relation("kappa2", k2, abs(E1 * E2 * nu1**3 / nu2**3) * k1))
        rels.append(_relation("T2", fy.tangent, nu1 / nu2 * np.diag([E1, E2]) @ fx.tangent))
        rels.append(_relation("N2", fy.normal, nu1 / nu2 * np.diag([E2, E1]) @ fx.normal))

    elif isinstance(system, Jordan2):
        case = "jordan"
        lam = system.lam
        E = ml(alpha, 1.0, lam * t1**alpha, config).real
        Eaa = ml(alpha, alpha, lam * t1**alpha, config).real
        F = t1**alpha * Eaa
        e1 = ml_time_deriv(1, alpha, lam, t, config).real
        d1 = ml_lambda_time_deriv(1, alpha, lam, t, config).real
        V = np.array([c2 * e1 / alpha, 0.0])
        W = np.array([0.0, c2 * e1 / alpha])
        nu2_sq = (
            E**2 * nu1**2
            + (t1**alpha / alpha) * Eaa * E * e1 * (2 * c1 * c2 * e1 + 2 * c2**2 * d1)
            + c2**2 * t1 ** (2 * alpha) / alpha**2 * Eaa**2 * e1**2
        )
        rels.append(_relation("nu2", nu2, math.sqrt(max(nu2_sq, 0.0))))
        rels.append(
            _relation(
                "kappa2 (printed)",
                k2,
                abs(nu1**3 / nu2**3 * E) * k1,
                superseded=True,
                note="printed factor E; the determinant of T is E^2",
            )
        )
        rels.append(_relation("kappa2", k2, abs(E**2 * nu1**3 / nu2**3) * k1))
        rels.append(_relation("T2", fy.tangent, nu1 * E / nu2 * fx.tangent + F / nu2 * V))
        rels.append(_relation("N2", fy.normal, nu1 * E / nu2 * fx.normal + F / nu2 * W))

    elif isinstance(system, ComplexPair):
        case = "complex-pair"
        E = ml(alpha, 1.0, system.eigenvalue * t1**alpha, config)
        r = nu1 / nu2
        rels.append(_relation("nu2", nu2, abs(E) * nu1))
        rels.append(_relation("kappa2", k2, k1 / abs(E)))
        rels.append(_relation("T2", fy.tangent, E.real * r * fx.tangent - E.imag * r * fx.normal))
        rels.append(
            _relation(
                "N2 (printed)",
                fy.normal,
                E.real * r * fx.normal + E.real * r * fx.tangent,
                superseded=True,
                note="printed Re[E] as the coefficient of T1",
            )
        )
        rels.append(_relation("N2", fy.normal, E.real * r * fx.normal + E.imag * r * fx.tangent))

    else:
        raise DomainError(f"cross-trajectory relations need a planar canonical system, got {system!r}")

    return RelationReport(case, fx, fy, tuple(rels))
