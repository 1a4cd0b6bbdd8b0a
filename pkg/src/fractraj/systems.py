"""Linear systems in canonical form and their solution operators.

A system ``D^alpha X = A X`` is described either by one of the canonical
forms below or by a :class:`GeneralSystem`, which reduces an arbitrary 2x2 or
3x3 real matrix to canonical form once, at construction, using closed-form
characteristic roots.  The solution operator ``E_alpha(A t^alpha)`` and its
time derivatives are evaluated blockwise in canonical coordinates and
conjugated back by the basis change.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RejectionError
from .mittag_leffler import (
    SeriesConfig,
    check_order,
    ml_lambda_time_deriv,
    ml_time_deriv,
)

__all__ = [
    "CanonicalSystem",
    "DistinctReal",
    "ComplexPair",
    "Jordan2",
    "ComplexPairPlusReal",
    "GeneralSystem",
    "as_system",
    "canonical_of",
    "matrix_ml",
    "matrix_ml_deriv",
    "matrix_exp",
    "system_to_dict",
    "system_from_dict",
]

# a double root is only determined to about sqrt(machine eps)
REPEATED_ROOT_RTOL = 1e-7


class CanonicalSystem:
    """Base class for the canonical system matrices."""

    dim: int

    @property
    def matrix(self) -> np.ndarray:
        raise NotImplementedError

    def _ml_block(self, alpha, t, k, config):
        raise NotImplementedError

    def _exp_block(self, t):
        raise NotImplementedError


@dataclass(frozen=True)
class DistinctReal(CanonicalSystem):
    """Diagonal system ``diag(lam_1, ..., lam_d)``.

    Equal eigenvalues are accepted; :attr:`degenerate` flags that case.
    """

    eigenvalues: tuple[float, ...]

    def __post_init__(self):
        lams = tuple(float(v) for v in self.eigenvalues)
        if len(lams) not in (2, 3):
            raise RejectionError("only 2x2 and 3x3 systems are supported")
        object.__setattr__(self, "eigenvalues", lams)

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    @property
    def degenerate(self) -> bool:
        return len(set(self.eigenvalues)) < len(self.eigenvalues)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.eigenvalues)

    def _ml_block(self, alpha, t, k, config):
        return np.diag([ml_time_deriv(k, alpha, lam, t, config).real for lam in self.eigenvalues])

    def _exp_block(self, t):
        return np.diag([math.exp(lam * t) for lam in self.eigenvalues])


def _rotation_block(e: complex) -> np.ndarray:
    return np.array([[e.real, e.imag], [-e.imag, e.real]])


@dataclass(frozen=True)
class ComplexPair(CanonicalSystem):
    """Planar system ``[[a, b], [-b, a]]`` with eigenvalues ``a +- ib``."""

    a: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if self.b == 0.0:
            raise RejectionError("a complex pair needs b != 0")

    dim = 2

    @property
    def eigenvalue(self) -> complex:
        return complex(self.a, self.b)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [-self.b, self.a]])

    def _ml_block(self, alpha, t, k, config):
        return _rotation_block(ml_time_deriv(k, alpha, self.eigenvalue, t, config))

    def _exp_block(self, t):
        return _rotation_block(cmath.exp(self.eigenvalue * t))


@dataclass(frozen=True)
class Jordan2(CanonicalSystem):
    """2x2 Jordan block ``[[lam, 1], [0, lam]]``."""

    lam: float

    def __post_init__(self):
        object.__setattr__(self, "lam", float(self.lam))

    dim = 2

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.lam, 1.0], [0.0, self.lam]])

    def _ml_block(self, alpha, t, k, config):
        e = ml_time_deriv(k, alpha, self.lam, t, config).real
        d = ml_lambda_time_deriv(k, alpha, self.lam, t, config).real
        return np.array([[e, d], [0.0, e]])

    def _exp_block(self, t):
        e = math.exp(self.lam * t)
        return np.array([[e, t * e], [0.0, e]])


@dataclass(frozen=True)
class ComplexPairPlusReal(CanonicalSystem):
    """3x3 block ``[[a, b, 0], [-b, a, 0], [0, 0, lam]]``."""

    a: float
    b: float
    lam: float

    def __post_init__(self):
        for name in ("a", "b", "lam"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.b == 0.0:
            raise RejectionError("a complex pair needs b != 0")

    dim = 3

    @property
    def eigenvalue(self) -> complex:
        return complex(self.a, self.b)

    @property
    def matrix(self) -> np.ndarray:
        m = np.zeros((3, 3))
        m[:2, :2] = [[self.a, self.b], [-self.b, self.a]]
        m[2, 2] = self.lam
        return m

    def _ml_block(self, alpha, t, k, config):
        m = np.zeros((3, 3))
        m[:2, :2] = _rotation_block(ml_time_deriv(k, alpha, self.eigenvalue, t, config))
        m[2, 2] = ml_time_deriv(k, alpha, self.lam, t, config).real
        return m

    def _exp_block(self, t):
        m = np.zeros((3, 3))
        m[:2, :2] = _rotation_block(cmath.exp(self.eigenvalue * t))
        m[2, 2] = math.exp(self.lam * t)
        return m


# ---------------------------------------------------------------------------
# reduction of general matrices


def _quadratic_roots(tr: float, det: float) -> tuple[complex, complex]:
    half = tr / 2.0
    disc = half * half - det
    if abs(disc) <= (REPEATED_ROOT_RTOL * max(1.0, abs(half))) ** 2:
        disc = 0.0
    root = cmath.sqrt(disc)
    return half + root, half - root


def _cubic_roots(m: np.ndarray) -> list[complex]:
    # characteristic polynomial x^3 + p x^2 + q x + r
    p = -np.trace(m)
    q = 0.5 * (np.trace(m) ** 2 - np.trace(m @ m))
    r = -np.linalg.det(m)
    d0 = p * p - 3.0 * q
    d1 = 2.0 * p**3 - 9.0 * p * q + 27.0 * r
    disc = d1 * d1 - 4.0 * d0**3
    scale = max(1.0, abs(p), abs(q) ** 0.5, abs(r) ** (1.0 / 3.0))
    rtol2 = REPEATED_ROOT_RTOL**2

    # multiple roots are ill-conditioned under Cardano; use the exact forms
    if abs(d0) <= 10.0 * rtol2 * scale**2 and abs(d1) <= 1e-12 * scale**3:
        return [complex(-p / 3.0)] * 3
    if abs(disc) <= 10.0 * rtol2 * (d1 * d1 + 4.0 * abs(d0) ** 3):
        double = (9.0 * r - p * q) / (2.0 * d0)
        simple = (4.0 * p * q - 9.0 * r - p**3) / d0
        return [complex(simple), complex(double), complex(double)]

    s = cmath.sqrt(disc)
    c = (d1 + s) / 2.0 if abs(d1 + s) >= abs(d1 - s) else (d1 - s) / 2.0
    c = c ** (1.0 / 3.0)
    xi = complex(-0.5, math.sqrt(3.0) / 2.0)
    roots = [-(p + c * xi**j + d0 / (c * xi**j)) / 3.0 for j in range(3)]

    def poly(x):
        return ((x + p) * x + q) * x + r

    def dpoly(x):
        return (3.0 * x + 2.0 * p) * x + q

    polished = []
    for x in roots:
        for _ in range(3):
            dp = dpoly(x)
            if dp == 0:
                break
            x = x - poly(x) / dp
        # a real root may pick up a rounding-level imaginary part
        if abs(x.imag) <= 1e-14 * scale:
            x = complex(x.real, 0.0)
        polished.append(x)
    return polished


def _null_vectors(m: np.ndarray, count: int) -> np.ndarray:
    _, _, vh = np.linalg.svd(m)
    return vh[-count:].conj().T


def _same(x: complex, y: complex, scale: float) -> bool:
    return abs(x - y) <= REPEATED_ROOT_RTOL * max(1.0, scale)


def _reduce(matrix: np.ndarray) -> tuple[CanonicalSystem, np.ndarray]:
    d = matrix.shape[0]
    scale = float(np.max(np.abs(matrix))) if matrix.size else 1.0
    if d == 2:
        roots = list(_quadratic_roots(float(np.trace(matrix)), float(np.linalg.det(matrix))))
    else:
        roots = _cubic_roots(matrix)
    tol = REPEATED_ROOT_RTOL * max(1.0, scale)
    complex_roots = [x for x in roots if abs(x.imag) > tol]
    real_roots = sorted((x.real for x in roots if abs(x.imag) <= tol), reverse=True)

    if complex_roots:
        lam = max(complex_roots, key=lambda x: x.imag)
        v = _null_vectors(matrix - lam * np.eye(d), 1)[:, 0]
        cols = [v.real, v.imag]
        if d == 2:
            canon: CanonicalSystem = ComplexPair(lam.real, lam.imag)
        else:
            mu = real_roots[0]
            w = _null_vectors(matrix - mu * np.eye(d), 1)[:, 0].real
            cols.append(w)
            canon = ComplexPairPlusReal(lam.real, lam.imag, mu)
        return canon, np.column_stack(cols)

    # all roots real; group repeated ones
    groups: list[list[float]] = []
    for x in real_roots:
        if groups and _same(x, groups[-1][0], scale):
            groups[-1].append(x)
        else:
            groups.append([x])
    cols = []
    lams = []
    for g in groups:
        mu = float(np.mean(g))
        shifted = matrix - mu * np.eye(d)
        if len(g) == 1:
            cols.append(_null_vectors(shifted, 1)[:, 0].real)
            lams.append(mu)
            continue
        sv = np.linalg.svd(shifted, compute_uv=False)
        nullity = int(np.sum(sv <= tol * 10))
        if nullity >= len(g):
            cols.extend(_null_vectors(shifted, len(g)).real.T)
            lams.extend([mu] * len(g))
        elif d == 2:
            # one-dimensional eigenspace: Jordan chain p1 = N p2
            _, _, vh = np.linalg.svd(shifted)
            p2 = vh[0]
            p1 = shifted @ p2
            return Jordan2(mu), np.column_stack([p1, p2])
        else:
            raise RejectionError(
                "non-diagonalizable 3x3 matrices are not supported (repeated eigenvalue "
                f"{mu:.6g} with deficient eigenspace)"
            )
    return DistinctReal(tuple(lams)), np.column_stack(cols)


@dataclass(frozen=True, eq=False)
class GeneralSystem:
    """Arbitrary real 2x2 or 3x3 system matrix, reduced to canonical form.

    ``matrix == basis @ canonical.matrix @ basis_inv``.
    """

    matrix: np.ndarray
    canonical: CanonicalSystem = field(init=False)
    basis: np.ndarray = field(init=False)
    basis_inv: np.ndarray = field(init=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 3):
            raise RejectionError(f"system matrix must be 2x2 or 3x3, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise RejectionError("system matrix has non-finite entries")
        m.setflags(write=False)
        canon, basis = _reduce(m)
        if abs(np.linalg.det(basis)) < 1e-12 * max(1.0, float(np.max(np.abs(basis)))) ** basis.shape[0]:
            raise RejectionError("eigenbasis is numerically singular")
        basis_inv = np.linalg.inv(basis)
        basis.setflags(write=False)
        basis_inv.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "canonical", canon)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "basis_inv", basis_inv)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self) -> str:
        return f"GeneralSystem(matrix={self.matrix.tolist()}, canonical={self.canonical!r})"


System = CanonicalSystem | GeneralSystem


def as_system(obj) -> CanonicalSystem | GeneralSystem:
    """Coerce an array-like matrix into a :class:`GeneralSystem`; pass systems through."""
    if isinstance(obj, (CanonicalSystem, GeneralSystem)):
        return obj
    return GeneralSystem(np.asarray(obj, dtype=float))


def canonical_of(system) -> tuple[CanonicalSystem, np.ndarray | None, np.ndarray | None]:
    """Return ``(canonical, basis, basis_inv)``; the basis is None for canonical input."""
    system = as_system(system)
    if isinstance(system, GeneralSystem):
        return system.canonical, system.basis, system.basis_inv
    return system, None, None


def _conjugate(block, basis, basis_inv):
    if basis is None:
        return block
    return basis @ block @ basis_inv


def matrix_ml_deriv(system, alpha: float, t: float, k: int, config: SeriesConfig | None = None) -> np.ndarray:
    """``d^k/dt^k E_alpha(A t^alpha)`` for ``k`` in 0, 1, 2 and ``t > 0``."""
    canon, basis, basis_inv = canonical_of(system)
    alpha = check_order(alpha)
    return _conjugate(canon._ml_block(alpha, float(t), k, config), basis, basis_inv)


def matrix_ml(system, alpha: float, t: float, config: SeriesConfig | None = None) -> np.ndarray:
    """Matrix Mittag-Leffler function ``E_alpha(A t^alpha)``; the identity at ``t = 0``."""
    canon, basis, basis_inv = canonical_of(system)
    alpha = check_order(alpha)
    t = float(t)
    if t < 0.0:
        raise ValueError(f"time must be non-negative, got {t!r}")
    if t == 0.0:
        return np.eye(canon.dim)
    return _conjugate(canon._ml_block(alpha, t, 0, config), basis, basis_inv)


def matrix_exp(system, t: float) -> np.ndarray:
    """Classical flow ``exp(A t)`` from the closed forms of each canonical block."""
    canon, basis, basis_inv = canonical_of(system)
    return _conjugate(canon._exp_block(float(t)), basis, basis_inv)


def system_to_dict(system) -> dict:
    """JSON-friendly description of a system, inverse of :func:`system_from_dict`."""
    if isinstance(system, GeneralSystem):
        return {"form": "matrix", "matrix": system.matrix.tolist()}
    if isinstance(system, DistinctReal):
        return {"form": "distinct-real", "eigenvalues": list(system.eigenvalues)}
    if isinstance(system, ComplexPair):
        return {"form": "complex-pair", "a": system.a, "b": system.b}
    if isinstance(system, Jordan2):
        return {"form": "jordan", "lam": system.lam}
    if isinstance(system, ComplexPairPlusReal):
        return {"form": "complex-pair-plus-real", "a": system.a, "b": system.b, "lam": system.lam}
    raise TypeError(f"not a system: {system!r}")


def system_from_dict(data: dict):
    form = data.get("form")
    if form == "matrix":
        return GeneralSystem(np.asarray(data["matrix"], dtype=float))
    if form == "distinct-real":
        return DistinctReal(tuple(data["eigenvalues"]))
    if form == "complex-pair":
        return ComplexPair(data["a"], data["b"])
    if form == "jordan":
        return Jordan2(data["lam"])
    if form == "complex-pair-plus-real":
        return ComplexPairPlusReal(data["a"], data["b"], data["lam"])
    raise RejectionError(f"unknown system form {form!r}")
