"""Mittag-Leffler functions summed from their power series.

Every series in this module has the shape

    S(z) = sum_{n>=0} w_n z^n / Gamma(alpha*n + beta),    w_n in {1, n + 1},

so the one- and two-parameter functions, the time derivatives of
``t -> E_alpha(lam * t**alpha)`` and the lambda-derivatives needed for Jordan
blocks are thin wrappers around a single summation routine.

Summation runs in two tiers.  A vectorised double-precision pass produces the
value together with a roundoff estimate.  When cancellation between large
terms pushes that estimate above the target accuracy (negative or complex
arguments, small orders at long times), the sum is redone in extended
precision with MPFR through :mod:`gmpy2`, carrying enough guard bits to absorb
the cancellation.  Arguments whose series would need an unreasonable number of
terms are refused with :class:`ConvergenceError` rather than summed badly.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import gmpy2
import numpy as np
from scipy import special

from .errors import ConvergenceError, DomainError

__all__ = [
    "SeriesConfig",
    "MLSeriesResult",
    "DEFAULT_CONFIG",
    "check_order",
    "rgamma",
    "log_rgamma",
    "ml_series",
    "ml",
    "ml_time_deriv",
    "ml_lambda_deriv",
    "ml_lambda_time_deriv",
    "cos_sin_components",
]

_LOG_PI = math.log(math.pi)
_BLOCK = 256


@dataclass(frozen=True)
class SeriesConfig:
    """Knobs of the series summation.

    ``eps`` and ``consecutive`` define the stopping rule: stop once
    ``consecutive`` successive terms are each below ``eps`` times the partial
    sum.  ``max_abs_z`` caps ``|z|``; ``max_growth`` caps ``|z|**(1/alpha)``,
    the scale that controls both the number of terms and the cancellation.
    """

    eps: float = 1e-16
    consecutive: int = 3
    min_terms: int = 500
    max_abs_z: float = 30.0
    max_growth: float = 200.0
    rel_tol: float = 1e-13
    max_precision: int = 4096


DEFAULT_CONFIG = SeriesConfig()


@dataclass(frozen=True)
class MLSeriesResult:
    """Value of a Mittag-Leffler type series with summation diagnostics."""

    value: complex
    terms_used: int
    tail_bound: float
    precision_bits: int = 53


def check_order(alpha: float) -> float:
    """Validate a fractional order, ``0 < alpha <= 1``."""
    alpha = float(alpha)
    if not (0.0 < alpha <= 1.0):
        raise DomainError(f"fractional order must satisfy 0 < alpha <= 1, got {alpha!r}")
    return alpha


def _sinpi(x):
    n = np.rint(x)
    r = x - n
    return np.sin(np.pi * r) * np.where(np.fmod(n, 2.0) == 0.0, 1.0, -1.0)


def log_rgamma(x):
    """Return ``(log|1/Gamma(x)|, sign(1/Gamma(x)))`` elementwise.

    Negative arguments go through the reflection formula
    ``1/Gamma(x) = sin(pi x) Gamma(1 - x) / pi``; at the poles of Gamma the
    reciprocal is zero, reported as ``(-inf, 0)``.
    """
    x = np.asarray(x, dtype=float)
    logabs = np.empty_like(x)
    sign = np.ones_like(x)
    pos = x > 0.0
    logabs[pos] = -special.gammaln(x[pos])
    neg = ~pos
    if np.any(neg):
        xn = x[neg]
        s = _sinpi(xn)
        with np.errstate(divide="ignore"):
            logabs[neg] = np.log(np.abs(s)) + special.gammaln(1.0 - xn) - _LOG_PI
        sign[neg] = np.sign(s)
    return logabs, sign


def rgamma(x):
    """Reciprocal gamma function for all real ``x``, zero at non-positive integers."""
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    big = x > 170.0
    pos = (x > 0.0) & ~big
    out[pos] = 1.0 / special.gamma(x[pos])
    out[big] = np.exp(-special.gammaln(x[big]))
    neg = x <= 0.0
    if np.any(neg):
        xn = x[neg]
        direct = 1.0 - xn <= 170.0
        vals = np.empty_like(xn)
        vals[direct] = _sinpi(xn[direct]) * special.gamma(1.0 - xn[direct]) / np.pi
        logabs, sign = log_rgamma(xn[~direct])
        vals[~direct] = sign * np.exp(logabs)
        out[neg] = vals
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# core summation


def _first_run_end(small: np.ndarray, carry: int, need: int) -> tuple[int | None, int]:
    """Index where ``need`` consecutive True values complete, continuing a run of ``carry``."""
    s = small.astype(np.int64)
    m = min(carry, need - 1)
    ext = np.concatenate([np.ones(m, dtype=np.int64), s])
    if ext.size >= need:
        window = np.convolve(ext, np.ones(need, dtype=np.int64), mode="valid")
        hits = np.flatnonzero(window == need)
        if hits.size:
            return int(hits[0] + need - 1 - m), 0
    if s.all():
        return None, carry + s.size
    return None, int(s.size - 1 - np.flatnonzero(s == 0)[-1])


def _sum_double(alpha, beta, z, weighted, cfg, k_check, budget):
    logz = cmath.log(z)
    chunks = []
    start = 0
    size = min(budget, max(64, 2 * k_check + 64))
    running = 0j
    carry = 0
    end = None
    while start < budget and end is None:
        stop = min(budget, start + size)
        k = np.arange(start, stop, dtype=float)
        logc, sign = log_rgamma(alpha * k + beta)
        expo = k * logz + logc
        if weighted:
            expo = expo + np.log1p(k)
        with np.errstate(over="ignore", invalid="ignore"):
            t = np.where(sign == 0.0, 0.0, sign * np.exp(expo))
        if not np.all(np.isfinite(t)):
            raise ConvergenceError("series term overflowed double precision")
        partial = running + np.cumsum(t)
        small = (np.abs(t) <= cfg.eps * np.abs(partial)) & (k >= k_check)
        idx, carry = _first_run_end(small, carry, cfg.consecutive)
        if idx is not None:
            end = idx
            t, logc, k = t[: idx + 1], logc[: idx + 1], k[: idx + 1]
        chunks.append((t, logc, k))
        running = partial[idx] if idx is not None else partial[-1]
        start = stop
        size *= 2
    if end is None:
        raise ConvergenceError(
            f"Mittag-Leffler series did not meet the stopping rule within {budget} terms"
        )
    t = np.concatenate([c[0] for c in chunks])
    logc = np.concatenate([c[1] for c in chunks])
    k = np.concatenate([c[2] for c in chunks])
    value = complex(math.fsum(t.real), math.fsum(t.imag))
    mag = np.abs(t)
    # each term carries a relative error of about eps times the size of its exponent
    lever = 2.0 + np.abs(k * logz) + np.where(mag > 0.0, np.abs(logc), 0.0)
    roundoff = 2.2e-16 * float(np.sum(mag * lever))
    return value, t.size, _tail_estimate(mag), roundoff, float(np.sum(mag))


def _tail_estimate(mag) -> float:
    last = float(mag[-1])
    if mag.size >= 2 and mag[-2] > 0.0:
        ratio = last / float(mag[-2])
        if ratio < 1.0:
            return last * ratio / (1.0 - ratio)
    return 10.0 * last


@lru_cache(maxsize=512)
def _mp_block(alpha: float, beta: float, weighted: bool, prec: int, block: int) -> tuple:
    with gmpy2.context(gmpy2.get_context(), precision=prec):
        a = gmpy2.mpfr(alpha)
        b = gmpy2.mpfr(beta)
        out = []
        for n in range(block * _BLOCK, (block + 1) * _BLOCK):
            x = a * n + b
            if x <= 0 and gmpy2.is_integer(x):
                c = gmpy2.mpfr(0)
            else:
                c = 1 / gmpy2.gamma(x)
            if weighted:
                c = c * (n + 1)
            out.append(c)
        return tuple(out)


def _sum_extended(alpha, beta, z, weighted, cfg, k_check, budget, prec, sum_abs):
    eps2 = gmpy2.mpfr(cfg.eps) ** 2
    need = cfg.consecutive
    # |partial| <= sum of |terms|, so larger terms cannot pass the stopping test
    cutoff = 2.0 * cfg.eps * sum_abs
    with gmpy2.context(gmpy2.get_context(), precision=prec):
        zz = gmpy2.mpc(z)
        p = gmpy2.mpc(1)
        s = gmpy2.mpc(0)
        run = 0
        last = prev = 0.0
        coeffs = ()
        for n in range(budget):
            if n % _BLOCK == 0:
                coeffs = _mp_block(alpha, beta, weighted, prec, n // _BLOCK)
            t = p * coeffs[n % _BLOCK]
            s += t
            prev, last = last, abs(complex(t))
            if n >= k_check:
                if last <= cutoff and gmpy2.norm(t) <= eps2 * gmpy2.norm(s):
                    run += 1
                    if run >= need:
                        break
                else:
                    run = 0
            p *= zz
        else:
            raise ConvergenceError(
                f"Mittag-Leffler series did not meet the stopping rule within {budget} terms"
            )
        return complex(s), n + 1, _tail_estimate(np.array([prev, last]))


def _series(alpha: float, beta: float, z: complex, weighted: bool, cfg: SeriesConfig) -> MLSeriesResult:
    res = _series_complex(alpha, beta, complex(z), weighted, cfg)
    if complex(z).imag == 0.0 and res.value.imag != 0.0:
        # a real argument has a real sum; the log-domain pass leaves roundoff in Im
        res = MLSeriesResult(complex(res.value.real, 0.0), res.terms_used, res.tail_bound, res.precision_bits)
    return res


def _series_complex(alpha: float, beta: float, z: complex, weighted: bool, cfg: SeriesConfig) -> MLSeriesResult:
    if z == 0:
        c = rgamma(beta)
        return MLSeriesResult(complex(c), 1, 0.0)
    r = abs(z)
    if r > cfg.max_abs_z:
        raise ConvergenceError(f"|z| = {r:.6g} exceeds the series cap {cfg.max_abs_z:g}")
    growth = r ** (1.0 / alpha) if r > 0 else 0.0
    if growth > cfg.max_growth:
        raise ConvergenceError(
            f"|z|^(1/alpha) = {growth:.6g} exceeds the growth cap {cfg.max_growth:g}; "
            "the series would need too many terms"
        )
    # terms grow until roughly n = |z|^(1/alpha) / alpha; only test the stopping rule past that
    k_check = max(3, int(math.ceil(growth / alpha)))
    budget = max(cfg.min_terms, int(math.ceil(3 * k_check + 60.0 / alpha)))

    value, n, trunc, roundoff, sum_abs = _sum_double(alpha, beta, z, weighted, cfg, k_check, budget)
    if roundoff <= cfg.rel_tol * abs(value):
        return MLSeriesResult(value, n, trunc + roundoff)

    target = cfg.eps / 8.0
    # the double value is unreliable here; assume the true one is not far below
    # the roundoff level and let the loop below add bits if that was optimistic
    guess = max(abs(value), roundoff * 2.0**-8, sum_abs * 2.0**-cfg.max_precision)
    prec = 64 + int(math.ceil(math.log2(sum_abs / guess))) + int(math.ceil(math.log2(n + 2)))
    while True:
        prec = min(64 * int(math.ceil(prec / 64)), cfg.max_precision)
        value, n, trunc = _sum_extended(alpha, beta, z, weighted, cfg, k_check, budget, prec, sum_abs)
        err = 4.0 * (n + 2) * sum_abs * 2.0**-prec
        if err <= target * abs(value) or prec >= cfg.max_precision:
            # at full precision a sum still below its error bound is zero to
            # within that (absolute) bound; report it rather than fail
            return MLSeriesResult(value, n, trunc + err, prec)
        if value == 0:
            prec = cfg.max_precision
            continue
        prec += 32 + int(math.ceil(math.log2(err) - math.log2(target) - math.log2(abs(value))))


# ---------------------------------------------------------------------------
# public functions


def ml_series(alpha: float, beta: float, z: complex, config: SeriesConfig | None = None) -> MLSeriesResult:
    """Two-parameter Mittag-Leffler function with summation diagnostics."""
    alpha = float(alpha)
    beta = float(beta)
    if not alpha > 0.0:
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    if not beta > 0.0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    return _series(alpha, beta, z, False, config or DEFAULT_CONFIG)


def ml(alpha: float, beta: float, z: complex, config: SeriesConfig | None = None) -> complex:
    r"""Two-parameter Mittag-Leffler function.

    .. math::

        E_{\alpha,\beta}(z) = \sum_{k=0}^\infty \frac{z^k}{\Gamma(\alpha k + \beta)}

    ``beta = 1`` gives the one-parameter function :math:`E_\alpha(z)`.

    Raises
    ------
    DomainError
        If ``alpha <= 0`` or ``beta <= 0``.
    ConvergenceError
        If ``|z|`` exceeds the configured cap or the series does not settle
        within its term budget.
    """
    return ml_series(alpha, beta, z, config).value


def _check_time(t: float) -> float:
    t = float(t)
    if not t > 0.0:
        raise DomainError(f"time must be positive, got {t!r}")
    return t


def ml_time_deriv(k: int, alpha: float, lam: complex, t: float, config: SeriesConfig | None = None) -> complex:
    """``k``-th time derivative of ``E_alpha(lam * t**alpha)`` for ``k`` in 0, 1, 2.

    Uses the termwise differentiated series
    ``sum_n lam**n t**(alpha*n - k) / Gamma(alpha*n - k + 1)``, in which terms
    hitting a pole of Gamma vanish.
    """
    if k not in (0, 1, 2):
        raise DomainError(f"only derivatives of order 0, 1, 2 are supported, got {k!r}")
    alpha = check_order(alpha)
    t = _check_time(t)
    z = complex(lam) * t**alpha
    s = _series(alpha, 1.0 - k, z, False, config or DEFAULT_CONFIG).value
    return s * t ** (-k)


def ml_lambda_deriv(alpha: float, lam: complex, t: float, config: SeriesConfig | None = None) -> complex:
    """``d/dlam E_alpha(lam * t**alpha) = (t**alpha / alpha) * E_{alpha,alpha}(lam * t**alpha)``."""
    alpha = check_order(alpha)
    t = _check_time(t)
    ta = t**alpha
    return ta / alpha * _series(alpha, alpha, complex(lam) * ta, False, config or DEFAULT_CONFIG).value


def ml_lambda_time_deriv(k: int, alpha: float, lam: complex, t: float, config: SeriesConfig | None = None) -> complex:
    """Mixed derivative ``d/dlam d^k/dt^k E_alpha(lam * t**alpha)``.

    Equal to ``t**(alpha - k) * sum_n (n + 1) w**n / Gamma(alpha*n + alpha + 1 - k)``
    with ``w = lam * t**alpha``.  ``k = 0`` reduces to :func:`ml_lambda_deriv`.
    """
    if k == 0:
        return ml_lambda_deriv(alpha, lam, t, config)
    if k not in (1, 2):
        raise DomainError(f"only derivatives of order 0, 1, 2 are supported, got {k!r}")
    alpha = check_order(alpha)
    t = _check_time(t)
    ta = t**alpha
    s = _series(alpha, alpha + 1.0 - k, complex(lam) * ta, True, config or DEFAULT_CONFIG).value
    return s * t ** (alpha - k)


def cos_sin_components(alpha: float, a: float, b: float, t: float, config: SeriesConfig | None = None) -> tuple[float, float]:
    """Real and imaginary parts of ``d/dt E_alpha((a + ib) t**alpha)``.

    These are the sums ``sum_n Re((a+ib)**n) t**(alpha*n-1) / Gamma(alpha*n)``
    and its imaginary counterpart.
    """
    d = ml_time_deriv(1, alpha, complex(a, b), t, config)
    return d.real, d.imag
