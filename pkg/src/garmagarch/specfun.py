"""Special functions used by the distribution families.

Forward evaluations (log-gamma, polygamma, modified Bessel K) wrap the
Cephes-backed routines in :mod:`scipy.special`; the inverse maps
(``inv_digamma``, ``inv_trigamma``) are Newton iterations with safeguarded
bisection fallbacks, since scipy provides no inverses.  All functions accept
scalars or arrays and return numpy floats/arrays.
"""

from __future__ import annotations

from typing import Union

import numpy as np
from scipy import special as sp

from .exceptions import DomainError, NumericalError

ArrayLike = Union[float, np.ndarray]

# Euler-Mascheroni constant, used for inverse-digamma seeding.
EULER_GAMMA = 0.5772156649015328606

_POLYGAMMA_ORDERS = (0, 1, 2, 3)


def _as_array(x: ArrayLike, name: str) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {x!r}")
    return arr, arr.ndim == 0


def _maybe_scalar(arr: np.ndarray, scalar: bool) -> ArrayLike:
    return float(arr) if scalar else arr


def log_gamma(z: ArrayLike) -> ArrayLike:
    """Natural log of the gamma function for positive real ``z``."""
    arr, scalar = _as_array(z, "z")
    if np.any(arr <= 0.0):
        raise DomainError(f"log_gamma requires z > 0, got {z!r}")
    return _maybe_scalar(sp.gammaln(arr), scalar)


def polygamma(order: int, z: ArrayLike) -> ArrayLike:
    """Polygamma function psi_m(z) for m in {0, 1, 2, 3} and z > 0."""
    if order not in _POLYGAMMA_ORDERS:
        raise DomainError(f"polygamma order must be one of {_POLYGAMMA_ORDERS}, got {order!r}")
    arr, scalar = _as_array(z, "z")
    if np.any(arr <= 0.0):
        raise DomainError(f"polygamma requires z > 0, got {z!r}")
    if order == 0:
        out = sp.digamma(arr)
    else:
        out = sp.polygamma(order, arr)
    return _maybe_scalar(np.asarray(out, dtype=float), scalar)


def digamma(z: ArrayLike) -> ArrayLike:
    """psi(z), the first derivative of log-gamma."""
    return polygamma(0, z)


def trigamma(z: ArrayLike) -> ArrayLike:
    """psi_1(z), the second derivative of log-gamma."""
    return polygamma(1, z)


def inv_digamma(value: ArrayLike, tol: float = 1e-12, max_iter: int = 60) -> ArrayLike:
    """Inverse of the digamma function on (0, inf).

    Newton iteration seeded with exp(value) + 0.5 for value > -2.22 and
    -1/(value + EulerGamma) below, which converges in a handful of steps
    everywhere on the real line.
    """
    arr, scalar = _as_array(value, "value")
    x = np.where(arr > -2.22, np.exp(np.minimum(arr, 700.0)) + 0.5, -1.0 / (arr + EULER_GAMMA))
    x = np.maximum(x, 1e-300)
    for _ in range(max_iter):
        f = sp.digamma(x) - arr
        step = f / sp.polygamma(1, x)
        x_new = x - step
        # digamma is concave increasing; keep iterates positive.
        x = np.where(x_new > 0.0, x_new, x / 10.0)
        if np.all(np.abs(f) <= tol * np.maximum(1.0, np.abs(arr))):
            break
    f = sp.digamma(x) - arr
    if not np.all(np.abs(f) <= 1e-8 * np.maximum(1.0, np.abs(arr))):
        raise NumericalError(f"inv_digamma failed to converge for value={value!r}")
    return _maybe_scalar(x, scalar)


def inv_trigamma(value: ArrayLike, tol: float = 1e-12, max_iter: int = 60) -> ArrayLike:
    """Inverse of the trigamma function: the c > 0 with psi_1(c) = value.

    psi_1 is positive, strictly decreasing and convex, so a Newton iteration
    from a one-sided seed converges monotonically; elements that stall are
    finished by bisection.
    """
    arr, scalar = _as_array(value, "value")
    if np.any(arr <= 0.0):
        raise DomainError(f"inv_trigamma requires value > 0, got {value!r}")
    # Asymptotic inverses: psi_1(c) ~ 1/c + 1/(2c^2) for large c (small value)
    # and psi_1(c) ~ 1/c^2 for small c (large value).
    x = np.where(arr < 0.7, 0.5 + 1.0 / arr, 1.0 / np.sqrt(arr))
    converged = np.zeros(x.shape, dtype=bool)
    for _ in range(max_iter):
        f = sp.polygamma(1, x) - arr
        converged = np.abs(f) <= tol * np.maximum(1.0, arr)
        if np.all(converged):
            break
        step = f / sp.polygamma(2, x)
        x_new = x - step
        x = np.where(x_new > 0.0, x_new, x / 10.0)
    if not np.all(converged):
        x = np.where(converged, x, _inv_trigamma_bisect(arr, x, converged))
    f = sp.polygamma(1, x) - arr
    if not np.all(np.abs(f) <= 1e-10 * np.maximum(1.0, arr)):
        raise NumericalError(f"inv_trigamma failed to converge for value={value!r}")
    return _maybe_scalar(x, scalar)


def _inv_trigamma_bisect(target: np.ndarray, x0: np.ndarray, skip: np.ndarray) -> np.ndarray:
    out = x0.copy().reshape(-1)
    tgt = target.reshape(-1)
    todo = ~skip.reshape(-1)
    for i in np.nonzero(todo)[0]:
        v = tgt[i]
        lo, hi = 1e-12, 1.0
        while sp.polygamma(1, hi) > v:
            lo, hi = hi, hi * 4.0
            if hi > 1e12:
                break
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if sp.polygamma(1, mid) > v:
                lo = mid
            else:
                hi = mid
        out[i] = 0.5 * (lo + hi)
    return out.reshape(x0.shape)


def bessel_k(order: ArrayLike, x: ArrayLike) -> ArrayLike:
    """Modified Bessel function of the second kind K_order(x), x > 0.

    Symmetric in the order (K_{-j} = K_j).  Raises an overflow error when
    the value exceeds the double-precision range; use :func:`log_bessel_k`
    in that regime.
    """
    v_arr, v_scalar = _as_array(order, "order")
    x_arr, x_scalar = _as_array(x, "x")
    if np.any(x_arr <= 0.0):
        raise DomainError(f"bessel_k requires x > 0, got {x!r}")
    out = sp.kv(np.abs(v_arr), x_arr)
    if np.any(~np.isfinite(out)):
        raise NumericalError(
            f"bessel_k overflow for order={order!r}, x={x!r}; use log_bessel_k"
        )
    return _maybe_scalar(np.asarray(out, dtype=float), v_scalar and x_scalar)


def log_bessel_k(order: ArrayLike, x: ArrayLike) -> ArrayLike:
    """log K_order(x), stable against both under- and overflow.

    Uses the exponentially scaled kve (log kve(v, x) - x).  Where kve itself
    overflows (large order with small argument) the value is recomputed in
    arbitrary precision.
    """
    v_arr, v_scalar = _as_array(order, "order")
    x_arr, x_scalar = _as_array(x, "x")
    if np.any(x_arr <= 0.0):
        raise DomainError(f"log_bessel_k requires x > 0, got {x!r}")
    v_abs = np.abs(v_arr)
    with np.errstate(over="ignore"):
        kve_val = sp.kve(v_abs, x_arr)
    out = np.log(kve_val) - x_arr
    bad = ~np.isfinite(out)
    if np.any(bad):
        out = np.array(out, dtype=float)
        v_b = np.broadcast_to(v_abs, out.shape)
        x_b = np.broadcast_to(x_arr, out.shape)
        flat = out.reshape(-1)
        for i in np.nonzero(bad.reshape(-1))[0]:
            flat[i] = _log_bessel_k_mp(v_b.reshape(-1)[i], x_b.reshape(-1)[i])
        out = flat.reshape(out.shape)
    return _maybe_scalar(np.asarray(out, dtype=float), v_scalar and x_scalar)


def _log_bessel_k_mp(v: float, x: float) -> float:
    import mpmath

    with mpmath.workdps(40):
        return float(mpmath.log(mpmath.besselk(v, x)))
