"""Distribution families pairing a conditional law with a link system.

Each family maps between the per-observation distribution parameters
``gamma_t = (gamma1, gamma2)`` and the conditional moments of the linked
observation, ``mu_t = E[h(y_t) | past]`` and ``sigma2_t = Var[h(y_t) | past]``.
Variance-driven families solve ``gamma_t`` from the pair ``(mu_t, sigma2_t)``;
the mean-driven baseline variants hold one distribution parameter fixed
(an invariant parameter) and solve ``gamma_t`` from ``mu_t`` alone, their
conditional variance then being implied rather than modelled.

Families
--------
log_gamma          Gamma(c_t, rate c_t / eta_t) with log link, gamma = (c, eta)
logit_beta         Beta(a_t, b_t) with logit link, gamma = (a, b)
ghsst              generalized hyperbolic skew Student-t with identity link,
                   gamma = (xi, varsigma), invariants (nu, tau), nu > 4
log_gamma_mgarma   Gamma with fixed shape c (invariant), mean-driven
logit_beta_mgarma  Beta with fixed a + b = tau_sum (invariant), mean-driven
"""

from __future__ import annotations

import abc
import math
from typing import Optional, Union

import numpy as np
from scipy import integrate
from scipy import special as sp

from . import specfun
from .exceptions import DomainError, NumericalError

ArrayLike = Union[float, np.ndarray]


def _prep(*values: ArrayLike) -> tuple[list[np.ndarray], bool]:
    arrays = [np.asarray(v, dtype=float) for v in values]
    scalar = all(a.ndim == 0 for a in arrays)
    return arrays, scalar


def _ret(arr: np.ndarray, scalar: bool) -> ArrayLike:
    return float(arr) if scalar else arr


class Family(abc.ABC):
    """Base class for distribution/link pairings."""

    tag: str = ""
    support: str = ""
    invariant_names: tuple[str, ...] = ()
    #: True when gamma_t is solved from (mu_t, sigma2_t) and the model carries
    #: a variance recursion; False for mean-driven baseline families.
    variance_driven: bool = True

    # -- invariant parameter handling -------------------------------------
    @property
    def n_invariant(self) -> int:
        return len(self.invariant_names)

    def validate_phi(self, phi: tuple[float, ...]) -> tuple[float, ...]:
        phi = tuple(float(v) for v in phi)
        if len(phi) != self.n_invariant:
            raise DomainError(
                f"{self.tag}: expected {self.n_invariant} invariant parameter(s) "
                f"{self.invariant_names}, got {len(phi)}"
            )
        self._check_phi(phi)
        return phi

    def _check_phi(self, phi: tuple[float, ...]) -> None:
        pass

    def _phi_optional(self, phi: tuple[float, ...]) -> tuple[float, ...]:
        """Validation for methods parametrized by gamma alone.

        Mean-driven families carry their invariant inside gamma, so an empty
        phi is accepted by density/moment/sampling methods there.
        """
        if len(phi) == 0 and not self.variance_driven:
            return ()
        return self.validate_phi(phi)

    def phi_to_unconstrained(self, phi: tuple[float, ...]) -> np.ndarray:
        return np.asarray(phi, dtype=float)

    def phi_from_unconstrained(self, u: np.ndarray) -> tuple[float, ...]:
        return tuple(float(v) for v in np.asarray(u, dtype=float))

    def phi_heuristic(self, mu_bar: float, s2_bar: float) -> tuple[float, ...]:
        """Rough invariant-parameter start from typical linked moments."""
        return ()

    # -- abstract surface ---------------------------------------------------
    @abc.abstractmethod
    def check_support(self, y: ArrayLike) -> None: ...

    @abc.abstractmethod
    def link(self, y: ArrayLike) -> ArrayLike: ...

    @abc.abstractmethod
    def mean_var(self, g1, g2, phi) -> tuple[ArrayLike, ArrayLike]: ...

    @abc.abstractmethod
    def log_density(self, y, g1, g2, phi) -> ArrayLike: ...

    @abc.abstractmethod
    def cdf(self, y, g1, g2, phi) -> ArrayLike: ...

    @abc.abstractmethod
    def sample(self, g1, g2, phi, rng, size=None): ...

    @abc.abstractmethod
    def fitted_mean(self, g1, g2, phi) -> ArrayLike: ...

    def solve_gamma(self, mu, sigma2, phi) -> tuple[ArrayLike, ArrayLike]:
        raise NotImplementedError(f"{self.tag} is mean-driven; use solve_gamma_mean")

    def solve_gamma_mean(self, mu, phi) -> tuple[ArrayLike, ArrayLike]:
        raise NotImplementedError(f"{self.tag} is variance-driven; use solve_gamma")

    def __repr__(self) -> str:
        return f"<family {self.tag}>"


def _check_moment_inputs(tag: str, mu: np.ndarray, sigma2: np.ndarray) -> None:
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma2))):
        raise NumericalError(f"{tag}: non-finite moment inputs to solve_gamma")
    if np.any(sigma2 <= 0.0):
        raise NumericalError(f"{tag}: sigma2 must be positive in solve_gamma")


class LogGamma(Family):
    """Conditional Gamma with log link.

    y_t | past ~ Gamma(shape c_t, rate c_t / eta_t), so E[y_t] = eta_t,
    mu_t = E[log y_t] = log eta_t + psi(c_t) - log c_t and
    sigma2_t = Var[log y_t] = psi_1(c_t).
    """

    tag = "log_gamma"
    support = "y > 0"

    def check_support(self, y):
        arr = np.asarray(y, dtype=float)
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
            raise DomainError(f"{self.tag}: observations must satisfy {self.support}")

    def link(self, y):
        self.check_support(y)
        (arr,), scalar = _prep(y)
        return _ret(np.log(arr), scalar)

    def mean_var(self, g1, g2, phi):
        self._phi_optional(phi)
        (c, eta), scalar = _prep(g1, g2)
        if np.any(c <= 0.0) or np.any(eta <= 0.0):
            raise DomainError(f"{self.tag}: requires c > 0 and eta > 0")
        mu = np.log(eta) + sp.digamma(c) - np.log(c)
        sigma2 = sp.polygamma(1, c)
        return _ret(mu, scalar), _ret(np.asarray(sigma2, dtype=float), scalar)

    def solve_gamma(self, mu, sigma2, phi):
        self.validate_phi(phi)
        (mu_a, s2_a), scalar = _prep(mu, sigma2)
        _check_moment_inputs(self.tag, mu_a, s2_a)
        c = specfun.inv_trigamma(s2_a)
        c = np.asarray(c, dtype=float)
        eta = np.exp(mu_a + np.log(c) - sp.digamma(c))
        if not np.all(np.isfinite(eta)) or np.any(eta <= 0.0):
            raise NumericalError(f"{self.tag}: eta over/underflowed in solve_gamma")
        return _ret(c, scalar), _ret(eta, scalar)

    def log_density(self, y, g1, g2, phi):
        self._phi_optional(phi)
        self.check_support(y)
        (y_a, c, eta), scalar = _prep(y, g1, g2)
        rate = c / eta
        out = c * np.log(rate) - sp.gammaln(c) + (c - 1.0) * np.log(y_a) - rate * y_a
        return _ret(out, scalar)

    def cdf(self, y, g1, g2, phi):
        self._phi_optional(phi)
        self.check_support(y)
        (y_a, c, eta), scalar = _prep(y, g1, g2)
        return _ret(np.asarray(sp.gammainc(c, (c / eta) * y_a), dtype=float), scalar)

    def sample(self, g1, g2, phi, rng, size=None):
        self._phi_optional(phi)
        (c, eta), scalar = _prep(g1, g2)
        out = rng.gamma(shape=c, scale=eta / c, size=size)
        return float(out) if scalar and size is None else out

    def fitted_mean(self, g1, g2, phi):
        (c, eta), scalar = _prep(g1, g2)
        return _ret(eta + 0.0, scalar)


def _solve_beta_system(
    mu: np.ndarray,
    sigma2: np.ndarray,
    start: Optional[tuple[np.ndarray, np.ndarray]] = None,
    max_iter: int = 60,
    tol: float = 1e-11,
) -> tuple[np.ndarray, np.ndarray]:
    """Solve psi(a) - psi(b) = mu, psi_1(a) + psi_1(b) = sigma2 for a, b > 0.

    Damped Newton on (log a, log b); elements that fail to converge fall back
    to nested bisection (outer in b, inner a = inv_digamma(mu + psi(b))).
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    sigma2 = np.atleast_1d(np.asarray(sigma2, dtype=float))
    mu, sigma2 = np.broadcast_arrays(mu, sigma2)
    if start is None:
        # large-(a, b) asymptotics: mu ~ log(a/b), sigma2 ~ 1/a + 1/b
        expmu = np.exp(np.clip(mu, -35.0, 35.0))
        a = np.clip((1.0 + expmu) / sigma2, 1e-8, 1e12)
        b = np.clip((1.0 + 1.0 / expmu) / sigma2, 1e-8, 1e12)
    else:
        a = np.broadcast_to(np.asarray(start[0], dtype=float), mu.shape).copy()
        b = np.broadcast_to(np.asarray(start[1], dtype=float), mu.shape).copy()
    la, lb = np.log(a), np.log(b)
    tol_mu = tol * np.maximum(1.0, np.abs(mu))
    tol_s2 = tol * np.maximum(1.0, sigma2)
    converged = np.zeros(mu.shape, dtype=bool)
    for _ in range(max_iter):
        a, b = np.exp(la), np.exp(lb)
        f1 = sp.digamma(a) - sp.digamma(b) - mu
        f2 = sp.polygamma(1, a) + sp.polygamma(1, b) - sigma2
        converged = (np.abs(f1) <= tol_mu) & (np.abs(f2) <= tol_s2)
        if np.all(converged):
            break
        j11 = a * sp.polygamma(1, a)
        j12 = -b * sp.polygamma(1, b)
        j21 = a * sp.polygamma(2, a)
        j22 = b * sp.polygamma(2, b)
        det = j11 * j22 - j12 * j21
        det = np.where(np.abs(det) < 1e-300, np.sign(det) * 1e-300 + 1e-300, det)
        da = (j22 * f1 - j12 * f2) / det
        db = (-j21 * f1 + j11 * f2) / det
        la = la - np.clip(da, -3.0, 3.0)
        lb = lb - np.clip(db, -3.0, 3.0)
    if not np.all(converged):
        flat_a, flat_b = np.exp(la).reshape(-1), np.exp(lb).reshape(-1)
        mu_f, s2_f = mu.reshape(-1), sigma2.reshape(-1)
        for i in np.nonzero(~converged.reshape(-1))[0]:
            flat_a[i], flat_b[i] = _solve_beta_bisect(mu_f[i], s2_f[i])
        a = flat_a.reshape(mu.shape)
        b = flat_b.reshape(mu.shape)
    else:
        a, b = np.exp(la), np.exp(lb)
    res1 = sp.digamma(a) - sp.digamma(b) - mu
    res2 = sp.polygamma(1, a) + sp.polygamma(1, b) - sigma2
    if np.any(np.abs(res1) > 1e-8 * np.maximum(1.0, np.abs(mu))) or np.any(
        np.abs(res2) > 1e-8 * np.maximum(1.0, sigma2)
    ):
        bad = int(np.argmax(np.abs(res1) + np.abs(res2)))
        raise NumericalError(
            "logit_beta: parameter solve failed at "
            f"mu={mu.reshape(-1)[bad]!r}, sigma2={sigma2.reshape(-1)[bad]!r}"
        )
    return a, b


def _solve_beta_bisect(mu: float, sigma2: float) -> tuple[float, float]:
    """Nested bisection: outer on log b, inner a = inv_digamma(mu + psi(b)).

    The profiled residual psi_1(a(b)) + psi_1(b) - sigma2 is strictly
    decreasing in b, so a sign change brackets the unique root.
    """

    def resid(lb: float) -> float:
        b = math.exp(lb)
        a = float(specfun.inv_digamma(mu + sp.digamma(b)))
        return float(sp.polygamma(1, a) + sp.polygamma(1, b)) - sigma2

    lo, hi = 0.0, 0.0
    r0 = resid(0.0)
    if r0 > 0.0:
        lo = 0.0
        hi = 1.0
        while resid(hi) > 0.0:
            lo, hi = hi, hi * 2.0 + 1.0
            if hi > 720.0:
                raise NumericalError(
                    f"logit_beta: bisection bracket failed at mu={mu!r}, sigma2={sigma2!r}"
                )
    else:
        hi = 0.0
        lo = -1.0
        while resid(lo) < 0.0:
            hi, lo = lo, lo * 2.0 - 1.0
            if lo < -720.0:
                raise NumericalError(
                    f"logit_beta: bisection bracket failed at mu={mu!r}, sigma2={sigma2!r}"
                )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if resid(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    b = math.exp(0.5 * (lo + hi))
    a = float(specfun.inv_digamma(mu + sp.digamma(b)))
    return a, b


class LogitBeta(Family):
    """Conditional Beta with logit link.

    y_t | past ~ Beta(a_t, b_t); the linked observation logit(y_t) has
    mu_t = psi(a_t) - psi(b_t) and sigma2_t = psi_1(a_t) + psi_1(b_t).
    """

    tag = "logit_beta"
    support = "0 < y < 1"

    def check_support(self, y):
        arr = np.asarray(y, dtype=float)
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr >= 1.0):
            raise DomainError(f"{self.tag}: observations must satisfy {self.support}")

    def link(self, y):
        self.check_support(y)
        (arr,), scalar = _prep(y)
        return _ret(np.log(arr) - np.log1p(-arr), scalar)

    def mean_var(self, g1, g2, phi):
        self._phi_optional(phi)
        (a, b), scalar = _prep(g1, g2)
        if np.any(a <= 0.0) or np.any(b <= 0.0):
            raise DomainError(f"{self.tag}: requires a > 0 and b > 0")
        mu = sp.digamma(a) - sp.digamma(b)
        sigma2 = sp.polygamma(1, a) + sp.polygamma(1, b)
        return _ret(np.asarray(mu, dtype=float), scalar), _ret(np.asarray(sigma2, dtype=float), scalar)

    def solve_gamma(self, mu, sigma2, phi, start=None):
        self.validate_phi(phi)
        (mu_a, s2_a), scalar = _prep(mu, sigma2)
        _check_moment_inputs(self.tag, mu_a, s2_a)
        a, b = _solve_beta_system(mu_a, s2_a, start=start)
        if scalar:
            return float(a[0]), float(b[0])
        return a.reshape(mu_a.shape), b.reshape(mu_a.shape)

    def log_density(self, y, g1, g2, phi):
        self._phi_optional(phi)
        self.check_support(y)
        (y_a, a, b), scalar = _prep(y, g1, g2)
        out = (a - 1.0) * np.log(y_a) + (b - 1.0) * np.log1p(-y_a) - sp.betaln(a, b)
        return _ret(out, scalar)

    def cdf(self, y, g1, g2, phi):
        self._phi_optional(phi)
        self.check_support(y)
        (y_a, a, b), scalar = _prep(y, g1, g2)
        return _ret(np.asarray(sp.betainc(a, b, y_a), dtype=float), scalar)

    def sample(self, g1, g2, phi, rng, size=None):
        self._phi_optional(phi)
        (a, b), scalar = _prep(g1, g2)
        out = rng.beta(a, b, size=size)
        return float(out) if scalar and size is None else out

    def fitted_mean(self, g1, g2, phi):
        (a, b), scalar = _prep(g1, g2)
        return _ret(a / (a + b), scalar)


class GHSST(Family):
    """Generalized hyperbolic skew Student-t with identity link.

    Location xi_t and scale varsigma_t vary over time; the tail index nu > 4
    and skewness tau are invariant.  Moments of the observation itself:

        mu_t     = xi_t + tau * varsigma_t^2 / (nu - 2)
        sigma2_t = varsigma_t^2 / (nu - 2)
                   + 2 tau^2 varsigma_t^4 / ((nu - 2)^2 (nu - 4))

    Equivalently y = xi + tau W + sqrt(W) Z with Z standard normal and
    W inverse-gamma(nu/2, varsigma^2/2), which is how sampling and the CDF
    are implemented.  At tau = 0 the law is Student-t with nu degrees of
    freedom, location xi and scale varsigma / sqrt(nu).
    """

    tag = "ghsst"
    support = "real y"
    invariant_names = ("nu", "tau")
    _TAU_SYMMETRIC = 1e-8

    def _check_phi(self, phi):
        nu, tau = phi
        if not (np.isfinite(nu) and np.isfinite(tau)):
            raise DomainError(f"{self.tag}: invariants must be finite")
        if nu <= 4.0:
            raise DomainError(f"{self.tag}: requires nu > 4 for finite conditional variance")

    def phi_to_unconstrained(self, phi):
        nu, tau = self.validate_phi(phi)
        return np.array([math.log(nu - 4.0), tau])

    def phi_from_unconstrained(self, u):
        u = np.asarray(u, dtype=float)
        # floor keeps nu strictly above 4 in double precision
        return (4.0 + math.exp(min(max(float(u[0]), -21.0), 35.0)), float(u[1]))

    def phi_heuristic(self, mu_bar, s2_bar):
        return (8.0, 0.0)

    def check_support(self, y):
        arr = np.asarray(y, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise DomainError(f"{self.tag}: observations must be finite reals")

    def link(self, y):
        self.check_support(y)
        (arr,), scalar = _prep(y)
        return _ret(arr + 0.0, scalar)

    def mean_var(self, g1, g2, phi):
        nu, tau = self.validate_phi(phi)
        (xi, vs), scalar = _prep(g1, g2)
        if np.any(vs <= 0.0):
            raise DomainError(f"{self.tag}: requires varsigma > 0")
        u = vs * vs
        mu = xi + tau * u / (nu - 2.0)
        sigma2 = u / (nu - 2.0) + 2.0 * tau * tau * u * u / ((nu - 2.0) ** 2 * (nu - 4.0))
        return _ret(mu, scalar), _ret(sigma2, scalar)

    def solve_gamma(self, mu, sigma2, phi):
        nu, tau = self.validate_phi(phi)
        (mu_a, s2_a), scalar = _prep(mu, sigma2)
        _check_moment_inputs(self.tag, mu_a, s2_a)
        # closed-form positive root of the variance equation in u = varsigma^2,
        # written to stay exact as tau -> 0
        x = 8.0 * tau * tau * s2_a / (nu - 4.0)
        u = 2.0 * (nu - 2.0) * s2_a / (np.sqrt(1.0 + x) + 1.0)
        vs = np.sqrt(u)
        xi = mu_a - tau * u / (nu - 2.0)
        return _ret(xi, scalar), _ret(vs, scalar)

    def log_density(self, y, g1, g2, phi):
        nu, tau = self.validate_phi(phi)
        self.check_support(y)
        (y_a, xi, vs), scalar = _prep(y, g1, g2)
        d = y_a - xi
        if abs(tau) < self._TAU_SYMMETRIC:
            # Student-t limit with nu dof and scale vs (on the q = d/vs axis)
            out = (
                sp.gammaln((nu + 1.0) / 2.0)
                - sp.gammaln(nu / 2.0)
                - 0.5 * math.log(math.pi)
                - np.log(vs)
                - (nu + 1.0) / 2.0 * np.log1p((d / vs) ** 2)
            )
            return _ret(out, scalar)
        q2 = vs * vs + d * d
        half = (nu + 1.0) / 2.0
        out = (
            0.5 * (1.0 - nu) * math.log(2.0)
            + nu * np.log(vs)
            + half * math.log(abs(tau))
            + specfun.log_bessel_k(half, abs(tau) * np.sqrt(q2))
            + tau * d
            - sp.gammaln(nu / 2.0)
            - 0.5 * math.log(math.pi)
            - half * 0.5 * np.log(q2)
        )
        return _ret(np.asarray(out, dtype=float), scalar)

    def cdf(self, y, g1, g2, phi):
        nu, tau = self.validate_phi(phi)
        self.check_support(y)
        (y_a, xi, vs), scalar = _prep(y, g1, g2)
        if abs(tau) < self._TAU_SYMMETRIC:
            out = sp.stdtr(nu, (y_a - xi) * math.sqrt(nu) / vs)
            return _ret(np.asarray(out, dtype=float), scalar)
        y_b, xi_b, vs_b = np.broadcast_arrays(y_a, xi, vs)
        shape = y_b.shape
        y_f, xi_f, vs_f = y_b.reshape(-1), xi_b.reshape(-1), vs_b.reshape(-1)
        lognorm = sp.gammaln(nu / 2.0)

        def integrand(g: float) -> np.ndarray:
            # mixing density Gamma(nu/2, 1) at g, times the conditional
            # normal CDF given W = varsigma^2 / (2 g)
            w = vs_f * vs_f / (2.0 * g)
            z = (y_f - xi_f - tau * w) / np.sqrt(w)
            logpdf = (nu / 2.0 - 1.0) * math.log(g) - g - lognorm
            return math.exp(logpdf) * sp.ndtr(z)

        val, _err = integrate.quad_vec(integrand, 0.0, np.inf, epsabs=1e-10, epsrel=1e-10)
        out = np.clip(np.asarray(val, dtype=float), 0.0, 1.0).reshape(shape)
        return _ret(out, scalar)

    def sample(self, g1, g2, phi, rng, size=None):
        nu, tau = self.validate_phi(phi)
        (xi, vs), scalar = _prep(g1, g2)
        g = rng.standard_gamma(nu / 2.0, size=size if size is not None else np.broadcast(xi, vs).shape)
        w = vs * vs / (2.0 * g)
        z = rng.standard_normal(size=np.shape(w))
        out = xi + tau * w + np.sqrt(w) * z
        return float(out) if scalar and size is None else out

    def fitted_mean(self, g1, g2, phi):
        mu, _ = self.mean_var(g1, g2, phi)
        return mu


class LogGammaMGarma(LogGamma):
    """Gamma/log-link family with invariant shape c; mean-driven baseline.

    Only eta_t varies; the implied conditional variance of log y_t is the
    constant psi_1(c).
    """

    tag = "log_gamma_mgarma"
    variance_driven = False
    invariant_names = ("c",)

    def _check_phi(self, phi):
        (c,) = phi
        if not np.isfinite(c) or c <= 0.0:
            raise DomainError(f"{self.tag}: requires shape c > 0")

    def phi_to_unconstrained(self, phi):
        (c,) = self.validate_phi(phi)
        return np.array([math.log(c)])

    def phi_from_unconstrained(self, u):
        return (math.exp(min(max(float(np.asarray(u, dtype=float)[0]), -30.0), 35.0)),)

    def phi_heuristic(self, mu_bar, s2_bar):
        return (float(specfun.inv_trigamma(max(s2_bar, 1e-10))),)

    def solve_gamma(self, mu, sigma2, phi):
        raise NotImplementedError(f"{self.tag} is mean-driven; use solve_gamma_mean")

    def solve_gamma_mean(self, mu, phi):
        (c,) = self.validate_phi(phi)
        (mu_a,), scalar = _prep(mu)
        if not np.all(np.isfinite(mu_a)):
            raise NumericalError(f"{self.tag}: non-finite mean input")
        eta = np.exp(mu_a + math.log(c) - float(sp.digamma(c)))
        if not np.all(np.isfinite(eta)) or np.any(eta <= 0.0):
            raise NumericalError(f"{self.tag}: eta over/underflowed in solve_gamma_mean")
        c_arr = np.full_like(eta, c)
        if scalar:
            return float(c), float(eta)
        return c_arr, eta


class LogitBetaMGarma(LogitBeta):
    """Beta/logit-link family with invariant total concentration a + b.

    The mean link psi(a) - psi(tau_sum - a) = mu_t pins a_t; the implied
    conditional variance is psi_1(a_t) + psi_1(b_t).
    """

    tag = "logit_beta_mgarma"
    variance_driven = False
    invariant_names = ("tau_sum",)

    def _check_phi(self, phi):
        (s,) = phi
        if not np.isfinite(s) or s <= 0.0:
            raise DomainError(f"{self.tag}: requires tau_sum > 0")

    def phi_to_unconstrained(self, phi):
        (s,) = self.validate_phi(phi)
        return np.array([math.log(s)])

    def phi_from_unconstrained(self, u):
        return (math.exp(min(max(float(np.asarray(u, dtype=float)[0]), -30.0), 35.0)),)

    def phi_heuristic(self, mu_bar, s2_bar):
        a, b = _solve_beta_system(np.array([mu_bar]), np.array([max(s2_bar, 1e-10)]))
        return (float(a[0] + b[0]),)

    def solve_gamma(self, mu, sigma2, phi, start=None):
        raise NotImplementedError(f"{self.tag} is mean-driven; use solve_gamma_mean")

    def solve_gamma_mean(self, mu, phi, max_iter: int = 80, tol: float = 1e-11):
        (s,) = self.validate_phi(phi)
        (mu_a,), scalar = _prep(mu)
        if not np.all(np.isfinite(mu_a)):
            raise NumericalError(f"{self.tag}: non-finite mean input")
        mu_v = np.atleast_1d(mu_a)
        # Newton on z with a = s * sigmoid(z); the residual is increasing in z
        z = np.zeros(mu_v.shape)
        tol_v = tol * np.maximum(1.0, np.abs(mu_v))
        converged = np.zeros(mu_v.shape, dtype=bool)
        for _ in range(max_iter):
            sig = sp.expit(z)
            a = s * sig
            b = s - a
            f = sp.digamma(a) - sp.digamma(b) - mu_v
            converged = np.abs(f) <= tol_v
            if np.all(converged):
                break
            dfdz = (sp.polygamma(1, a) + sp.polygamma(1, b)) * a * b / s
            z = z - np.clip(f / dfdz, -8.0, 8.0)
        if not np.all(converged):
            for i in np.nonzero(~converged)[0]:
                z[i] = self._bisect_z(float(mu_v[i]), s)
        a = s * sp.expit(z)
        b = s - a
        res = sp.digamma(a) - sp.digamma(b) - mu_v
        if np.any(np.abs(res) > 1e-8 * np.maximum(1.0, np.abs(mu_v))):
            bad = int(np.argmax(np.abs(res)))
            raise NumericalError(
                f"{self.tag}: mean solve failed at mu={mu_v[bad]!r}, tau_sum={s!r}"
            )
        if scalar:
            return float(a[0]), float(b[0])
        return a.reshape(mu_a.shape), b.reshape(mu_a.shape)

    @staticmethod
    def _bisect_z(mu: float, s: float) -> float:
        lo, hi = -745.0, 745.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            a = s * float(sp.expit(mid))
            a = min(max(a, 5e-324), s * (1.0 - 1e-16))
            if float(sp.digamma(a) - sp.digamma(s - a)) < mu:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


_REGISTRY: dict[str, Family] = {
    f.tag: f
    for f in (LogGamma(), LogitBeta(), GHSST(), LogGammaMGarma(), LogitBetaMGarma())
}


def family_names() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def get_family(name: str) -> Family:
    """Look up a family by tag; hyphens and case are normalized."""
    key = name.strip().lower().replace("-", "_")
    try:
        return _REGISTRY[key]
    except KeyError:
        raise DomainError(f"unknown family {name!r}; choose from {family_names()}") from None
