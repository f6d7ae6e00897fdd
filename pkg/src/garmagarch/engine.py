"""Joint mean/variance filtering recursions.

Given observations ``y_1..y_T``, a family and a parameter vector, the filter
runs the linked-mean recursion

    mu_t = phi0 + sum_j phi_j h(y_{t-j}) + sum_j delta_j eps_{t-j},
    eps_t = h(y_t) - mu_t,

and, for variance-driven families, the innovation-variance recursion

    sigma2_t = omega + sum_i alpha_i eps_{t-i}^2 + sum_j beta_j sigma2_{t-j},

then inverts the family's link system to recover the per-observation
distribution parameters and the pointwise log-likelihood.  Pre-sample values
follow the initialization policy: eps = 0, eps^2 = sigma2 = the unconditional
innovation variance omega / (1 - sum alpha - sum beta) (sample variance of the
linked series when that denominator is not positive), and h(y) = the sample
mean of the linked series.

Both recursions are linear difference equations and are evaluated with
``scipy.signal.lfilter``, so a full filter pass is vectorized end to end.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import signal

from .exceptions import DomainError, NumericalError
from .families import Family

__all__ = [
    "Orders",
    "ParamVector",
    "InitPolicy",
    "PresampleState",
    "FilterOutput",
    "validate_model",
    "filter_path",
    "filter_moments",
    "loglik",
]


@dataclass(frozen=True)
class Orders:
    """Lag orders (p, q) for the mean recursion and (r, s) for the variance."""

    p: int = 0
    q: int = 0
    r: int = 0
    s: int = 0

    def __post_init__(self):
        for name in ("p", "q", "r", "s"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 0:
                raise DomainError(f"order {name} must be a nonnegative integer, got {v!r}")
        if self.p + self.q + self.r + self.s == 0:
            raise DomainError("degenerate orders: at least one of p, q, r, s must be positive")

    @property
    def m(self) -> int:
        """Length of the pre-sample window."""
        return max(self.p, self.q, self.r, self.s)


@dataclass(frozen=True)
class ParamVector:
    """Model parameters partitioned into mean, variance and invariant blocks.

    ``omega``/``alpha``/``beta`` apply only to variance-driven families;
    mean-driven baselines must leave them empty (``omega=None``).
    ``phi_inv`` holds the family's invariant parameters in the order given by
    ``family.invariant_names``.
    """

    phi0: float = 0.0
    phi: tuple[float, ...] = ()
    delta: tuple[float, ...] = ()
    omega: Optional[float] = None
    alpha: tuple[float, ...] = ()
    beta: tuple[float, ...] = ()
    phi_inv: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "phi", tuple(float(v) for v in self.phi))
        object.__setattr__(self, "delta", tuple(float(v) for v in self.delta))
        object.__setattr__(self, "alpha", tuple(float(v) for v in self.alpha))
        object.__setattr__(self, "beta", tuple(float(v) for v in self.beta))
        object.__setattr__(self, "phi_inv", tuple(float(v) for v in self.phi_inv))
        object.__setattr__(self, "phi0", float(self.phi0))
        if self.omega is not None:
            object.__setattr__(self, "omega", float(self.omega))

    def names(self, family: Family) -> list[str]:
        out = ["phi0"]
        out += [f"phi{j}" for j in range(1, len(self.phi) + 1)]
        out += [f"delta{j}" for j in range(1, len(self.delta) + 1)]
        if self.omega is not None:
            out.append("omega")
        out += [f"alpha{i}" for i in range(1, len(self.alpha) + 1)]
        out += [f"beta{j}" for j in range(1, len(self.beta) + 1)]
        out += list(family.invariant_names[: len(self.phi_inv)])
        return out

    def to_array(self) -> np.ndarray:
        parts = [self.phi0, *self.phi, *self.delta]
        if self.omega is not None:
            parts.append(self.omega)
        parts += [*self.alpha, *self.beta, *self.phi_inv]
        return np.asarray(parts, dtype=float)

    @staticmethod
    def from_array(
        values: np.ndarray,
        orders: Orders,
        family: Family,
        garch: bool,
        n_invariant: Optional[int] = None,
    ) -> "ParamVector":
        values = np.asarray(values, dtype=float)
        p, q, r, s = orders.p, orders.q, orders.r, orders.s
        n_inv = family.n_invariant if n_invariant is None else n_invariant
        k_mean = 1 + p + q
        k_garch = (1 + r + s) if garch else 0
        expected = k_mean + k_garch + n_inv
        if values.size != expected:
            raise DomainError(
                f"parameter array has {values.size} entries, expected {expected}"
            )
        i = k_mean
        omega = float(values[i]) if garch else None
        alpha = tuple(values[i + 1 : i + 1 + r]) if garch else ()
        beta = tuple(values[i + 1 + r : i + 1 + r + s]) if garch else ()
        j = i + k_garch
        return ParamVector(
            phi0=float(values[0]),
            phi=tuple(values[1 : 1 + p]),
            delta=tuple(values[1 + p : 1 + p + q]),
            omega=omega,
            alpha=alpha,
            beta=beta,
            phi_inv=tuple(values[j:]),
        )

    def garch_sum(self) -> float:
        return float(sum(self.alpha) + sum(self.beta))


def validate_model(
    family: Family, orders: Orders, theta: ParamVector, *, need_gamma: bool = True
) -> None:
    """Consistency checks tying the parameter vector to orders and family.

    With ``need_gamma=False`` an empty invariant block is tolerated; the
    moment recursions do not touch it.
    """
    if len(theta.phi) != orders.p or len(theta.delta) != orders.q:
        raise DomainError(
            f"mean parameter lengths {(len(theta.phi), len(theta.delta))} "
            f"do not match orders (p={orders.p}, q={orders.q})"
        )
    vals = [theta.phi0, *theta.phi, *theta.delta]
    if family.variance_driven:
        if orders.r + orders.s < 1:
            raise DomainError(
                f"{family.tag}: variance-driven model requires r + s >= 1"
            )
        if theta.omega is None:
            raise DomainError(f"{family.tag}: omega is required")
        if len(theta.alpha) != orders.r or len(theta.beta) != orders.s:
            raise DomainError(
                f"variance parameter lengths {(len(theta.alpha), len(theta.beta))} "
                f"do not match orders (r={orders.r}, s={orders.s})"
            )
        if not theta.omega > 0.0:
            raise DomainError(f"omega must be positive, got {theta.omega!r}")
        if any(a < 0.0 for a in theta.alpha) or any(b < 0.0 for b in theta.beta):
            raise DomainError("alpha and beta coefficients must be nonnegative")
        vals += [theta.omega, *theta.alpha, *theta.beta]
    else:
        if orders.r != 0 or orders.s != 0:
            raise DomainError(f"{family.tag}: mean-driven baseline requires r = s = 0")
        if orders.p + orders.q < 1:
            raise DomainError(f"{family.tag}: mean recursion requires p + q >= 1")
        if theta.omega is not None or theta.alpha or theta.beta:
            raise DomainError(f"{family.tag}: variance parameters are not allowed")
    if not np.all(np.isfinite(vals)):
        raise DomainError("parameters must be finite")
    if need_gamma or theta.phi_inv:
        family.validate_phi(theta.phi_inv)


@dataclass(frozen=True)
class InitPolicy:
    """Pre-sample values; ``None`` selects the documented defaults."""

    presample_link: Optional[float] = None
    presample_eps: float = 0.0
    presample_sigma2: Optional[float] = None


@dataclass(frozen=True)
class PresampleState:
    """The pre-sample values a filter or generator actually used."""

    link: float
    eps: float
    sigma2: float


@dataclass
class FilterOutput:
    """Per-observation filter results.

    ``eps_t = h(y_t) - mu_t`` holds to within one rounding for every t.
    ``gamma1``/``gamma2`` and the pointwise log-likelihood are filled only
    when the filter is run with density evaluation.
    """

    mu: np.ndarray
    sigma2: np.ndarray
    eps: np.ndarray
    link_series: np.ndarray
    presample: PresampleState
    gamma1: Optional[np.ndarray] = None
    gamma2: Optional[np.ndarray] = None
    loglik_t: Optional[np.ndarray] = None
    loglik: Optional[float] = None

    @property
    def standardized(self) -> np.ndarray:
        return self.eps / np.sqrt(self.sigma2)


def _resolve_presample(
    family: Family, theta: ParamVector, hy: np.ndarray, init: InitPolicy
) -> PresampleState:
    pre_h = float(np.mean(hy)) if init.presample_link is None else float(init.presample_link)
    if family.variance_driven:
        if init.presample_sigma2 is not None:
            v0 = float(init.presample_sigma2)
        else:
            gsum = theta.garch_sum()
            if gsum < 1.0:
                v0 = theta.omega / (1.0 - gsum)
            else:
                v0 = float(np.var(hy))
        if not (np.isfinite(v0) and v0 > 0.0):
            raise NumericalError(f"pre-sample variance resolved to {v0!r}")
    else:
        v0 = 0.0
    return PresampleState(link=pre_h, eps=float(init.presample_eps), sigma2=v0)


def _mean_recursion(
    orders: Orders,
    theta: ParamVector,
    hy: np.ndarray,
    pre: PresampleState,
) -> tuple[np.ndarray, np.ndarray]:
    T = hy.size
    p, q = orders.p, orders.q
    u = hy - theta.phi0
    if p:
        hy_ext = np.concatenate([np.full(p, pre.link), hy])
        for j in range(1, p + 1):
            u = u - theta.phi[j - 1] * hy_ext[p - j : p - j + T]
    if q:
        a_coef = np.empty(q + 1)
        a_coef[0] = 1.0
        a_coef[1:] = theta.delta
        if pre.eps == 0.0:
            eps = signal.lfilter([1.0], a_coef, u)
        else:
            zi = signal.lfiltic([1.0], a_coef, np.full(q, pre.eps))
            eps, _ = signal.lfilter([1.0], a_coef, u, zi=zi)
    else:
        eps = u
    mu = hy - eps
    return mu, eps


def _variance_recursion(
    orders: Orders,
    theta: ParamVector,
    eps: np.ndarray,
    pre: PresampleState,
) -> np.ndarray:
    T = eps.size
    r, s = orders.r, orders.s
    eps2 = eps * eps
    w = np.full(T, theta.omega)
    if r:
        eps2_ext = np.concatenate([np.full(r, pre.sigma2), eps2])
        for i in range(1, r + 1):
            w = w + theta.alpha[i - 1] * eps2_ext[r - i : r - i + T]
    if s:
        a_coef = np.empty(s + 1)
        a_coef[0] = 1.0
        a_coef[1:] = [-b for b in theta.beta]
        zi = signal.lfiltic([1.0], a_coef, np.full(s, pre.sigma2))
        sigma2, _ = signal.lfilter([1.0], a_coef, w, zi=zi)
    else:
        sigma2 = w
    return sigma2


def _solve_gamma_path(
    family: Family,
    theta: ParamVector,
    mu: np.ndarray,
    sigma2: Optional[np.ndarray],
    diagnose: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    try:
        if family.variance_driven:
            g1, g2 = family.solve_gamma(mu, sigma2, theta.phi_inv)
        else:
            g1, g2 = family.solve_gamma_mean(mu, theta.phi_inv)
    except NumericalError:
        if not diagnose:
            raise
        # rerun pointwise to report the first offending time index
        for t in range(mu.size):
            try:
                if family.variance_driven:
                    family.solve_gamma(float(mu[t]), float(sigma2[t]), theta.phi_inv)
                else:
                    family.solve_gamma_mean(float(mu[t]), theta.phi_inv)
            except NumericalError as err:
                raise NumericalError(
                    f"{family.tag}: parameter solve failed at t={t + 1}: {err}"
                ) from err
        raise
    g1 = np.broadcast_to(np.asarray(g1, dtype=float), mu.shape).copy()
    g2 = np.broadcast_to(np.asarray(g2, dtype=float), mu.shape).copy()
    return g1, g2


def filter_path(
    family: Family,
    orders: Orders,
    theta: ParamVector,
    series: np.ndarray,
    init: Optional[InitPolicy] = None,
    with_density: bool = True,
    diagnose_failures: bool = True,
) -> FilterOutput:
    """Run the full filter, solving the link system at every t.

    Raises a domain error for observations outside the family support and a
    numerical error if the link system cannot be inverted anywhere along the
    path; with ``diagnose_failures`` the error pins down the first offending
    time index (optimizers turn this off to fail fast).
    """
    validate_model(family, orders, theta)
    series = np.asarray(series, dtype=float)
    if series.ndim != 1 or series.size <= orders.m:
        raise DomainError(
            f"series must be one-dimensional with more than m={orders.m} observations"
        )
    family.check_support(series)
    hy = np.asarray(family.link(series), dtype=float)
    init = init or InitPolicy()
    pre = _resolve_presample(family, theta, hy, init)
    mu, eps = _mean_recursion(orders, theta, hy, pre)
    if family.variance_driven:
        sigma2 = _variance_recursion(orders, theta, eps, pre)
        if not np.all(np.isfinite(sigma2)):
            raise NumericalError(f"{family.tag}: variance recursion overflowed")
        if np.any(sigma2 <= 0.0):
            raise NumericalError(f"{family.tag}: variance recursion produced sigma2 <= 0")
    else:
        sigma2 = None
    if not np.all(np.isfinite(mu)):
        raise NumericalError(f"{family.tag}: mean recursion overflowed")
    out = FilterOutput(
        mu=mu,
        sigma2=sigma2 if sigma2 is not None else np.empty(0),
        eps=eps,
        link_series=hy,
        presample=pre,
    )
    g1, g2 = _solve_gamma_path(family, theta, mu, sigma2, diagnose=diagnose_failures)
    out.gamma1, out.gamma2 = g1, g2
    if not family.variance_driven:
        _, implied = family.mean_var(g1, g2, ())
        out.sigma2 = np.broadcast_to(np.asarray(implied, dtype=float), mu.shape).copy()
    if with_density:
        ll = np.asarray(family.log_density(series, g1, g2, theta.phi_inv), dtype=float)
        if not np.all(np.isfinite(ll)):
            raise NumericalError(f"{family.tag}: non-finite log-density along the path")
        out.loglik_t = ll
        out.loglik = float(np.sum(ll))
    return out


def filter_moments(
    family: Family,
    orders: Orders,
    theta: ParamVector,
    series: np.ndarray,
    init: Optional[InitPolicy] = None,
) -> tuple[np.ndarray, Optional[np.ndarray], np.ndarray]:
    """Cheap pass returning (mu, sigma2, eps) without inverting the link system.

    The variance block is ``None`` for mean-driven families.  This is the
    Gaussian-objective workhorse: it needs no invariant parameters.
    """
    validate_model(family, orders, theta, need_gamma=False)
    series = np.asarray(series, dtype=float)
    if series.ndim != 1 or series.size <= orders.m:
        raise DomainError(
            f"series must be one-dimensional with more than m={orders.m} observations"
        )
    family.check_support(series)
    hy = np.asarray(family.link(series), dtype=float)
    init = init or InitPolicy()
    pre = _resolve_presample(family, theta, hy, init)
    mu, eps = _mean_recursion(orders, theta, hy, pre)
    if family.variance_driven:
        sigma2 = _variance_recursion(orders, theta, eps, pre)
    else:
        sigma2 = None
    return mu, sigma2, eps


def loglik(
    family: Family,
    orders: Orders,
    theta: ParamVector,
    series: np.ndarray,
    init: Optional[InitPolicy] = None,
) -> float:
    """Total log-likelihood of the series under the filtered parameters."""
    return filter_path(family, orders, theta, series, init=init).loglik
