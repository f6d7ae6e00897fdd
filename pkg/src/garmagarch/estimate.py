"""Parameter estimation.

Three estimators are provided.

``fit_gmle``
    Minimizes the Gaussian quasi-likelihood objective
    ``Q_T = (1/T) sum_t [log sigma2_t + eps_t^2 / sigma2_t]`` over the mean
    and variance parameters.  It never touches the family's invariant
    parameters, so it works even when those are unknown.  For mean-driven
    baselines the objective profiles down to conditional least squares
    ``(1/T) sum_t eps_t^2``.

``fit_pseudo_ml_phi``
    Holds the filtered (mu_t, sigma2_t) path fixed at a previous estimate and
    maximizes the exact log-likelihood over the invariant parameters alone.

``fit_mle``
    Maximizes the exact log-likelihood over all parameters jointly, by
    default from a small set of starting points (the Gaussian estimate, a
    jittered copy, and a moment heuristic).

Optimization runs in unconstrained coordinates: positive parameters move on
a log scale and family invariants use their own transforms, so every point
the optimizer visits is a valid model.  Standard errors come from the
inverse of the negative numerical Hessian of the log-likelihood in the
original parametrization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from . import engine
from .engine import InitPolicy, Orders, ParamVector
from .exceptions import DomainError, EstimationError, NumericalError
from .families import Family

__all__ = [
    "FitConfig",
    "FitReport",
    "SEResult",
    "fit",
    "fit_gmle",
    "fit_mle",
    "fit_pseudo_ml",
    "fit_pseudo_ml_phi",
    "information_se",
    "gaussian_objective_se",
]

_BARRIER = 1e15
_LOG_BOUND = 30.0


@dataclass(frozen=True)
class FitConfig:
    """Optimizer settings shared by all estimators."""

    n_starts: int = 3
    maxiter: int = 2000
    ftol: float = 1e-9
    gtol: float = 1e-6
    seed: int = 0
    compute_se: bool = False
    se_rel_step: float = 1e-5


@dataclass
class FitReport:
    """Outcome of one estimation run."""

    family: str
    estimator: str
    orders: Orders
    theta: ParamVector
    converged: bool
    message: str
    n_obs: int
    n_free: int
    objective: float
    loglik: Optional[float] = None
    aic: Optional[float] = None
    bic: Optional[float] = None
    se: Optional[dict[str, float]] = None
    se_message: str = ""
    start_index: int = 0

    def params(self, family: Family) -> dict[str, float]:
        return dict(zip(self.theta.names(family), self.theta.to_array()))


# ---------------------------------------------------------------------------
# unconstrained coordinates


class _Coords:
    """Bijection between a chosen block of parameters and R^k.

    Mean coefficients pass through unchanged, the variance block moves on a
    log scale and invariant parameters use the family transforms.  Blocks
    not selected as free stay fixed at the values in ``base``.
    """

    def __init__(
        self,
        family: Family,
        orders: Orders,
        base: ParamVector,
        free_mean: bool = True,
        free_garch: bool = True,
        free_inv: bool = True,
    ):
        self.family = family
        self.orders = orders
        self.base = base
        self.free_mean = free_mean
        self.free_garch = free_garch and family.variance_driven
        self.free_inv = free_inv and family.n_invariant > 0

    @property
    def n_free(self) -> int:
        n = 0
        if self.free_mean:
            n += 1 + self.orders.p + self.orders.q
        if self.free_garch:
            n += 1 + self.orders.r + self.orders.s
        if self.free_inv:
            n += self.family.n_invariant
        return n

    def pack(self, theta: ParamVector) -> np.ndarray:
        parts: list[float] = []
        if self.free_mean:
            parts += [theta.phi0, *theta.phi, *theta.delta]
        if self.free_garch:
            parts.append(math.log(max(theta.omega, 1e-300)))
            parts += [math.log(max(v, 1e-13)) for v in theta.alpha]
            parts += [math.log(max(v, 1e-13)) for v in theta.beta]
        if self.free_inv:
            parts += list(self.family.phi_to_unconstrained(theta.phi_inv))
        return np.asarray(parts, dtype=float)

    def unpack(self, x: np.ndarray) -> ParamVector:
        x = np.asarray(x, dtype=float)
        p, q, r, s = self.orders.p, self.orders.q, self.orders.r, self.orders.s
        th = self.base
        i = 0
        if self.free_mean:
            th = replace(
                th,
                phi0=float(x[i]),
                phi=tuple(x[i + 1 : i + 1 + p]),
                delta=tuple(x[i + 1 + p : i + 1 + p + q]),
            )
            i += 1 + p + q
        if self.free_garch:
            clip = lambda v: math.exp(min(max(v, -_LOG_BOUND), _LOG_BOUND))
            th = replace(
                th,
                omega=clip(x[i]),
                alpha=tuple(clip(v) for v in x[i + 1 : i + 1 + r]),
                beta=tuple(clip(v) for v in x[i + 1 + r : i + 1 + r + s]),
            )
            i += 1 + r + s
        if self.free_inv:
            th = replace(th, phi_inv=self.family.phi_from_unconstrained(x[i:]))
        return th

    def bounds(self) -> list[tuple[Optional[float], Optional[float]]]:
        out: list[tuple[Optional[float], Optional[float]]] = []
        if self.free_mean:
            out += [(None, None)] * (1 + self.orders.p + self.orders.q)
        if self.free_garch:
            out += [(-_LOG_BOUND, _LOG_BOUND)] * (1 + self.orders.r + self.orders.s)
        if self.free_inv:
            out += [(None, None)] * self.family.n_invariant
        return out


def _minimize(fun, x0, bounds, config: FitConfig):
    return optimize.minimize(
        fun,
        x0,
        method="L-BFGS-B",
        bounds=bounds,
        options={
            "maxiter": config.maxiter,
            "ftol": config.ftol,
            "gtol": config.gtol,
            "maxfun": 10 * config.maxiter,
        },
    )


# ---------------------------------------------------------------------------
# objectives


def _gaussian_value(family, orders, theta, series, init) -> float:
    try:
        with np.errstate(all="ignore"):
            _, sigma2, eps = engine.filter_moments(family, orders, theta, series, init)
            if family.variance_driven:
                if np.any(sigma2 <= 0.0):
                    return _BARRIER
                q = float(np.mean(np.log(sigma2) + eps * eps / sigma2))
            else:
                q = float(np.mean(eps * eps))
    except (DomainError, NumericalError):
        return _BARRIER
    return q if np.isfinite(q) else _BARRIER


def _cls_value(family, orders, theta, series, init) -> float:
    try:
        with np.errstate(all="ignore"):
            _, _, eps = engine.filter_moments(family, orders, theta, series, init)
            q = float(np.mean(eps * eps))
    except (DomainError, NumericalError):
        return _BARRIER
    return q if np.isfinite(q) else _BARRIER


def _neg_loglik_value(family, orders, theta, series, init) -> float:
    try:
        with np.errstate(all="ignore"):
            out = engine.filter_path(
                family, orders, theta, series, init, diagnose_failures=False
            )
            v = -out.loglik
    except (DomainError, NumericalError):
        return _BARRIER
    return v if np.isfinite(v) else _BARRIER


# ---------------------------------------------------------------------------
# starting points


def _ols_mean_start(family: Family, orders: Orders, series: np.ndarray) -> ParamVector:
    """Least-squares autoregression of the linked series; deltas start at 0."""
    hy = np.asarray(family.link(np.asarray(series, dtype=float)), dtype=float)
    p, q = orders.p, orders.q
    if p == 0:
        phi0, phi = float(np.mean(hy)), ()
    else:
        rows = len(hy) - p
        X = np.empty((rows, p + 1))
        X[:, 0] = 1.0
        for j in range(1, p + 1):
            X[:, j] = hy[p - j : p - j + rows]
        coef, *_ = np.linalg.lstsq(X, hy[p:], rcond=None)
        phi = tuple(np.clip(coef[1:], -0.98, 0.98))
        phi0 = float(coef[0])
    return ParamVector(phi0=phi0, phi=phi, delta=(0.0,) * q)


def _heuristic_start(family: Family, orders: Orders, series: np.ndarray) -> ParamVector:
    hy = np.asarray(family.link(np.asarray(series, dtype=float)), dtype=float)
    th = _ols_mean_start(family, orders, series)
    if family.variance_driven:
        base = replace(
            th,
            omega=1.0,
            alpha=(0.0,) * orders.r,
            beta=(0.0,) * orders.s,
        )
        _, _, eps = engine.filter_moments(family, orders, base, series)
        v_hat = max(float(np.mean(eps * eps)), 1e-12)
        alpha = (0.1 / max(orders.r, 1),) * orders.r
        beta = (0.6 / max(orders.s, 1),) * orders.s
        gsum = sum(alpha) + sum(beta)
        th = replace(
            th, omega=v_hat * (1.0 - gsum), alpha=alpha, beta=beta,
            phi_inv=family.phi_heuristic(float(np.mean(hy)), v_hat),
        )
    else:
        base_inv = family.phi_heuristic(float(np.mean(hy)), max(float(np.var(hy)), 1e-12))
        th = replace(th, phi_inv=base_inv)
    return th


# ---------------------------------------------------------------------------
# Gaussian estimation


def fit_gmle(
    family: Family,
    orders: Orders,
    series: np.ndarray,
    config: Optional[FitConfig] = None,
    start: Optional[ParamVector] = None,
    init: Optional[InitPolicy] = None,
) -> FitReport:
    """Gaussian quasi-likelihood fit of the mean and variance parameters.

    Variance-driven families run three stages: least squares for the mean
    block, the Gaussian objective for the variance block with the mean
    frozen, then a joint polish.  Mean-driven baselines reduce to
    conditional least squares; the report's theta carries no invariant
    parameters in either case.
    """
    config = config or FitConfig()
    series = np.asarray(series, dtype=float)
    T = series.size

    if not family.variance_driven:
        th0 = start if start is not None else _ols_mean_start(family, orders, series)
        th0 = replace(th0, phi_inv=())
        coords = _Coords(family, orders, th0, free_garch=False, free_inv=False)
        fun = lambda x: _cls_value(family, orders, coords.unpack(x), series, init)
        res = _minimize(fun, coords.pack(th0), coords.bounds(), config)
        theta = coords.unpack(res.x)
        return FitReport(
            family=family.tag,
            estimator="gmle",
            orders=orders,
            theta=theta,
            converged=bool(res.success),
            message=str(res.message),
            n_obs=T,
            n_free=coords.n_free,
            objective=float(res.fun),
        )

    if start is not None:
        th = replace(start, phi_inv=())
        stages = [(True, True)]
        x_res = None
        for free_mean, free_garch in stages:
            coords = _Coords(
                family, orders, th, free_mean=free_mean, free_garch=free_garch,
                free_inv=False,
            )
            fun = lambda x: _gaussian_value(family, orders, coords.unpack(x), series, init)
            x_res = _minimize(fun, coords.pack(th), coords.bounds(), config)
            th = coords.unpack(x_res.x)
        res, theta = x_res, th
    else:
        # stage 1: conditional least squares for the mean block
        th = _ols_mean_start(family, orders, series)
        th = replace(
            th, omega=1.0, alpha=(0.0,) * orders.r, beta=(0.0,) * orders.s
        )
        coords = _Coords(family, orders, th, free_garch=False, free_inv=False)
        fun = lambda x: _cls_value(family, orders, coords.unpack(x), series, init)
        res1 = _minimize(fun, coords.pack(th), coords.bounds(), config)
        th = coords.unpack(res1.x)

        # stage 2: variance block on the residuals, mean frozen
        _, _, eps = engine.filter_moments(family, orders, th, series, init)
        v_hat = max(float(np.mean(eps * eps)), 1e-12)
        alpha = (0.1 / max(orders.r, 1),) * orders.r
        beta = (0.6 / max(orders.s, 1),) * orders.s
        gsum = sum(alpha) + sum(beta)
        th = replace(th, omega=v_hat * (1.0 - gsum), alpha=alpha, beta=beta)
        coords = _Coords(family, orders, th, free_mean=False, free_inv=False)
        fun = lambda x: _gaussian_value(family, orders, coords.unpack(x), series, init)
        res2 = _minimize(fun, coords.pack(th), coords.bounds(), config)
        th = coords.unpack(res2.x)

        # stage 3: joint polish
        coords = _Coords(family, orders, th, free_inv=False)
        fun = lambda x: _gaussian_value(family, orders, coords.unpack(x), series, init)
        res = _minimize(fun, coords.pack(th), coords.bounds(), config)
        theta = coords.unpack(res.x)

    loglik = aic = bic = None
    if family.n_invariant == 0:
        with np.errstate(all="ignore"):
            loglik = engine.loglik(family, orders, theta, series, init)
        k = coords.n_free
        aic = (-2.0 * loglik + 2.0 * k) / T
        bic = (-2.0 * loglik + k * math.log(T)) / T
    report = FitReport(
        family=family.tag,
        estimator="gmle",
        orders=orders,
        theta=theta,
        converged=bool(res.success),
        message=str(res.message),
        n_obs=T,
        n_free=coords.n_free,
        objective=float(res.fun),
        loglik=loglik,
        aic=aic,
        bic=bic,
    )
    if config.compute_se:
        se_res = gaussian_objective_se(
            family, orders, theta, series, init=init, rel_step=config.se_rel_step
        )
        report.se, report.se_message = se_res.se, se_res.message
    return report


# ---------------------------------------------------------------------------
# pseudo maximum likelihood for the invariant block


def fit_pseudo_ml_phi(
    family: Family,
    orders: Orders,
    theta: ParamVector,
    series: np.ndarray,
    config: Optional[FitConfig] = None,
    init: Optional[InitPolicy] = None,
) -> FitReport:
    """Estimate invariant parameters with the filtered moment path frozen.

    ``theta`` supplies the mean (and variance) parameters, typically from a
    Gaussian fit; only the invariant block is optimized.
    """
    if family.n_invariant == 0:
        raise DomainError(f"{family.tag}: no invariant parameters to estimate")
    config = config or FitConfig()
    series = np.asarray(series, dtype=float)
    T = series.size
    mu, sigma2, eps = engine.filter_moments(family, orders, theta, series, init)

    def neg_ll(u: np.ndarray) -> float:
        try:
            with np.errstate(all="ignore"):
                phi = family.phi_from_unconstrained(u)
                if family.variance_driven:
                    g1, g2 = family.solve_gamma(mu, sigma2, phi)
                else:
                    g1, g2 = family.solve_gamma_mean(mu, phi)
                ll = np.sum(family.log_density(series, g1, g2, phi))
        except (DomainError, NumericalError):
            return _BARRIER
        return float(-ll) if np.isfinite(ll) else _BARRIER

    s2_bar = float(np.mean(sigma2)) if family.variance_driven else float(np.mean(eps * eps))
    phi0 = family.phi_heuristic(float(np.mean(mu)), max(s2_bar, 1e-12))
    u0 = family.phi_to_unconstrained(phi0)
    res = _minimize(neg_ll, u0, [(None, None)] * len(u0), config)
    phi_hat = family.phi_from_unconstrained(res.x)
    theta_full = replace(theta, phi_inv=phi_hat)
    k = theta_full.to_array().size
    ll = -float(res.fun)
    return FitReport(
        family=family.tag,
        estimator="pseudo_ml",
        orders=orders,
        theta=theta_full,
        converged=bool(res.success),
        message=str(res.message),
        n_obs=T,
        n_free=family.n_invariant,
        objective=float(res.fun),
        loglik=ll,
        aic=(-2.0 * ll + 2.0 * k) / T,
        bic=(-2.0 * ll + k * math.log(T)) / T,
    )


def fit_pseudo_ml(
    family: Family,
    orders: Orders,
    series: np.ndarray,
    config: Optional[FitConfig] = None,
    init: Optional[InitPolicy] = None,
) -> FitReport:
    """Gaussian fit for the moment parameters, then invariants by pseudo-ML."""
    g = fit_gmle(family, orders, series, config=config, init=init)
    report = fit_pseudo_ml_phi(family, orders, g.theta, series, config=config, init=init)
    report.converged = report.converged and g.converged
    return report


# ---------------------------------------------------------------------------
# full maximum likelihood


def fit_mle(
    family: Family,
    orders: Orders,
    series: np.ndarray,
    config: Optional[FitConfig] = None,
    starts: Optional[Sequence[ParamVector]] = None,
    init: Optional[InitPolicy] = None,
) -> FitReport:
    """Joint maximum likelihood over all model parameters.

    Default starting points: the Gaussian estimate (with invariants filled
    by pseudo-ML when the family has any), a jittered copy of it, and a
    moment heuristic.  ``starts`` overrides that list; the best final
    log-likelihood wins.
    """
    config = config or FitConfig()
    series = np.asarray(series, dtype=float)
    T = series.size

    if starts is None:
        start_list: list[ParamVector] = []
        try:
            g = fit_gmle(family, orders, series, config=config, init=init)
            base = g.theta
            if family.n_invariant:
                base = fit_pseudo_ml_phi(
                    family, orders, base, series, config=config, init=init
                ).theta
            start_list.append(base)
        except (DomainError, NumericalError, EstimationError):
            pass
        if start_list and config.n_starts >= 2:
            rng = np.random.default_rng(config.seed)
            coords0 = _Coords(family, orders, start_list[0])
            x = coords0.pack(start_list[0])
            start_list.append(coords0.unpack(x + rng.normal(0.0, 0.1, x.size)))
        if config.n_starts >= 3 or not start_list:
            start_list.append(_heuristic_start(family, orders, series))
        starts = start_list[: max(config.n_starts, 1)]
    if not starts:
        raise EstimationError("no usable starting point")

    best = None
    for k, th0 in enumerate(starts):
        coords = _Coords(family, orders, th0)
        fun = lambda x: _neg_loglik_value(family, orders, coords.unpack(x), series, init)
        try:
            res = _minimize(fun, coords.pack(th0), coords.bounds(), config)
        except (ValueError, FloatingPointError):  # pathological start
            continue
        if best is None or res.fun < best[0].fun:
            best = (res, coords, k)
    if best is None or best[0].fun >= _BARRIER:
        raise EstimationError(
            f"{family.tag}: likelihood could not be evaluated from any start"
        )
    res, coords, k_star = best
    theta = coords.unpack(res.x)
    ll = -float(res.fun)
    n_free = coords.n_free
    report = FitReport(
        family=family.tag,
        estimator="mle",
        orders=orders,
        theta=theta,
        converged=bool(res.success),
        message=str(res.message),
        n_obs=T,
        n_free=n_free,
        objective=float(res.fun),
        loglik=ll,
        aic=(-2.0 * ll + 2.0 * n_free) / T,
        bic=(-2.0 * ll + n_free * math.log(T)) / T,
        start_index=k_star,
    )
    if config.compute_se:
        se_res = information_se(
            family, orders, theta, series, init=init, rel_step=config.se_rel_step
        )
        report.se, report.se_message = se_res.se, se_res.message
    return report


_ESTIMATORS = {
    "mle": fit_mle,
    "gmle": fit_gmle,
    "pseudo_ml": fit_pseudo_ml,
}


def fit(
    family: Family,
    orders: Orders,
    series: np.ndarray,
    estimator: str = "mle",
    config: Optional[FitConfig] = None,
    init: Optional[InitPolicy] = None,
) -> FitReport:
    """Dispatch to one of the estimators by name."""
    key = estimator.strip().lower().replace("-", "_")
    try:
        f = _ESTIMATORS[key]
    except KeyError:
        raise DomainError(
            f"unknown estimator {estimator!r}; choose from {sorted(_ESTIMATORS)}"
        ) from None
    return f(family, orders, series, config=config, init=init)


# ---------------------------------------------------------------------------
# standard errors


@dataclass
class SEResult:
    se: Optional[dict[str, float]]
    hessian: np.ndarray
    symmetric: bool
    max_asymmetry: float
    message: str = ""


def _numeric_hessian(f: Callable[[np.ndarray], float], x: np.ndarray, rel_step: float):
    """Dense central-difference Hessian; every (i, j) entry is evaluated
    independently so the returned matrix carries a real symmetry check."""
    n = x.size
    h = rel_step * np.maximum(1.0, np.abs(x))
    H = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                f0 = f(x)
                xp = x.copy(); xp[i] += h[i]
                xm = x.copy(); xm[i] -= h[i]
                H[i, i] = (f(xp) - 2.0 * f0 + f(xm)) / (h[i] * h[i])
            else:
                xpp = x.copy(); xpp[i] += h[i]; xpp[j] += h[j]
                xpm = x.copy(); xpm[i] += h[i]; xpm[j] -= h[j]
                xmp = x.copy(); xmp[i] -= h[i]; xmp[j] += h[j]
                xmm = x.copy(); xmm[i] -= h[i]; xmm[j] -= h[j]
                H[i, j] = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * h[i] * h[j])
    return H


def _se_from_neg_hessian(H: np.ndarray, names: list[str], scale: float) -> SEResult:
    if not np.all(np.isfinite(H)):
        return SEResult(None, H, False, math.inf, "hessian evaluation failed")
    asym = float(np.max(np.abs(H - H.T)))
    tol = 1e-6 * max(1.0, float(np.max(np.abs(H))))
    symmetric = asym <= tol
    Hs = 0.5 * (H + H.T)
    neg = -scale * Hs
    try:
        L = np.linalg.cholesky(neg)
    except np.linalg.LinAlgError:
        return SEResult(
            None, Hs, symmetric, asym,
            "negative hessian is not positive definite at the optimum",
        )
    inv = np.linalg.inv(neg)
    se = np.sqrt(np.diag(inv))
    return SEResult(dict(zip(names, se)), Hs, symmetric, asym)


def information_se(
    family: Family,
    orders: Orders,
    theta: ParamVector,
    series: np.ndarray,
    init: Optional[InitPolicy] = None,
    rel_step: float = 1e-5,
) -> SEResult:
    """Observed-information standard errors in the original parametrization."""
    series = np.asarray(series, dtype=float)
    garch = family.variance_driven
    x0 = theta.to_array()
    names = theta.names(family)

    def f(v: np.ndarray) -> float:
        try:
            th = ParamVector.from_array(v, orders, family, garch=garch)
            with np.errstate(all="ignore"):
                return engine.loglik(family, orders, th, series, init)
        except (DomainError, NumericalError):
            return math.nan

    H = _numeric_hessian(f, x0, rel_step)
    return _se_from_neg_hessian(H, names, scale=1.0)


def gaussian_objective_se(
    family: Family,
    orders: Orders,
    theta: ParamVector,
    series: np.ndarray,
    init: Optional[InitPolicy] = None,
    rel_step: float = 1e-5,
) -> SEResult:
    """Standard errors for the Gaussian estimator.

    The Gaussian log-likelihood is -(T/2) (log 2 pi + Q_T), so the observed
    information is (T/2) times the Hessian of Q_T.
    """
    series = np.asarray(series, dtype=float)
    if not family.variance_driven:
        raise DomainError(f"{family.tag}: Gaussian standard errors need a variance block")
    x0 = theta.to_array()[: 1 + orders.p + orders.q + 1 + orders.r + orders.s]
    names = theta.names(family)[: x0.size]

    def f(v: np.ndarray) -> float:
        try:
            th = ParamVector.from_array(v, orders, family, garch=True, n_invariant=0)
            q = _gaussian_value(family, orders, th, series, init)
        except (DomainError, NumericalError):
            return math.nan
        return math.nan if q >= _BARRIER else q

    H = _numeric_hessian(f, x0, rel_step)
    # Q_T is minimized, so its Hessian is positive definite; flip the sign so
    # the shared helper sees a proper negative log-likelihood curvature.
    return _se_from_neg_hessian(-H, names, scale=0.5 * series.size)
