"""Residual diagnostics for fitted models.

Portmanteau statistics use the standard serial-correlation form
``Q(m) = T (T + 2) sum_{j=1}^m rho_j^2 / (T - j)`` with mean-centered sample
autocorrelations ``rho_j``, referred to a chi-square whose degrees of freedom
subtract the number of fitted recursion coefficients (floored at one).  The
same statistic applied to squared values screens for leftover conditional
heteroskedasticity.  Probability-integral-transform (PIT) values feed the
percentile comparison and the uniformity test: at the true model they are
independent uniforms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from . import engine
from .engine import InitPolicy, Orders, ParamVector
from .exceptions import DomainError
from .families import Family

__all__ = [
    "PortmanteauResult",
    "JarqueBeraResult",
    "PPData",
    "KSResult",
    "DiagnosticsReport",
    "ljung_box",
    "mcleod_li",
    "jarque_bera",
    "ks_uniform",
    "pp_data",
    "rss",
    "compute_diagnostics",
]


@dataclass(frozen=True)
class PortmanteauResult:
    statistic: Optional[float]
    p_value: Optional[float]
    lags: int
    df: int
    available: bool
    note: str = ""


@dataclass(frozen=True)
class JarqueBeraResult:
    statistic: Optional[float]
    p_value: Optional[float]
    skewness: Optional[float]
    kurtosis: Optional[float]
    available: bool
    note: str = ""


@dataclass(frozen=True)
class PPData:
    """Sorted PIT values against the uniform percentile grid (i - 1/2) / T."""

    u: np.ndarray
    nu: np.ndarray
    degenerate: bool


@dataclass(frozen=True)
class KSResult:
    statistic: float
    p_value: float


def _autocorrelations(x: np.ndarray, lags: int) -> Optional[np.ndarray]:
    xc = x - np.mean(x)
    denom = float(np.sum(xc * xc))
    if denom <= 0.0 or not np.isfinite(denom):
        return None
    out = np.empty(lags)
    for j in range(1, lags + 1):
        out[j - 1] = float(np.sum(xc[j:] * xc[:-j])) / denom
    return out


def ljung_box(x: np.ndarray, lags: int, fitted_df: int = 0) -> PortmanteauResult:
    """Serial-correlation portmanteau test up to ``lags``.

    ``fitted_df`` is the count of estimated recursion coefficients whose
    fitting whitens the residuals; the reference degrees of freedom are
    ``max(1, lags - fitted_df)``.
    """
    x = np.asarray(x, dtype=float)
    if not isinstance(lags, (int, np.integer)) or lags < 1:
        raise DomainError(f"lags must be a positive integer, got {lags!r}")
    T = x.size
    df = max(1, int(lags) - int(fitted_df))
    if T <= lags + 1:
        return PortmanteauResult(None, None, lags, df, False, "series too short")
    rho = _autocorrelations(x, lags)
    if rho is None:
        return PortmanteauResult(None, None, lags, df, False, "series is constant")
    q = float(T * (T + 2.0) * np.sum(rho * rho / (T - np.arange(1, lags + 1))))
    p = float(stats.chi2.sf(q, df))
    return PortmanteauResult(q, p, lags, df, True)


def mcleod_li(x: np.ndarray, lags: int, fitted_df: int = 0) -> PortmanteauResult:
    """Portmanteau test on squared values; screens second-moment dynamics."""
    x = np.asarray(x, dtype=float)
    return ljung_box(x * x, lags, fitted_df)


def jarque_bera(x: np.ndarray) -> JarqueBeraResult:
    """Moment-based normality test with chi-square(2) reference."""
    x = np.asarray(x, dtype=float)
    T = x.size
    if T < 4:
        return JarqueBeraResult(None, None, None, None, False, "series too short")
    xc = x - np.mean(x)
    m2 = float(np.mean(xc ** 2))
    if m2 <= 0.0 or not np.isfinite(m2):
        return JarqueBeraResult(None, None, None, None, False, "series is constant")
    skew = float(np.mean(xc ** 3)) / m2 ** 1.5
    kurt = float(np.mean(xc ** 4)) / (m2 * m2)
    jb = T * (skew * skew / 6.0 + (kurt - 3.0) ** 2 / 24.0)
    return JarqueBeraResult(float(jb), float(stats.chi2.sf(jb, 2)), skew, kurt, True)


def ks_uniform(u: np.ndarray) -> KSResult:
    """Kolmogorov-Smirnov distance of values in [0, 1] from the uniform law."""
    res = stats.kstest(np.asarray(u, dtype=float), "uniform")
    return KSResult(float(res.statistic), float(res.pvalue))


def pp_data(pit: np.ndarray) -> PPData:
    """Percentile-percentile pairs: sorted PIT values vs (i - 1/2) / T."""
    pit = np.asarray(pit, dtype=float)
    T = pit.size
    u = (np.arange(1, T + 1) - 0.5) / T
    nu = np.sort(pit)
    degenerate = bool(T == 0 or not np.isfinite(pit).all() or np.ptp(pit) < 1e-12)
    return PPData(u=u, nu=nu, degenerate=degenerate)


def rss(y: np.ndarray, fitted: np.ndarray) -> float:
    """Residual sum of squares of observations around fitted means."""
    y = np.asarray(y, dtype=float)
    fitted = np.asarray(fitted, dtype=float)
    if y.shape != fitted.shape:
        raise DomainError("observations and fitted values must have equal shapes")
    return float(np.sum((y - fitted) ** 2))


@dataclass
class DiagnosticsReport:
    """All residual diagnostics for one fitted model on one series."""

    n_obs: int
    q: dict[int, PortmanteauResult]
    q_squared: dict[int, PortmanteauResult]
    jb: JarqueBeraResult
    ks: KSResult
    pp: PPData
    rss: float
    standardized: np.ndarray
    pit: np.ndarray
    fitted: np.ndarray
    notes: list[str] = field(default_factory=list)


def compute_diagnostics(
    family: Family,
    orders: Orders,
    theta: ParamVector,
    series: np.ndarray,
    lags: tuple[int, ...] = (1, 5, 22),
    init: Optional[InitPolicy] = None,
) -> DiagnosticsReport:
    """Filter the series at ``theta`` and assemble the diagnostic battery.

    Serial-correlation statistics run on the standardized innovations with
    ``p + q`` fitted coefficients discounted; squared-value statistics
    discount ``r + s``.  PIT values use the fitted per-observation
    distributions.
    """
    series = np.asarray(series, dtype=float)
    out = engine.filter_path(family, orders, theta, series)
    std = out.eps / np.sqrt(out.sigma2)
    pit = np.asarray(
        family.cdf(series, out.gamma1, out.gamma2, theta.phi_inv), dtype=float
    )
    fitted = np.asarray(
        family.fitted_mean(out.gamma1, out.gamma2, theta.phi_inv), dtype=float
    )
    df_mean = orders.p + orders.q
    df_var = orders.r + orders.s
    q = {m: ljung_box(std, m, fitted_df=df_mean) for m in lags}
    q2 = {m: mcleod_li(std, m, fitted_df=df_var) for m in lags}
    notes = [
        "serial-correlation df discount p + q; squared-value df discount r + s",
    ]
    return DiagnosticsReport(
        n_obs=series.size,
        q=q,
        q_squared=q2,
        jb=jarque_bera(std),
        ks=ks_uniform(pit),
        pp=pp_data(pit),
        rss=rss(series, fitted),
        standardized=std,
        pit=pit,
        fitted=fitted,
        notes=notes,
    )
