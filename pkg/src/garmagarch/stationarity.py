"""Sufficient-condition checks for strict stationarity with finite fourth
moments of the innovation process.

The variance recursion in its squared-innovation form has companion matrix
``A`` (first row ``alpha_i + beta_i``, ones on the subdiagonal) and a
perturbation companion ``A1`` carrying the ``alpha_i`` alone.  The matrix
sequence

    B_0 = I,   B_k = A' B_{k-1} A + 5 A1' B_{k-1} A1

contracts for some horizon k exactly when the recursion's fourth-moment
drift condition holds; the factor 5 bounds the fourth moment of the
standardized innovations.  The check succeeds when some ``k <= h_max`` gives
a spectral norm below one, combined with a stable mean recursion: for the
log-link family the mean autoregressive polynomial must have all roots
outside the unit circle, while the logit-link family needs the mean
companion power ``Phi^k`` to contract at the same horizon.  These are
sufficient conditions only; a failed check is reported as such, never as a
proof of nonstationarity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .engine import Orders, ParamVector, validate_model
from .exceptions import DomainError
from .families import Family

__all__ = [
    "StationarityReport",
    "build_companions",
    "bk_norms",
    "mean_companion",
    "check_stationarity",
]

_HUGE = 1e100


@dataclass(frozen=True)
class StationarityReport:
    family: str
    status: str  # "satisfied" | "not_satisfied" | "theory_unavailable"
    h: Optional[int]
    bk_norm: Optional[float]
    mean_ok: Optional[bool]
    h_max: int
    details: str

    @property
    def satisfied(self) -> bool:
        return self.status == "satisfied"


def build_companions(alpha, beta) -> tuple[np.ndarray, np.ndarray]:
    """Companion matrices of the squared-innovation recursion.

    Both coefficient blocks are zero-padded to n = max(r, s); the first
    returned matrix carries ``alpha + beta`` in its top row, the second the
    ``alpha`` block alone.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    n = max(alpha.size, beta.size)
    if n == 0:
        raise DomainError("variance recursion has no coefficients")
    a = np.zeros(n)
    a[: alpha.size] = alpha
    b = np.zeros(n)
    b[: beta.size] = beta
    A = np.zeros((n, n))
    A[0, :] = a + b
    A1 = np.zeros((n, n))
    A1[0, :] = a
    if n > 1:
        idx = np.arange(n - 1)
        A[idx + 1, idx] = 1.0
    return A, A1


def _psd_norm(B: np.ndarray) -> float:
    sym = 0.5 * (B + B.T)
    return float(np.max(np.abs(np.linalg.eigvalsh(sym))))


def bk_norms(alpha, beta, h_max: int) -> np.ndarray:
    """Spectral norms of B_1 .. B_{h_max}; entries are inf past overflow."""
    if h_max < 1:
        raise DomainError(f"h_max must be at least 1, got {h_max!r}")
    A, A1 = build_companions(alpha, beta)
    B = np.eye(A.shape[0])
    out = np.full(h_max, np.inf)
    with np.errstate(all="ignore"):
        for k in range(h_max):
            B = A.T @ B @ A + 5.0 * (A1.T @ B @ A1)
            if not np.all(np.isfinite(B)):
                break
            out[k] = _psd_norm(B)
            if out[k] > _HUGE:
                break
    return out


def mean_companion(phi) -> np.ndarray:
    """Companion matrix of the mean autoregression coefficients."""
    phi = np.asarray(phi, dtype=float)
    p = phi.size
    if p == 0:
        return np.zeros((0, 0))
    Phi = np.zeros((p, p))
    Phi[0, :] = phi
    if p > 1:
        idx = np.arange(p - 1)
        Phi[idx + 1, idx] = 1.0
    return Phi


def _ar_roots_stable(phi) -> bool:
    Phi = mean_companion(phi)
    if Phi.size == 0:
        return True
    return bool(np.max(np.abs(np.linalg.eigvals(Phi))) < 1.0)


def check_stationarity(
    family: Family,
    orders: Orders,
    theta: ParamVector,
    h_max: int = 64,
) -> StationarityReport:
    """Evaluate the family's sufficient stationarity condition at ``theta``."""
    validate_model(family, orders, theta, need_gamma=False)
    if h_max < 1:
        raise DomainError(f"h_max must be at least 1, got {h_max!r}")

    if family.tag == "ghsst":
        return StationarityReport(
            family=family.tag,
            status="theory_unavailable",
            h=None,
            bk_norm=None,
            mean_ok=None,
            h_max=h_max,
            details="no sufficient condition is available for this family",
        )

    mean_ok = _ar_roots_stable(theta.phi)

    if not family.variance_driven:
        return StationarityReport(
            family=family.tag,
            status="satisfied" if mean_ok else "not_satisfied",
            h=None,
            bk_norm=None,
            mean_ok=mean_ok,
            h_max=h_max,
            details="mean recursion root check only; no variance recursion",
        )

    norms = bk_norms(theta.alpha, theta.beta, h_max)

    if family.tag == "logit_beta":
        Phi = mean_companion(theta.phi)
        Phi_pow = np.eye(Phi.shape[0]) if Phi.size else None
        for k in range(h_max):
            if Phi_pow is not None:
                Phi_pow = Phi_pow @ Phi
                mean_norm = float(np.linalg.norm(Phi_pow, 2)) if Phi_pow.size else 0.0
            else:
                mean_norm = 0.0
            if norms[k] < 1.0 and mean_norm < 1.0:
                return StationarityReport(
                    family=family.tag,
                    status="satisfied",
                    h=k + 1,
                    bk_norm=float(norms[k]),
                    mean_ok=mean_ok,
                    h_max=h_max,
                    details=(
                        f"joint contraction at horizon {k + 1}: "
                        f"variance norm {norms[k]:.6g}, mean norm {mean_norm:.6g}"
                    ),
                )
        best = float(np.min(norms))
        return StationarityReport(
            family=family.tag,
            status="not_satisfied",
            h=None,
            bk_norm=best,
            mean_ok=mean_ok,
            h_max=h_max,
            details=(
                f"no joint contraction up to horizon {h_max} "
                f"(smallest variance norm {best:.6g}); sufficient condition only"
            ),
        )

    # log-link: variance contraction at any horizon plus stable mean roots
    hits = np.nonzero(norms < 1.0)[0]
    if hits.size and mean_ok:
        k = int(hits[0])
        return StationarityReport(
            family=family.tag,
            status="satisfied",
            h=k + 1,
            bk_norm=float(norms[k]),
            mean_ok=True,
            h_max=h_max,
            details=f"variance contraction at horizon {k + 1}: norm {norms[k]:.6g}",
        )
    best = float(np.min(norms))
    reason = []
    if not hits.size:
        reason.append(
            f"no variance contraction up to horizon {h_max} "
            f"(smallest norm {best:.6g})"
        )
    if not mean_ok:
        reason.append("mean autoregression has a root on or inside the unit circle")
    return StationarityReport(
        family=family.tag,
        status="not_satisfied",
        h=None,
        bk_norm=best,
        mean_ok=mean_ok,
        h_max=h_max,
        details="; ".join(reason) + "; sufficient condition only",
    )
