"""First-passage analytics for geometrically reset walks.

Everything here reduces to linear solves with (1 - q W): no
eigendecomposition is required for the production paths.  The reset-free
limit p -> 0 makes (1 - W) singular; callers should use the documented
proxy rate ``ZERO_RATE_PROXY`` instead, exactly as the numerical
experiments behind these formulas do.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .propagator import RelocationVector, SpectralData, ness, stationary_distribution
from .renewal import Geometric

__all__ = [
    "ZERO_RATE_PROXY",
    "s_matrix",
    "mfpt_matrix",
    "kemeny",
    "mean_relaxation",
    "optimal_reset_rate",
]

# Documented stand-in for the singular p = 0 limit.
ZERO_RATE_PROXY = 1e-9

# A steady-state entry at or below this threshold marks an unreachable
# target (infinite mean first passage time).
_UNREACHABLE = 1e-14


def _fundamental(w: np.ndarray, p: float) -> np.ndarray:
    """(1 - q W)^(-1) via LU with partial pivoting."""
    n = w.shape[0]
    return scipy.linalg.solve(np.eye(n) - (1.0 - p) * w, np.eye(n))


def s_matrix(w: np.ndarray, stationary: np.ndarray, p: float) -> np.ndarray:
    """S(p) = (1 - q W)^(-1) - (1/p) * (Perron projector); rows sum to 0."""
    if p == 0.0:
        raise ValueError(
            "p = 0 makes 1 - W singular; approach the reset-free limit with "
            f"p = {ZERO_RATE_PROXY} (ZERO_RATE_PROXY) instead"
        )
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    return _fundamental(w, p) - np.tile(np.asarray(stationary) / p, (w.shape[0], 1))


def mfpt_matrix(
    w: np.ndarray,
    rel: RelocationVector,
    p: float,
    *,
    stationary: np.ndarray | None = None,
) -> np.ndarray:
    """Mean first passage times (i -> j) under geometric resetting.

    T[i, j] = (delta_ij + S[j, j] - S[i, j]) / ness_j, evaluated through the
    all-ones/diagonal matrix identity.  Targets with vanishing steady-state
    weight are unreachable and reported as inf.
    """
    if stationary is None:
        stationary = stationary_distribution(w)
    s = s_matrix(w, stationary, p)
    steady = ness(w, rel, Geometric(p), stationary=stationary).distribution
    n = w.shape[0]
    numer = np.eye(n) + np.tile(np.diag(s), (n, 1)) - s
    out = np.full((n, n), np.inf)
    reachable = steady > _UNREACHABLE
    out[:, reachable] = numer[:, reachable] / steady[reachable][None, :]
    return out


def kemeny(
    w: np.ndarray, p: float, *, spectral: SpectralData | None = None
) -> tuple[float, float]:
    """Kemeny constant K(p) and search efficiency E(p) = N / K(p).

    For p > 0, K(p) = trace S(p) = trace (1 - q W)^(-1) - 1/p (the Perron
    projector has unit trace).  The reset-free value p = 0 needs the
    spectrum: K(0) = sum_(m>=2) 1 / (1 - lambda_m).  Do not evaluate the
    trace route at the tiny proxy rate: the solve turns ill-conditioned as
    p -> 0 and its error does not cancel in the trace (it does in MFPT
    differences); use the spectral form instead.
    """
    n = w.shape[0]
    if p == 0.0:
        if spectral is None:
            raise ValueError("p = 0 requires spectral data (spectral sum form)")
        k = float(np.sum(1.0 / (1.0 - spectral.eigenvalues[1:])))
    else:
        if not 0.0 < p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        k = float(np.trace(_fundamental(w, p))) - 1.0 / p
    return k, n / k


def mean_relaxation(
    w: np.ndarray, rel: RelocationVector, p: float
) -> tuple[np.ndarray, float]:
    """Per-node mean relaxation times and their network average.

    T_i = [(1 - q W - p R) (1 - q W)^(-2)]_ii; the average equals K(p)/N
    independently of the relocation vector, which is verified here as an
    internal consistency check.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    n = w.shape[0]
    fundamental = _fundamental(w, p)
    core = np.eye(n) - (1.0 - p) * w - p * rel.as_matrix()
    per_node = np.diag(core @ fundamental @ fundamental).copy()
    global_mean = float(per_node.mean())
    k, _ = kemeny(w, p)
    if abs(global_mean - k / n) > 1e-8 * max(1.0, abs(k / n)):
        raise ArithmeticError(
            "mean relaxation time disagrees with Kemeny constant / N: "
            f"{global_mean} vs {k / n}"
        )
    return per_node, global_mean


def optimal_reset_rate(spectral: SpectralData, tol: float = 1e-10) -> float | None:
    """Unique minimizer of the convex K(p) on (0, 1), or None when K is
    monotone increasing (K'(0) >= 0, e.g. complete graphs)."""
    lam = spectral.eigenvalues[1:]

    def derivative(p: float) -> float:
        return float(-np.sum(lam / (1.0 + (p - 1.0) * lam) ** 2))

    if derivative(0.0) >= 0.0:
        return None
    lo, hi = 0.0, 1.0  # derivative(1) = -sum(lam) = 1 > 0 always
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if derivative(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
