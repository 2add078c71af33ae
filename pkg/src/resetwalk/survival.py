"""First-hitting statistics through the killed auxiliary walk.

Killing the walker on arrival at a target node defines a defective
propagator whose row sums are survival probabilities; differencing them in
time gives the first-hitting-time PDF, and the generating function at u = 1
gives mean first hitting times for arbitrary renewal resetting laws.

The reset-coupling operator g(W_killed) . R_killed is rank one (all rows of
the relocation matrix coincide), so the linear algebra collapses to vector
series in the killed matrix plus a Sherman-Morrison correction; spectral
radii of rank-one products are read off as the single nonzero eigenvalue.
"""
from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .propagator import RelocationVector
from .renewal import ResetLaw

__all__ = [
    "KilledSystem",
    "HittingStats",
    "MfhtResult",
    "HittingProbability",
    "ErgodicityReport",
    "SeriesTruncationError",
    "kill",
    "survival_series",
    "survival_propagator",
    "mfht",
    "hitting_probability",
    "ergodicity_check",
    "moments",
    "sibuya_mfht_regularized",
]

# Relative term-size threshold for series truncation and the hard safety cap.
_SERIES_RTOL = 1e-14
_SERIES_CAP = 1_000_000
# rho(g(W_killed) . R_killed) closer to 1 than this means no finite MFHT.
_ERGODIC_TOL = 1e-8


class SeriesTruncationError(RuntimeError):
    """A matrix/vector series failed to converge within the hard term cap."""


@dataclass(frozen=True)
class KilledSystem:
    """Defective transition and relocation data for a target set.

    ``w_killed`` zeroes the target columns of the walk matrix, ``r_killed``
    zeroes the target entries of the relocation row (a reset into a target
    kills the walker too).  ``row_defects`` are the killed row sums;
    ``spectral_radius`` is rho(w_killed) < 1.  The unkilled inputs are kept
    for the ergodicity-condition scans.
    """

    w_killed: np.ndarray
    r_killed: np.ndarray
    targets: tuple[int, ...]
    row_defects: np.ndarray
    spectral_radius: float
    w_full: np.ndarray
    relocation: RelocationVector

    @property
    def n(self) -> int:
        return self.w_killed.shape[0]


@dataclass(frozen=True)
class HittingStats:
    """Survival probabilities and first-hitting PDF per start node, indexed
    [start, t] for t = 0..t_max."""

    survival: np.ndarray
    fht_pdf: np.ndarray

    @property
    def t_max(self) -> int:
        return self.survival.shape[1] - 1


@dataclass(frozen=True)
class MfhtResult:
    per_start: np.ndarray
    global_mean: float
    spectral_radius: float  # of the rank-one reset-coupling operator

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.per_start)))


@dataclass(frozen=True)
class HittingProbability:
    values: np.ndarray
    regime: str  # ergodic | trapped | plateau | inconclusive


@dataclass(frozen=True)
class ErgodicityReport:
    classification: str  # ergodic-sufficient | non-ergodic-hallmark | inconclusive
    spectral_radius: float
    interval_matrix_positive: bool  # g(W) > 0: full exploration between resets
    relocation_positive: bool  # R > 0: every node is a relocation target
    coupled_positive: bool  # R . g(W) > 0: full exploration after one reset


def _power_iteration_radius(
    m: np.ndarray, tol: float = 1e-12, max_iter: int = 100_000
) -> float:
    """Spectral radius of a non-negative matrix by power iteration.

    Iterates on m + 1 so the Perron root is strictly dominant in modulus
    even when peripheral eigenvalues tie, then shifts back.
    """
    n = m.shape[0]
    shifted = m + np.eye(n)
    x = np.full(n, 1.0 / math.sqrt(n))
    estimate = 1.0
    for _ in range(max_iter):
        y = shifted @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        estimate = float(x @ y)  # Rayleigh-style dominant-eigenvalue estimate
        x = y / norm
        residual = np.linalg.norm(shifted @ x - estimate * x)
        if residual < tol * max(1.0, abs(estimate)):
            break
    return estimate - 1.0


def kill(w: np.ndarray, rel: RelocationVector, targets) -> KilledSystem:
    """Zero the target columns of the walk and relocation of the targets."""
    target_tuple = tuple(sorted(set(int(t) for t in targets)))
    n = w.shape[0]
    if not target_tuple:
        raise ValueError("target set must be non-empty")
    if len(target_tuple) >= n:
        raise ValueError("target set must be a proper subset of the nodes")
    if target_tuple[0] < 0 or target_tuple[-1] >= n:
        raise ValueError("target ids out of range")
    keep = np.ones(n)
    keep[list(target_tuple)] = 0.0
    w_killed = w * keep[None, :]
    r_killed = rel.probabilities * keep
    return KilledSystem(
        w_killed=w_killed,
        r_killed=r_killed,
        targets=target_tuple,
        row_defects=w_killed.sum(axis=1),
        spectral_radius=_power_iteration_radius(np.abs(w_killed)),
        w_full=w,
        relocation=rel,
    )


# ---------------------------------------------------------------------------
# series engines
# ---------------------------------------------------------------------------

def _row_sum_series(ks: KilledSystem, law: ResetLaw, u: float = 1.0):
    """Column vectors g = sum_t pdf(t) u^t Wk^(t-1) 1 and
    m = sum_t persistence(t) u^t Wk^t 1, by geometrically convergent series.

    Bounded-support laws are summed exactly over their support.
    """
    wk = ks.w_killed
    n = ks.n
    horizon = law.support_horizon
    d = np.ones(n)  # Wk^(t-1) @ 1 going into step t
    g = np.zeros(n)
    m = np.ones(n)  # persistence(0) * Wk^0 @ 1
    chunk = 256
    pdf = law.pdf_table(chunk)
    pers = law.persistence_table(chunk)
    t = 1
    ut = 1.0
    while True:
        if horizon is not None and t > horizon:
            break
        if t >= pdf.size:
            chunk *= 2
            pdf = law.pdf_table(chunk)
            pers = law.persistence_table(chunk)
        ut *= u
        g += pdf[t] * ut * d
        d = wk @ d
        m += pers[t] * ut * d
        if horizon is None and t >= 8:
            scale_g = max(np.max(np.abs(g)), 1e-300)
            scale_m = max(np.max(np.abs(m)), 1e-300)
            dmax = np.max(d) * ut
            if pdf[t] * dmax < _SERIES_RTOL * scale_g and pers[t] * dmax < _SERIES_RTOL * scale_m:
                break
        if t >= _SERIES_CAP:
            raise SeriesTruncationError(f"series did not converge in {_SERIES_CAP} terms")
        t += 1
    return g, m


def _interval_matrix_series(w: np.ndarray, law: ResetLaw):
    """Full matrix g(w) = sum_t pdf(t) w^(t-1) (used by the positivity scans)."""
    n = w.shape[0]
    horizon = law.support_horizon
    power = np.eye(n)
    acc = np.zeros((n, n))
    chunk = 256
    pdf = law.pdf_table(chunk)
    t = 1
    while True:
        if horizon is not None and t > horizon:
            break
        if t >= pdf.size:
            chunk *= 2
            pdf = law.pdf_table(chunk)
        acc += pdf[t] * power
        if horizon is None and t >= 8:
            if np.min(acc) > 0.0:
                break  # further non-negative terms cannot destroy positivity
            if pdf[t] * np.max(power) < _SERIES_RTOL * max(np.max(acc), 1e-300):
                break
        if t >= _SERIES_CAP:
            raise SeriesTruncationError(f"series did not converge in {_SERIES_CAP} terms")
        power = power @ w
        t += 1
    return acc


# ---------------------------------------------------------------------------
# survival curves
# ---------------------------------------------------------------------------

def survival_series(ks: KilledSystem, law: ResetLaw, t_max: int) -> HittingStats:
    """Survival probabilities and FHT PDF up to ``t_max``.

    Uses the renewal recursion of the killed propagator contracted to row
    sums: only the no-reset survival vectors d(t) = Wk^t 1 and the scalar
    history r_killed . survival(t) enter.
    """
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    n = ks.n
    pdf = law.pdf_table(t_max)
    pers = law.persistence_table(t_max)
    d = np.empty((t_max + 1, n))
    d[0] = 1.0
    for t in range(1, t_max + 1):
        d[t] = ks.w_killed @ d[t - 1]
    survival = np.empty((n, t_max + 1))
    survival[:, 0] = 1.0
    s_hist = np.empty(t_max + 1)
    s_hist[0] = float(ks.r_killed @ survival[:, 0])
    for t in range(1, t_max + 1):
        weights = pdf[1 : t + 1] * s_hist[t - 1 :: -1][:t]
        lam = pers[t] * d[t] + weights @ d[0:t]
        survival[:, t] = lam
        s_hist[t] = float(ks.r_killed @ lam)
    fht = np.zeros_like(survival)
    fht[:, 1:] = survival[:, :-1] - survival[:, 1:]
    return HittingStats(survival=survival, fht_pdf=fht)


def survival_propagator(ks: KilledSystem, law: ResetLaw, t_max: int) -> np.ndarray:
    """Full killed propagator matrices P(0..t_max) (defective rows).

    P(t) = persistence(t) Wk^t + sum_k pdf(k) Wk^(k-1) Rk P(t-k), with the
    relocation factor reduced to its row r_killed . P(t-k).
    """
    return _awr_recursion(ks.w_killed, ks.r_killed, law, t_max)


def _awr_recursion(
    wk: np.ndarray, rk_row: np.ndarray, law: ResetLaw, t_max: int
) -> np.ndarray:
    if t_max < 0:
        raise ValueError("t_max must be >= 0")
    n = wk.shape[0]
    pdf = law.pdf_table(t_max)
    pers = law.persistence_table(t_max)
    d = np.empty((max(t_max, 1), n))
    d[0] = 1.0
    for j in range(1, t_max):
        d[j] = wk @ d[j - 1]
    out = np.empty((t_max + 1, n, n))
    out[0] = np.eye(n)
    sigma = np.empty((t_max + 1, n))
    sigma[0] = rk_row
    power = np.eye(n)
    for t in range(1, t_max + 1):
        power = power @ wk
        scaled = pdf[1 : t + 1, None] * d[0:t]  # pdf(k) Wk^(k-1) 1
        out[t] = pers[t] * power + scaled.T @ sigma[t - 1 :: -1][:t]
        sigma[t] = rk_row @ out[t]
    return out


# ---------------------------------------------------------------------------
# mean first hitting times and regimes
# ---------------------------------------------------------------------------

def mfht(ks: KilledSystem, law: ResetLaw) -> MfhtResult:
    """Per-start mean first hitting times and their network average.

    The generating function of the killed propagator at u = 1 collapses to
    m + g (r_killed . m) / (1 - rho) with rho = r_killed . g; rho within
    ``_ERGODIC_TOL`` of 1 means the walker can avoid the targets forever and
    every MFHT is infinite.
    """
    g, m = _row_sum_series(ks, law)
    rho = float(ks.r_killed @ g)
    if rho >= 1.0 - _ERGODIC_TOL:
        per_start = np.full(ks.n, np.inf)
        return MfhtResult(per_start=per_start, global_mean=np.inf, spectral_radius=rho)
    per_start = m + g * (float(ks.r_killed @ m) / (1.0 - rho))
    return MfhtResult(
        per_start=per_start,
        global_mean=float(per_start.mean()),
        spectral_radius=rho,
    )


def _distance_from_support(ks: KilledSystem) -> int:
    """BFS distance from the relocation support to the nearest target."""
    adjacency = ks.w_full > 0.0
    dist = np.full(ks.n, -1)
    queue = deque()
    for s in ks.relocation.support:
        dist[s] = 0
        queue.append(int(s))
    targets = set(ks.targets)
    while queue:
        u = queue.popleft()
        if u in targets:
            return int(dist[u])
        for v in np.flatnonzero(adjacency[u]):
            if dist[v] == -1:
                dist[v] = dist[u] + 1
                queue.append(int(v))
    return ks.n  # unreachable from the support

def hitting_probability(
    ks: KilledSystem, law: ResetLaw, t_plateau: int
) -> HittingProbability:
    """Probability of ever hitting the target set, per start node.

    Ergodic regime: 1 for every start.  Bounded-support laws whose
    relocation support lies farther than the support horizon from every
    target (BFS-verified) trap the walker after the first reset: the
    survival plateau is the row sum of g(w_killed), so the hitting
    probability is its complement.  Otherwise the survival curve at
    ``t_plateau`` is used, provided it is constant over the trailing window.
    """
    if t_plateau < 1:
        raise ValueError("t_plateau must be >= 1")
    g, _ = _row_sum_series(ks, law)
    rho = float(ks.r_killed @ g)
    if rho < 1.0 - _ERGODIC_TOL:
        return HittingProbability(values=np.ones(ks.n), regime="ergodic")
    horizon = law.support_horizon
    if horizon is not None and _distance_from_support(ks) > horizon:
        return HittingProbability(values=1.0 - g, regime="trapped")
    stats = survival_series(ks, law, t_plateau)
    window = stats.survival[:, -min(t_plateau, max(horizon or 0, 50)) :]
    spread = np.max(window, axis=1) - np.min(window, axis=1)
    values = 1.0 - stats.survival[:, -1]
    if np.max(spread) <= 1e-9:
        return HittingProbability(values=values, regime="plateau")
    return HittingProbability(values=values, regime="inconclusive")


def ergodicity_check(ks: KilledSystem, law: ResetLaw) -> ErgodicityReport:
    """Classify the reset-coupling spectral radius and scan the three
    sufficient positivity conditions on the unkilled system."""
    try:
        g, _ = _row_sum_series(ks, law)
        rho = float(ks.r_killed @ g)
    except SeriesTruncationError:
        return ErgodicityReport(
            classification="inconclusive",
            spectral_radius=math.nan,
            interval_matrix_positive=False,
            relocation_positive=False,
            coupled_positive=False,
        )
    interval_matrix = _interval_matrix_series(ks.w_full, law)
    r = ks.relocation.probabilities
    cond_a = bool(np.min(interval_matrix) > 0.0)
    cond_b = bool(np.min(r) > 0.0)
    cond_c = bool(np.min(r @ interval_matrix) > 0.0)
    classification = (
        "ergodic-sufficient" if rho < 1.0 - _ERGODIC_TOL else "non-ergodic-hallmark"
    )
    return ErgodicityReport(
        classification=classification,
        spectral_radius=rho,
        interval_matrix_positive=cond_a,
        relocation_positive=cond_b,
        coupled_positive=cond_c,
    )


# ---------------------------------------------------------------------------
# FHT moments
# ---------------------------------------------------------------------------

# Central finite-difference stencils of 4th-order accuracy, per derivative
# order: (offsets, coefficients).
_STENCILS = {
    1: ((-2, -1, 1, 2), (1 / 12, -2 / 3, 2 / 3, -1 / 12)),
    2: ((-2, -1, 0, 1, 2), (-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12)),
    3: ((-3, -2, -1, 1, 2, 3), (1 / 8, -1.0, 13 / 8, -13 / 8, 1.0, -1 / 8)),
    4: ((-3, -2, -1, 0, 1, 2, 3), (-1 / 6, 2.0, -13 / 2, 28 / 3, -13 / 2, 2.0, -1 / 6)),
}


def _fht_gf_rows(ks: KilledSystem, law: ResetLaw, u: float) -> np.ndarray:
    """chi_i(u) = 1 - (1 - u) Lambda_i(u) via the row-sum series."""
    g, m = _row_sum_series(ks, law, u=u)
    rho = float(ks.r_killed @ g)
    if rho >= 1.0 - 1e-10:
        raise SeriesTruncationError("generating function evaluated at a"
                                    " point where the reset coupling is singular")
    lam = m + g * (float(ks.r_killed @ m) / (1.0 - rho))
    return 1.0 - (1.0 - u) * lam


def moments(ks: KilledSystem, law: ResetLaw, order: int) -> np.ndarray:
    """m-th moment of the first hitting time per start node, m <= 4.

    Differentiates the FHT generating function numerically at u = e^(-s),
    s -> 0, with a 4th-order central stencil; the step is scaled to the
    mean hitting time and shrunk until every stencil point keeps the
    series convergent.  Infinite in the non-ergodic regime.
    """
    if not 1 <= order <= 4:
        raise ValueError("moment order must lie in 1..4")
    base = mfht(ks, law)
    if not base.finite:
        return np.full(ks.n, np.inf)
    # base only sets the step scale; order 1 is still computed by the stencil
    scale = float(np.max(base.per_start))
    h = min(0.005, 0.01 / max(scale, 1.0))
    offsets, coeffs = _STENCILS[order]
    for _ in range(60):
        try:
            values = [_fht_gf_rows(ks, law, math.exp(-k * h)) for k in offsets]
            break
        except SeriesTruncationError:
            h *= 0.5
    else:
        raise SeriesTruncationError("no stable step size for the moment stencil")
    stacked = np.stack(values)
    derivative = np.tensordot(np.asarray(coeffs), stacked, axes=1) / h**order
    return (-1.0) ** order * derivative


# ---------------------------------------------------------------------------
# heavy-tailed closed-form cross-check
# ---------------------------------------------------------------------------

def sibuya_mfht_regularized(
    ks: KilledSystem, alpha: float, eps: float = 1e-8
) -> np.ndarray:
    """MFHT from the closed generating function of the heavy-tailed law,
    with the interval matrix g(w_killed) formed through the regularized
    inverse Wk / (Wk^2 + eps^2).

    Cross-check channel only: the regularization injects an O(eps) bias on
    the invertible part of the killed matrix, and it drops the t = 1 series
    term on its nullspace entirely, so rows starting inside the target set
    are not reproduced.  The series path in ``mfht`` is the production
    route; compare this channel on non-target start nodes only.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    n = ks.n
    wk = ks.w_killed
    eye = np.eye(n)
    with warnings.catch_warnings():
        # near-singularity is the point of the eps-regularization
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        pseudo_inverse = wk @ scipy.linalg.solve(wk @ wk + eps**2 * eye, eye)
    frac = scipy.linalg.fractional_matrix_power(eye - wk, alpha)
    g_matrix = pseudo_inverse @ (eye - frac)
    coupling = g_matrix @ np.tile(ks.r_killed, (n, 1))
    tail = scipy.linalg.fractional_matrix_power(eye - wk, alpha - 1.0)
    solved = scipy.linalg.solve(eye - coupling, tail)
    return np.real_if_close(solved).real @ np.ones(n)
