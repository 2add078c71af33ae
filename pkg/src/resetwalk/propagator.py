"""Occupation-probability propagators of the walk with resetting.

Two independent computation channels are provided and cross-checked in the
test suite: a time-stepped renewal recursion (``propagate``) and a spectral
canonical form (``propagate_spectral``).  The renewal channel exploits that
the relocation matrix has identical rows, so its contribution is rank one
and only a history of row vectors needs to be convolved.

Steady states: finite-mean laws admit a non-equilibrium steady state (NESS)
computed either by a direct linear solve (geometric intervals) or by a
finite sum over the support (bounded-support laws); infinite-mean laws have
no NESS and relax to the reset-free equilibrium instead, which ``ness``
reports through its existence flag.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .graphs import Graph, GraphValidationError
from .renewal import (
    DeterministicPeriod,
    FiniteSupport,
    Geometric,
    ResetLaw,
    Sibuya,
)

__all__ = [
    "SpectralData",
    "RelocationVector",
    "PropagatorSeries",
    "SteadyState",
    "spectral_decompose",
    "stationary_distribution",
    "propagate",
    "propagate_spectral",
    "ness",
    "bernoulli_propagator",
    "periodic_propagator",
]

# Row sums are renormalized whenever they drift further than this from 1.
_ROW_DRIFT_TOL = 1e-13
_SPECTRAL_GAP_TOL = 1e-10


@dataclass(frozen=True)
class SpectralData:
    """Biorthonormal eigensystem of the one-step transition matrix.

    ``eigenvalues`` are sorted descending with the Perron root 1 first;
    ``right_vectors`` holds right eigenvectors as columns, ``left_vectors``
    the matching left eigenvectors as rows, normalized so that
    left @ right = identity.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray

    @property
    def stationary(self) -> np.ndarray:
        """Equilibrium row of the reset-free walk (Perron projector row)."""
        return self.right_vectors[0, 0] * self.left_vectors[0]


@dataclass(frozen=True)
class RelocationVector:
    """Probability row of relocation targets; rows of the (rank-one)
    relocation matrix are all equal to this vector."""

    probabilities: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.probabilities, dtype=float).copy()
        if r.ndim != 1 or r.size < 1:
            raise ValueError("relocation vector must be 1-d and non-empty")
        if np.any(r < 0):
            raise ValueError("relocation probabilities must be non-negative")
        if abs(r.sum() - 1.0) > 1e-12:
            raise ValueError("relocation probabilities must sum to 1 within 1e-12")
        r.setflags(write=False)
        object.__setattr__(self, "probabilities", r)

    @property
    def n(self) -> int:
        return self.probabilities.size

    @property
    def support(self) -> np.ndarray:
        """Indices of the r-nodes (strictly positive probability)."""
        return np.flatnonzero(self.probabilities > 0.0)

    def as_matrix(self) -> np.ndarray:
        return np.tile(self.probabilities, (self.n, 1))

    @classmethod
    def uniform(cls, n: int, nodes=None) -> "RelocationVector":
        r = np.zeros(n)
        idx = np.arange(n) if nodes is None else np.asarray(sorted(set(nodes)))
        r[idx] = 1.0 / idx.size
        return cls(r)

    @classmethod
    def degree_proportional(cls, g: Graph, nodes=None) -> "RelocationVector":
        r = np.zeros(g.n, dtype=float)
        idx = np.arange(g.n) if nodes is None else np.asarray(sorted(set(nodes)))
        r[idx] = g.degrees[idx]
        return cls(r / r.sum())

    @classmethod
    def single(cls, node: int, n: int) -> "RelocationVector":
        r = np.zeros(n)
        r[node] = 1.0
        return cls(r)


@dataclass(frozen=True)
class PropagatorSeries:
    """Occupation matrices P(0..t_max) plus the law/relocation that made them."""

    matrices: np.ndarray  # shape (t_max + 1, n, n)
    law: ResetLaw
    relocation: RelocationVector

    @property
    def t_max(self) -> int:
        return self.matrices.shape[0] - 1

    def at(self, t: int) -> np.ndarray:
        return self.matrices[t]


@dataclass(frozen=True)
class SteadyState:
    """Infinite-time occupation row; ``exists`` is False when the law has
    infinite mean and the row is merely the reset-free equilibrium."""

    distribution: np.ndarray
    exists: bool


# ---------------------------------------------------------------------------
# spectral machinery
# ---------------------------------------------------------------------------

def spectral_decompose(w: np.ndarray, g: Graph) -> SpectralData:
    """Eigensystem of W via the degree-symmetrized similar matrix.

    D^(1/2) W D^(-1/2) is symmetric, so the spectrum is real and the
    transformed eigenvectors are biorthonormal by construction, degenerate
    eigenvalues included.
    """
    sqrt_deg = np.sqrt(g.degrees.astype(float))
    sym = (w * sqrt_deg[:, None]) / sqrt_deg[None, :]
    sym = 0.5 * (sym + sym.T)  # scrub asymmetric rounding noise
    eigvals, vecs = np.linalg.eigh(sym)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    vecs = vecs[:, order]
    subdominant = max(abs(eigvals[1]), abs(eigvals[-1]))
    if abs(eigvals[0] - 1.0) > 1e-10 or subdominant > 1.0 - _SPECTRAL_GAP_TOL:
        raise GraphValidationError(
            "Perron eigenvalue is not simple within 1e-10: graph is effectively "
            "disconnected or bipartite"
        )
    # Fix the Perron column sign so the stationary row comes out positive.
    if vecs[0, 0] < 0:
        vecs[:, 0] = -vecs[:, 0]
    right = vecs / sqrt_deg[:, None]
    left = vecs.T * sqrt_deg[None, :]
    return SpectralData(eigenvalues=eigvals, right_vectors=right, left_vectors=left)


def stationary_distribution(w: np.ndarray) -> np.ndarray:
    """Left Perron row of a row-stochastic matrix via a bordered solve."""
    n = w.shape[0]
    a = (np.eye(n) - w).T
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    return scipy.linalg.solve(a, b)


# ---------------------------------------------------------------------------
# matrix-power helpers with stochasticity guard
# ---------------------------------------------------------------------------

def _renormalize_rows(m: np.ndarray) -> np.ndarray:
    np.clip(m, 0.0, None, out=m)
    sums = m.sum(axis=1)
    if np.max(np.abs(sums - 1.0)) > _ROW_DRIFT_TOL:
        m /= sums[:, None]
    return m


def _stochastic_power(m: np.ndarray, t: int) -> np.ndarray:
    """m^t by repeated squaring, renormalizing rows when drift accumulates."""
    result = np.eye(m.shape[0])
    base = m.copy()
    while t > 0:
        if t & 1:
            result = _renormalize_rows(result @ base)
        base = _renormalize_rows(base @ base)
        t >>= 1
    return result


# ---------------------------------------------------------------------------
# propagator channels
# ---------------------------------------------------------------------------

def propagate(
    w: np.ndarray, rel: RelocationVector, law: ResetLaw, t_max: int
) -> PropagatorSeries:
    """Renewal-recursion channel.

    P(t) = persistence(t) W^t + sum_k pdf(k) R . P(t-k); the relocation term
    has identical rows, so only the row history r @ P(t) is convolved.
    """
    if t_max < 0:
        raise ValueError("t_max must be >= 0")
    n = w.shape[0]
    r = rel.probabilities
    pdf = law.pdf_table(t_max)
    pers = law.persistence_table(t_max)
    out = np.empty((t_max + 1, n, n))
    out[0] = np.eye(n)
    rho = np.empty((t_max + 1, n))
    rho[0] = r
    wt = np.eye(n)
    for t in range(1, t_max + 1):
        wt = _renormalize_rows(wt @ w)
        conv = pdf[1 : t + 1] @ rho[t - 1 :: -1][:t]
        out[t] = pers[t] * wt + conv[None, :]
        _renormalize_rows(out[t])
        rho[t] = r @ out[t]
    return PropagatorSeries(matrices=out, law=law, relocation=rel)


def _recurrence_gf_at(law: ResetLaw, t: int, values: np.ndarray) -> np.ndarray:
    """Backward-recurrence GF fbar(t, v) evaluated at a vector of v's by the
    finite sum over delays b <= t."""
    pers = law.persistence_table(t)
    rate = law.resetting_rate_table(t)
    powers = values[None, :] ** np.arange(t + 1)[:, None]  # (t+1, m)
    weights = rate[t::-1] * pers[: t + 1]  # rate(t-b) pers(b) against v^b
    return pers[t] * powers[t] + weights @ powers


def propagate_spectral(
    spec: SpectralData, rel: RelocationVector, law: ResetLaw, t: int
) -> np.ndarray:
    """Spectral canonical-form channel: stationary term, starting-node decay
    term, and relocation-averaged recurrence term."""
    if t < 0:
        raise ValueError("t must be >= 0")
    lam = spec.eigenvalues[1:]
    right = spec.right_vectors[:, 1:]
    left = spec.left_vectors[1:, :]
    pers_t = law.persistence(t)
    decay = pers_t * lam**t
    fbar = _recurrence_gf_at(law, t, lam)
    reloc_weight = rel.probabilities @ right  # averages <r|phi_m> over R
    n = spec.eigenvalues.size
    stationary = np.tile(spec.stationary, (n, 1))
    start_term = (right * decay[None, :]) @ left
    reloc_term = np.outer(np.ones(n), ((fbar - decay) * reloc_weight) @ left)
    return stationary + start_term + reloc_term


def ness(
    w: np.ndarray,
    rel: RelocationVector,
    law: ResetLaw,
    *,
    stationary: np.ndarray | None = None,
) -> SteadyState:
    """Infinite-time occupation row.

    Geometric intervals: direct solve of p r (1 - q W)^(-1).  Bounded
    support: the stationary mix (1/mean) r sum_k pdf(k) sum_(j<k) W^j,
    which for a deterministic period is the time average over one period.
    Infinite mean: no NESS; the reset-free equilibrium is returned with
    ``exists=False``.
    """
    n = w.shape[0]
    if math.isinf(law.mean_interval):
        row = stationary_distribution(w) if stationary is None else np.asarray(stationary)
        return SteadyState(distribution=row, exists=False)
    if isinstance(law, Geometric):
        rhs = law.p * rel.probabilities
        row = scipy.linalg.solve((np.eye(n) - law.q * w).T, rhs)
        return SteadyState(distribution=row, exists=True)
    horizon = law.support_horizon
    if horizon is None:
        raise NotImplementedError(
            "finite-mean laws must be geometric or have bounded support"
        )
    pdf = law.pdf_table(horizon)
    row_power = rel.probabilities.copy()  # r @ W^j, starting at j = 0
    acc = np.zeros(n)
    cumulative = np.zeros(n)
    for k in range(1, horizon + 1):
        cumulative = cumulative + row_power  # sum_{j<k} r @ W^j
        acc = acc + pdf[k] * cumulative
        row_power = row_power @ w
    return SteadyState(distribution=acc / law.mean_interval, exists=True)


def bernoulli_propagator(
    w: np.ndarray, rel: RelocationVector, p: float, t: int
) -> np.ndarray:
    """(q W + p R)^t by repeated squaring; geometric resetting is the one
    law whose walk-with-resets is itself a Markov chain."""
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    if t < 0:
        raise ValueError("t must be >= 0")
    one_step = (1.0 - p) * w + p * rel.as_matrix()
    return _stochastic_power(one_step, t)


def periodic_propagator(
    w: np.ndarray, rel: RelocationVector, period: int, t: int
) -> np.ndarray:
    """Deterministic resetting every ``period`` steps: W^t before the first
    reset, then rank-one rows r W^(t mod period); no steady state exists."""
    if period < 1:
        raise ValueError("period must be >= 1")
    if t < 0:
        raise ValueError("t must be >= 0")
    if t < period:
        return _stochastic_power(w, t)
    row = rel.probabilities @ _stochastic_power(w, t % period)
    return np.tile(row, (w.shape[0], 1))
