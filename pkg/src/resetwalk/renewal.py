"""Discrete-time renewal laws for the inter-reset intervals.

Every law is a distribution of a positive integer waiting time (no mass at
zero), exposed through its PDF, generating function, persistence
probability (no event up to and including t), event rate, backward
recurrence statistics and an exact inverse-CDF sampler.

Heavy-tailed (Sibuya) quantities are evaluated with multiplicative
recursions rather than Gamma-function ratios: the latter overflow double
precision beyond t ~ 170, the recursions are stable for any horizon.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ResetLaw",
    "Geometric",
    "Sibuya",
    "FiniteSupport",
    "DeterministicPeriod",
    "DefectiveLimitError",
    "backward_recurrence_table",
    "state_probability_table",
]

# Largest interval the samplers will report.  A draw beyond this point is
# indistinguishable from "never" for any feasible simulation horizon.
SAMPLE_CAP = 2**62


class DefectiveLimitError(ValueError):
    """Stationary backward-recurrence limit requested for an infinite-mean
    law, where f(infinity, b) -> 0 for every finite b (defective limit)."""


class ResetLaw:
    """Common renewal machinery; concrete laws override the closed forms."""

    # -- law-specific surface (overridden) ---------------------------------

    def pdf(self, t: int) -> float:
        raise NotImplementedError

    def gf(self, u: float) -> float:
        """Generating function sum_t pdf(t) u^t for 0 <= u <= 1."""
        raise NotImplementedError

    @property
    def mean_interval(self) -> float:
        """Mean waiting time; math.inf for fat-tailed laws."""
        raise NotImplementedError

    def sample_interval(self, rng: np.random.Generator) -> int:
        """Exact inverse-CDF draw: min{t >= 1 : persistence(t) < U}."""
        u = max(rng.random(), 2.0**-53)
        return self._inverse_persistence(u)

    def _inverse_persistence(self, u: float) -> int:
        raise NotImplementedError

    # -- generic machinery --------------------------------------------------

    def persistence(self, t: int) -> float:
        """Probability of no event up to and including t."""
        if t < 0:
            raise ValueError("time index must be >= 0")
        return float(self.persistence_table(t)[t])

    def resetting_rate(self, t: int) -> float:
        """Probability that an event occurs exactly at time t."""
        if t < 0:
            raise ValueError("time index must be >= 0")
        return float(self.resetting_rate_table(t)[t])

    def pdf_table(self, t_max: int) -> np.ndarray:
        return np.array([self.pdf(t) for t in range(t_max + 1)])

    def persistence_table(self, t_max: int) -> np.ndarray:
        return 1.0 - np.cumsum(self.pdf_table(t_max))

    def resetting_rate_table(self, t_max: int) -> np.ndarray:
        # rate = pdf + pdf * rate (discrete renewal equation for the rate)
        pdf = self.pdf_table(t_max)
        rate = np.zeros(t_max + 1)
        for t in range(1, t_max + 1):
            rate[t] = pdf[t] + np.dot(pdf[1 : t + 1], rate[t - 1 :: -1][: t])
        return rate

    def backward_recurrence(self, t, b: int) -> float:
        """PDF f(t, b) of the delay since the last event at observation
        time t; pass t = math.inf for the stationary limit (finite-mean
        laws only)."""
        if b < 0:
            raise ValueError("delay must be >= 0")
        if t is math.inf or t == math.inf:
            mean = self.mean_interval
            if math.isinf(mean):
                raise DefectiveLimitError(
                    "f(infinity, b) -> 0 for every finite b: the stationary "
                    "backward-recurrence limit of an infinite-mean law is defective"
                )
            return self.persistence(b) / mean
        t = int(t)
        if b > t:
            return 0.0
        delta = 1.0 if t == b else 0.0
        return self.persistence(b) * (delta + self.resetting_rate(t - b))

    def state_probability(self, n: int, t: int) -> float:
        """Probability that exactly n events occurred up to and including t."""
        if n < 0 or t < 0:
            raise ValueError("indices must be >= 0")
        return float(state_probability_table(self, n, t)[n, t])

    def memory_kernel(self, t_max: int) -> np.ndarray:
        """Time-domain kernel K(0..t_max) with GF (1-u) gf(u) / (1 - gf(u)).

        The law is memoryless iff K(t) = 0 for all t > 1.
        """
        if t_max < 1:
            raise ValueError("t_max must be >= 1")
        pdf = self.pdf_table(t_max)
        numer = pdf.copy()
        numer[1:] -= pdf[:-1]  # (1 - u) gf(u)
        kernel = np.zeros(t_max + 1)
        for t in range(t_max + 1):
            acc = numer[t]
            # denominator is 1 - gf(u): leading coefficient 1, then -pdf
            acc += np.dot(pdf[1 : t + 1], kernel[t - 1 :: -1][: t])
            kernel[t] = acc
        return kernel

    def is_memoryless(self, t_max: int = 64, tol: float = 1e-12) -> bool:
        kernel = self.memory_kernel(t_max)
        return bool(np.all(np.abs(kernel[2:]) < tol))

    @property
    def support_horizon(self) -> int | None:
        """Largest possible interval, or None for unbounded laws."""
        return None


@dataclass(frozen=True)
class Geometric(ResetLaw):
    """Memoryless law pdf(t) = p q^(t-1); the event rate is the constant p."""

    p: float

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValueError("Geometric requires 0 < p <= 1")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    def pdf(self, t: int) -> float:
        if t < 1:
            return 0.0
        return self.p * self.q ** (t - 1)

    def gf(self, u: float) -> float:
        return self.p * u / (1.0 - self.q * u)

    @property
    def mean_interval(self) -> float:
        return 1.0 / self.p

    def persistence(self, t: int) -> float:
        if t < 0:
            raise ValueError("time index must be >= 0")
        return self.q**t

    def persistence_table(self, t_max: int) -> np.ndarray:
        return self.q ** np.arange(t_max + 1, dtype=float)

    def resetting_rate(self, t: int) -> float:
        if t < 0:
            raise ValueError("time index must be >= 0")
        return self.p if t >= 1 else 0.0

    def resetting_rate_table(self, t_max: int) -> np.ndarray:
        rate = np.full(t_max + 1, self.p)
        rate[0] = 0.0
        return rate

    def _inverse_persistence(self, u: float) -> int:
        if self.p == 1.0:
            return 1
        t = max(1, int(math.log(u) / math.log(self.q)) )
        while self.q**t >= u:
            t += 1
        while t > 1 and self.q ** (t - 1) < u:
            t -= 1
        return min(t, SAMPLE_CAP)


@dataclass(frozen=True)
class Sibuya(ResetLaw):
    """Fat-tailed law with gf(u) = 1 - (1-u)^alpha and infinite mean.

    pdf(t) ~ alpha t^(-1-alpha) / Gamma(1-alpha) for large t.
    """

    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("Sibuya requires 0 < alpha < 1")

    def pdf(self, t: int) -> float:
        if t < 1:
            return 0.0
        value = self.alpha
        for k in range(1, t):
            value *= (k - self.alpha) / (k + 1)
        return value

    def pdf_table(self, t_max: int) -> np.ndarray:
        table = np.zeros(t_max + 1)
        if t_max >= 1:
            table[1] = self.alpha
            for t in range(1, t_max):
                table[t + 1] = table[t] * (t - self.alpha) / (t + 1)
        return table

    def gf(self, u: float) -> float:
        return 1.0 - (1.0 - u) ** self.alpha

    @property
    def mean_interval(self) -> float:
        return math.inf

    def persistence(self, t: int) -> float:
        if t < 0:
            raise ValueError("time index must be >= 0")
        value = 1.0
        for k in range(1, t + 1):
            value *= (k - self.alpha) / k
        return value

    def persistence_table(self, t_max: int) -> np.ndarray:
        table = np.ones(t_max + 1)
        for t in range(1, t_max + 1):
            table[t] = table[t - 1] * (t - self.alpha) / t
        return table

    def resetting_rate(self, t: int) -> float:
        if t < 0:
            raise ValueError("time index must be >= 0")
        if t == 0:
            return 0.0
        value = 1.0
        for k in range(1, t + 1):
            value *= (k - 1 + self.alpha) / k
        return value

    def resetting_rate_table(self, t_max: int) -> np.ndarray:
        table = np.zeros(t_max + 1)
        value = 1.0
        for t in range(1, t_max + 1):
            value *= (t - 1 + self.alpha) / t
            table[t] = value
        return table

    def _persistence_large(self, t: int) -> float:
        # log-Gamma form; equals the recursion but costs O(1), which the
        # sampler needs because fat-tailed draws can exceed 10^15.
        a = self.alpha
        return math.exp(math.lgamma(t + 1 - a) - math.lgamma(1 - a) - math.lgamma(t + 1))

    def _inverse_persistence(self, u: float) -> int:
        if self._persistence_large(1) < u:
            return 1
        lo, hi = 1, 2
        while self._persistence_large(hi) >= u:
            lo = hi
            hi *= 2
            if hi >= SAMPLE_CAP:
                return SAMPLE_CAP
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self._persistence_large(mid) < u:
                hi = mid
            else:
                lo = mid
        return hi


@dataclass(frozen=True)
class FiniteSupport(ResetLaw):
    """Arbitrary law supported on {1, ..., T}; weights[k] is pdf(k+1)."""

    weights: tuple[float, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a non-empty 1-d sequence")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 within 1e-12")
        object.__setattr__(self, "weights", tuple(float(x) for x in w))

    @classmethod
    def uniform(cls, horizon: int) -> "FiniteSupport":
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        return cls(tuple([1.0 / horizon] * horizon))

    @classmethod
    def from_csv(cls, path) -> "FiniteSupport":
        """Load columns (t, psi); times must be 1..T without gaps."""
        rows: dict[int, float] = {}
        with open(path, newline="") as fh:
            for record in csv.DictReader(
                row for row in fh if not row.lstrip().startswith("#")
            ):
                rows[int(record["t"])] = float(record["psi"])
        if not rows:
            raise ValueError("empty weight table")
        horizon = max(rows)
        if set(rows) != set(range(1, horizon + 1)):
            raise ValueError("weight table must cover t = 1..T without gaps")
        return cls(tuple(rows[t] for t in range(1, horizon + 1)))

    @property
    def support_horizon(self) -> int:
        return len(self.weights)

    def pdf(self, t: int) -> float:
        if 1 <= t <= len(self.weights):
            return self.weights[t - 1]
        return 0.0

    def gf(self, u: float) -> float:
        acc = 0.0
        for w in reversed(self.weights):
            acc = (acc + w) * u
        return acc

    @property
    def mean_interval(self) -> float:
        return float(np.dot(np.arange(1, len(self.weights) + 1), self.weights))

    def _inverse_persistence(self, u: float) -> int:
        remaining = 1.0
        for t, w in enumerate(self.weights, start=1):
            remaining -= w
            if remaining < u:
                return t
        return self.support_horizon


@dataclass(frozen=True)
class DeterministicPeriod(ResetLaw):
    """Point mass at a fixed period T."""

    period: int

    def __post_init__(self):
        if self.period < 1 or int(self.period) != self.period:
            raise ValueError("period must be a positive integer")
        object.__setattr__(self, "period", int(self.period))

    @property
    def support_horizon(self) -> int:
        return self.period

    def pdf(self, t: int) -> float:
        return 1.0 if t == self.period else 0.0

    def gf(self, u: float) -> float:
        return u**self.period

    @property
    def mean_interval(self) -> float:
        return float(self.period)

    def persistence(self, t: int) -> float:
        if t < 0:
            raise ValueError("time index must be >= 0")
        return 1.0 if t < self.period else 0.0

    def persistence_table(self, t_max: int) -> np.ndarray:
        table = np.ones(t_max + 1)
        table[self.period :] = 0.0
        return table

    def _inverse_persistence(self, u: float) -> int:
        return self.period


# ---------------------------------------------------------------------------
# tabulated helpers
# ---------------------------------------------------------------------------

def backward_recurrence_table(law: ResetLaw, t_max: int) -> np.ndarray:
    """Matrix f[t, b] of backward-recurrence probabilities, b <= t <= t_max."""
    pers = law.persistence_table(t_max)
    rate = law.resetting_rate_table(t_max)
    table = np.zeros((t_max + 1, t_max + 1))
    for t in range(t_max + 1):
        for b in range(t + 1):
            delta = 1.0 if t == b else 0.0
            table[t, b] = pers[b] * (delta + rate[t - b])
    return table


def state_probability_table(law: ResetLaw, n_max: int, t_max: int) -> np.ndarray:
    """Matrix Phi[n, t] of counting-process state probabilities."""
    pdf = law.pdf_table(t_max)
    table = np.zeros((n_max + 1, t_max + 1))
    table[0] = law.persistence_table(t_max)
    for n in range(1, n_max + 1):
        for t in range(t_max + 1):
            table[n, t] = np.dot(pdf[1 : t + 1], table[n - 1, t - 1 :: -1][: t])
    return table
