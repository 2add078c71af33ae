"""Trajectory-level simulator of the walk with resetting and killing.

This is the empirical oracle against every analytic channel: occupation
rows, steady states, survival curves and mean hitting times are estimated
from independent trajectories with standard errors.

Reproducibility: trajectory k draws from its own splitmix64 stream whose
state is a pure function of (seed, k), so estimates are bit-identical
across reruns and independent of any batching or scheduling order.  The
per-tick semantics match the renewal structure of the analytic propagator:
at an arrival time of the interval process the relocation replaces the
step, there is no reset at t = 0, and the kill check runs after every
movement (step or relocation), never at t = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .propagator import RelocationVector
from .renewal import DeterministicPeriod, FiniteSupport, Geometric, ResetLaw, Sibuya

__all__ = [
    "SimConfig",
    "SimEstimate",
    "Trajectory",
    "EstimateInconclusiveError",
    "simulate_trajectory",
    "estimate",
]

EVENT_NAMES = {1: "step", 2: "reset", 3: "kill", 4: "kill"}

_U64 = np.uint64
_GAMMA = _U64(0x9E3779B97F4A7C15)
_MUL1 = _U64(0xBF58476D1CE4E5B9)
_MUL2 = _U64(0x94D049BB133111EB)
_S30 = _U64(30)
_S27 = _U64(27)
_S31 = _U64(31)
_S11 = _U64(11)
_INV53 = 1.0 / 9007199254740992.0
_TINY = 2.0**-53
_SAMPLE_CAP = 2**62


class EstimateInconclusiveError(RuntimeError):
    """Every simulated path was censored; the statistic is undefined."""


@dataclass(frozen=True, eq=False)
class SimConfig:
    """Immutable description of one simulation experiment.

    ``w`` is the row-stochastic step matrix; ``targets`` may be empty, in
    which case trajectories run for exactly ``horizon`` transitions.
    """

    w: np.ndarray
    start: int
    horizon: int
    trials: int
    seed: int
    law: ResetLaw
    relocation: RelocationVector
    targets: tuple[int, ...] = ()

    def __post_init__(self):
        n = self.w.shape[0]
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not 0 <= self.start < n:
            raise ValueError("start node out of range")
        object.__setattr__(self, "targets", tuple(sorted(set(self.targets))))
        if self.targets and (self.targets[0] < 0 or self.targets[-1] >= n):
            raise ValueError("target ids out of range")


@dataclass(frozen=True, eq=False)
class SimEstimate:
    value: float | np.ndarray
    standard_error: float | np.ndarray
    trials: int
    censored: int


@dataclass(frozen=True, eq=False)
class Trajectory:
    positions: np.ndarray  # node per tick, index 0 is the start
    events: np.ndarray  # codes per tick: 1 step, 2 reset, 3/4 kill (by step/reset)
    reset_times: np.ndarray
    kill_time: int | None


# ---------------------------------------------------------------------------
# splitmix64 kernels
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> _S30)) * _MUL1
    z = (z ^ (z >> _S27)) * _MUL2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def _stream_state(seed, k):
    # decorrelated starting state per trajectory: both inputs pass through
    # the finalizer, so streams start at pseudorandom cycle positions
    return _mix64((seed + _GAMMA) ^ _mix64(k * _GAMMA + _GAMMA))


@njit(cache=True, inline="always")
def _next_uniform(state):
    state = state + _GAMMA
    x = _mix64(state)
    u = float(x >> _S11) * _INV53
    if u <= 0.0:
        u = _TINY
    return u, state


@njit(cache=True, inline="always")
def _pick(cum, u):
    # smallest j with u < cum[j]
    lo = 0
    hi = cum.shape[0] - 1
    while lo < hi:
        mid = (lo + hi) >> 1
        if cum[mid] <= u:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True)
def _sibuya_persistence(alpha, t):
    return math.exp(
        math.lgamma(t + 1.0 - alpha) - math.lgamma(1.0 - alpha) - math.lgamma(t + 1.0)
    )


@njit(cache=True)
def _draw_interval(kind, param, table, state):
    """Inverse-CDF interval draw: min{t >= 1 : persistence(t) < U}."""
    u, state = _next_uniform(state)
    if kind == 0:  # geometric
        if param >= 1.0:
            return 1, state
        q = 1.0 - param
        t = int(math.log(u) / math.log(q))
        if t < 1:
            t = 1
        while q**t >= u:
            t += 1
        while t > 1 and q ** (t - 1) < u:
            t -= 1
        if t > _SAMPLE_CAP:
            t = _SAMPLE_CAP
        return t, state
    if kind == 1:  # heavy-tailed (Sibuya)
        if _sibuya_persistence(param, 1.0) < u:
            return 1, state
        lo = 1
        hi = 2
        while _sibuya_persistence(param, float(hi)) >= u:
            lo = hi
            hi *= 2
            if hi >= _SAMPLE_CAP:
                return _SAMPLE_CAP, state
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if _sibuya_persistence(param, float(mid)) < u:
                hi = mid
            else:
                lo = mid
        return hi, state
    # bounded support: table holds persistence(0..T)
    for t in range(1, table.shape[0]):
        if table[t] < u:
            return t, state
    return table.shape[0] - 1, state


@njit(cache=True)
def _simulate_path(
    seed, k, start, horizon, cum_w, cum_r, kind, param, table, mask, killing
):
    state = _stream_state(seed, k)
    positions = np.empty(horizon + 1, np.int64)
    events = np.zeros(horizon + 1, np.int8)
    positions[0] = start
    pos = start
    dt, state = _draw_interval(kind, param, table, state)
    next_arrival = dt
    kill_time = np.int64(-1)
    end = horizon
    for t in range(1, horizon + 1):
        if t == next_arrival:
            u, state = _next_uniform(state)
            pos = _pick(cum_r, u)
            event = 2
            dt, state = _draw_interval(kind, param, table, state)
            next_arrival = t + dt
        else:
            u, state = _next_uniform(state)
            pos = _pick(cum_w[pos], u)
            event = 1
        positions[t] = pos
        if killing and mask[pos]:
            events[t] = event + 2  # 3: killed stepping in, 4: killed by reset
            kill_time = t
            end = t
            break
        events[t] = event
    return positions[: end + 1], events[: end + 1], kill_time


@njit(cache=True)
def _simulate_batch(
    seed, trials, start, horizon, cum_w, cum_r, kind, param, table, mask, killing
):
    final_pos = np.empty(trials, np.int64)
    kill_times = np.full(trials, np.int64(-1))
    reset_counts = np.zeros(trials, np.int64)
    for k in range(trials):
        state = _stream_state(seed, _U64(k))
        pos = start
        dt, state = _draw_interval(kind, param, table, state)
        next_arrival = dt
        for t in range(1, horizon + 1):
            if t == next_arrival:
                u, state = _next_uniform(state)
                pos = _pick(cum_r, u)
                reset_counts[k] += 1
                dt, state = _draw_interval(kind, param, table, state)
                next_arrival = t + dt
            else:
                u, state = _next_uniform(state)
                pos = _pick(cum_w[pos], u)
            if killing and mask[pos]:
                kill_times[k] = t
                break
        final_pos[k] = pos
    return final_pos, kill_times, reset_counts


# ---------------------------------------------------------------------------
# python surface
# ---------------------------------------------------------------------------

def _encode_law(law: ResetLaw):
    if isinstance(law, Geometric):
        return 0, law.p, np.zeros(1)
    if isinstance(law, Sibuya):
        return 1, law.alpha, np.zeros(1)
    if isinstance(law, (FiniteSupport, DeterministicPeriod)):
        horizon = law.support_horizon
        return 2, 0.0, law.persistence_table(horizon).astype(float)
    raise TypeError(f"unsupported law type {type(law).__name__}")


def _cumulative_rows(m: np.ndarray) -> np.ndarray:
    cum = np.cumsum(m, axis=-1)
    cum[..., -1] = 1.0  # guard against rounding in the last bin
    return np.ascontiguousarray(cum)


def _prepared(cfg: SimConfig, killing: bool):
    kind, param, table = _encode_law(cfg.law)
    mask = np.zeros(cfg.w.shape[0], dtype=np.bool_)
    if cfg.targets:
        mask[list(cfg.targets)] = True
    return (
        _U64(cfg.seed & 0xFFFFFFFFFFFFFFFF),
        _cumulative_rows(cfg.w),
        _cumulative_rows(cfg.relocation.probabilities),
        kind,
        param,
        table,
        mask,
        killing and bool(cfg.targets),
    )


def simulate_trajectory(cfg: SimConfig, k: int) -> Trajectory:
    """Event sequence of trajectory ``k``; bit-reproducible given the seed."""
    if not 0 <= k < cfg.trials:
        raise ValueError("trajectory index out of range")
    seed, cum_w, cum_r, kind, param, table, mask, killing = _prepared(
        cfg, killing=True
    )
    positions, events, kill_time = _simulate_path(
        seed, _U64(k), cfg.start, cfg.horizon, cum_w, cum_r, kind, param, table,
        mask, killing,
    )
    reset_times = np.flatnonzero((events == 2) | (events == 4))
    return Trajectory(
        positions=positions,
        events=events,
        reset_times=reset_times,
        kill_time=None if kill_time < 0 else int(kill_time),
    )


def _run_batch(cfg: SimConfig, horizon: int, killing: bool):
    seed, cum_w, cum_r, kind, param, table, mask, killing = _prepared(cfg, killing)
    return _simulate_batch(
        seed, cfg.trials, cfg.start, horizon, cum_w, cum_r, kind, param, table,
        mask, killing,
    )


def estimate(
    cfg: SimConfig,
    statistic: str,
    *,
    t: int | None = None,
    target: int | None = None,
) -> SimEstimate:
    """Monte Carlo estimate of one statistic with its standard error.

    statistic:
      - "occupation": per-node distribution at time ``t`` (killing off);
        multinomial standard errors per node.
      - "survival": probability of not having hit a target up to ``t``.
      - "mfht": mean first hitting time of the configured targets; censored
        paths (no hit by the horizon) are counted and excluded.
      - "mfpt": mfht with the single target node ``target``.
    """
    if statistic == "occupation":
        t_obs = cfg.horizon if t is None else int(t)
        if not 1 <= t_obs <= cfg.horizon:
            raise ValueError("observation time out of range")
        final_pos, _, _ = _run_batch(cfg, t_obs, killing=False)
        counts = np.bincount(final_pos, minlength=cfg.w.shape[0])
        freq = counts / cfg.trials
        se = np.sqrt(freq * (1.0 - freq) / cfg.trials)
        return SimEstimate(value=freq, standard_error=se, trials=cfg.trials, censored=0)

    if statistic == "survival":
        if not cfg.targets:
            raise ValueError("survival requires a target set")
        t_obs = cfg.horizon if t is None else int(t)
        if not 1 <= t_obs <= cfg.horizon:
            raise ValueError("observation time out of range")
        _, kill_times, _ = _run_batch(cfg, cfg.horizon, killing=True)
        alive = (kill_times < 0) | (kill_times > t_obs)
        frac = float(alive.mean())
        se = math.sqrt(frac * (1.0 - frac) / cfg.trials)
        return SimEstimate(
            value=frac,
            standard_error=se,
            trials=cfg.trials,
            censored=int(np.sum(kill_times < 0)),
        )

    if statistic in ("mfht", "mfpt"):
        work = cfg
        if statistic == "mfpt":
            if target is None:
                raise ValueError("mfpt requires a target node")
            work = SimConfig(
                w=cfg.w, start=cfg.start, horizon=cfg.horizon, trials=cfg.trials,
                seed=cfg.seed, law=cfg.law, relocation=cfg.relocation,
                targets=(int(target),),
            )
        elif not cfg.targets:
            raise ValueError("mfht requires a target set")
        _, kill_times, _ = _run_batch(work, work.horizon, killing=True)
        hit = kill_times[kill_times > 0].astype(float)
        censored = int(work.trials - hit.size)
        if hit.size == 0:
            raise EstimateInconclusiveError(
                "all paths were censored at the horizon; no hitting time observed"
            )
        mean = float(hit.mean())
        se = float(hit.std(ddof=1) / math.sqrt(hit.size)) if hit.size > 1 else math.inf
        return SimEstimate(value=mean, standard_error=se, trials=work.trials,
                           censored=censored)

    raise ValueError(f"unknown statistic {statistic!r}")


def reset_rate_estimate(cfg: SimConfig) -> SimEstimate:
    """Empirical mean reset count per tick over the horizon (killing off)."""
    _, _, reset_counts = _run_batch(cfg, cfg.horizon, killing=False)
    rates = reset_counts / cfg.horizon
    mean = float(rates.mean())
    se = float(rates.std(ddof=1) / math.sqrt(cfg.trials)) if cfg.trials > 1 else math.inf
    return SimEstimate(value=mean, standard_error=se, trials=cfg.trials, censored=0)
