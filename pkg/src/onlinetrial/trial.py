"""Idealised platform trial with staggered arm entry and shared concurrent controls.

Time runs in whole units. Every active arm, control included, accrues
``n / r`` patients per unit, so an experimental arm entering at ``t_i`` has
its ``n`` patients over ``[t_i, t_i + r)`` and is compared with the control
patients accrued over that same window. Control outcomes are drawn once per
replication, which is what makes the test statistics positively dependent
when windows overlap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

__all__ = [
    "TrialConfig",
    "AccrualSchedule",
    "TrialRealization",
    "build_schedule",
    "simulate_trial",
    "z_statistic",
    "p_value",
]


@dataclass(frozen=True)
class TrialConfig:
    """One platform-trial design.

    ``mu`` holds the experimental-arm means mu_1..mu_K; the control mean is
    ``mu0``. Defaults are the simulation settings alpha = 0.025, n = 50,
    r = 10, sigma = 1, mu0 = 0.
    """

    mu: tuple
    entry_times: tuple
    n_per_arm: int = 50
    duration: int = 10
    sigma: float = 1.0
    mu0: float = 0.0
    alpha: float = 0.025
    n_bound: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(float(m) for m in self.mu))
        times = tuple(self.entry_times)
        for t in times:
            if float(t) != int(t):
                raise ValueError(f"entry times must be whole time units, got {t}")
        object.__setattr__(self, "entry_times", tuple(int(t) for t in times))
        if len(self.mu) != len(self.entry_times):
            raise ValueError("need one mean per entry time")
        if self.k_arms < 1:
            raise ValueError("need at least one experimental arm")
        if any(b < a for a, b in zip(self.entry_times, self.entry_times[1:])):
            raise ValueError("entry times must be non-decreasing")
        if self.entry_times[0] < 0:
            raise ValueError("entry times must be non-negative")
        if self.n_per_arm < 1 or self.duration < 1:
            raise ValueError("n_per_arm and duration must be positive")
        if self.n_per_arm % self.duration:
            raise ValueError(
                f"n/r must be a positive integer (n={self.n_per_arm}, r={self.duration})")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.n_bound is None:
            object.__setattr__(self, "n_bound", self.k_arms)
        if self.n_bound < self.k_arms:
            raise ValueError(f"n_bound={self.n_bound} is below the number of arms {self.k_arms}")

    @property
    def k_arms(self):
        return len(self.mu)

    @property
    def rate(self):
        """Patients per arm per time unit."""
        return self.n_per_arm // self.duration

    @property
    def theta(self):
        return np.asarray(self.mu) - self.mu0

    def with_means(self, mu):
        return TrialConfig(mu=tuple(mu), entry_times=self.entry_times, n_per_arm=self.n_per_arm,
                           duration=self.duration, sigma=self.sigma, mu0=self.mu0,
                           alpha=self.alpha, n_bound=self.n_bound)


@dataclass(frozen=True)
class AccrualSchedule:
    """Control timeline and per-arm windows.

    Control patient ``j`` is accrued in unit slot ``j // rate``. Arm ``i`` uses
    the controls in ``control_slices[i]``.
    """

    rate: int
    horizon: int  # t_K + r, the end of the control window
    windows: np.ndarray  # (K, 2) half-open [start, stop) in time units
    control_slices: tuple
    order: np.ndarray  # test order, arm indices sorted by (completion, index)
    batches: tuple  # arm-index arrays sharing a completion time, in order

    @property
    def n_control(self):
        return self.rate * self.horizon

    @property
    def control_times(self):
        return np.repeat(np.arange(self.horizon), self.rate)

    def n0(self, i):
        s = self.control_slices[i]
        return s.stop - s.start

    def overlap(self, i, j):
        """Number of control patients shared by arms ``i`` and ``j``."""
        a, b = self.control_slices[i], self.control_slices[j]
        return max(0, min(a.stop, b.stop) - max(a.start, b.start))


def build_schedule(config: TrialConfig) -> AccrualSchedule:
    t = np.asarray(config.entry_times, dtype=int)
    r, q = config.duration, config.rate
    horizon = int(t[-1]) + r
    # No slot of the control window may be without an active experimental arm.
    covered = np.zeros(horizon, dtype=bool)
    for start in t:
        covered[start:start + r] = True
    if not covered.all():
        gap = int(np.flatnonzero(~covered)[0])
        raise ValueError(f"no experimental arm is active at time {gap}; accrual gaps are not modelled")
    windows = np.column_stack([t, t + r])
    slices = tuple(slice(int(s) * q, int(s + r) * q) for s in t)
    completion = t + r
    order = np.lexsort((np.arange(t.size), completion))
    batches = tuple(order[completion[order] == c] for c in np.unique(completion))
    return AccrualSchedule(q, horizon, windows, slices, order, batches)


def z_statistic(xbar_i, xbar_0i, sigma, n, n0):
    """Z = (xbar_i - xbar_0i) / (sigma sqrt(1/n0 + 1/n))."""
    if np.any(np.asarray(n) <= 0) or np.any(np.asarray(n0) <= 0):
        raise ValueError("sample sizes must be positive")
    if np.any(np.asarray(sigma) <= 0):
        raise ValueError("sigma must be positive")
    return (np.asarray(xbar_i) - xbar_0i) / (sigma * np.sqrt(1.0 / n0 + 1.0 / n))


def p_value(z):
    """One-sided p-value 1 - Phi(z), evaluated as erfc(z / sqrt 2) / 2.

    The erfc form keeps full relative precision in the upper tail, where
    ``1 - Phi`` would cancel.
    """
    out = 0.5 * erfc(np.asarray(z, dtype=float) / np.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TrialRealization:
    """Outcome of one simulated trial; arrays are indexed by arm (0-based)."""

    completion: np.ndarray
    z: np.ndarray
    p: np.ndarray
    is_null: np.ndarray
    order: np.ndarray
    batches: tuple = field(repr=False)

    @property
    def p_in_order(self):
        return self.p[self.order]

    def p_batches(self):
        return [self.p[b] for b in self.batches]


def simulate_trial(config: TrialConfig, schedule: AccrualSchedule | None, rng) -> TrialRealization:
    """Draw all patient outcomes and return Z-statistics and p-values."""
    if schedule is None:
        schedule = build_schedule(config)
    n, sigma = config.n_per_arm, config.sigma
    control = rng.normal(config.mu0, sigma, size=schedule.n_control)
    arms = rng.normal(np.asarray(config.mu)[:, None], sigma, size=(config.k_arms, n))
    csum = np.concatenate(([0.0], np.cumsum(control)))
    starts = np.array([s.start for s in schedule.control_slices])
    stops = np.array([s.stop for s in schedule.control_slices])
    n0 = stops - starts
    xbar0 = (csum[stops] - csum[starts]) / n0
    z = z_statistic(arms.mean(axis=1), xbar0, sigma, n, n0)
    return TrialRealization(
        completion=schedule.windows[:, 1].copy(),
        z=z,
        p=p_value(z),
        is_null=config.theta <= 0,
        order=schedule.order,
        batches=schedule.batches,
    )
