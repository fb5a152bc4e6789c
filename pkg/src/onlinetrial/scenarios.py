"""Simulation grid: treatment-mean scenarios, arm entry patterns and bounds."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .trial import TrialConfig

__all__ = [
    "MEAN_PATTERNS",
    "ENTRY_PATTERNS",
    "MeanSpec",
    "MeanScenario",
    "EntryPattern",
    "StudyGrid",
    "Scenario",
    "materialize_means",
    "materialize_entry",
    "enumerate_grid",
    "parse_m",
    "is_batched_entry",
]

EFFECT = 0.5

MEAN_PATTERNS = ("global_null", "fixed_early", "fixed_late", "fixed_random",
                 "stair_dec", "stair_inc", "stair_random")
ENTRY_PATTERNS = ("all_at_once", "batch5", "stagger2", "stagger5", "fully_seq")


@dataclass(frozen=True)
class MeanSpec:
    """A treatment-mean pattern before it is tied to a K (and, if random, an rng)."""

    label: str
    m: int | None = None

    def __post_init__(self):
        if self.label not in MEAN_PATTERNS:
            raise ValueError(f"unknown mean pattern {self.label!r}; expected one of {MEAN_PATTERNS}")
        if self.label.startswith("fixed"):
            if self.m is None or self.m < 0:
                raise ValueError(f"{self.label} needs a non-negative m")

    @property
    def is_random(self):
        return self.label.endswith("_random")


@dataclass(frozen=True)
class MeanScenario:
    label: str
    means: np.ndarray
    m: int  # number of effective arms (mean > 0)


def _staircase(k):
    half = math.ceil(k / 2)
    return (np.arange(1, k + 1) - half) / k


def materialize_means(spec: MeanSpec, k, rng=None) -> MeanScenario:
    """Means mu_1..mu_K for ``spec``.

    Random placements consume ``rng``; the other patterns are deterministic.
    """
    if k < 1:
        raise ValueError("K must be >= 1")
    label = spec.label
    if label == "global_null":
        mu = np.zeros(k)
    elif label.startswith("fixed"):
        m = spec.m
        if m > k:
            raise ValueError(f"m={m} effective arms exceeds K={k}")
        mu = np.zeros(k)
        if label == "fixed_early":
            mu[:m] = EFFECT
        elif label == "fixed_late":
            mu[k - m:] = EFFECT
        else:
            mu[_rng(rng).choice(k, size=m, replace=False)] = EFFECT
    elif label == "stair_dec":
        mu = _staircase(k)
    elif label == "stair_inc":
        mu = (math.ceil(k / 2) - np.arange(1, k + 1) + 1) / k
    else:
        mu = _rng(rng).permutation(_staircase(k))
    return MeanScenario(label, mu, int(np.count_nonzero(mu > 0)))


def _rng(rng):
    if rng is None:
        raise ValueError("random mean placement needs an rng")
    return rng


@dataclass(frozen=True)
class EntryPattern:
    label: str
    times: tuple


def materialize_entry(label, k, r=10) -> EntryPattern:
    """Entry times t_1..t_K for one of ``ENTRY_PATTERNS``.

    ``batch<b>`` and ``stagger<s>`` take their size/divisor from the label,
    so e.g. ``batch4`` or ``stagger10`` also work.
    """
    i = np.arange(k)
    if label == "all_at_once":
        t = np.zeros(k, dtype=int)
    elif label == "fully_seq":
        t = r * i
    elif (mt := re.fullmatch(r"batch(\d+)", label)):
        b = int(mt.group(1))
        if b < 1 or k % b:
            raise ValueError(f"batch size {b} does not divide K={k}")
        t = r * (i // b)
    elif (mt := re.fullmatch(r"stagger(\d+)", label)):
        s = int(mt.group(1))
        if s < 1 or np.any((r * i) % s):
            raise ValueError(f"r(i-1)/s is not a whole time unit for r={r}, s={s}")
        t = r * i // s
    else:
        raise ValueError(f"unknown entry pattern {label!r}")
    return EntryPattern(label, tuple(int(x) for x in t))


def is_batched_entry(entry_times, r):
    """True when arms form disjoint batches that batch procedures can consume.

    Arms sharing an entry time form a batch; successive batches must not
    overlap in time, and at least one batch must hold more than one arm
    unless there is only a single batch.
    """
    t = np.asarray(entry_times)
    starts, sizes = np.unique(t, return_counts=True)
    if starts.size == 1:
        return True
    return bool(np.all(np.diff(starts) >= r) and sizes.max() > 1)


_M_EXPR = re.compile(r"^\s*(\d*)\s*K\s*/\s*(\d+)\s*(?:\+\s*(\d+))?\s*$")


def parse_m(expr, k):
    """Evaluate an effective-arm count such as ``1``, ``"K/5+1"`` or ``"2K/5+1"``."""
    if isinstance(expr, (int, np.integer)) and not isinstance(expr, bool):
        return int(expr)
    s = str(expr)
    if s.strip().isdigit():
        return int(s)
    mt = _M_EXPR.match(s)
    if not mt:
        raise ValueError(f"cannot parse m expression {expr!r}")
    a = int(mt.group(1) or 1)
    b = int(mt.group(2))
    c = int(mt.group(3) or 0)
    if (a * k) % b:
        raise ValueError(f"m = {expr} is not an integer for K={k}")
    return a * k // b + c


@dataclass(frozen=True)
class StudyGrid:
    k_values: tuple = (5, 10, 15, 20)
    n_bound_multipliers: tuple = (1, 2, 5)
    mean_patterns: tuple = MEAN_PATTERNS
    entry_patterns: tuple = ENTRY_PATTERNS
    m_values: tuple = ("1", "K/5+1", "2K/5+1")
    n: int = 50
    r: int = 10
    sigma: float = 1.0
    mu0: float = 0.0
    alpha: float = 0.025

    def __post_init__(self):
        if any(mult < 1 for mult in self.n_bound_multipliers):
            raise ValueError("n_bound multipliers must be >= 1 so that n_bound >= K")


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    config: TrialConfig
    mean_spec: MeanSpec
    entry_pattern: str
    mean_pattern: str
    m: int


def scenario_id(k, n_bound, entry, mean, m):
    return f"K{k:02d}-N{n_bound:03d}-{entry}-{mean}-m{m:02d}"


def enumerate_grid(grid: StudyGrid) -> list[Scenario]:
    """Cartesian product of the grid axes, in a fixed order.

    Fixed-mean patterns expand over ``m_values``; the other patterns appear
    once. Random placements are materialised here with mean 0 placeholders
    and redrawn per replication by the metrics runner.
    """
    out = []
    for k in grid.k_values:
        for mean in grid.mean_patterns:
            if mean.startswith("fixed"):
                ms = list(dict.fromkeys(parse_m(expr, k) for expr in grid.m_values))
            else:
                ms = [None]
            for m in ms:
                spec = MeanSpec(mean, m)
                if spec.is_random:
                    m_eff = m if m is not None else materialize_means(
                        spec, k, np.random.default_rng(0)).m
                    mu = np.zeros(k)
                else:
                    sc = materialize_means(spec, k)
                    m_eff, mu = sc.m, sc.means
                for entry in grid.entry_patterns:
                    times = materialize_entry(entry, k, grid.r).times
                    for mult in grid.n_bound_multipliers:
                        nb = int(mult * k)
                        cfg = TrialConfig(mu=tuple(mu), entry_times=times, n_per_arm=grid.n,
                                          duration=grid.r, sigma=grid.sigma, mu0=grid.mu0,
                                          alpha=grid.alpha, n_bound=nb)
                        sid = scenario_id(k, nb, entry, mean, m_eff)
                        out.append(Scenario(sid, cfg, spec, entry, mean, m_eff))
    return out
