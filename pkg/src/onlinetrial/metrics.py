"""Replicated trial simulations and their error-rate / power estimates."""

from __future__ import annotations

import math
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import error_control as ec
from .scenarios import MeanSpec, is_batched_entry, materialize_means
from .trial import TrialConfig, build_schedule, simulate_trial

__all__ = [
    "ProcedureSpec",
    "ReplicationOutcome",
    "Estimate",
    "MetricsSummary",
    "score_replication",
    "mc_standard_error",
    "apply_procedure",
    "replication_rng",
    "run_study",
    "run_studies",
    "worker_count",
]

METRICS = ("fwer", "fdr", "sensitivity", "disjunctive_power")


@dataclass(frozen=True)
class ProcedureSpec:
    """A procedure name plus parameter overrides, buildable for any (alpha, bound).

    ``name`` is a key of ``error_control.PROCEDURES`` or ``"bh"`` for the
    offline Benjamini-Hochberg comparator.
    """

    name: str
    params: tuple = ()

    def __post_init__(self):
        name = "bh" if self.name.strip().lower() == "bh" else ec.canonical_name(self.name)
        object.__setattr__(self, "name", name)
        params = self.params.items() if isinstance(self.params, dict) else self.params
        object.__setattr__(self, "params", tuple(sorted(params)))
        if self.is_offline and self.params:
            raise ValueError("bh takes no parameters")

    @classmethod
    def parse(cls, obj):
        if isinstance(obj, cls):
            return obj
        if isinstance(obj, str):
            return cls(obj)
        return cls(obj["name"], obj.get("params", {}))

    @property
    def is_offline(self):
        return self.name == "bh"

    @property
    def is_batch(self):
        return not self.is_offline and ec.PROCEDURES[self.name].cls.is_batch

    @property
    def label(self):
        if not self.params:
            return self.name
        return self.name + "[" + ",".join(f"{k}={v}" for k, v in self.params) + "]"

    def build(self, alpha, n_bound):
        if self.is_offline:
            raise TypeError("bh is an offline procedure; use apply_procedure")
        return ec.make_procedure(self.name, alpha, n_bound, **dict(self.params))


@dataclass(frozen=True)
class ReplicationOutcome:
    is_null: np.ndarray
    rejected: np.ndarray
    v: int
    r: int
    s: int
    m1: int

    @property
    def fwer_indicator(self):
        return float(self.v >= 1)

    @property
    def fdp(self):
        return self.v / max(self.r, 1)

    @property
    def sensitivity(self):
        """S / m1, or None when there are no non-null hypotheses."""
        return self.s / self.m1 if self.m1 else None

    @property
    def disjunctive(self):
        return float(self.s >= 1) if self.m1 else None


def score_replication(is_null, rejected) -> ReplicationOutcome:
    is_null = np.asarray(is_null, dtype=bool)
    rejected = np.asarray(rejected, dtype=bool)
    if is_null.shape != rejected.shape:
        raise ValueError("truth and rejection vectors must have equal length")
    v = int(np.count_nonzero(rejected & is_null))
    s = int(np.count_nonzero(rejected & ~is_null))
    return ReplicationOutcome(is_null, rejected, v, v + s, s, int(np.count_nonzero(~is_null)))


def mc_standard_error(values):
    """Sample standard deviation over sqrt(reps)."""
    x = np.asarray(values, dtype=float).reshape(-1)
    if x.size < 2:
        raise ValueError("need at least two replications for a standard error")
    mean = math.fsum(x) / x.size
    var = math.fsum((x - mean) ** 2) / (x.size - 1)
    return math.sqrt(var / x.size)


@dataclass(frozen=True)
class Estimate:
    value: float
    mc_se: float


@dataclass(frozen=True)
class MetricsSummary:
    fwer: Estimate
    fdr: Estimate
    sensitivity: Estimate | None
    disjunctive_power: Estimate | None
    reps: int
    seed: int
    algorithm: str = ""
    scenario_id: str = ""

    def items(self):
        """(metric, Estimate) pairs, skipping metrics that do not apply."""
        for name in METRICS:
            est = getattr(self, name)
            if est is not None:
                yield name, est


def apply_procedure(spec: ProcedureSpec, realization, alpha, n_bound):
    """Run one procedure over a realisation; returns rejections indexed by arm.

    Fully sequential procedures see the p-values in completion order, batch
    procedures see the completion-time batches, BH sees everything at once.
    """
    rejected = np.zeros(realization.p.size, dtype=bool)
    if spec.is_offline:
        return ec.bh_procedure(realization.p, alpha)
    proc = spec.build(alpha, n_bound)
    if spec.is_batch:
        for arms in realization.batches:
            for arm, d in zip(arms, proc.test_batch(realization.p[arms])):
                rejected[arm] = d.rejected
    else:
        for arm in realization.order:
            rejected[arm] = proc.test_one(realization.p[arm]).rejected
    return rejected


def replication_rng(base_seed, scenario_id, j):
    """Independent generator for replication ``j`` of a scenario.

    Seeded from (base_seed, crc32(scenario_id), j) so any single replication
    of any scenario can be regenerated on its own.
    """
    key = zlib.crc32(scenario_id.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([int(base_seed), key, int(j)]))


def worker_count(workers=None):
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("ONLINETRIAL_THREADS")
    return max(1, int(env)) if env else 1


def _chunk(args):
    config, specs, mean_spec, base_seed, sid, start, stop = args
    schedule = build_schedule(config)
    out = np.empty((stop - start, len(specs), len(METRICS)))
    for row, j in enumerate(range(start, stop)):
        rng = replication_rng(base_seed, sid, j)
        cfg = config
        if mean_spec is not None and mean_spec.is_random:
            cfg = config.with_means(materialize_means(mean_spec, config.k_arms, rng).means)
        real = simulate_trial(cfg, schedule, rng)
        for col, spec in enumerate(specs):
            sc = score_replication(real.is_null, apply_procedure(spec, real, cfg.alpha, cfg.n_bound))
            sens, disj = sc.sensitivity, sc.disjunctive
            out[row, col] = (sc.fwer_indicator, sc.fdp,
                             math.nan if sens is None else sens,
                             math.nan if disj is None else disj)
    return out


def _summarise(values, reps, seed, algorithm, sid):
    ests = []
    for k in range(len(METRICS)):
        col = values[:, k]
        col = col[~np.isnan(col)]
        if col.size == 0:
            ests.append(None)
            continue
        mean = math.fsum(col) / col.size
        se = mc_standard_error(col) if col.size >= 2 else math.nan
        ests.append(Estimate(mean, se))
    return MetricsSummary(*ests, reps=reps, seed=seed, algorithm=algorithm, scenario_id=sid)


def run_studies(config: TrialConfig, procedures, reps, base_seed, scenario_id="",
                mean_spec: MeanSpec | None = None, workers=None, executor=None):
    """Estimate FWER, FDR, sensitivity and disjunctive power for several procedures.

    All procedures are scored on the same simulated trials. Random mean
    placements in ``mean_spec`` are redrawn for every replication. Returns a
    dict keyed by procedure label. An existing ``executor`` may be passed to
    reuse one process pool across many calls.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    specs = [ProcedureSpec.parse(p) for p in procedures]
    if not specs:
        raise ValueError("no procedures given")
    batched = is_batched_entry(config.entry_times, config.duration)
    for spec in specs:
        if spec.is_batch and not batched:
            raise ValueError(f"{spec.name} needs batched arm entry; entry times are "
                             f"{config.entry_times}")
    n_workers = min(worker_count(workers), reps)
    bounds = np.linspace(0, reps, n_workers + 1).astype(int)
    jobs = [(config, specs, mean_spec, base_seed, scenario_id, int(a), int(b))
            for a, b in zip(bounds[:-1], bounds[1:])]
    if n_workers == 1:
        parts = [_chunk(jobs[0])]
    elif executor is not None:
        parts = list(executor.map(_chunk, jobs))
    else:
        with ProcessPoolExecutor(n_workers) as pool:
            parts = list(pool.map(_chunk, jobs))
    values = np.concatenate(parts)
    return {spec.label: _summarise(values[:, i], reps, base_seed, spec.label, scenario_id)
            for i, spec in enumerate(specs)}


def run_study(config, procedure, reps, base_seed, scenario_id="", mean_spec=None, workers=None):
    """Single-procedure form of :func:`run_studies`."""
    spec = ProcedureSpec.parse(procedure)
    return run_studies(config, [spec], reps, base_seed, scenario_id, mean_spec, workers)[spec.label]
