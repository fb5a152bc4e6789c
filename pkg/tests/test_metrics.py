import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onlinetrial.metrics import (
    ProcedureSpec,
    apply_procedure,
    mc_standard_error,
    replication_rng,
    run_studies,
    run_study,
    score_replication,
    worker_count,
)
from onlinetrial.scenarios import MeanSpec, materialize_entry
from onlinetrial.trial import TrialConfig, simulate_trial


def test_score_replication_counts():
    sc = score_replication([True, True, False, False], [True, False, True, False])
    assert (sc.v, sc.r, sc.s, sc.m1) == (1, 2, 1, 2)
    assert sc.fwer_indicator == 1.0
    assert sc.fdp == 0.5
    assert sc.sensitivity == 0.5
    assert sc.disjunctive == 1.0


def test_score_with_no_rejections_or_no_alternatives():
    sc = score_replication([True, True], [False, False])
    assert sc.fdp == 0.0 and sc.fwer_indicator == 0.0
    assert sc.sensitivity is None and sc.disjunctive is None
    with pytest.raises(ValueError):
        score_replication([True], [True, False])


@given(null=st.lists(st.booleans(), min_size=1, max_size=20), data=st.data())
def test_score_bounds(null, data):
    rej = data.draw(st.lists(st.booleans(), min_size=len(null), max_size=len(null)))
    sc = score_replication(null, rej)
    assert 0.0 <= sc.fdp <= sc.fwer_indicator <= 1.0
    assert sc.v + sc.s == sc.r
    if sc.sensitivity is not None:
        assert 0.0 <= sc.sensitivity <= sc.disjunctive <= 1.0


def test_mc_standard_error_frozen():
    assert mc_standard_error([0, 1, 0, 1]) == pytest.approx(0.288675, abs=1e-6)
    assert mc_standard_error([0.3] * 10) == 0.0
    with pytest.raises(ValueError):
        mc_standard_error([1.0])


def test_procedure_spec():
    s = ProcedureSpec.parse({"name": "SAFFRON", "params": {"lam": 0.4}})
    assert s.name == "saffron" and s.label == "saffron[lam=0.4]"
    assert not s.is_batch and ProcedureSpec("BatchBH").is_batch
    assert ProcedureSpec.parse("BH").is_offline
    with pytest.raises(ValueError):
        ProcedureSpec("bh", {"lam": 0.5})
    with pytest.raises(TypeError):
        ProcedureSpec("bh").build(0.025, 5)


def test_apply_procedure_orders():
    cfg = TrialConfig(mu=(0.0,) * 4, entry_times=(0, 0, 10, 10))
    real = simulate_trial(cfg, None, np.random.default_rng(0))
    real = real.__class__(real.completion, real.z, np.array([0.0001, 0.9, 0.0001, 0.9]),
                          real.is_null, real.order, real.batches)
    for name in ("lond", "batch_bh", "bh"):
        rej = apply_procedure(ProcedureSpec(name), real, 0.025, 4)
        assert rej.tolist() == [True, False, True, False]


def test_replication_rng_is_keyed():
    a = replication_rng(1, "s", 0).random()
    assert replication_rng(1, "s", 0).random() == a
    assert replication_rng(1, "t", 0).random() != a
    assert replication_rng(1, "s", 1).random() != a
    assert replication_rng(2, "s", 0).random() != a


def test_worker_count(monkeypatch):
    monkeypatch.delenv("ONLINETRIAL_THREADS", raising=False)
    assert worker_count() == 1
    monkeypatch.setenv("ONLINETRIAL_THREADS", "3")
    assert worker_count() == 3
    assert worker_count(2) == 2


def test_batch_procedure_needs_batched_entry():
    cfg = TrialConfig(mu=(0.0,) * 3, entry_times=(0, 10, 20))
    with pytest.raises(ValueError, match="batched"):
        run_study(cfg, "batch_bh", 10, 1)
    with pytest.raises(ValueError):
        run_studies(cfg, [], 10, 1)
    with pytest.raises(ValueError):
        run_studies(cfg, ["lond"], 0, 1)


def test_global_null_has_no_power_metrics():
    cfg = TrialConfig(mu=(0.0,) * 3, entry_times=(0, 10, 20))
    s = run_study(cfg, "lond", 50, 1)
    assert s.sensitivity is None and s.disjunctive_power is None
    assert s.fwer.value == s.fdr.value
    assert [name for name, _ in s.items()] == ["fwer", "fdr"]


def test_uncorrected_global_null_fwer_small_run():
    cfg = TrialConfig(mu=(0.0,) * 5, entry_times=materialize_entry("fully_seq", 5).times)
    s = run_study(cfg, "uncorrected", 2000, 5)
    target = 1 - 0.975 ** 5
    assert abs(s.fwer.value - target) <= 4 * s.fwer.mc_se


def test_common_random_numbers():
    # the same trials are used for every procedure, so LOND rejects at least what Bonferroni does
    cfg = TrialConfig(mu=(0.5, 0.0, 0.5, 0.0, 0.0), entry_times=(0, 10, 20, 30, 40))
    res = run_studies(cfg, ["bonferroni", "lond"], 300, 9)
    assert res["lond"].sensitivity.value >= res["bonferroni"].sensitivity.value
    alone = run_study(cfg, "lond", 300, 9)
    assert alone == res["lond"]


def test_random_means_are_redrawn():
    cfg = TrialConfig(mu=(0.0,) * 5, entry_times=(0, 10, 20, 30, 40))
    s = run_study(cfg, "uncorrected", 400, 2, "x", MeanSpec("fixed_random", 2))
    assert 0 < s.sensitivity.value < 1
    assert s.fdr.value < s.fwer.value


@pytest.mark.slow
def test_result_independent_of_worker_count():
    cfg = TrialConfig(mu=(0.0,) * 10, entry_times=materialize_entry("batch5", 10).times)
    procs = ["lond", "saffron", "batch_stbh"]
    spec = MeanSpec("fixed_random", 3)
    one = run_studies(cfg, procs, 200, 4, "w", spec, workers=1)
    three = run_studies(cfg, procs, 200, 4, "w", spec, workers=3)
    assert one == three


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31), k=st.integers(1, 6))
def test_estimates_in_unit_interval(seed, k):
    cfg = TrialConfig(mu=tuple(0.5 * (i % 2) for i in range(k)),
                      entry_times=tuple(5 * i for i in range(k)))
    res = run_studies(cfg, ["lond", "saffron", "addis", "bh"], 20, seed)
    for summary in res.values():
        for _, est in summary.items():
            assert 0.0 <= est.value <= 1.0
            assert est.mc_se >= 0.0 and not math.isnan(est.mc_se)
