import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from onlinetrial.scenarios import (
    ENTRY_PATTERNS,
    MEAN_PATTERNS,
    MeanSpec,
    StudyGrid,
    enumerate_grid,
    is_batched_entry,
    materialize_entry,
    materialize_means,
    parse_m,
)


def test_staircase_patterns():
    dec = materialize_means(MeanSpec("stair_dec"), 5)
    assert dec.means.tolist() == pytest.approx([-0.4, -0.2, 0.0, 0.2, 0.4])
    assert dec.m == 2
    inc = materialize_means(MeanSpec("stair_inc"), 5)
    # (ceil(K/2) - i + 1) / K is shifted one step up from the mirrored decreasing set
    assert inc.means.tolist() == pytest.approx([0.6, 0.4, 0.2, 0.0, -0.2])
    assert inc.m == 3
    even = materialize_means(MeanSpec("stair_dec"), 4)
    assert even.means.tolist() == pytest.approx([-0.25, 0.0, 0.25, 0.5])


def test_fixed_patterns():
    early = materialize_means(MeanSpec("fixed_early", 2), 5).means
    late = materialize_means(MeanSpec("fixed_late", 2), 5).means
    assert early.tolist() == [0.5, 0.5, 0.0, 0.0, 0.0]
    assert late.tolist() == [0.0, 0.0, 0.0, 0.5, 0.5]
    with pytest.raises(ValueError):
        materialize_means(MeanSpec("fixed_early", 6), 5)
    with pytest.raises(ValueError):
        MeanSpec("fixed_early")
    with pytest.raises(ValueError):
        MeanSpec("wavy")


@given(k=st.integers(1, 30), seed=st.integers(0, 10_000))
def test_random_placements_keep_the_multiset(k, seed):
    rng = np.random.default_rng(seed)
    m = k // 2
    fixed = materialize_means(MeanSpec("fixed_random", m), k, rng)
    assert fixed.m == m and np.count_nonzero(fixed.means == 0.5) == m
    stair = materialize_means(MeanSpec("stair_random"), k, rng)
    ref = materialize_means(MeanSpec("stair_dec"), k)
    assert sorted(stair.means) == pytest.approx(sorted(ref.means))


def test_random_placement_needs_rng():
    with pytest.raises(ValueError):
        materialize_means(MeanSpec("fixed_random", 1), 5)


def test_entry_patterns():
    assert materialize_entry("stagger5", 4).times == (0, 2, 4, 6)
    assert materialize_entry("stagger2", 3).times == (0, 5, 10)
    assert materialize_entry("batch5", 10).times == (0,) * 5 + (10,) * 5
    assert materialize_entry("fully_seq", 3).times == (0, 10, 20)
    assert materialize_entry("all_at_once", 3).times == (0, 0, 0)
    assert materialize_entry("batch2", 4).times == (0, 0, 10, 10)
    with pytest.raises(ValueError):
        materialize_entry("batch5", 7)
    with pytest.raises(ValueError):
        materialize_entry("stagger3", 4)
    with pytest.raises(ValueError):
        materialize_entry("zigzag", 4)


def test_batched_entry_detection():
    assert is_batched_entry((0, 0, 0), 10)
    assert is_batched_entry((0, 0, 10, 10), 10)
    assert is_batched_entry((0,), 10)
    assert not is_batched_entry((0, 10, 20), 10)
    assert not is_batched_entry((0, 0, 5, 5), 10)


def test_parse_m():
    assert parse_m(1, 20) == 1
    assert parse_m("3", 20) == 3
    assert parse_m("K/5+1", 20) == 5
    assert parse_m("2K/5+1", 20) == 9
    assert parse_m("2K/5+1", 5) == 3
    with pytest.raises(ValueError):
        parse_m("K/3", 5)
    with pytest.raises(ValueError):
        parse_m("K**2", 5)


def test_grid_count():
    grid = StudyGrid(k_values=(5,), n_bound_multipliers=(1, 2, 5))
    scenarios = enumerate_grid(grid)
    # global null + 3 fixed placements x 3 values of m + 3 staircases = 13 mean scenarios
    assert len(scenarios) == 13 * len(ENTRY_PATTERNS) * 3
    ids = [s.scenario_id for s in scenarios]
    assert len(set(ids)) == len(ids)
    assert "K05-N025-fully_seq-fixed_early-m03" in ids


def test_staircase_grid_count():
    grid = StudyGrid(k_values=(10,), mean_patterns=("stair_dec", "stair_inc", "stair_random"),
                     entry_patterns=("all_at_once", "batch5", "stagger2", "fully_seq"))
    assert len(enumerate_grid(grid)) == 36


def test_grid_collapses_duplicate_m():
    # for K = 5, m = 1 and "K/5" would both be 1
    grid = StudyGrid(k_values=(5,), n_bound_multipliers=(1,), mean_patterns=("fixed_early",),
                     entry_patterns=("all_at_once",), m_values=(1, "K/5"))
    assert len(enumerate_grid(grid)) == 1


def test_grid_defaults():
    g = StudyGrid()
    assert g.k_values == (5, 10, 15, 20) and g.alpha == 0.025
    assert (g.n, g.r, g.sigma, g.mu0) == (50, 10, 1.0, 0.0)
    assert set(g.mean_patterns) == set(MEAN_PATTERNS)
    with pytest.raises(ValueError):
        StudyGrid(n_bound_multipliers=(0.5,))
