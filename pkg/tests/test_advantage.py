import math

import pytest

from gbspe.advantage import (AdvantageConfig, MODE_GBSI, MODE_GBSP, NORM_RAW_CN,
                             advantage_trial, efficiency_ratio_summary,
                             estimate_percentage, estimate_side_cn, sweep)
from gbspe.errors import BudgetExceededError
from gbspe.linalg import ProblemShape
from gbspe.rng import derive_rng


def small_config(**overrides):
    base = dict(shape=ProblemShape(2, 1), mode=MODE_GBSI, n1=4, n2=6, seed=11)
    base.update(overrides)
    return AdvantageConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(mode="bogus")
    with pytest.raises(ValueError):
        small_config(n1=0)
    with pytest.raises(ValueError):
        small_config(normalization="bogus")


def test_single_mode_gbsp_ratio_closed_form():
    # N=1, K=1: V_mc = 2 lam^2 and V_gbsp = lam^2 (3 sqrt(3) - 1) / 4, so the
    # ratio is 8 / (3 sqrt(3) - 1) > 1 for every draw and the indicator is 1.
    expected = 8.0 / (3.0 * math.sqrt(3.0) - 1.0)
    rng = derive_rng(21, 0, 0)
    for _ in range(5):
        record = advantage_trial(rng, ProblemShape(1, 1), MODE_GBSP)
        assert record.ratio == pytest.approx(expected, rel=1e-10)
        assert record.beats_mc == 1
        assert not record.skipped


def test_estimate_percentage_structure():
    config = small_config()
    result = estimate_percentage(config)
    assert 0.0 <= result.percentage <= 1.0
    assert len(result.records) == config.n1 * config.n2
    assert len(result.trace) == config.n1
    assert result.trace[-1] == pytest.approx(result.percentage, rel=1e-12)
    assert result.stderr >= 0.0


def test_estimate_percentage_deterministic():
    a = estimate_percentage(small_config())
    b = estimate_percentage(small_config())
    assert a.percentage == b.percentage
    assert a.stderr == b.stderr
    assert all(x.ratio == y.ratio for x, y in zip(a.records, b.records))


def test_determinism_independent_of_thread_count(monkeypatch):
    monkeypatch.setenv("GBSPE_THREADS", "1")
    serial = estimate_percentage(small_config())
    monkeypatch.setenv("GBSPE_THREADS", "3")
    threaded = estimate_percentage(small_config())
    assert serial.percentage == threaded.percentage
    assert [r.ratio for r in serial.records] == [r.ratio for r in threaded.records]


def test_raw_cn_normalization_runs():
    result = estimate_percentage(small_config(normalization=NORM_RAW_CN))
    assert result.percentage >= 0.0
    c_n = estimate_side_cn(ProblemShape(2, 1), 11)
    # N=2: E|l1-l2| over the unit square is 1/3, so c_2 is near 3.
    assert c_n == pytest.approx(3.0, rel=0.05)


def test_budget_refusal():
    with pytest.raises(BudgetExceededError):
        estimate_percentage(small_config(shape=ProblemShape(3, 8), n1=1, n2=1))


def test_efficiency_ratio_summary_counts():
    result = estimate_percentage(small_config())
    summary = efficiency_ratio_summary(result.records)
    kept = [r for r in result.records if not r.skipped and math.isfinite(r.ratio)]
    assert summary["count"] == len(kept)
    wins = summary["gbs_wins"]["count"] + summary["mc_wins"]["count"]
    assert wins == len([r for r in result.records
                        if not r.skipped and math.isfinite(r.ratio)])
    assert sum(summary["gbs_wins"]["log10_bin_counts"]) == summary["gbs_wins"]["count"]
    assert len(summary["deciles"]) == 11
    assert summary["deciles"] == sorted(summary["deciles"])


def test_sweep_rows_and_budget_skip():
    cells = [small_config(n1=2, n2=3),
             small_config(shape=ProblemShape(3, 8), n1=1, n2=1)]
    seen = []
    rows = sweep(cells, sink=seen.append)
    assert len(rows) == 2 and seen == rows
    assert rows[0]["status"] == "ok"
    assert rows[1]["status"] == "skipped"
    assert "budget" in rows[1]["note"] or "operations" in rows[1]["note"]
    direct = estimate_percentage(small_config(n1=2, n2=3))
    assert rows[0]["percentage"] == direct.percentage


def test_sweep_empty():
    assert sweep([]) == []


def test_gbsi_ratio_grows_with_k():
    # The V_mc/V_gbs ratio for GBS-I should reach orders of magnitude at
    # larger K; the (3, 8) cell is over budget, so check the proxy at K=4.
    result = estimate_percentage(AdvantageConfig(
        ProblemShape(3, 4), MODE_GBSI, n1=10, n2=30, seed=21))
    summary = efficiency_ratio_summary(result.records)
    assert summary["median_log10"] > 2.0
