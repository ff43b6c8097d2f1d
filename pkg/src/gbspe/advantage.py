"""Monte-Carlo sweep over the problem space.

Estimates the fraction of (coefficient sphere) x (covariance matrices with
spectrum in (0,1)) where a GBS estimator needs fewer guaranteed samples
than plain MC.  Outer draws sample a covariance (Haar basis, uniform
eigenvalues, Vandermonde weight); inner draws sample coefficient vectors on
the sphere.  All hafnians for a given covariance are computed once and
shared across the inner draws.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError, GbspeError
from .estimators import DEFAULT_PAIR_BUDGET, pair_budget_ops
from .gbs import solve_scaling, normalization
from .hafnian import HafnianCache, hafnian_multiindex
from .linalg import ProblemShape, sample_haar_orthogonal, sample_unit_sphere, vandermonde_abs
from .multiindex import add, enumerate_degree, multiindex_factorial
from .rng import NS_OUTER, NS_SIDE, derive_rng

MODE_GBSP = "gbsp"  # compare V^GBS-P vs V^MC for the mu_haf target
MODE_GBSI = "gbsi"  # compare V^GBS-I vs V^MC for the mu_hafsq target
NORM_SELF = "self_normalized"
NORM_RAW_CN = "raw_times_cN"

ILL_POSED_REL = 1e-12


@dataclass(frozen=True)
class AdvantageConfig:
    shape: ProblemShape
    mode: str  # MODE_GBSP or MODE_GBSI
    n1: int  # outer covariance draws
    n2: int  # inner sphere draws per covariance
    seed: int
    budget: float = DEFAULT_PAIR_BUDGET
    normalization: str = NORM_SELF

    def __post_init__(self):
        if self.mode not in (MODE_GBSP, MODE_GBSI):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.normalization not in (NORM_SELF, NORM_RAW_CN):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("n1 and n2 must be >= 1")


@dataclass(frozen=True)
class TrialRecord:
    outer: int
    inner: int
    vandermonde: float
    v_mc: float
    v_gbs: float
    beats_mc: int  # H(V_mc - V_gbs)
    ratio: float  # V_mc / V_gbs
    skipped: bool


@dataclass(frozen=True)
class AdvantageResult:
    percentage: float
    stderr: float
    records: tuple
    trace: tuple  # running estimate after each outer draw
    skipped: int
    config: AdvantageConfig


@dataclass(frozen=True)
class _OuterData:
    """Per-covariance precomputation shared by the inner sphere draws."""

    weight: float
    scaling: float
    d_t: float
    slice_hafs: np.ndarray
    slice_facts: np.ndarray
    pair_matrix: np.ndarray


def _prepare_outer(rng, shape: ProblemShape, budget: float) -> _OuterData:
    n, k = shape.n_vars, shape.half_degree
    ops = pair_budget_ops(n, k)
    if ops > budget:
        raise BudgetExceededError(
            f"cell (N={n}, K={k}) needs ~{ops:.3g} weighted hafnian operations "
            f"(budget {budget:.3g})",
            estimated_ops=ops,
        )
    basis = sample_haar_orthogonal(rng, n)
    lam = rng.uniform(0.0, 1.0, size=n)
    weight = vandermonde_abs(lam)
    covariance = (basis * lam) @ basis.T
    t = solve_scaling(lam, 2.0 * k)
    d_t = normalization(lam, t)

    cache = HafnianCache()
    patterns = enumerate_degree(n, 2 * k)
    slice_hafs = np.array([hafnian_multiindex(covariance, p, cache) for p in patterns])
    slice_facts = np.array([multiindex_factorial(p) for p in patterns], dtype=float)
    size = len(patterns)
    pair = np.empty((size, size))
    distinct: dict = {}
    for i in range(size):
        for j in range(i, size):
            key = add(patterns[i], patterns[j])
            value = distinct.get(key)
            if value is None:
                value = hafnian_multiindex(covariance, key, cache)
                distinct[key] = value
            pair[i, j] = pair[j, i] = value
    return _OuterData(weight, t, d_t, slice_hafs, slice_facts, pair)


def _inner_records(outer_index: int, data: _OuterData, coeffs: np.ndarray,
                   mode: str, half_degree: int) -> list:
    """Vectorized V comparison for a block of sphere draws (rows of coeffs)."""
    t_pow = data.scaling ** (-2 * half_degree)
    if mode == MODE_GBSP:
        mu = coeffs @ data.slice_hafs
        second = np.einsum("ij,jk,ik->i", coeffs, data.pair_matrix, coeffs)
        v_gbs = 0.25 * (t_pow / data.d_t * (coeffs**2 @ data.slice_facts) - mu**2)
    else:
        mu = coeffs @ data.slice_hafs**2
        second = np.einsum("ij,jk,ik->i", coeffs, data.pair_matrix**2, coeffs)
        v_gbs = t_pow / data.d_t * (coeffs**2 @ (data.slice_facts * data.slice_hafs**2)) - mu**2
    v_mc = second - mu**2
    v_mc = np.maximum(v_mc, 0.0)
    v_gbs = np.maximum(v_gbs, 0.0)
    skipped = np.abs(mu) <= ILL_POSED_REL * np.sqrt(np.abs(second))
    beats = (v_mc >= v_gbs).astype(int)
    records = []
    for m in range(coeffs.shape[0]):
        denom = v_gbs[m]
        ratio = v_mc[m] / denom if denom > 0.0 else math.inf
        records.append(
            TrialRecord(outer_index, m, data.weight, float(v_mc[m]), float(v_gbs[m]),
                        int(beats[m]), float(ratio), bool(skipped[m]))
        )
    return records


def advantage_trial(rng, shape: ProblemShape, mode: str,
                    budget: float = DEFAULT_PAIR_BUDGET) -> TrialRecord:
    """One fresh (covariance, coefficient) pair; mostly a testing surface."""
    data = _prepare_outer(rng, shape, budget)
    coeffs = sample_unit_sphere(rng, shape.sphere_dim)[None, :]
    return _inner_records(0, data, coeffs, mode, shape.half_degree)[0]


def _run_outer(config: AdvantageConfig, outer_index: int) -> list:
    rng = derive_rng(config.seed, NS_OUTER, outer_index)
    data = _prepare_outer(rng, config.shape, config.budget)
    coeffs = np.stack(
        [sample_unit_sphere(rng, config.shape.sphere_dim) for _ in range(config.n2)]
    )
    return _inner_records(outer_index, data, coeffs, config.mode,
                          config.shape.half_degree)


def _worker_count() -> int:
    env = os.environ.get("GBSPE_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def estimate_side_cn(shape: ProblemShape, seed: int, draws: int = 20000) -> float:
    """c_N = 1 / E[|Delta|] from an independent eigenvalue stream."""
    rng = derive_rng(seed, NS_SIDE, 0)
    lam = rng.uniform(0.0, 1.0, size=(draws, shape.n_vars))
    weights = np.array([vandermonde_abs(row) for row in lam])
    return 1.0 / float(np.mean(weights))


def estimate_percentage(config: AdvantageConfig) -> AdvantageResult:
    """Run the full outer/inner sweep for one (N, K, mode) cell."""
    workers = _worker_count()
    if workers > 1 and config.n1 > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(lambda l: _run_outer(config, l), range(config.n1)))
    else:
        blocks = [_run_outer(config, l) for l in range(config.n1)]

    records = tuple(r for block in blocks for r in block)
    skipped_total = sum(r.skipped for r in records)

    # per-outer-draw aggregates for the estimate, its trace and the jackknife
    if config.normalization == NORM_SELF:
        num = np.array([sum(r.vandermonde * r.beats_mc for r in b if not r.skipped)
                        for b in blocks])
        den = np.array([sum(r.vandermonde for r in b if not r.skipped) for b in blocks])
    else:
        c_n = estimate_side_cn(config.shape, config.seed)
        num = np.array([c_n * sum(r.vandermonde * r.beats_mc for r in b if not r.skipped)
                        for b in blocks])
        den = np.array([float(len([r for r in b if not r.skipped])) for b in blocks])
    if float(np.sum(den)) == 0.0:
        raise GbspeError("all trials were skipped (ill-posed instances)")

    percentage = float(np.sum(num) / np.sum(den))
    trace = tuple(
        float(np.sum(num[: l + 1]) / max(np.sum(den[: l + 1]), 1e-300))
        for l in range(config.n1)
    )
    # leave-one-outer-out jackknife
    if config.n1 > 1:
        total_num, total_den = np.sum(num), np.sum(den)
        loo = np.array([
            (total_num - num[l]) / max(total_den - den[l], 1e-300)
            for l in range(config.n1)
        ])
        stderr = math.sqrt((config.n1 - 1) / config.n1 * float(np.sum((loo - loo.mean()) ** 2)))
    else:
        stderr = math.inf
    return AdvantageResult(percentage, stderr, records, trace, skipped_total, config)


# ---------------------------------------------------------------------------
# efficiency-ratio summaries

LOG_BIN_EDGES = np.arange(-4.0, 12.0 + 1e-9, 1.0)  # log10 bins, [-4, 12]


def efficiency_ratio_summary(records) -> dict:
    """Deciles and fixed log10 histogram of V_mc / V_gbs, split by indicator."""
    ratios = np.array([r.ratio for r in records if not r.skipped and math.isfinite(r.ratio)])
    summary = {"count": len(ratios)}
    if len(ratios):
        summary["deciles"] = [float(np.quantile(ratios, q / 10)) for q in range(11)]
        summary["median_log10"] = float(np.median(np.log10(np.maximum(ratios, 1e-300))))
    for label, keep in (("gbs_wins", 1), ("mc_wins", 0)):
        subset = np.array([r.ratio for r in records
                           if not r.skipped and r.beats_mc == keep and math.isfinite(r.ratio)])
        logs = np.log10(np.maximum(subset, 1e-300)) if len(subset) else np.empty(0)
        clipped = np.clip(logs, LOG_BIN_EDGES[0], LOG_BIN_EDGES[-1] - 1e-12)
        counts, _ = np.histogram(clipped, bins=LOG_BIN_EDGES)
        summary[label] = {
            "count": int(len(subset)),
            "log10_bin_edges": [float(e) for e in LOG_BIN_EDGES],
            "log10_bin_counts": [int(c) for c in counts],
        }
    return summary


# ---------------------------------------------------------------------------
# grid sweep


def sweep(cells, sink=None) -> list:
    """Run a list of AdvantageConfig cells; over-budget cells are reported
    with status=skipped instead of raising."""
    import time

    rows = []
    for config in cells:
        row = {
            "N": config.shape.n_vars,
            "K": config.shape.half_degree,
            "mode": config.mode,
            "n1": config.n1,
            "n2": config.n2,
            "seed": config.seed,
        }
        start = time.perf_counter()
        try:
            result = estimate_percentage(config)
        except BudgetExceededError as exc:
            row.update(status="skipped", percentage="", stderr="", skipped="",
                       note=str(exc), runtime_sec=time.perf_counter() - start)
        else:
            row.update(status="ok", percentage=result.percentage, stderr=result.stderr,
                       skipped=result.skipped, note="",
                       runtime_sec=time.perf_counter() - start)
        rows.append(row)
        if sink is not None:
            sink(row)
    return rows
