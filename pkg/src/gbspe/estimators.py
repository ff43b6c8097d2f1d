"""Estimators, exact variance functionals and guaranteed sample sizes.

Three routes to the two targets:

* GBS-P estimates mu = sum a_I Haf(B_I) from square roots of empirical
  pattern frequencies (biased; variance is the leading-order asymptotic).
* GBS-I estimates mu2 = sum a_I Haf(B_I)^2 by importance weights (unbiased).
* Plain MC averages f over Gaussian draws (unbiased baseline), for either
  target; the mu2 case draws from the doubled covariance B (+) B.

All variance functionals are exact finite sums over the degree-2K slice,
so the guaranteed sizes n = V / (delta eps^2 mu^2) are computed without
sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError, IllPosedError
from .gbs import (GbsProgram, SampleTally, build_degree_sampler, draw_tally,
                  normalization, solve_scaling, tune_program)
from .hafnian import HafnianCache, check_nonnegative, hafnian_multiindex
from .linalg import ProblemInstance
from .multiindex import add, multiindex_factorial

DEFAULT_PAIR_BUDGET = 1e8
ILL_POSED_REL_TOL = 1e-12


@dataclass(frozen=True)
class AccuracySpec:
    eps: float
    delta: float

    def __post_init__(self):
        if not (0.0 < self.eps < 1.0 and 0.0 < self.delta < 1.0):
            raise ValueError("eps and delta must lie in (0, 1)")


@dataclass(frozen=True)
class VarianceReport:
    kind: str  # "haf" or "hafsq"
    mu: float
    v_gbs: float
    v_mc: float
    n_gbs: int
    n_mc: int
    scaling: float
    asymptotic: bool  # True for GBS-P (leading-order variance)


# ---------------------------------------------------------------------------
# shared per-instance precomputation


def slice_hafnians(instance: ProblemInstance, cache: HafnianCache | None = None) -> np.ndarray:
    b = instance.covariance
    return np.array([hafnian_multiindex(b, p, cache) for p in instance.patterns])


def slice_factorials(instance: ProblemInstance) -> np.ndarray:
    return np.array([multiindex_factorial(p) for p in instance.patterns], dtype=float)


def pair_budget_ops(n_vars: int, half_degree: int) -> float:
    """Weighted hafnian work for the V^MC pair sum at shape (N, K).

    One hafnian of size m is weighted m 2^(m/2); the pair sum needs one per
    distinct J + J' (all of size 4K).
    """
    m = 4 * half_degree
    distinct = math.comb(m + n_vars - 1, n_vars - 1)
    return distinct * m * 2.0 ** (m / 2)


def pair_hafnian_matrix(instance: ProblemInstance, cache: HafnianCache | None = None,
                        budget: float = DEFAULT_PAIR_BUDGET) -> np.ndarray:
    """Matrix of Haf(B_{J+J'}) over the canonical pattern order."""
    shape = instance.shape
    ops = pair_budget_ops(shape.n_vars, shape.half_degree)
    if ops > budget:
        raise BudgetExceededError(
            f"V^MC pair sum at (N={shape.n_vars}, K={shape.half_degree}) needs "
            f"~{ops:.3g} weighted hafnian operations (budget {budget:.3g})",
            estimated_ops=ops,
        )
    b = instance.covariance
    patterns = instance.patterns
    distinct: dict = {}
    size = len(patterns)
    out = np.empty((size, size))
    for i in range(size):
        for j in range(i, size):
            key = add(patterns[i], patterns[j])
            value = distinct.get(key)
            if value is None:
                value = hafnian_multiindex(b, key, cache)
                distinct[key] = value
            out[i, j] = out[j, i] = value
    return out


# ---------------------------------------------------------------------------
# exact targets


def mu_haf(instance: ProblemInstance, cache: HafnianCache | None = None) -> float:
    return float(instance.coefficients @ slice_hafnians(instance, cache))


def mu_hafsq(instance: ProblemInstance, cache: HafnianCache | None = None) -> float:
    return float(instance.coefficients @ slice_hafnians(instance, cache) ** 2)


# ---------------------------------------------------------------------------
# estimators


def gbsp_alphas(instance: ProblemInstance, program: GbsProgram,
                cache: HafnianCache | None = None) -> np.ndarray:
    """alpha_J = a_J t^{-K} sigma_J sqrt(J! / d_t)."""
    hafs = slice_hafnians(instance, cache)
    signs = np.where(np.abs(hafs) <= 1e-14, 0.0, np.sign(hafs))
    facts = slice_factorials(instance)
    t_pow = program.scaling ** (-instance.shape.half_degree)
    return instance.coefficients * t_pow * signs * np.sqrt(facts / program.d_t)


def gbsp_estimate(instance: ProblemInstance, program: GbsProgram, tally: SampleTally,
                  cache: HafnianCache | None = None) -> float:
    alphas = gbsp_alphas(instance, program, cache)
    freqs = tally.counts / tally.n
    return float(alphas @ np.sqrt(freqs))


def gbsi_weights(instance: ProblemInstance, program: GbsProgram) -> np.ndarray:
    """w_I = (I! / d_t) a_I t^{-2K} for each slice pattern."""
    facts = slice_factorials(instance)
    t_pow = program.scaling ** (-2 * instance.shape.half_degree)
    return facts / program.d_t * instance.coefficients * t_pow


def gbsi_estimate(instance: ProblemInstance, program: GbsProgram, tally: SampleTally,
                  cache: HafnianCache | None = None) -> float:
    weights = gbsi_weights(instance, program)
    return float(tally.counts @ weights) / tally.n


def _colored_gaussian(instance: ProblemInstance, rng: np.random.Generator, n: int) -> np.ndarray:
    coloring = instance.basis * np.sqrt(instance.eigenvalues)
    return rng.standard_normal((n, instance.shape.n_vars)) @ coloring.T


def _eval_monomials(samples: np.ndarray, patterns) -> np.ndarray:
    """Matrix of x^I values, one column per pattern."""
    n, _ = samples.shape
    out = np.empty((n, len(patterns)))
    for j, pattern in enumerate(patterns):
        acc = np.ones(n)
        for k, power in enumerate(pattern):
            if power:
                acc = acc * samples[:, k] ** power
        out[:, j] = acc
    return out


def mc_estimate_haf(instance: ProblemInstance, rng: np.random.Generator, n: int) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    samples = _colored_gaussian(instance, rng, n)
    values = _eval_monomials(samples, instance.patterns) @ instance.coefficients
    return float(np.mean(values))


def mc_estimate_hafsq(instance: ProblemInstance, rng: np.random.Generator, n: int) -> float:
    """f(p, q) = sum a_I p^I q^I with (p, q) ~ N(0, B (+) B)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p = _colored_gaussian(instance, rng, n)
    q = _colored_gaussian(instance, rng, n)
    values = (
        _eval_monomials(p, instance.patterns) * _eval_monomials(q, instance.patterns)
    ) @ instance.coefficients
    return float(np.mean(values))


# ---------------------------------------------------------------------------
# variance functionals


def variance_gbsp(instance: ProblemInstance, program: GbsProgram,
                  cache: HafnianCache | None = None) -> float:
    """(1/4) ((t^{-2K}/d_t) sum a^2 J! - mu^2): leading-order MSE x n."""
    facts = slice_factorials(instance)
    t_pow = program.scaling ** (-2 * instance.shape.half_degree)
    mu = mu_haf(instance, cache)
    value = 0.25 * (t_pow / program.d_t * float(instance.coefficients**2 @ facts) - mu * mu)
    return check_nonnegative(value, "V^GBS-P")


def variance_gbsi(instance: ProblemInstance, program: GbsProgram,
                  cache: HafnianCache | None = None) -> float:
    """(t^{-2K}/d_t) sum a^2 J! Haf(B_J)^2 - mu2^2 (the categorical variance)."""
    facts = slice_factorials(instance)
    hafs = slice_hafnians(instance, cache)
    t_pow = program.scaling ** (-2 * instance.shape.half_degree)
    mu2 = float(instance.coefficients @ hafs**2)
    second = t_pow / program.d_t * float((instance.coefficients**2 * facts) @ hafs**2)
    return check_nonnegative(second - mu2 * mu2, "V^GBS-I")


def variance_mc_haf(instance: ProblemInstance, cache: HafnianCache | None = None,
                    budget: float = DEFAULT_PAIR_BUDGET,
                    pair_matrix: np.ndarray | None = None) -> float:
    if pair_matrix is None:
        pair_matrix = pair_hafnian_matrix(instance, cache, budget)
    a = instance.coefficients
    mu = mu_haf(instance, cache)
    return check_nonnegative(float(a @ pair_matrix @ a) - mu * mu, "V^MC_haf")


def variance_mc_hafsq(instance: ProblemInstance, cache: HafnianCache | None = None,
                      budget: float = DEFAULT_PAIR_BUDGET,
                      pair_matrix: np.ndarray | None = None) -> float:
    if pair_matrix is None:
        pair_matrix = pair_hafnian_matrix(instance, cache, budget)
    a = instance.coefficients
    mu2 = mu_hafsq(instance, cache)
    return check_nonnegative(float(a @ (pair_matrix**2) @ a) - mu2 * mu2, "V^MC_hafsq")


def guaranteed_sample_size(variance: float, mu: float, spec: AccuracySpec) -> int:
    """n = ceil(V / (delta eps^2 mu^2)), at least 1."""
    if abs(mu) <= ILL_POSED_REL_TOL * math.sqrt(max(variance, 0.0)):
        raise IllPosedError(f"target mean {mu} too close to 0 relative to sqrt(V)")
    if variance <= 0.0:
        return 1
    return max(1, math.ceil(variance / (spec.delta * spec.eps**2 * mu * mu)))


def variance_report(instance: ProblemInstance, kind: str, spec: AccuracySpec,
                    cache: HafnianCache | None = None,
                    budget: float = DEFAULT_PAIR_BUDGET) -> VarianceReport:
    """Full method comparison for one instance: mu, both V's, both n's."""
    if cache is None:
        cache = HafnianCache()
    program = tune_program(instance.eigenvalues, instance.shape.half_degree)
    if kind == "haf":
        mu = mu_haf(instance, cache)
        v_gbs = variance_gbsp(instance, program, cache)
        v_mc = variance_mc_haf(instance, cache, budget)
    elif kind == "hafsq":
        mu = mu_hafsq(instance, cache)
        v_gbs = variance_gbsi(instance, program, cache)
        v_mc = variance_mc_hafsq(instance, cache, budget)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return VarianceReport(
        kind=kind,
        mu=mu,
        v_gbs=v_gbs,
        v_mc=v_mc,
        n_gbs=guaranteed_sample_size(v_gbs, mu, spec),
        n_mc=guaranteed_sample_size(v_mc, mu, spec),
        scaling=program.scaling,
        asymptotic=(kind == "haf"),
    )


# ---------------------------------------------------------------------------
# optimal scaling certificate


def log_weight_profile(eigenvalues, half_degree: int, t: float) -> float:
    """gamma(t) = log(t^{-2K} / d_t); minimized at the tuned scaling."""
    return -2.0 * half_degree * math.log(t) - math.log(normalization(eigenvalues, t))


def optimal_t_certificate(eigenvalues, half_degree: int, grid_points: int = 200):
    """Return (t0, grid, gamma values) with gamma(t0) <= gamma on the grid."""
    lam = np.asarray(eigenvalues, dtype=float)
    t0 = solve_scaling(lam, 2.0 * half_degree)
    t_sup = 1.0 / float(np.max(np.abs(lam)))
    grid = (np.arange(grid_points) + 0.5) / grid_points * t_sup
    gammas = np.array([log_weight_profile(lam, half_degree, t) for t in grid])
    gamma0 = log_weight_profile(lam, half_degree, t0)
    if gamma0 > float(np.min(gammas)) + 1e-12:
        raise AssertionError("tuned scaling is not the profile minimum")
    return t0, grid, gammas


def gamma_derivative(eigenvalues, half_degree: int, t: float) -> float:
    """gamma'(t) = -2K/t + t sum lambda^2 / (1 - t^2 lambda^2)."""
    lam = np.asarray(eigenvalues, dtype=float)
    return float(-2.0 * half_degree / t + t * np.sum(lam**2 / (1.0 - (t * lam) ** 2)))


# ---------------------------------------------------------------------------
# empirical MSE (simulation check of the variance formulas)


def empirical_mse(instance: ProblemInstance, estimator: str, n: int, replicas: int,
                  rng: np.random.Generator, cache: HafnianCache | None = None) -> float:
    """Mean squared error of the named estimator over independent replicas."""
    if cache is None:
        cache = HafnianCache()
    errors = np.empty(replicas)
    if estimator in ("gbsp", "gbsi"):
        program = tune_program(instance.eigenvalues, instance.shape.half_degree)
        sampler = build_degree_sampler(program, instance.basis,
                                       instance.shape.half_degree, cache)
        if estimator == "gbsp":
            alphas = gbsp_alphas(instance, program, cache)
            target = mu_haf(instance, cache)
        else:
            weights = gbsi_weights(instance, program)
            target = mu_hafsq(instance, cache)
        for r in range(replicas):
            tally = draw_tally(sampler, rng, n)
            if estimator == "gbsp":
                est = float(alphas @ np.sqrt(tally.counts / n))
            else:
                est = float(tally.counts @ weights) / n
            errors[r] = est - target
    elif estimator == "mc_haf":
        target = mu_haf(instance, cache)
        for r in range(replicas):
            errors[r] = mc_estimate_haf(instance, rng, n) - target
    elif estimator == "mc_hafsq":
        target = mu_hafsq(instance, cache)
        for r in range(replicas):
            errors[r] = mc_estimate_hafsq(instance, rng, n) - target
    else:
        raise ValueError(f"unknown estimator {estimator!r}")
    return float(np.mean(errors**2))


# ---------------------------------------------------------------------------
# hybrid per-degree planner


@dataclass(frozen=True)
class SliceSpec:
    """Caller-supplied per-degree data (pilot estimation is the caller's job)."""

    degree: int  # k
    mu_k: float
    v_mc: float
    v_gbs: float


@dataclass(frozen=True)
class SlicePlan:
    degree: int
    eps_k: float
    delta_k: float
    n_mc: int
    n_gbs: int
    choice: str  # "mc" or "gbs"
    ill_posed: bool


@dataclass(frozen=True)
class HybridPlan:
    slices: tuple
    total_mc: int
    total_gbs: int
    total_hybrid: int


def hybrid_plan(slices, spec: AccuracySpec) -> HybridPlan:
    """Per-degree union-bound split, choosing the cheaper method per slice.

    Each slice k gets eps_k = (eps / K) * |mu| / |mu_k| and
    delta_k = 1 - (1 - delta) / K, where K is the number of slices and
    mu = sum mu_k.
    """
    n_slices = len(slices)
    if n_slices == 0:
        raise ValueError("need at least one slice")
    mu_total = sum(s.mu_k for s in slices)
    delta_k = 1.0 - (1.0 - spec.delta) / n_slices
    plans = []
    total_mc = total_gbs = total_hybrid = 0
    for s in slices:
        if s.mu_k == 0.0:
            plans.append(SlicePlan(s.degree, math.inf, delta_k, 0, 0, "mc", True))
            continue
        eps_k = spec.eps / n_slices * abs(mu_total) / abs(s.mu_k)
        sub = AccuracySpec(min(eps_k, 1.0 - 1e-15), delta_k)
        n_mc = guaranteed_sample_size(s.v_mc, s.mu_k, sub)
        n_gbs = guaranteed_sample_size(s.v_gbs, s.mu_k, sub)
        choice = "gbs" if n_gbs <= n_mc else "mc"
        plans.append(SlicePlan(s.degree, eps_k, delta_k, n_mc, n_gbs, choice, False))
        total_mc += n_mc
        total_gbs += n_gbs
        total_hybrid += min(n_mc, n_gbs)
    return HybridPlan(tuple(plans), total_mc, total_gbs, total_hybrid)
