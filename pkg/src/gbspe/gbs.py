"""The tuned GBS output distribution.

The distribution over photon patterns for a scaled covariance tB is
P(I) = (d_t / I!) Haf((tB)_I)^2 with d_t = prod sqrt(1 - t^2 lambda^2).
The scaling t is solved so the mean photon number equals 2K; the desk-scale
sampler is an exact categorical over the degree-2K slice plus one OTHER
bucket (coefficients vanish off the slice, so lumping is exact).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InternalInconsistencyError
from .hafnian import HafnianCache, batch_hafnians_degree
from .multiindex import enumerate_degree, multiindex_factorial

OTHER = "OTHER"


def mean_photon_number(eigenvalues, t: float) -> float:
    """sum t^2 l^2 / (1 - t^2 l^2); requires t * max|l| < 1."""
    lam = np.asarray(eigenvalues, dtype=float)
    x = (t * lam) ** 2
    if t <= 0.0 or np.any(x >= 1.0):
        raise ValueError(f"scaling t = {t} outside (0, 1/lambda_max)")
    return float(np.sum(x / (1.0 - x)))


def normalization(eigenvalues, t: float) -> float:
    """d_t = prod sqrt(1 - t^2 lambda^2)."""
    lam = np.asarray(eigenvalues, dtype=float)
    x = (t * lam) ** 2
    if np.any(x >= 1.0):
        raise ValueError(f"scaling t = {t} outside the admissible range")
    return float(np.prod(np.sqrt(1.0 - x)))


def solve_scaling(eigenvalues, target_mean: float, rel_tol: float = 1e-12) -> float:
    """Find t in (0, 1/lambda_max) with mean photon number = target.

    The mean is continuous and strictly increasing in t, so a coarse grid
    bracket followed by bisection always converges.
    """
    if target_mean <= 0.0:
        raise ValueError("target mean photon number must be positive")
    lam = np.asarray(eigenvalues, dtype=float)
    lam_max = float(np.max(np.abs(lam)))
    if lam_max <= 0.0:
        raise ValueError("all eigenvalues are zero; mean photon number is identically 0")
    t_sup = 1.0 / lam_max

    def residual(t):
        return mean_photon_number(lam, t) - target_mean

    # grid bracket
    grid = np.linspace(0.0, 1.0, 65)[1:-1] * t_sup
    lo, hi = None, None
    prev = grid[0]
    if residual(prev) >= 0.0:
        lo, hi = 1e-300, prev
    else:
        for t in grid[1:]:
            if residual(t) >= 0.0:
                lo, hi = prev, t
                break
            prev = t
        if lo is None:
            lo, hi = prev, t_sup * (1.0 - 1e-15)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if residual(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rel_tol * mid * 1e-4:
            break
    t = 0.5 * (lo + hi)
    if abs(residual(t)) > 1e-10 * target_mean:
        raise InternalInconsistencyError(
            f"bisection failed: residual {residual(t)} at t = {t}"
        )
    return t


def degree_mass_closed_form(eigenvalues, t: float, half_degree: int) -> float:
    """Total probability of |I| = 2K under P_{tB}, in closed form.

    d_t * sum over compositions k_1+...+k_N = K of
    prod (2k_l)! / (4^{k_l} (k_l!)^2) * (t lambda_l)^{2 k_l}.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    d_t = normalization(lam, t)
    mu_sq = (t * lam) ** 2
    n = len(lam)
    total = 0.0
    for comp in enumerate_degree(n, half_degree):
        term = 1.0
        for l, k in enumerate(comp):
            term *= (
                math.factorial(2 * k)
                / (4.0**k * math.factorial(k) ** 2)
                * mu_sq[l] ** k
            )
        total += term
    return d_t * total


@dataclass(frozen=True)
class GbsProgram:
    """A covariance spectrum with its tuned scaling and normalization."""

    eigenvalues: np.ndarray  # descending
    scaling: float
    d_t: float
    target_mean_photons: float

    @property
    def mean_residual(self) -> float:
        return mean_photon_number(self.eigenvalues, self.scaling) - self.target_mean_photons


def tune_program(eigenvalues, half_degree: int) -> GbsProgram:
    """Solve the scaling so the mean photon number equals 2K."""
    lam = np.asarray(eigenvalues, dtype=float)
    target = 2.0 * half_degree
    t = solve_scaling(lam, target)
    return GbsProgram(lam, t, normalization(lam, t), target)


@dataclass(frozen=True)
class DegreeSampler:
    """Exact categorical distribution over {|I| = 2K} plus an OTHER bucket."""

    patterns: tuple
    probabilities: np.ndarray
    other_mass: float

    @property
    def degree_mass(self) -> float:
        return float(np.sum(self.probabilities))


@dataclass(frozen=True)
class SampleTally:
    n: int
    counts: np.ndarray  # aligned with the sampler's patterns
    other_count: int


def build_degree_sampler(program: GbsProgram, basis: np.ndarray, half_degree: int,
                         cache: HafnianCache | None = None) -> DegreeSampler:
    """p_I = (d_t / I!) t^{2K} Haf(B_I)^2 over the canonical pattern order."""
    covariance = (basis * program.eigenvalues) @ basis.T
    hafs = batch_hafnians_degree(covariance, half_degree, cache)
    patterns = enumerate_degree(len(program.eigenvalues), 2 * half_degree)
    t_pow = program.scaling ** (2 * half_degree)
    probs = np.array(
        [program.d_t / multiindex_factorial(p) * t_pow * hafs[p] ** 2 for p in patterns]
    )
    other = 1.0 - float(np.sum(probs))
    if other < -1e-10:
        raise InternalInconsistencyError(f"other_mass = {other} < 0")
    return DegreeSampler(patterns, probs, max(other, 0.0))


def draw_tally(sampler: DegreeSampler, rng: np.random.Generator, n: int) -> SampleTally:
    """n categorical draws via inverse CDF on the canonical pattern order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    cum = np.cumsum(sampler.probabilities)
    uniforms = rng.random(n)
    slots = np.searchsorted(cum, uniforms, side="right")
    counts = np.bincount(slots, minlength=len(sampler.patterns) + 1)
    return SampleTally(n, counts[: len(sampler.patterns)].copy(), int(counts[-1]))
