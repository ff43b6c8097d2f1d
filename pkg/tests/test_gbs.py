import math

import numpy as np
import pytest

from gbspe.gbs import (build_degree_sampler, degree_mass_closed_form, draw_tally,
                       mean_photon_number, normalization, solve_scaling,
                       tune_program)
from gbspe.hafnian import HafnianCache, hafnian_multiindex
from gbspe.multiindex import enumerate_degree, multiindex_factorial
from gbspe.rng import derive_rng

from conftest import random_instance


def test_mean_photon_number_monotone():
    lam = np.array([0.9, 0.5, 0.2])
    values = [mean_photon_number(lam, t) for t in (0.2, 0.5, 0.9, 1.05)]
    assert all(b > a for a, b in zip(values, values[1:]))
    with pytest.raises(ValueError):
        mean_photon_number(lam, 1.0 / 0.9)


def test_normalization_range():
    lam = np.array([0.8, 0.3])
    d = normalization(lam, 1.0)
    assert 0.0 < d < 1.0
    assert normalization(lam, 1e-12) == pytest.approx(1.0)


def test_solve_scaling_single_mode_closed_form():
    # N=1, lambda=0.5, target m=2: x/(1-x)=2 -> (t*0.5)^2 = 2/3.
    t = solve_scaling([0.5], 2.0)
    assert t == pytest.approx(2.0 * math.sqrt(2.0 / 3.0), rel=1e-11)


def test_solve_scaling_residual_tiny():
    lam = np.array([0.93, 0.41, 0.07])
    for k in (1, 2, 4):
        t = solve_scaling(lam, 2.0 * k)
        assert abs(mean_photon_number(lam, t) - 2.0 * k) <= 1e-10 * 2.0 * k


def test_solve_scaling_rejects_degenerate():
    with pytest.raises(ValueError):
        solve_scaling([0.0, 0.0], 2.0)
    with pytest.raises(ValueError):
        solve_scaling([0.5], 0.0)


def test_tune_program_hits_target():
    program = tune_program(np.array([0.6, 0.2]), 2)
    assert abs(program.mean_residual) <= 1e-10 * 4.0
    assert program.d_t == pytest.approx(
        normalization(program.eigenvalues, program.scaling))


def enumerated_degree_mass(instance, program):
    """Brute-force oracle: sum (d_t/I!) Haf((tB)_I)^2 over |I| = 2K."""
    cov = program.scaling * instance.covariance
    total = 0.0
    for index in enumerate_degree(instance.shape.n_vars,
                                  2 * instance.shape.half_degree):
        haf = hafnian_multiindex(cov, index)
        total += program.d_t / multiindex_factorial(index) * haf**2
    return total


@pytest.mark.parametrize("seed,n,k", [(0, 2, 1), (1, 3, 2), (2, 2, 3), (3, 4, 1)])
def test_degree_mass_identity_and_bound(seed, n, k):
    instance = random_instance(seed, n, k)
    program = tune_program(instance.eigenvalues, k)
    closed = degree_mass_closed_form(instance.eigenvalues, program.scaling, k)
    assert closed == pytest.approx(enumerated_degree_mass(instance, program),
                                   rel=1e-9)
    assert closed <= 1.0 / math.sqrt(2.0 * math.pi) + 1e-9


def test_sampler_probabilities(rng):
    instance = random_instance(4, 3, 2)
    program = tune_program(instance.eigenvalues, 2)
    sampler = build_degree_sampler(program, instance.basis, 2, HafnianCache())
    assert np.all(sampler.probabilities >= 0.0)
    assert 0.0 <= sampler.other_mass <= 1.0
    assert sampler.degree_mass + sampler.other_mass == pytest.approx(1.0)
    assert sampler.degree_mass == pytest.approx(
        degree_mass_closed_form(instance.eigenvalues, program.scaling, 2),
        rel=1e-10)


def test_tally_deterministic_and_counts():
    instance = random_instance(5, 2, 1)
    program = tune_program(instance.eigenvalues, 1)
    sampler = build_degree_sampler(program, instance.basis, 1)
    t1 = draw_tally(sampler, derive_rng(3, 2, 0), 5000)
    t2 = draw_tally(sampler, derive_rng(3, 2, 0), 5000)
    assert np.array_equal(t1.counts, t2.counts)
    assert t1.other_count == t2.other_count
    assert t1.counts.sum() + t1.other_count == 5000


def test_tally_matches_multinomial_within_4_sigma():
    instance = random_instance(6, 2, 1)
    program = tune_program(instance.eigenvalues, 1)
    sampler = build_degree_sampler(program, instance.basis, 1)
    n = 200000
    tally = draw_tally(sampler, derive_rng(9, 2, 0), n)
    for count, p in zip(tally.counts, sampler.probabilities):
        sigma = math.sqrt(n * p * (1.0 - p))
        assert abs(count - n * p) <= 4.0 * sigma + 1.0
    p_other = sampler.other_mass
    sigma = math.sqrt(n * p_other * (1.0 - p_other))
    assert abs(tally.other_count - n * p_other) <= 4.0 * sigma + 1.0
