"""Symmetric linear algebra and the problem-space samplers.

A problem instance is a point (a, B): a unit coefficient vector over all
multi-indices of degree 2K, together with a symmetric covariance matrix
whose spectrum lies strictly inside (0, 1).  Matrices are sampled as
B = U diag(lambda) U^T with U Haar on SO(N) and lambda i.i.d. uniform(0,1);
the associated density weight is the absolute Vandermonde determinant of
the eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .multiindex import count_sigma, enumerate_degree

EIG_TOL = 1e-10


@dataclass(frozen=True)
class ProblemShape:
    n_vars: int  # number of Gaussian variables / modes (N)
    half_degree: int  # half-degree of the monomial slice (K)

    def __post_init__(self):
        if self.n_vars < 1 or self.half_degree < 1:
            raise ValueError("require N >= 1 and K >= 1")

    @property
    def sphere_dim(self) -> int:
        return count_sigma(self.n_vars, self.half_degree)


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues sorted descending; basis columns satisfy B = U L U^T."""

    eigenvalues: np.ndarray
    basis: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.basis * self.eigenvalues) @ self.basis.T


def eigendecompose(matrix: np.ndarray) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(matrix, matrix.T, atol=1e-12, rtol=0.0):
        raise ValueError("matrix must be symmetric")
    eigenvalues, basis = np.linalg.eigh(matrix)
    order = np.argsort(eigenvalues)[::-1]
    return EigenDecomposition(eigenvalues[order].copy(), basis[:, order].copy())


def sample_haar_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar sample from SO(n) via QR of a Gaussian matrix.

    The QR factorization is made unique by forcing positive diagonal on R;
    the last column is flipped if needed to land in SO(n).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    gauss = rng.standard_normal((n, n))
    q, r = np.linalg.qr(gauss)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, -1] = -q[:, -1]
    return q


def sample_unit_sphere(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Uniform point on the unit sphere in R^dim."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    while True:
        vec = rng.standard_normal(dim)
        norm = np.linalg.norm(vec)
        if norm > 0.0:
            return vec / norm


def vandermonde_abs(eigenvalues) -> float:
    """Product of |lambda_i - lambda_j| over i < j (1 for a single value)."""
    vals = np.asarray(eigenvalues, dtype=float)
    result = 1.0
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            result *= abs(vals[i] - vals[j])
    return result


@dataclass(frozen=True)
class ProblemInstance:
    """A point (a, B) of the degree-2K problem space."""

    shape: ProblemShape
    coefficients: np.ndarray  # aligned with `patterns`
    eigenvalues: np.ndarray  # descending, in (0, 1)
    basis: np.ndarray
    patterns: tuple = field(init=False)

    def __post_init__(self):
        patterns = enumerate_degree(self.shape.n_vars, 2 * self.shape.half_degree)
        object.__setattr__(self, "patterns", patterns)
        if len(self.coefficients) != len(patterns):
            raise ValueError(
                f"expected {len(patterns)} coefficients, got {len(self.coefficients)}"
            )
        norm_sq = float(np.dot(self.coefficients, self.coefficients))
        if abs(norm_sq - 1.0) > 1e-12:
            raise ValueError(f"coefficient vector not on the unit sphere: |a|^2 = {norm_sq}")
        if np.any(self.eigenvalues <= 0.0) or np.any(self.eigenvalues >= 1.0):
            raise ValueError("eigenvalues must lie strictly inside (0, 1)")

    @property
    def covariance(self) -> np.ndarray:
        return (self.basis * self.eigenvalues) @ self.basis.T

    def coefficient(self, index) -> float:
        return float(self.coefficients[self.patterns.index(tuple(index))])


def sample_problem_instance(rng: np.random.Generator, shape: ProblemShape):
    """Draw (instance, vandermonde_weight) from the problem-space measure."""
    n = shape.n_vars
    basis = sample_haar_orthogonal(rng, n)
    lam = rng.uniform(0.0, 1.0, size=n)
    while np.any((lam <= 0.0) | (lam >= 1.0)):  # measure-zero redraw
        bad = (lam <= 0.0) | (lam >= 1.0)
        lam[bad] = rng.uniform(0.0, 1.0, size=int(bad.sum()))
    weight = vandermonde_abs(lam)
    order = np.argsort(lam)[::-1]
    lam = lam[order]
    basis = basis[:, order]
    coeffs = sample_unit_sphere(rng, shape.sphere_dim)
    instance = ProblemInstance(shape, coeffs, lam, basis)
    return instance, weight
