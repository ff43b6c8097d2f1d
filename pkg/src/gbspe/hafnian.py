"""Hafnian kernels.

Two evaluation paths are provided:

* ``hafnian_reference`` -- the literal perfect-matching sum, (m-1)!! terms.
  Trivially correct; usable up to m = 12 or so.  This is the oracle.
* ``hafnian_dense`` -- subset inclusion-exclusion with power traces,
  O(m^3 2^(m/2)), JIT-compiled.  This is the production path, used for the
  pair-sum matrices whose sizes reach 4K.

On top of these, ``hafnian_multiindex`` evaluates Haf(B_I) where B_I repeats
row/column k of B exactly i_k times, with a per-matrix cache.
"""

from __future__ import annotations

import hashlib
import struct
import warnings

import numba
import numpy as np

from .errors import InternalInconsistencyError
from .multiindex import enumerate_degree

SIGN_ZERO_TOL = 1e-14


def hafnian_reference(matrix: np.ndarray) -> float:
    """Perfect-matching sum; exponential but exact. Oracle path."""
    matrix = np.asarray(matrix, dtype=float)
    m = matrix.shape[0]
    if m % 2 != 0:
        raise ValueError("hafnian requires an even-size matrix")

    def matching_sum(rows):
        if not rows:
            return 1.0
        first = rows[0]
        rest = rows[1:]
        total = 0.0
        for pos, partner in enumerate(rest):
            remaining = rest[:pos] + rest[pos + 1 :]
            total += matrix[first, partner] * matching_sum(remaining)
        return total

    return matching_sum(tuple(range(m)))


@numba.njit(cache=True, nogil=True)
def _hafnian_powertrace(matrix):
    """Inclusion-exclusion over row pairs with power-trace coefficients."""
    m = matrix.shape[0]
    n = m // 2
    if n == 0:
        return 1.0
    total = 0.0
    for subset in range(1, 1 << n):
        size = 0
        for i in range(n):
            if subset & (1 << i):
                size += 1
        dim = 2 * size
        # rows/cols of the selected pairs, with each pair swapped: this
        # realizes X @ A_Z where X is the pairwise swap permutation.
        idx = np.empty(dim, dtype=np.int64)
        pos = 0
        for i in range(n):
            if subset & (1 << i):
                idx[pos] = 2 * i
                idx[pos + 1] = 2 * i + 1
                pos += 2
        xaz = np.empty((dim, dim))
        for r in range(0, dim, 2):
            for c in range(dim):
                xaz[r, c] = matrix[idx[r + 1], idx[c]]
                xaz[r + 1, c] = matrix[idx[r], idx[c]]
        # traces of powers 1..n
        traces = np.empty(n + 1)
        power = xaz.copy()
        tr = 0.0
        for d in range(dim):
            tr += power[d, d]
        traces[1] = tr
        for j in range(2, n + 1):
            power = power @ xaz
            tr = 0.0
            for d in range(dim):
                tr += power[d, d]
            traces[j] = tr
        # coefficient of x^n in exp(sum_j traces[j] x^j / (2j)) via the
        # log-derivative recurrence.
        u = np.zeros(n + 1)
        for j in range(1, n + 1):
            u[j] = traces[j] / (2.0 * j)
        coeff = np.zeros(n + 1)
        coeff[0] = 1.0
        for k in range(1, n + 1):
            acc = 0.0
            for j in range(1, k + 1):
                acc += j * u[j] * coeff[k - j]
            coeff[k] = acc / k
        if (n - size) % 2 == 0:
            total += coeff[n]
        else:
            total -= coeff[n]
    return total


def hafnian_dense(matrix: np.ndarray) -> float:
    """Hafnian of a dense symmetric matrix of even size (1.0 for 0x0)."""
    matrix = np.ascontiguousarray(np.asarray(matrix, dtype=float))
    m = matrix.shape[0]
    if m % 2 != 0:
        raise ValueError("hafnian requires an even-size matrix")
    if m == 0:
        return 1.0
    return float(_hafnian_powertrace(matrix))


def _expand_multiindex(matrix: np.ndarray, index) -> np.ndarray:
    """Build B_I: row/column k of B repeated i_k times."""
    reps = np.asarray(index, dtype=np.int64)
    rows = np.repeat(np.arange(matrix.shape[0]), reps)
    return matrix[np.ix_(rows, rows)]


def matrix_fingerprint(matrix: np.ndarray) -> bytes:
    data = np.ascontiguousarray(matrix, dtype=float).tobytes()
    return hashlib.blake2b(data, digest_size=16).digest()


class HafnianCache:
    """Memo of (matrix fingerprint, multi-index) -> hafnian value.

    A cache hit is bit-identical to recomputation by construction (values
    are stored, never rederived).
    """

    def __init__(self):
        self._memo: dict = {}

    def __len__(self):
        return len(self._memo)

    def lookup(self, fingerprint: bytes, index):
        return self._memo.get((fingerprint, tuple(index)))

    def store(self, fingerprint: bytes, index, value: float):
        self._memo[(fingerprint, tuple(index))] = float(value)

    # -- persistence: append-only binary log ---------------------------

    _RECORD_HEAD = struct.Struct("<16sB")

    def save(self, path):
        with open(path, "wb") as fh:
            for (fingerprint, index), value in self._memo.items():
                fh.write(self._RECORD_HEAD.pack(fingerprint, len(index)))
                fh.write(struct.pack(f"<{len(index)}H", *index))
                fh.write(struct.pack("<d", value))

    @classmethod
    def load(cls, path):
        cache = cls()
        try:
            blob = open(path, "rb").read()
        except FileNotFoundError:
            return cache
        offset = 0
        while offset < len(blob):
            try:
                fingerprint, n = cls._RECORD_HEAD.unpack_from(blob, offset)
                offset2 = offset + cls._RECORD_HEAD.size
                index = struct.unpack_from(f"<{n}H", blob, offset2)
                offset2 += 2 * n
                (value,) = struct.unpack_from("<d", blob, offset2)
                offset2 += 8
            except struct.error:
                warnings.warn(f"truncated cache record at byte {offset} of {path}; dropping tail")
                break
            cache._memo[(fingerprint, index)] = value
            offset = offset2
        return cache


def hafnian_multiindex(matrix: np.ndarray, index, cache: HafnianCache | None = None) -> float:
    """Haf(B_I) for a symmetric matrix B and multi-index I with |I| even."""
    index = tuple(int(i) for i in index)
    total = sum(index)
    if total % 2 != 0:
        raise ValueError(f"|I| = {total} is odd; hafnian undefined here")
    if total == 0:
        return 1.0
    matrix = np.asarray(matrix, dtype=float)
    if len(index) != matrix.shape[0]:
        raise ValueError("multi-index length must match matrix dimension")
    fingerprint = None
    if cache is not None:
        fingerprint = matrix_fingerprint(matrix)
        hit = cache.lookup(fingerprint, index)
        if hit is not None:
            return hit
    value = hafnian_dense(_expand_multiindex(matrix, index))
    if cache is not None:
        cache.store(fingerprint, index, value)
    return value


def hafnian_sign(matrix: np.ndarray, index, cache: HafnianCache | None = None) -> int:
    value = hafnian_multiindex(matrix, index, cache)
    if abs(value) <= SIGN_ZERO_TOL:
        return 0
    return 1 if value > 0.0 else -1


def batch_hafnians_degree(matrix: np.ndarray, half_degree: int,
                          cache: HafnianCache | None = None) -> dict:
    """Unscaled Haf(B_I) for every |I| = 2K.

    Values for the scaled matrix tB follow from homogeneity,
    Haf((tB)_I) = t^K Haf(B_I), so only the unscaled values are stored.
    """
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    out = {}
    for index in enumerate_degree(n, 2 * half_degree):
        out[index] = hafnian_multiindex(matrix, index, cache)
    return out


def check_nonnegative(value: float, what: str, tol: float = 1e-12) -> float:
    """Clamp tiny negative round-off to 0; larger negatives are a bug."""
    if value < -tol:
        raise InternalInconsistencyError(f"{what} = {value} is negative beyond tolerance")
    return max(value, 0.0)
