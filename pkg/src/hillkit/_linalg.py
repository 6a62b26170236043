"""Small numerical helpers shared across modules.

Determinants of the cyclic action Hessian and of the monodromy side are
kept in log-magnitude/phase form so that chains with wildly scaled twist
blocks neither overflow nor underflow.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LogDet:
    """Determinant stored as log|det| and a unit-modulus phase."""

    logabs: float
    phase: complex

    @classmethod
    def of(cls, matrix):
        if matrix.shape[0] == 0:
            return cls(0.0, 1.0 + 0j)
        sign, logabs = np.linalg.slogdet(matrix)
        if sign == 0:
            return cls(-np.inf, 1.0 + 0j)
        return cls(float(logabs), complex(sign))

    @classmethod
    def from_complex(cls, z):
        z = complex(z)
        if z == 0:
            return cls(-np.inf, 1.0 + 0j)
        return cls(float(np.log(abs(z))), z / abs(z))

    def __mul__(self, other):
        return LogDet(self.logabs + other.logabs, self.phase * other.phase)

    def __truediv__(self, other):
        return LogDet(self.logabs - other.logabs, self.phase / other.phase)

    def as_complex(self):
        if self.logabs == -np.inf:
            return 0j
        return complex(np.exp(self.logabs) * self.phase)


def relative_mismatch(a: LogDet, b: LogDet) -> float:
    """|a - b| / (1 + |a|), evaluated stably in log space."""
    ref = max(a.logabs, b.logabs)
    if ref == -np.inf:
        return 0.0
    ea = 0.0 if a.logabs == -np.inf else np.exp(a.logabs - ref)
    eb = 0.0 if b.logabs == -np.inf else np.exp(b.logabs - ref)
    diff = abs(ea * a.phase - eb * b.phase)
    denom = np.exp(-ref) + (ea if a.logabs >= b.logabs else eb)
    return float(diff / denom)


def sym(matrix):
    return 0.5 * (matrix + matrix.T)


def herm(matrix):
    return 0.5 * (matrix + matrix.conj().T)


def cyclic_hessian(a_blocks, twist_blocks, rho=1.0, dtype=complex):
    """Block-cyclic matrix of the quadratic action form on rho-quasiperiodic
    variations: diagonal A_i, lower -B_{i-1}, upper -B_i^*, with the wrap-around
    blocks scaled by 1/rho (upper-right) and rho (lower-left)."""
    n = len(a_blocks)
    m = a_blocks[0].shape[0] if n else 0
    rho = complex(rho)
    if rho == 0:
        raise ValueError("rho must be nonzero")
    if np.dtype(dtype).kind != "c":
        if rho.imag != 0:
            raise ValueError("complex rho needs a complex output dtype")
        rho = rho.real
    out = np.zeros((n * m, n * m), dtype=dtype)
    for i in range(n):
        rows = slice(i * m, (i + 1) * m)
        out[rows, rows] += a_blocks[i]
        prev = (i - 1) % n
        coeff = 1.0 / rho if i == 0 else 1.0
        out[rows, prev * m:(prev + 1) * m] += -coeff * twist_blocks[prev]
        nxt = (i + 1) % n
        coeff = rho if i == n - 1 else 1.0
        out[rows, nxt * m:(nxt + 1) * m] += -coeff * twist_blocks[i].T
    return out


def hermitian_spectrum(matrix, zero_tol=1e-9):
    """Eigenvalues of a Hermitian matrix plus (index, nullity) counts.

    The nullity threshold is relative to the largest eigenvalue magnitude.
    """
    if matrix.shape[0] == 0:
        return np.array([]), 0, 0
    eigs = np.linalg.eigvalsh(herm(matrix))
    scale = max(np.max(np.abs(eigs)), 1e-300)
    nullity = int(np.count_nonzero(np.abs(eigs) < zero_tol * scale))
    index = int(np.count_nonzero(eigs < -zero_tol * scale))
    return eigs, index, nullity


def nullspace(matrix, rtol=1e-10, scale=None):
    """Orthonormal basis of the (right) null space with a deterministic sign fix.

    The rank cutoff is rtol times the largest singular value, or rtol times
    ``scale`` when given (needed when the whole matrix may be near zero).
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.shape[0] == 0:
        return np.eye(matrix.shape[1])
    _, svals, vt = np.linalg.svd(matrix)
    ref = svals[0] if svals.size else 1.0
    if scale is not None:
        ref = max(ref, scale)
    rank = int(np.sum(svals > rtol * ref))
    basis = vt[rank:].T
    return fix_signs(basis)


def fix_signs(basis):
    """Flip each column so its largest-magnitude entry is positive."""
    basis = np.array(basis)
    for j in range(basis.shape[1]):
        col = basis[:, j]
        k = int(np.argmax(np.abs(col)))
        if col[k].real < 0:
            basis[:, j] = -col
    return basis


def solve_generic(matrix, rhs):
    """Linear solve that also works for long-double inputs (tiny systems only)."""
    matrix = np.asarray(matrix)
    if matrix.dtype in (np.float32, np.float64, np.complex64, np.complex128):
        return np.linalg.solve(matrix, rhs)
    a = matrix.astype(matrix.dtype).copy()
    b = np.array(rhs, dtype=np.result_type(matrix.dtype, np.asarray(rhs).dtype))
    vector = b.ndim == 1
    if vector:
        b = b[:, None]
    n = a.shape[0]
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[pivot, col]) == 0:
            raise np.linalg.LinAlgError("singular matrix")
        if pivot != col:
            a[[col, pivot]] = a[[pivot, col]]
            b[[col, pivot]] = b[[pivot, col]]
        for row in range(n):
            if row != col:
                factor = a[row, col] / a[col, col]
                a[row] -= factor * a[col]
                b[row] -= factor * b[col]
    return (b / np.diag(a)[:, None])[:, 0] if vector else b / np.diag(a)[:, None]


def neville_limit(orders, values):
    """Polynomial extrapolation of values(1/N) to N -> infinity."""
    x = 1.0 / np.asarray(orders, dtype=float)
    table = list(np.asarray(values, dtype=complex))
    n = len(table)
    for level in range(1, n):
        table = [
            (table[i + 1] * (0.0 - x[i]) - table[i] * (0.0 - x[i + level]))
            / (x[i + level] - x[i])
            for i in range(n - level)
        ]
    return table[0]


def thread_count():
    raw = os.environ.get("HILLKIT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def parallel_map(fn, items):
    """Map preserving order; threaded when HILLKIT_THREADS allows it."""
    items = list(items)
    workers = min(thread_count(), len(items)) if items else 1
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
