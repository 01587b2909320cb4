"""Dense complex linear algebra shared by every other module.

Index convention (fixed globally, documented once here): in any tensor
product, subsystem 0 is the MOST significant factor.  For subsystem
dimensions (d_0, ..., d_{m-1}) the flat index of the basis state
|l_0, ..., l_{m-1}> is

    l_0 * (d_1 * ... * d_{m-1}) + l_1 * (d_2 * ... * d_{m-1}) + ... + l_{m-1}

which is exactly ``numpy.kron`` ordering with the left factor most
significant.  Qubit registers follow the same rule: qubit 0 carries the
highest bit of the amplitude index, so index i corresponds to the ket
|b_0 b_1 ... b_{n-1}> with i = sum b_k 2^(n-1-k).

All values are plain ``numpy`` arrays with dtype complex128, treated as
immutable after construction; every function here is pure.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

DEFAULT_ATOL = 1e-10


def as_complex_vector(entries: Iterable[complex]) -> np.ndarray:
    """Copy ``entries`` into a fresh 1-D complex128 array."""
    v = np.asarray(list(entries) if not isinstance(entries, np.ndarray) else entries,
                   dtype=np.complex128)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    return v.copy()


def as_complex_matrix(entries) -> np.ndarray:
    """Copy ``entries`` into a fresh 2-D complex128 array."""
    m = np.asarray(entries, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    return m.copy()


def is_normalized(v: np.ndarray, atol: float = DEFAULT_ATOL) -> bool:
    return abs(np.linalg.norm(v) - 1.0) <= atol


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the left factor most significant.

    Both arguments must be the same kind (two vectors or two matrices);
    index of the result = index_a * dim_b + index_b.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.ndim != b.ndim or a.ndim not in (1, 2):
        raise ValueError(f"tensor expects two vectors or two matrices, "
                         f"got shapes {a.shape} and {b.shape}")
    return np.kron(a, b)


def adjoint(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"adjoint expects a matrix, got shape {m.shape}")
    return m.conj().T


def partial_trace(rho: np.ndarray, dims: Sequence[int],
                  keep: Iterable[int]) -> np.ndarray:
    """Reduced operator of ``rho`` over the subsystems listed in ``keep``.

    ``rho`` must be square with side equal to prod(dims); kept subsystems
    retain their original relative order.  The trace is preserved.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    dims = tuple(int(d) for d in dims)
    total = math.prod(dims)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"partial_trace expects a square matrix, got {rho.shape}")
    if rho.shape[0] != total:
        raise ValueError(f"matrix side {rho.shape[0]} does not match "
                         f"prod(dims) = {total}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {len(dims)} subsystems")

    n = len(dims)
    tensor_form = rho.reshape(dims + dims)
    # Row/column axes of traced subsystems are contracted pairwise.
    row_labels = list(range(n))
    col_labels = [i + n if i in keep else i for i in range(n)]
    out_labels = [i for i in keep] + [i + n for i in keep]
    reduced = np.einsum(tensor_form, row_labels + col_labels, out_labels)
    kept_dim = math.prod(dims[k] for k in keep) if keep else 1
    return reduced.reshape(kept_dim, kept_dim)


def is_psd(m: np.ndarray, tol: float = DEFAULT_ATOL) -> bool:
    """True iff ``m`` is Hermitian within ``tol`` and its minimum eigenvalue
    is >= -tol.

    Eigenvalues come from the Hermitian eigensolver (tridiagonalization,
    LAPACK); accurate far below ``tol`` at the dimensions used here.
    """
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"is_psd expects a square matrix, got {m.shape}")
    if np.max(np.abs(m - m.conj().T)) > tol:
        return False
    eigenvalues = np.linalg.eigvalsh((m + m.conj().T) / 2.0)
    return bool(eigenvalues[0] >= -tol)


def hermitian_eigensystem(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvectors of the Hermitian part of ``m``."""
    m = np.asarray(m, dtype=np.complex128)
    return np.linalg.eigh((m + m.conj().T) / 2.0)
