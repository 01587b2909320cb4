"""Dilation of measurements into joint pure states on system + ancilla.

A complete POVM {M_j} acting on |psi0> is realized by preparing

    |Psi> = sum_j (M_j |psi0>) (x) |j>_B

on the system A together with an ancilla B whose dimension equals the
number of outcomes (the minimal choice), then measuring B projectively.
Completeness makes |Psi> normalized; that is a theorem, not an input
requirement, and the tests exercise it.

An instrument {M_{j,k}} is handled the same way through its purification
over A (x) J (x) Ej (x) EJ; tracing out the two environment registers
reproduces the instrument's classical-quantum output.

Qudit registers are mapped onto qubits level-by-level: level l of a
d-level subsystem occupies ceil(log2 d) qubits carrying the binary digits
of l, first qubit most significant (the global ordering of linalg).
Bitstrings that correspond to no level stay exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import as_complex_vector, is_normalized
from .povm import COMPLETENESS_ATOL, Povm, QuantumInstrument, povm_from_instrument, require_valid


@dataclass(frozen=True)
class QuditEncoding:
    """Per-subsystem map from qudit levels to qubit bitstrings."""

    dims: tuple[int, ...]

    def __init__(self, dims: Sequence[int]):
        dims = tuple(int(d) for d in dims)
        if any(d < 1 for d in dims):
            raise ValueError(f"subsystem dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "dims", dims)

    def qubit_count(self, subsystem: int) -> int:
        d = self.dims[subsystem]
        return max(int(math.ceil(math.log2(d))), 0) if d > 1 else 0

    @property
    def qubit_counts(self) -> tuple[int, ...]:
        return tuple(self.qubit_count(i) for i in range(len(self.dims)))

    @property
    def total_qubits(self) -> int:
        return sum(self.qubit_counts)

    def subsystem_qubits(self, subsystem: int) -> list[int]:
        """Qubit indices (into the encoded register) of one subsystem."""
        counts = self.qubit_counts
        start = sum(counts[:subsystem])
        return list(range(start, start + counts[subsystem]))

    def level_bits(self, subsystem: int, level: int) -> tuple[int, ...]:
        """Binary digits of ``level``, most significant first."""
        d = self.dims[subsystem]
        if not 0 <= level < d:
            raise ValueError(f"level {level} out of range for dimension {d}")
        q = self.qubit_count(subsystem)
        return tuple((level >> (q - 1 - b)) & 1 for b in range(q))

    def level_bitstring(self, subsystem: int, level: int) -> str:
        return "".join(str(b) for b in self.level_bits(subsystem, level))

    def index_for_levels(self, levels: Sequence[int]) -> int:
        """Encoded computational-basis index of |l_0, l_1, ...>."""
        if len(levels) != len(self.dims):
            raise ValueError(f"expected {len(self.dims)} levels, got {len(levels)}")
        index = 0
        for i, level in enumerate(levels):
            for bit in self.level_bits(i, level):
                index = (index << 1) | bit
        return index

    def used_indices(self) -> list[int]:
        """Encoded indices reachable from some level combination, in qudit order."""
        out = [0]
        for i, d in enumerate(self.dims):
            q = self.qubit_count(i)
            out = [(base << q) | level for base in out for level in range(d)]
        return out

    def encode_vector(self, v: np.ndarray) -> np.ndarray:
        """Embed a prod(dims) vector into the 2^total_qubits register."""
        v = np.asarray(v, dtype=np.complex128)
        expected = math.prod(self.dims)
        if v.shape != (expected,):
            raise ValueError(f"vector has shape {v.shape}, expected ({expected},)")
        out = np.zeros(2 ** self.total_qubits, dtype=np.complex128)
        out[self.used_indices()] = v
        return out

    def decode_vector(self, v: np.ndarray, atol: float | None = None) -> np.ndarray:
        """Inverse of encode_vector; optionally insist the padding is empty."""
        v = np.asarray(v, dtype=np.complex128)
        if v.shape != (2 ** self.total_qubits,):
            raise ValueError(f"vector has shape {v.shape}, expected "
                             f"({2 ** self.total_qubits},)")
        used = self.used_indices()
        if atol is not None:
            mask = np.ones(v.shape[0], dtype=bool)
            mask[used] = False
            stray = float(np.max(np.abs(v[mask]))) if mask.any() else 0.0
            if stray > atol:
                raise ValueError(f"unused amplitude {stray:.3e} exceeds {atol:.1e}")
        return v[used].copy()


@dataclass(frozen=True)
class JointState:
    """Pure state over the dilation registers, with its qudit layout."""

    vector: np.ndarray
    system_dims: tuple[int, ...]
    encoding: QuditEncoding

    def __post_init__(self):
        expected = math.prod(self.system_dims)
        if self.vector.shape != (expected,):
            raise ValueError(f"vector shape {self.vector.shape} does not match "
                             f"dims {self.system_dims}")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))


def joint_state(p: Povm, psi0: np.ndarray, *, validate: bool = True,
                tol: float = COMPLETENESS_ATOL) -> JointState:
    """System-ancilla pure state whose amplitude at (a, j) is <a|M_j|psi0>.

    ``validate=False`` skips the completeness check (used only to probe how
    normalization breaks for defective inputs).
    """
    psi0 = as_complex_vector(psi0)
    if psi0.shape != (p.dim,):
        raise ValueError(f"input state has dimension {psi0.shape[0]}, POVM has {p.dim}")
    if not is_normalized(psi0):
        raise ValueError("input state is not normalized")
    if validate:
        require_valid(p, tol)
    n = p.n_outcomes
    columns = np.stack([m @ psi0 for m in p.elements], axis=1)  # (d_A, n)
    vector = columns.reshape(p.dim * n)
    return JointState(vector=vector, system_dims=(p.dim, n),
                      encoding=QuditEncoding((p.dim, n)))


def instrument_purification(instr: QuantumInstrument, psi0: np.ndarray, *,
                            validate: bool = True,
                            tol: float = COMPLETENESS_ATOL) -> JointState:
    """Purification sum_{j,k} M_{j,k}|psi0> (x) |j>_J (x) |k>_Ej (x) |j>_EJ.

    Tracing out the last two registers reproduces the instrument output.
    """
    psi0 = as_complex_vector(psi0)
    if psi0.shape != (instr.dim,):
        raise ValueError(f"input state has dimension {psi0.shape[0]}, "
                         f"instrument has {instr.dim}")
    if not is_normalized(psi0):
        raise ValueError("input state is not normalized")
    if validate:
        require_valid(povm_from_instrument(instr), tol)
    d = instr.dim
    nj = instr.n_branches
    nk = instr.max_kraus
    dims = (d, nj, nk, nj)
    vector = np.zeros(math.prod(dims), dtype=np.complex128)
    for j, branch in enumerate(instr.branches):
        for k, m in enumerate(branch):
            amp = m @ psi0
            base = ((j * nk) + k) * nj + j  # offset of |j, k, j> within (J, Ej, EJ)
            stride = nj * nk * nj
            vector[base::stride] = amp
    return JointState(vector=vector, system_dims=dims, encoding=QuditEncoding(dims))


def encode_to_qubits(s: JointState) -> tuple[np.ndarray, QuditEncoding]:
    """Embed the joint state into qubit registers; padding stays exactly zero."""
    return s.encoding.encode_vector(s.vector), s.encoding


def isometry_matrix(p: Povm, tol: float = COMPLETENESS_ATOL) -> np.ndarray:
    """The (d*n) x d isometry whose column k is the joint state of |k>.

    Satisfies V^dag V = I for every complete POVM.
    """
    require_valid(p, tol)
    d = p.dim
    columns = []
    for k in range(d):
        basis = np.zeros(d, dtype=np.complex128)
        basis[k] = 1.0
        columns.append(joint_state(p, basis, validate=False).vector)
    return np.stack(columns, axis=1)
