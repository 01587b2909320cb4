"""Shared constructions for the test suite.

The worked measurement examples are rebuilt here from their closed forms,
independently of the bundled JSON files, so file parsing and math can
cross-check each other.
"""

from __future__ import annotations

import numpy as np

from povmsim import Povm, QuantumInstrument

SQRT2 = np.sqrt(2.0)
SQRT3 = np.sqrt(3.0)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR with phase fixing."""
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_density(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_povm(dim: int, n_outcomes: int, rng: np.random.Generator) -> Povm:
    """Complete POVM from the block columns of a Haar-random isometry."""
    u = random_unitary(dim * n_outcomes, rng)
    v = u[:, :dim]  # isometry: v^dag v = I_dim
    blocks = [v[j * dim:(j + 1) * dim, :] for j in range(n_outcomes)]
    return Povm(blocks)


def phase_aligned_distance(a: np.ndarray, b: np.ndarray) -> float:
    """max |a - e^{i phi} b| minimized over the global phase phi."""
    overlap = np.vdot(b, a)
    if abs(overlap) < 1e-300:
        return float(max(np.max(np.abs(a)), np.max(np.abs(b))))
    phase = overlap / abs(overlap)
    return float(np.max(np.abs(a - phase * b)))


# --- worked one-qubit two-element example ---

def povm_ex1() -> Povm:
    m1 = np.array([[1, 0], [SQRT3, 2]], dtype=complex) / (2 * SQRT2)
    m2 = np.array([[1, 0], [-SQRT3, 2]], dtype=complex) / (2 * SQRT2)
    return Povm([m1, m2], labels=["M1", "M2"])


# --- trine POVM on one qubit ---

def _bloch_xz(theta: float) -> np.ndarray:
    return np.array([np.cos(theta / 2), np.sin(theta / 2)], dtype=complex)


def povm_ex2() -> Povm:
    scale = np.sqrt(2.0 / 3.0)
    kets = [_bloch_xz(t) for t in (0.0, 2 * np.pi / 3, 4 * np.pi / 3)]
    return Povm([scale * np.outer(k, k.conj()) for k in kets],
                labels=["M1", "M2", "M3"])


# --- qutrit three-element example ---

def povm_ex3() -> Povm:
    v1 = np.array([1, 0, 1], dtype=complex)
    v2 = np.array([1, 0, -1], dtype=complex)
    m3 = np.zeros((3, 3), dtype=complex)
    m3[1, 1] = 1.0
    return Povm([0.5 * np.outer(v1, v1.conj()),
                 0.5 * np.outer(v2, v2.conj()),
                 m3],
                labels=["M1", "M2", "M3"])


def psi0_ex3() -> np.ndarray:
    w = np.exp(2j * np.pi / 3)
    return np.array([1, w, w ** 2], dtype=complex) / SQRT3


# --- two-qubit Bell-plane example ---

def bell_states() -> dict[str, np.ndarray]:
    return {
        "phi+": np.array([1, 0, 0, 1], dtype=complex) / SQRT2,
        "phi-": np.array([1, 0, 0, -1], dtype=complex) / SQRT2,
        "psi+": np.array([0, 1, 1, 0], dtype=complex) / SQRT2,
        "psi-": np.array([0, 1, -1, 0], dtype=complex) / SQRT2,
    }


def povm_ex4() -> Povm:
    bell = bell_states()
    scale = np.sqrt(2.0 / 3.0)

    def plane(theta):
        return np.cos(theta / 2) * bell["phi+"] + np.sin(theta / 2) * bell["psi+"]

    return Povm([
        scale * np.outer(bell["phi+"], bell["phi+"].conj()),
        scale * np.outer(plane(2 * np.pi / 3), plane(2 * np.pi / 3).conj()),
        scale * np.outer(plane(4 * np.pi / 3), plane(4 * np.pi / 3).conj()),
        (np.outer(bell["phi-"], bell["phi-"].conj())
         + np.outer(bell["psi-"], bell["psi-"].conj())),
    ], labels=["M1", "M2", "M3", "M4"])


# --- two-branch instrument example ---

def instrument_qi() -> QuantumInstrument:
    ket_plus = np.array([1, 1], dtype=complex) / SQRT2
    ket_minus = np.array([1, -1], dtype=complex) / SQRT2
    return QuantumInstrument([
        [np.diag([1, 0]).astype(complex) / SQRT2,
         np.outer(ket_plus, ket_plus.conj()) / SQRT2],
        [np.diag([0, 1]).astype(complex) / SQRT2,
         np.outer(ket_minus, ket_minus.conj()) / SQRT2],
    ])


def qi_output_matrix() -> np.ndarray:
    """The instrument's classical-quantum output on |0><0|, times 8."""
    return np.array([
        [5, 0, 1, 0],
        [0, 1, 0, -1],
        [1, 0, 1, 0],
        [0, -1, 0, 1],
    ], dtype=complex)


def qi_purification_amplitudes() -> np.ndarray:
    """Nonzero purification amplitudes over (A, J, Ej, EJ), times sqrt(2)."""
    v = np.zeros(16, dtype=complex)
    v[0b0000] = 1.0
    v[0b0010] = 0.5
    v[0b1010] = 0.5
    v[0b0111] = 0.5
    v[0b1111] = -0.5
    return v / SQRT2
