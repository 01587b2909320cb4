"""Measurement value types and exact Born-rule reference computations.

The functions here are the analytic oracles the circuit pipeline is tested
against: probabilities Tr(M_j rho M_j^dag), conditional post-measurement
states, and the block-diagonal classical-quantum output of an instrument.

Outcome indices are 0-based everywhere; outcome j is stored on ancilla
level j downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import IncompletePovmError, MathValidityError, ZeroProbabilityError
from .linalg import DEFAULT_ATOL, adjoint, as_complex_matrix, is_psd, tensor

COMPLETENESS_ATOL = 1e-10
# Probabilities in [-PROB_CLAMP, 0) are rounding noise and clamp to zero;
# anything below signals an invalid measurement that slipped past validation.
PROB_CLAMP = 1e-12


def _frozen(m: np.ndarray) -> np.ndarray:
    out = np.asarray(m, dtype=np.complex128).copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Povm:
    """Ordered measurement operators {M_j} on a d-dimensional system."""

    elements: tuple[np.ndarray, ...]
    labels: tuple[str, ...] | None = None

    def __init__(self, elements: Sequence[np.ndarray],
                 labels: Sequence[str] | None = None):
        mats = tuple(_frozen(as_complex_matrix(m)) for m in elements)
        if not mats:
            raise ValueError("a POVM needs at least one element")
        d = mats[0].shape[0]
        for i, m in enumerate(mats):
            if m.shape != (d, d):
                raise ValueError(f"element {i} has shape {m.shape}, expected ({d}, {d})")
        if labels is not None and len(labels) != len(mats):
            raise ValueError(f"{len(labels)} labels for {len(mats)} elements")
        object.__setattr__(self, "elements", mats)
        object.__setattr__(self, "labels", tuple(labels) if labels is not None else None)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    @property
    def n_outcomes(self) -> int:
        return len(self.elements)

    def effects(self) -> list[np.ndarray]:
        """The positive operators E_j = M_j^dag M_j."""
        return [adjoint(m) @ m for m in self.elements]

    def label(self, j: int) -> str:
        if self.labels is not None:
            return self.labels[j]
        return f"M{j + 1}"


@dataclass(frozen=True)
class QuantumInstrument:
    """Branches of Kraus operators {M_{j,k}}_k; flattened they form a POVM."""

    branches: tuple[tuple[np.ndarray, ...], ...]

    def __init__(self, branches: Sequence[Sequence[np.ndarray]]):
        rows = tuple(tuple(_frozen(as_complex_matrix(m)) for m in br) for br in branches)
        if not rows or any(not br for br in rows):
            raise ValueError("an instrument needs at least one non-empty branch")
        d = rows[0][0].shape[0]
        for j, br in enumerate(rows):
            for k, m in enumerate(br):
                if m.shape != (d, d):
                    raise ValueError(
                        f"branch {j} operator {k} has shape {m.shape}, expected ({d}, {d})")
        object.__setattr__(self, "branches", rows)

    @property
    def dim(self) -> int:
        return self.branches[0][0].shape[0]

    @property
    def n_branches(self) -> int:
        return len(self.branches)

    @property
    def max_kraus(self) -> int:
        return max(len(br) for br in self.branches)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, PSD, unit-trace operator (all within 1e-10)."""

    matrix: np.ndarray = field(repr=False)

    def __init__(self, matrix: np.ndarray, atol: float = DEFAULT_ATOL):
        m = as_complex_matrix(matrix)
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > atol:
            raise MathValidityError("density matrix is not Hermitian within tolerance")
        if not is_psd(m, atol):
            raise MathValidityError("density matrix is not PSD within tolerance")
        if abs(np.trace(m).real - 1.0) > atol or abs(np.trace(m).imag) > atol:
            raise MathValidityError(
                f"density matrix trace {np.trace(m):.12g} is not 1 within tolerance")
        object.__setattr__(self, "matrix", _frozen(m))

    @classmethod
    def from_pure(cls, psi: np.ndarray) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=np.complex128)
        return cls(np.outer(psi, psi.conj()))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of a completeness/positivity check."""

    ok: bool
    max_completeness_deviation: float
    element_psd: tuple[bool, ...]
    dim: int
    n_elements: int
    tolerance: float

    def summary(self) -> str:
        lines = [
            f"elements: {self.n_elements} on dimension {self.dim}",
            f"max |sum M^dag M - I|: {self.max_completeness_deviation:.3e} "
            f"(tolerance {self.tolerance:.1e})",
        ]
        for i, ok in enumerate(self.element_psd):
            lines.append(f"effect {i}: {'PSD' if ok else 'NOT PSD'}")
        lines.append("result: " + ("valid" if self.ok else "INVALID"))
        return "\n".join(lines)


def validate_completeness(p: Povm, tol: float = COMPLETENESS_ATOL) -> ValidationReport:
    """Check sum_j M_j^dag M_j = I and each effect PSD.

    Structural problems (ragged shapes) raise at construction time; a
    completeness failure is reported, not raised.
    """
    effects = p.effects()
    total = sum(effects)
    deviation = float(np.max(np.abs(total - np.eye(p.dim))))
    psd = tuple(is_psd(e, tol) for e in effects)
    return ValidationReport(
        ok=deviation <= tol and all(psd),
        max_completeness_deviation=deviation,
        element_psd=psd,
        dim=p.dim,
        n_elements=p.n_outcomes,
        tolerance=tol,
    )


def validate_instrument(instr: QuantumInstrument,
                        tol: float = COMPLETENESS_ATOL) -> ValidationReport:
    """Completeness of the flattened Kraus set (which makes every branch
    trace non-increasing)."""
    return validate_completeness(povm_from_instrument(instr), tol)


def require_valid(p: Povm, tol: float = COMPLETENESS_ATOL) -> None:
    report = validate_completeness(p, tol)
    if not report.ok:
        raise IncompletePovmError(report.max_completeness_deviation, tol)


def outcome_probabilities(p: Povm, rho: DensityMatrix) -> list[float]:
    """Born-rule probabilities Tr(M_j rho M_j^dag)."""
    if rho.dim != p.dim:
        raise ValueError(f"state dimension {rho.dim} != POVM dimension {p.dim}")
    probs = []
    for j, m in enumerate(p.elements):
        value = float(np.trace(m @ rho.matrix @ adjoint(m)).real)
        if value < -PROB_CLAMP:
            raise MathValidityError(
                f"outcome {j} has probability {value:.3e}; POVM is invalid")
        probs.append(max(value, 0.0))
    total = sum(probs)
    if abs(total - 1.0) > DEFAULT_ATOL:
        raise MathValidityError(
            f"probabilities sum to {total:.12g}; POVM is incomplete")
    return probs


def post_measurement_state(p: Povm, j: int, rho: DensityMatrix,
                           threshold: float = PROB_CLAMP) -> DensityMatrix:
    """Conditional state M_j rho M_j^dag / Tr(...) for outcome ``j``."""
    if not 0 <= j < p.n_outcomes:
        raise ValueError(f"outcome index {j} out of range")
    m = p.elements[j]
    numerator = m @ rho.matrix @ adjoint(m)
    prob = float(np.trace(numerator).real)
    if prob <= threshold:
        raise ZeroProbabilityError(
            f"unconditionable outcome {j}: probability {prob:.3e} <= {threshold:.1e}")
    return DensityMatrix(numerator / prob)


def apply_branch(branch: Sequence[np.ndarray], rho: np.ndarray) -> np.ndarray:
    """Unnormalized branch output sum_k M_k rho M_k^dag."""
    return sum(m @ rho @ adjoint(m) for m in branch)


def instrument_output(instr: QuantumInstrument, rho: DensityMatrix) -> np.ndarray:
    """Classical-quantum output sum_j branch_j(rho) (x) |j><j|.

    Block-diagonal on system (x) pointer register, system most significant;
    unit trace when the instrument is complete.
    """
    if rho.dim != instr.dim:
        raise ValueError(f"state dimension {rho.dim} != instrument dimension {instr.dim}")
    n = instr.n_branches
    out = np.zeros((instr.dim * n, instr.dim * n), dtype=np.complex128)
    for j, branch in enumerate(instr.branches):
        pointer = np.zeros((n, n), dtype=np.complex128)
        pointer[j, j] = 1.0
        out += tensor(apply_branch(branch, rho.matrix), pointer)
    trace = np.trace(out).real
    if abs(trace - 1.0) > DEFAULT_ATOL:
        raise MathValidityError(
            f"instrument output trace {trace:.12g} is not 1; instrument is incomplete")
    return out


def branch_probabilities(instr: QuantumInstrument, rho: DensityMatrix) -> list[float]:
    """Trace of each branch output (the classical outcome distribution)."""
    return [float(np.trace(apply_branch(br, rho.matrix)).real)
            for br in instr.branches]


def povm_from_instrument(instr: QuantumInstrument) -> Povm:
    """Flatten {M_{j,k}} into a POVM, branch order preserved, labels (j,k)."""
    elements = []
    labels = []
    for j, branch in enumerate(instr.branches):
        for k, m in enumerate(branch):
            elements.append(m)
            labels.append(f"({j},{k})")
    return Povm(elements, labels=labels)
