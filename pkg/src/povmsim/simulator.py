"""Exact statevector execution plus the measurement side of the protocol.

Gate application is a stride-indexed in-place update over the amplitude
array (the register is reshaped so the target qubit is a single axis); the
full 2^n x 2^n unitary is never materialized.  Qubit 0 is the most
significant bit of the amplitude index, matching linalg.

Randomness contract: all sampling uses numpy's PCG64 generator seeded
explicitly, with inverse-CDF draws; identical (seed, shots, state) give
identical counts.  Work that spans several settings derives one child seed
per setting from a SeedSequence, so results do not depend on scheduling.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import SingularConfusionError, ZeroProbabilityError
from .linalg import DEFAULT_ATOL
from .povm import DensityMatrix
from .stateprep import Circuit, Gate, GateKind

_SQRT2_INV = 1.0 / math.sqrt(2.0)
_H = np.array([[_SQRT2_INV, _SQRT2_INV], [_SQRT2_INV, -_SQRT2_INV]], dtype=np.complex128)
# Rotates the Y eigenbasis onto the computational basis: H @ Sdg.
_H_SDG = np.array([[_SQRT2_INV, -1j * _SQRT2_INV],
                   [_SQRT2_INV, 1j * _SQRT2_INV]], dtype=np.complex128)

_PAULI = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


@dataclass
class StateVector:
    """2^width complex amplitudes, unit norm within 1e-10."""

    amplitudes: np.ndarray
    width: int

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (2 ** self.width,):
            raise ValueError(f"expected {2 ** self.width} amplitudes, "
                             f"got shape {self.amplitudes.shape}")
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > DEFAULT_ATOL:
            raise ValueError(f"state norm {norm:.12g} is not 1")

    @classmethod
    def zero(cls, width: int) -> "StateVector":
        amps = np.zeros(2 ** width, dtype=np.complex128)
        amps[0] = 1.0
        return cls(amps, width)

    @classmethod
    def from_amplitudes(cls, amps: np.ndarray) -> "StateVector":
        amps = np.asarray(amps, dtype=np.complex128)
        width = amps.shape[0].bit_length() - 1
        return cls(amps.copy(), width)

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy(), self.width)


@dataclass
class ShotRecord:
    """Sampled ancilla outcomes: bitstring -> count over the measured qubits."""

    counts: dict[str, int]
    shots: int
    seed: int
    measured_qubits: tuple[int, ...]

    def __post_init__(self):
        total = sum(self.counts.values())
        if total != self.shots:
            raise ValueError(f"counts sum to {total}, expected {self.shots}")
        width = len(self.measured_qubits)
        for key in self.counts:
            if len(key) != width or set(key) - {"0", "1"}:
                raise ValueError(f"malformed outcome key {key!r}")

    def frequencies(self) -> np.ndarray:
        """Empirical frequencies over all 2^m patterns, pattern-index order."""
        m = len(self.measured_qubits)
        out = np.zeros(2 ** m, dtype=np.float64)
        for key, count in self.counts.items():
            out[int(key, 2)] = count / self.shots
        return out


@dataclass(frozen=True)
class ConfusionModel:
    """Per-qubit symmetric readout-flip channels.

    ``rates[q]`` is the probability that qubit q's readout bit flips; the
    per-qubit confusion matrix [[1-p, p], [p, 1-p]] is column-stochastic.
    """

    rates: tuple[float, ...]

    def __init__(self, rates: Sequence[float]):
        rates = tuple(float(r) for r in rates)
        if any(not 0.0 <= r <= 1.0 for r in rates):
            raise ValueError(f"flip rates must lie in [0, 1], got {rates}")
        object.__setattr__(self, "rates", rates)

    @classmethod
    def zero(cls, n_qubits: int) -> "ConfusionModel":
        return cls((0.0,) * n_qubits)

    @classmethod
    def from_file(cls, path: str | Path) -> "ConfusionModel":
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls(payload["readout_error"])

    def covers(self, qubits: Sequence[int]) -> bool:
        return all(0 <= q < len(self.rates) for q in qubits)

    def matrix(self, qubit: int) -> np.ndarray:
        p = self.rates[qubit]
        return np.array([[1 - p, p], [p, 1 - p]], dtype=np.float64)

    def inverse_matrix(self, qubit: int) -> np.ndarray:
        p = self.rates[qubit]
        det = 1.0 - 2.0 * p
        if abs(det) < 1e-12:
            raise SingularConfusionError(
                f"flip rate {p} on qubit {qubit} makes the confusion matrix singular")
        return np.array([[1 - p, -p], [-p, 1 - p]], dtype=np.float64) / det


@dataclass(frozen=True)
class MitigationResult:
    """Readout-corrected distribution plus the raw inverted quasi-probabilities."""

    probabilities: np.ndarray
    quasi: np.ndarray
    negativity_mass: float


def _apply_1q(amps: np.ndarray, mat: np.ndarray, width: int, target: int) -> None:
    """In-place 2x2 update on one qubit axis."""
    view = amps.reshape(2 ** target, 2, -1)
    upper = view[:, 0, :].copy()
    lower = view[:, 1, :]
    view[:, 0, :] = mat[0, 0] * upper + mat[0, 1] * lower
    view[:, 1, :] = mat[1, 0] * upper + mat[1, 1] * lower


def _apply_cnot(amps: np.ndarray, width: int, control: int, target: int) -> None:
    view = amps.reshape([2] * width)
    sel0 = [slice(None)] * width
    sel1 = [slice(None)] * width
    sel0[control] = sel1[control] = 1
    sel0[target] = 0
    sel1[target] = 1
    tmp = view[tuple(sel0)].copy()
    view[tuple(sel0)] = view[tuple(sel1)]
    view[tuple(sel1)] = tmp


def _gate_matrix(g: Gate) -> np.ndarray:
    half = g.angle / 2.0
    if g.kind is GateKind.RY:
        c, s = math.cos(half), math.sin(half)
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if g.kind is GateKind.RZ:
        return np.array([[np.exp(-1j * half), 0], [0, np.exp(1j * half)]],
                        dtype=np.complex128)
    if g.kind is GateKind.PHASE:
        return np.array([[1, 0], [0, np.exp(1j * g.angle)]], dtype=np.complex128)
    raise ValueError(f"no matrix form for {g.kind}")


def run_circuit(c: Circuit, initial: StateVector | None = None) -> StateVector:
    """Apply the circuit's gates in order (and its global phase) to
    ``initial`` (default |0...0>)."""
    if initial is None:
        initial = StateVector.zero(c.width)
    if initial.width != c.width:
        raise ValueError(f"initial state width {initial.width} != circuit width {c.width}")
    amps = initial.amplitudes.copy()
    for g in c.gates:
        if g.kind is GateKind.CNOT:
            _apply_cnot(amps, c.width, g.control, g.target)
        else:
            _apply_1q(amps, _gate_matrix(g), c.width, g.target)
    if c.global_phase:
        amps *= np.exp(1j * c.global_phase)
    norm = np.linalg.norm(amps)
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"norm drifted to {norm:.15g} during execution")
    return StateVector(amps, c.width)


def marginal_probabilities(s: StateVector, qubits: Sequence[int]) -> np.ndarray:
    """Born-rule marginals over ``qubits``; the first listed qubit is the
    most significant bit of the returned index."""
    qubits = list(qubits)
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"duplicate qubits in {qubits}")
    if any(not 0 <= q < s.width for q in qubits):
        raise ValueError(f"qubit indices {qubits} out of range for width {s.width}")
    probs = np.abs(s.amplitudes.reshape([2] * s.width)) ** 2
    others = tuple(q for q in range(s.width) if q not in qubits)
    if others:
        probs = probs.sum(axis=others)
    # Axes of the summed array follow ascending qubit order; restore the
    # caller's order.
    ascending = sorted(qubits)
    perm = [ascending.index(q) for q in qubits]
    return probs.transpose(perm).reshape(-1)


def sample_shots(s: StateVector, qubits: Sequence[int], shots: int,
                 seed: int) -> ShotRecord:
    """Seeded i.i.d. draws from the qubit marginals via inverse CDF."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    qubits = tuple(qubits)
    probs = marginal_probabilities(s, qubits)
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    rng = np.random.Generator(np.random.PCG64(seed))
    draws = np.searchsorted(cdf, rng.random(shots), side="right")
    values, tallies = np.unique(draws, return_counts=True)
    m = len(qubits)
    counts = {format(int(v), f"0{m}b"): int(t) for v, t in zip(values, tallies)}
    return ShotRecord(counts=counts, shots=shots, seed=seed, measured_qubits=qubits)


def post_select(s: StateVector, qubits: Sequence[int],
                outcome: str) -> tuple[StateVector, float]:
    """Condition on ``qubits`` reading ``outcome``; returns the renormalized
    state on the remaining qubits plus the outcome probability."""
    qubits = list(qubits)
    if len(outcome) != len(qubits) or set(outcome) - {"0", "1"}:
        raise ValueError(f"outcome {outcome!r} does not address qubits {qubits}")
    view = s.amplitudes.reshape([2] * s.width)
    selector: list[object] = [slice(None)] * s.width
    for q, bit in zip(qubits, outcome):
        selector[q] = int(bit)
    slab = view[tuple(selector)].reshape(-1)
    probability = float(np.vdot(slab, slab).real)
    if probability <= 1e-12:
        raise ZeroProbabilityError(
            f"outcome {outcome!r} on qubits {qubits} has probability "
            f"{probability:.3e}")
    remaining = s.width - len(qubits)
    return StateVector(slab / math.sqrt(probability), remaining), probability


def _setting_seeds(seed: int, n_settings: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(n_settings)


def _expectation_from_probs(probs: np.ndarray, support: Sequence[int]) -> float:
    """<P> for a Pauli string with non-identity positions ``support``,
    given computational-basis probabilities after basis rotation."""
    m = probs.shape[0].bit_length() - 1
    signs = np.ones(probs.shape[0], dtype=np.float64)
    reshaped = signs.reshape([2] * m)
    for pos in support:
        index = [slice(None)] * m
        index[pos] = 1
        reshaped[tuple(index)] *= -1.0
    return float(signs @ probs)


def tomography(state_source: StateVector | Callable[[], StateVector],
               qubits: Sequence[int],
               shots_per_setting: int | None = None,
               seed: int = 0,
               condition: tuple[Sequence[int], str] | None = None) -> DensityMatrix:
    """Linear-inversion state tomography over ``qubits``.

    All 3^m Pauli settings are measured through basis-change rotations;
    ``shots_per_setting=None`` uses exact probabilities (the analytic
    limit), otherwise sampled counts with one derived seed per setting.
    ``condition`` post-selects a computational outcome on disjoint qubits
    before estimation.  The reconstruction is projected to the nearest PSD
    unit-trace matrix by eigenvalue clipping and trace renormalization.
    """
    qubits = list(qubits)
    m = len(qubits)
    if m < 1:
        raise ValueError("tomography needs at least one target qubit")
    if condition is not None:
        cond_qubits = list(condition[0])
        if set(cond_qubits) & set(qubits):
            raise ValueError("condition qubits overlap tomography qubits")

    settings = list(itertools.product("XYZ", repeat=m))
    seeds = _setting_seeds(seed, len(settings)) if shots_per_setting else None
    expectations: dict[tuple[str, ...], float] = {("I",) * m: 1.0}

    for idx, setting in enumerate(settings):
        state = state_source() if callable(state_source) else state_source.copy()
        amps = state.amplitudes.copy()
        for q, basis in zip(qubits, setting):
            if basis == "X":
                _apply_1q(amps, _H, state.width, q)
            elif basis == "Y":
                _apply_1q(amps, _H_SDG, state.width, q)
        rotated = StateVector(amps, state.width)

        if shots_per_setting is None:
            if condition is not None:
                rotated, _ = post_select(rotated, condition[0], condition[1])
                shifted = [q - sum(1 for c in condition[0] if c < q) for q in qubits]
                probs = marginal_probabilities(rotated, shifted)
            else:
                probs = marginal_probabilities(rotated, qubits)
        else:
            rng_seed = int(seeds[idx].generate_state(1)[0])
            if condition is not None:
                cond_qubits = list(condition[0])
                record = sample_shots(rotated, cond_qubits + qubits,
                                      shots_per_setting, rng_seed)
                kept = {key[len(cond_qubits):]: n for key, n in record.counts.items()
                        if key[:len(cond_qubits)] == condition[1]}
                total = sum(kept.values())
                if total == 0:
                    raise ZeroProbabilityError(
                        f"no shots survived post-selection on {condition[1]!r}")
                probs = np.zeros(2 ** m)
                for key, n in kept.items():
                    probs[int(key, 2)] = n / total
            else:
                record = sample_shots(rotated, qubits, shots_per_setting, rng_seed)
                probs = record.frequencies()

        # Every substring of this setting (I substituted at will) could be
        # estimated here; we deterministically assign each Pauli string to
        # the setting that replaces its identities by Z.
        for pattern in itertools.product((0, 1), repeat=m):
            string = tuple("I" if keep == 0 else setting[i]
                           for i, keep in enumerate(pattern))
            canonical = tuple("Z" if p == "I" else p for p in string)
            if canonical != setting or string in expectations:
                continue
            support = [i for i, p in enumerate(string) if p != "I"]
            expectations[string] = _expectation_from_probs(probs, support)

    rho = np.zeros((2 ** m, 2 ** m), dtype=np.complex128)
    for string, value in expectations.items():
        op = np.array([[1.0]], dtype=np.complex128)
        for p in string:
            op = np.kron(op, _PAULI[p])
        rho += value * op
    rho /= 2 ** m

    eigenvalues, vectors = np.linalg.eigh((rho + rho.conj().T) / 2.0)
    clipped = np.clip(eigenvalues, 0.0, None)
    total = clipped.sum()
    if total <= 0:
        raise ZeroProbabilityError("tomography produced a zero operator")
    rho = (vectors * (clipped / total)) @ vectors.conj().T
    return DensityMatrix(rho)


def apply_confusion(record: ShotRecord, model: ConfusionModel,
                    seed: int) -> ShotRecord:
    """Flip each recorded bit independently with its per-qubit rate.

    Shots from one source pattern land on output patterns multinomially
    with the product flip probabilities, which is exactly independent
    per-bit noise.
    """
    if not model.covers(record.measured_qubits):
        raise ValueError(f"model with {len(model.rates)} rates does not cover "
                         f"qubits {record.measured_qubits}")
    m = len(record.measured_qubits)
    rng = np.random.Generator(np.random.PCG64(seed))
    out = np.zeros(2 ** m, dtype=np.int64)
    for key, count in sorted(record.counts.items()):
        joint = np.array([1.0])
        for q, bit in zip(record.measured_qubits, key):
            joint = np.kron(joint, model.matrix(q)[:, int(bit)])
        out += rng.multinomial(count, joint)
    counts = {format(i, f"0{m}b"): int(n) for i, n in enumerate(out) if n > 0}
    return ShotRecord(counts=counts, shots=record.shots, seed=seed,
                      measured_qubits=record.measured_qubits)


def _project_to_simplex(q: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    n = q.shape[0]
    u = np.sort(q)[::-1]
    cumulative = np.cumsum(u)
    ks = np.arange(1, n + 1)
    feasible = u + (1.0 - cumulative) / ks > 0
    k = int(np.nonzero(feasible)[0][-1]) + 1
    shift = (1.0 - cumulative[k - 1]) / k
    return np.maximum(q + shift, 0.0)


def mitigate_readout(record: ShotRecord, model: ConfusionModel) -> MitigationResult:
    """Invert the tensor-product confusion matrix on empirical frequencies.

    The raw quasi-probabilities are clipped to the probability simplex by
    nearest-point Euclidean projection; the mass below zero before
    clipping is reported.
    """
    if not model.covers(record.measured_qubits):
        raise ValueError(f"model with {len(model.rates)} rates does not cover "
                         f"qubits {record.measured_qubits}")
    m = len(record.measured_qubits)
    quasi = record.frequencies().reshape([2] * m)
    for axis, q in enumerate(record.measured_qubits):
        inverse = model.inverse_matrix(q)
        quasi = np.moveaxis(np.tensordot(inverse, quasi, axes=([1], [axis])), 0, axis)
    quasi = quasi.reshape(-1)
    negativity = float(-quasi[quasi < 0].sum())
    return MitigationResult(probabilities=_project_to_simplex(quasi),
                            quasi=quasi, negativity_mass=negativity)
