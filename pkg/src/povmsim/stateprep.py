"""Compile an arbitrary normalized amplitude vector into a gate circuit.

The compiler disentangles one qubit at a time, starting from the last
(least significant) one.  For every prefix branch b the amplitude pair
(v[2b], v[2b+1]) is rotated onto its even child by an RY/RZ pair whose
angles are

    theta_b = 2 * atan2(|v[2b+1]|, |v[2b]|)
    delta_b = arg(v[2b+1]) - arg(v[2b])

leaving a half-length vector that absorbs the branch magnitude and the
mean phase.  Replaying the multiplexed rotations forward (RY then RZ per
layer, most significant qubit first) prepares the target from |0...0> up
to a global phase, which is tracked on the circuit and never synthesized
into gates.

Multiplexed rotations are lowered to 2^k single-qubit rotations
interleaved with 2^k CNOTs walking a Gray code; the lowered angles are the
Walsh-Hadamard transform of the branch angles scaled by 2^-k.  A peephole
pass drops rotations below 1e-14 and cancels the CNOT runs they orphan,
which keeps circuits for sparse targets (padded qudit registers) short.
CNOT count is bounded by 2^(n+1).
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import QasmParseError
from .linalg import as_complex_vector, is_normalized

ELISION_ATOL = 1e-14


class GateKind(enum.Enum):
    RY = "ry"
    RZ = "rz"
    PHASE = "p"
    CNOT = "cx"


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    target: int
    angle: float = 0.0
    control: int | None = None

    def __post_init__(self):
        if self.kind is GateKind.CNOT:
            if self.control is None or self.control == self.target:
                raise ValueError("CNOT needs a control distinct from its target")
        else:
            if self.control is not None:
                raise ValueError(f"{self.kind.value} takes no control")
            if not math.isfinite(self.angle):
                raise ValueError(f"{self.kind.value} angle must be finite")


@dataclass(frozen=True)
class Circuit:
    width: int
    gates: tuple[Gate, ...] = ()
    global_phase: float = 0.0

    def __post_init__(self):
        for g in self.gates:
            qubits = (g.target,) if g.control is None else (g.control, g.target)
            for q in qubits:
                if not 0 <= q < self.width:
                    raise ValueError(f"gate {g} uses qubit {q} outside width {self.width}")

    @property
    def cnot_count(self) -> int:
        return sum(1 for g in self.gates if g.kind is GateKind.CNOT)

    @property
    def rotation_count(self) -> int:
        return len(self.gates) - self.cnot_count


def gray_code(i: int) -> int:
    return i ^ (i >> 1)


def disentangle_angles(amplitudes: np.ndarray,
                       qubit: int | None = None
                       ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Angles that factor ``qubit`` (default: the last one) into |0>.

    Returns (ry_angles, rz_angles, reduced) with one angle per branch over
    the remaining qubits, in their original order.  Zero-norm branches get
    zero angles; atan2 handles single-zero children without special cases.
    """
    v = as_complex_vector(amplitudes)
    n_amps = v.shape[0]
    n = n_amps.bit_length() - 1
    if 2 ** n != n_amps or n < 1:
        raise ValueError(f"amplitude count {n_amps} is not a power of two >= 2")
    if qubit is None:
        qubit = n - 1
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range for {n} qubits")
    # Branch index runs over the other qubits in order; bring the factored
    # qubit to the last axis so children sit at stride 1.
    pairs = v.reshape([2] * n)
    if qubit != n - 1:
        pairs = np.moveaxis(pairs, qubit, -1)
    pairs = pairs.reshape(-1, 2)
    even, odd = pairs[:, 0], pairs[:, 1]
    ry = 2.0 * np.arctan2(np.abs(odd), np.abs(even))
    phase_even = np.angle(even)
    phase_odd = np.angle(odd)
    rz = phase_odd - phase_even
    magnitude = np.sqrt(np.abs(even) ** 2 + np.abs(odd) ** 2)
    reduced = magnitude * np.exp(1j * (phase_even + phase_odd) / 2.0)
    return ry, rz, reduced


def _walsh_gray_angles(angles: np.ndarray) -> np.ndarray:
    """phi_i = 2^-k sum_x (-1)^(gray(i).x) alpha_x."""
    k = angles.shape[0].bit_length() - 1
    out = np.empty_like(angles, dtype=np.float64)
    for i in range(angles.shape[0]):
        g = gray_code(i)
        signs = np.fromiter(
            ((-1) ** bin(g & x).count("1") for x in range(angles.shape[0])),
            dtype=np.float64, count=angles.shape[0])
        out[i] = float(signs @ angles) / (2 ** k)
    return out


def decompose_multiplexor(angles: Sequence[float], axis: str,
                          controls: Sequence[int], target: int) -> list[Gate]:
    """Lower a uniformly controlled rotation to rotations + a Gray-code
    CNOT walk.

    ``angles[x]`` is the rotation for control value x with controls[0]
    most significant.  The returned sequence reproduces the block-diagonal
    multiplexor exactly (the closing CNOT restores every branch's parity).
    """
    angles = np.asarray(angles, dtype=np.float64)
    count = angles.shape[0]
    k = count.bit_length() - 1
    if 2 ** k != count:
        raise ValueError(f"angle count {count} is not a power of two")
    if len(controls) != k:
        raise ValueError(f"{len(controls)} controls for {count} angles")
    axis = axis.upper()
    if axis not in ("Y", "Z"):
        raise ValueError(f"axis must be Y or Z, got {axis!r}")
    kind = GateKind.RY if axis == "Y" else GateKind.RZ

    if k == 0:
        return [Gate(kind, target, float(angles[0]))]

    lowered = _walsh_gray_angles(angles)
    gates: list[Gate] = []
    for i in range(count):
        gates.append(Gate(kind, target, float(lowered[i])))
        # Bit flipped between gray(i) and gray(i+1 mod 2^k); significance s
        # lives on controls[k-1-s].
        flip = (i + 1) & -(i + 1) if i + 1 < count else 1 << (k - 1)
        s = flip.bit_length() - 1
        gates.append(Gate(GateKind.CNOT, target, control=controls[k - 1 - s]))
    return gates


def _elide(gates: Iterable[Gate]) -> list[Gate]:
    """Drop near-zero rotations, then reduce each maximal run of CNOTs
    sharing a target to the controls with odd multiplicity (same-target
    CNOTs commute)."""
    kept = [g for g in gates
            if not (g.kind is not GateKind.CNOT and abs(g.angle) < ELISION_ATOL)]
    out: list[Gate] = []
    run_target: int | None = None
    run_controls: list[int] = []

    def flush():
        nonlocal run_target, run_controls
        if run_target is None:
            return
        for c in sorted(set(run_controls)):
            if run_controls.count(c) % 2:
                out.append(Gate(GateKind.CNOT, run_target, control=c))
        run_target, run_controls = None, []

    for g in kept:
        if g.kind is GateKind.CNOT:
            if run_target is not None and g.target != run_target:
                flush()
            run_target = g.target
            run_controls.append(g.control)
        else:
            flush()
            out.append(g)
    flush()
    return out


def prepare_state(target: np.ndarray) -> Circuit:
    """Circuit taking |0...0> to ``target`` up to the reported global phase."""
    v = as_complex_vector(target)
    n_amps = v.shape[0]
    n = n_amps.bit_length() - 1
    if 2 ** n != n_amps:
        raise ValueError(f"amplitude count {n_amps} is not a power of two")
    if not is_normalized(v):
        raise ValueError(f"target norm {np.linalg.norm(v):.12g} is not 1")
    if n == 0:
        return Circuit(width=0, gates=(), global_phase=float(np.angle(v[0])))

    ry_layers: list[np.ndarray] = []
    rz_layers: list[np.ndarray] = []
    for q in range(n - 1, -1, -1):
        ry, rz, v = disentangle_angles(v, q)
        ry_layers.append(ry)
        rz_layers.append(rz)
    global_phase = float(np.angle(v[0]))

    gates: list[Gate] = []
    for q in range(n):
        layer = n - 1 - q  # layers were recorded from the last qubit inward
        controls = list(range(q))
        gates.extend(decompose_multiplexor(ry_layers[layer], "Y", controls, q))
        gates.extend(decompose_multiplexor(rz_layers[layer], "Z", controls, q))
    return Circuit(width=n, gates=tuple(_elide(gates)), global_phase=global_phase)


# --- OpenQASM 3.0 emission and parsing (only the gate subset above) ---

_QASM_HEADER = "OPENQASM 3.0;"
_QASM_INCLUDE = 'include "stdgates.inc";'


def _format_angle(angle: float) -> str:
    return f"{angle:.17g}"


def circuit_to_qasm(c: Circuit) -> str:
    """Emit the circuit as OpenQASM 3.0 text (UTF-8, LF line endings).

    A comment carries the global phase; angles are printed with 17
    significant digits so parsing them back is exact for doubles.
    """
    lines = [
        _QASM_HEADER,
        _QASM_INCLUDE,
        f"// global_phase: {_format_angle(c.global_phase)}",
        f"qubit[{c.width}] q;",
    ]
    for g in c.gates:
        if g.kind is GateKind.CNOT:
            lines.append(f"cx q[{g.control}], q[{g.target}];")
        else:
            lines.append(f"{g.kind.value}({_format_angle(g.angle)}) q[{g.target}];")
    return "\n".join(lines) + "\n"


_GATE_RE = re.compile(
    r"^(?P<name>ry|rz|p)\((?P<angle>[^)]+)\)\s+q\[(?P<target>\d+)\];$")
_CX_RE = re.compile(r"^cx\s+q\[(?P<control>\d+)\],\s*q\[(?P<target>\d+)\];$")
_DECL_RE = re.compile(r"^qubit\[(?P<width>\d+)\]\s+q;$")
_PHASE_COMMENT_RE = re.compile(r"^//\s*global_phase:\s*(?P<phase>\S+)$")

_KIND_BY_NAME = {"ry": GateKind.RY, "rz": GateKind.RZ, "p": GateKind.PHASE}


def parse_qasm(text: str) -> Circuit:
    """Inverse of :func:`circuit_to_qasm` on its image.

    Raises :class:`QasmParseError` with line/column diagnostics for
    anything outside the emitted subset.
    """
    width: int | None = None
    global_phase = 0.0
    gates: list[Gate] = []
    saw_header = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("//"):
            m = _PHASE_COMMENT_RE.match(line)
            if m:
                try:
                    global_phase = float(m.group("phase"))
                except ValueError:
                    raise QasmParseError("malformed global_phase comment", lineno)
            continue
        if line == _QASM_HEADER:
            saw_header = True
            continue
        if line.startswith("OPENQASM"):
            raise QasmParseError(f"unsupported version declaration {line!r}", lineno)
        if line.startswith("include"):
            continue
        m = _DECL_RE.match(line)
        if m:
            if width is not None:
                raise QasmParseError("duplicate qubit declaration", lineno)
            width = int(m.group("width"))
            continue
        if width is None:
            raise QasmParseError("gate before qubit declaration", lineno)
        m = _GATE_RE.match(line)
        if m:
            try:
                angle = float(m.group("angle"))
            except ValueError:
                col = line.index("(") + 2
                raise QasmParseError(f"malformed angle {m.group('angle')!r}",
                                     lineno, col)
            gates.append(Gate(_KIND_BY_NAME[m.group("name")],
                              int(m.group("target")), angle))
            continue
        m = _CX_RE.match(line)
        if m:
            gates.append(Gate(GateKind.CNOT, int(m.group("target")),
                              control=int(m.group("control"))))
            continue
        raise QasmParseError(f"unsupported construct {line.split()[0]!r}", lineno)

    if not saw_header:
        raise QasmParseError("missing OPENQASM 3.0 header", 1)
    if width is None:
        raise QasmParseError("missing qubit declaration", 1)
    try:
        return Circuit(width=width, gates=tuple(gates), global_phase=global_phase)
    except ValueError as exc:
        raise QasmParseError(str(exc), 1)
