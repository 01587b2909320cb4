"""Command-line front end: validate, simulate, export-qasm, histogram.

Job specs are JSON files with complex entries written as [re, im] pairs;
see the repository README for the schema.  Exit codes: 0 success,
1 mathematical invalidity, 2 parse/schema error, 3 I/O error.
"""

from __future__ import annotations

import csv
import functools
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np

from . import __version__
from .dilation import QuditEncoding, encode_to_qubits, instrument_purification, joint_state
from .errors import MathValidityError, SpecFormatError
from .povm import (Povm, QuantumInstrument, validate_completeness,
                   validate_instrument)
from .simulator import (ConfusionModel, StateVector, apply_confusion,
                        marginal_probabilities, mitigate_readout, post_select,
                        run_circuit, sample_shots, tomography)
from .stateprep import circuit_to_qasm, prepare_state

EXIT_MATH = 1
EXIT_SPEC = 2
EXIT_IO = 3

DEFAULT_SHOTS = 8192
SEED_ENV_VAR = "POVMSIM_SEED"


@dataclass
class JobSpec:
    """Parsed and validated contents of a job-spec file."""

    kind: str
    povm: Povm | None
    instrument: QuantumInstrument | None
    psi0: np.ndarray
    shots: int
    seed: int | None
    noise: str | None
    source_path: Path
    sha256: str

    @property
    def dim(self) -> int:
        return self.povm.dim if self.povm is not None else self.instrument.dim


def _complex_entry(value, where: str) -> complex:
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(x, (int, float)) for x in value)):
        raise SpecFormatError(f"{where}: expected a [re, im] pair, got {value!r}")
    return complex(value[0], value[1])


def _matrix(value, dim: int, where: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != dim:
        raise SpecFormatError(f"{where}: expected {dim} rows")
    rows = []
    for r, row in enumerate(value):
        if not isinstance(row, list) or len(row) != dim:
            raise SpecFormatError(f"{where}[{r}]: expected {dim} entries")
        rows.append([_complex_entry(e, f"{where}[{r}][{c}]")
                     for c, e in enumerate(row)])
    return np.array(rows, dtype=np.complex128)


def _input_state(value, dim: int) -> np.ndarray:
    if isinstance(value, str):
        if value == "zero":
            out = np.zeros(dim, dtype=np.complex128)
            out[0] = 1.0
            return out
        if value == "uniform":
            return np.full(dim, 1.0 / math.sqrt(dim), dtype=np.complex128)
        if value.startswith("basis:"):
            k = int(value.split(":", 1)[1])
            if not 0 <= k < dim:
                raise SpecFormatError(f"input_state: basis index {k} out of range")
            out = np.zeros(dim, dtype=np.complex128)
            out[k] = 1.0
            return out
        raise SpecFormatError(f"input_state: unknown preset {value!r}")
    if not isinstance(value, list) or len(value) != dim:
        raise SpecFormatError(f"input_state: expected {dim} amplitudes")
    amps = np.array([_complex_entry(e, f"input_state[{i}]")
                     for i, e in enumerate(value)], dtype=np.complex128)
    norm = np.linalg.norm(amps)
    if abs(norm - 1.0) > 1e-9:
        raise SpecFormatError(f"input_state: norm {norm:.12g} is not 1")
    return amps


def load_jobspec(path: str | Path) -> JobSpec:
    path = Path(path)
    raw = path.read_bytes()
    try:
        payload = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SpecFormatError(f"{path}: invalid JSON at line {exc.lineno}, "
                              f"column {exc.colno}: {exc.msg}")
    if not isinstance(payload, dict):
        raise SpecFormatError(f"{path}: top level must be an object")

    kind = payload.get("kind")
    if kind not in ("povm", "instrument"):
        raise SpecFormatError(f"kind: expected 'povm' or 'instrument', got {kind!r}")
    dim = payload.get("dim")
    if not isinstance(dim, int) or dim < 1:
        raise SpecFormatError(f"dim: expected a positive integer, got {dim!r}")

    povm = instrument = None
    try:
        if kind == "povm":
            elements = payload.get("elements")
            if not isinstance(elements, list) or not elements:
                raise SpecFormatError("elements: expected a non-empty list of matrices")
            mats = [_matrix(m, dim, f"elements[{j}]") for j, m in enumerate(elements)]
            labels = payload.get("labels")
            if labels is not None and (
                    not isinstance(labels, list)
                    or len(labels) != len(mats)
                    or not all(isinstance(s, str) for s in labels)):
                raise SpecFormatError("labels: expected one string per element")
            povm = Povm(mats, labels=labels)
        else:
            branches = payload.get("branches")
            if not isinstance(branches, list) or not branches:
                raise SpecFormatError("branches: expected a non-empty list")
            rows = []
            for j, branch in enumerate(branches):
                if not isinstance(branch, list) or not branch:
                    raise SpecFormatError(f"branches[{j}]: expected a non-empty list")
                rows.append([_matrix(m, dim, f"branches[{j}][{k}]")
                             for k, m in enumerate(branch)])
            instrument = QuantumInstrument(rows)
    except ValueError as exc:
        raise SpecFormatError(str(exc))

    psi0 = _input_state(payload.get("input_state", "zero"), dim)

    shots = payload.get("shots", DEFAULT_SHOTS)
    if not isinstance(shots, int) or shots < 1:
        raise SpecFormatError(f"shots: expected a positive integer, got {shots!r}")
    seed = payload.get("seed")
    if seed is not None and not isinstance(seed, int):
        raise SpecFormatError(f"seed: expected an integer, got {seed!r}")
    noise = payload.get("noise")
    if noise is not None and not isinstance(noise, str):
        raise SpecFormatError(f"noise: expected a file path string, got {noise!r}")

    return JobSpec(kind=kind, povm=povm, instrument=instrument, psi0=psi0,
                   shots=shots, seed=seed, noise=noise, source_path=path,
                   sha256=hashlib.sha256(raw).hexdigest())


def _resolve_seed(flag: int | None, spec: JobSpec) -> int:
    if flag is not None:
        return flag
    if spec.seed is not None:
        return spec.seed
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise SpecFormatError(f"{SEED_ENV_VAR}={env!r} is not an integer")
    return 0


def _parse_order(text: str, width: int) -> list[int]:
    try:
        order = [int(tok) for tok in text.split(",")]
    except ValueError:
        raise SpecFormatError(f"--qubit-order: expected comma-separated integers, "
                              f"got {text!r}")
    if sorted(order) != list(range(width)):
        raise SpecFormatError(f"--qubit-order: {order} is not a permutation of "
                              f"0..{width - 1}")
    return order


def _permute_amplitudes(amps: np.ndarray, order: list[int]) -> np.ndarray:
    """Relabel qubits so new position i holds old qubit order[i]."""
    n = len(order)
    return amps.reshape([2] * n).transpose(order).reshape(-1)


@dataclass
class Pipeline:
    """Everything the protocol produces before measurement statistics."""

    spec: JobSpec
    encoding: QuditEncoding
    circuit: object
    state: StateVector
    system_qubits: list[int]
    ancilla_qubits: list[int]
    ancilla_subsystem: int

    def ancilla_levels(self) -> int:
        return self.encoding.dims[self.ancilla_subsystem]


def build_pipeline(spec: JobSpec, qubit_order: str | None = None) -> Pipeline:
    if spec.kind == "povm":
        state = joint_state(spec.povm, spec.psi0)
        ancilla_subsystem = 1
    else:
        state = instrument_purification(spec.instrument, spec.psi0)
        ancilla_subsystem = 1  # the pointer register J
    amps, encoding = encode_to_qubits(state)
    system_qubits = encoding.subsystem_qubits(0)
    ancilla_qubits = encoding.subsystem_qubits(ancilla_subsystem)
    if qubit_order is not None:
        order = _parse_order(qubit_order, encoding.total_qubits)
        amps = _permute_amplitudes(amps, order)
        system_qubits = [order.index(q) for q in system_qubits]
        ancilla_qubits = [order.index(q) for q in ancilla_qubits]
    circuit = prepare_state(amps)
    return Pipeline(spec=spec, encoding=encoding, circuit=circuit,
                    state=run_circuit(circuit), system_qubits=system_qubits,
                    ancilla_qubits=ancilla_qubits,
                    ancilla_subsystem=ancilla_subsystem)


def _outcome_label(spec: JobSpec, level: int, n_levels: int) -> str:
    if level >= n_levels:
        return "(unused)"
    if spec.kind == "povm":
        return spec.povm.label(level)
    return f"branch {level}"


def _matrix_json(m: np.ndarray) -> list:
    return [[[float(e.real), float(e.imag)] for e in row] for row in m]


def _density_block(matrix: np.ndarray, encoding_dims: tuple[int, ...]) -> list:
    """Decode a qubit-space density matrix back to qudit levels."""
    sub = QuditEncoding(encoding_dims)
    used = sub.used_indices()
    decoded = matrix[np.ix_(used, used)]
    trace = np.trace(decoded).real
    if trace > 1e-12 and abs(trace - 1.0) > 1e-12:
        decoded = decoded / trace
    return _matrix_json(decoded)


def run_simulation(spec: JobSpec, *, shots: int, seed: int, exact: bool,
                   noise_path: str | None, mitigate: bool,
                   post_select_outcome: int | None, tomo: bool,
                   qubit_order: str | None = None) -> dict:
    if qubit_order is not None and (post_select_outcome is not None or tomo):
        raise SpecFormatError("--qubit-order is a register-presentation option; "
                              "it cannot be combined with --post-select or --tomo")
    pipeline = build_pipeline(spec, qubit_order)
    encoding = pipeline.encoding
    anc = pipeline.ancilla_qubits
    n_levels = pipeline.ancilla_levels()

    probs = marginal_probabilities(pipeline.state, anc)
    outcomes = [format(i, f"0{len(anc)}b") for i in range(len(probs))]
    labels = [_outcome_label(spec, i, n_levels) for i in range(len(probs))]
    document: dict = {
        "analytic": {
            "outcomes": outcomes,
            "labels": labels,
            "probabilities": [float(p) for p in probs],
        },
        "counts": None,
        "shots": None,
        "mitigated": None,
        "post_selected": None,
        "tomography": None,
        "circuit": {
            "width": pipeline.circuit.width,
            "gate_count": len(pipeline.circuit.gates),
            "cnot_count": pipeline.circuit.cnot_count,
            "global_phase": float(pipeline.circuit.global_phase),
        },
        "provenance": {
            "kind": spec.kind,
            "seed": seed,
            "version": __version__,
            "input_sha256": spec.sha256,
        },
    }

    model = None
    if noise_path is not None:
        try:
            model = ConfusionModel.from_file(noise_path)
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise SpecFormatError(f"noise model {noise_path}: {exc}")
        if not model.covers(anc):
            raise SpecFormatError(f"noise model {noise_path} covers "
                                  f"{len(model.rates)} qubits; ancilla uses {anc}")
    if mitigate and model is None:
        raise SpecFormatError("--mitigate requires a noise model (--noise)")

    if not exact:
        record = sample_shots(pipeline.state, anc, shots, seed)
        if model is not None:
            record = apply_confusion(record, model, seed + 1)
        document["counts"] = dict(sorted(record.counts.items()))
        document["shots"] = shots
        if mitigate:
            result = mitigate_readout(record, model)
            document["mitigated"] = {
                "probabilities": [float(p) for p in result.probabilities],
                "negativity_mass": float(result.negativity_mass),
            }

    if post_select_outcome is not None:
        j = post_select_outcome
        if not 0 <= j < n_levels:
            raise SpecFormatError(f"--post-select: outcome {j} out of range "
                                  f"0..{n_levels - 1}")
        bits = encoding.level_bitstring(pipeline.ancilla_subsystem, j)
        if spec.kind == "povm":
            reduced, probability = post_select(pipeline.state, anc, bits)
            decoded = QuditEncoding((spec.dim,)).decode_vector(
                reduced.amplitudes, atol=None)
            norm = np.linalg.norm(decoded)
            decoded = decoded / norm
            rho = np.outer(decoded, decoded.conj())
            document["post_selected"] = {
                "outcome": j,
                "ancilla_bits": bits,
                "probability": float(probability),
                "density_matrix": _matrix_json(rho),
            }
        else:
            _, probability = post_select(pipeline.state, anc, bits)
            rho = tomography(pipeline.state, pipeline.system_qubits,
                             None if exact else shots, seed,
                             condition=(anc, bits))
            document["post_selected"] = {
                "outcome": j,
                "ancilla_bits": bits,
                "probability": float(probability),
                "density_matrix": _density_block(rho.matrix, (spec.dim,)),
            }

    if tomo:
        if post_select_outcome is not None:
            bits = encoding.level_bitstring(pipeline.ancilla_subsystem,
                                            post_select_outcome)
            qubits = pipeline.system_qubits
            rho = tomography(pipeline.state, qubits, None if exact else shots,
                             seed, condition=(anc, bits))
            dims = (spec.dim,)
        elif spec.kind == "instrument":
            qubits = pipeline.system_qubits + anc
            rho = tomography(pipeline.state, qubits, None if exact else shots, seed)
            dims = (spec.dim, spec.instrument.n_branches)
        else:
            qubits = pipeline.system_qubits
            rho = tomography(pipeline.state, qubits, None if exact else shots, seed)
            dims = (spec.dim,)
        document["tomography"] = {
            "qubits": list(qubits),
            "density_matrix": _density_block(rho.matrix, dims),
        }
    return document


def _cli_guard(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except SpecFormatError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_SPEC)
        except MathValidityError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_MATH)
        except OSError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_IO)
    return wrapper


@click.group()
@click.version_option(version=__version__)
def main():
    """Simulate generalized quantum measurements via ancilla dilation."""


@main.command()
@click.argument("specfile", type=click.Path())
@click.option("--tol", type=float, default=1e-10, show_default=True,
              help="Completeness tolerance.")
@_cli_guard
def validate(specfile, tol):
    """Check that SPECFILE describes a complete measurement."""
    spec = load_jobspec(specfile)
    if spec.kind == "povm":
        report = validate_completeness(spec.povm, tol)
    else:
        report = validate_instrument(spec.instrument, tol)
    click.echo(report.summary())
    if not report.ok:
        sys.exit(EXIT_MATH)


@main.command()
@click.argument("specfile", type=click.Path())
@click.option("--shots", type=int, default=None, help="Shot count (default: spec file, then 8192).")
@click.option("--seed", type=int, default=None,
              help=f"PRNG seed (default: spec file, then ${SEED_ENV_VAR}, then 0).")
@click.option("--exact", is_flag=True, help="Analytic probabilities only; no sampling.")
@click.option("--noise", "noise_path", type=click.Path(), default=None,
              help="Readout-noise model file (overrides the spec).")
@click.option("--mitigate", is_flag=True, help="Invert the readout-noise model on the counts.")
@click.option("--post-select", "post_select_outcome", type=int, default=None,
              help="Condition on this ancilla outcome and report the system state.")
@click.option("--tomo", is_flag=True, help="Reconstruct a density matrix by tomography.")
@click.option("--qubit-order", default=None,
              help="Comma-separated relabeling of the prepared register.")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write the result document here instead of stdout.")
@_cli_guard
def simulate(specfile, shots, seed, exact, noise_path, mitigate,
             post_select_outcome, tomo, qubit_order, out_path):
    """Run the full dilate/compile/execute/measure pipeline on SPECFILE."""
    spec = load_jobspec(specfile)
    resolved_seed = _resolve_seed(seed, spec)
    resolved_shots = shots if shots is not None else spec.shots
    if resolved_shots < 1:
        raise SpecFormatError(f"--shots: expected a positive integer, got {resolved_shots}")
    noise = noise_path if noise_path is not None else spec.noise
    if noise is not None and not Path(noise).is_absolute():
        candidate = spec.source_path.parent / noise
        if candidate.exists():
            noise = str(candidate)
    document = run_simulation(
        spec, shots=resolved_shots, seed=resolved_seed, exact=exact,
        noise_path=noise, mitigate=mitigate,
        post_select_outcome=post_select_outcome, tomo=tomo,
        qubit_order=qubit_order)
    text = json.dumps(document, indent=2, sort_keys=True) + "\n"
    if out_path is None:
        click.echo(text, nl=False)
    else:
        Path(out_path).write_text(text, encoding="utf-8")


@main.command("export-qasm")
@click.argument("specfile", type=click.Path())
@click.argument("out", type=click.Path())
@click.option("--qubit-order", default=None,
              help="Comma-separated relabeling of the prepared register.")
@_cli_guard
def export_qasm(specfile, out, qubit_order):
    """Write the preparation circuit for SPECFILE as OpenQASM 3.0."""
    spec = load_jobspec(specfile)
    pipeline = build_pipeline(spec, qubit_order)
    Path(out).write_text(circuit_to_qasm(pipeline.circuit), encoding="utf-8")
    click.echo(f"wrote {out} ({pipeline.circuit.width} qubits, "
               f"{pipeline.circuit.cnot_count} CNOTs)")


@main.command()
@click.argument("resultfile", type=click.Path())
@click.argument("out", type=click.Path())
@click.option("--plot", "plot_path", type=click.Path(), default=None,
              help="Also write a gnuplot script rendering the CSV.")
@_cli_guard
def histogram(resultfile, out, plot_path):
    """Tabulate a simulate result document as CSV (outcome histogram)."""
    try:
        document = json.loads(Path(resultfile).read_text(encoding="utf-8"))
        analytic = document["analytic"]
        outcomes = analytic["outcomes"]
        labels = analytic["labels"]
        probabilities = analytic["probabilities"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise SpecFormatError(f"{resultfile}: not a result document ({exc})")
    counts = document.get("counts") or {}
    mitigated = (document.get("mitigated") or {}).get("probabilities")

    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["outcome", "label", "analytic", "sampled", "mitigated"])
        for i, outcome in enumerate(outcomes):
            writer.writerow([
                outcome,
                labels[i],
                repr(float(probabilities[i])),
                counts.get(outcome, "") if counts else "",
                repr(float(mitigated[i])) if mitigated is not None else "",
            ])
    if plot_path is not None:
        Path(plot_path).write_text(
            "set datafile separator ','\n"
            "set style data histogram\n"
            "set style fill solid 0.6\n"
            "set key autotitle columnheader\n"
            f"plot '{out}' using 3:xtic(1), '' using 5\n",
            encoding="utf-8")
    click.echo(f"wrote {out}")


if __name__ == "__main__":
    main()
