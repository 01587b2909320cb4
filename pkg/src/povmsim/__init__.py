"""Simulate generalized quantum measurements on d-level systems.

The pipeline: describe a measurement (POVM or instrument), dilate it into
a joint pure state on system + ancilla, compile that state into a gate
circuit, execute on an exact statevector engine, then read statistics and
post-measurement states off the ancilla via sampling, post-selection, and
tomography.
"""

from .dilation import (JointState, QuditEncoding, encode_to_qubits,
                       instrument_purification, isometry_matrix, joint_state)
from .errors import (IncompletePovmError, MathValidityError, PovmSimError,
                     QasmParseError, SingularConfusionError, SpecFormatError,
                     ZeroProbabilityError)
from .linalg import adjoint, is_psd, partial_trace, tensor
from .povm import (DensityMatrix, Povm, QuantumInstrument, ValidationReport,
                   branch_probabilities, instrument_output,
                   outcome_probabilities, post_measurement_state,
                   povm_from_instrument, validate_completeness,
                   validate_instrument)
from .simulator import (ConfusionModel, MitigationResult, ShotRecord,
                        StateVector, apply_confusion, marginal_probabilities,
                        mitigate_readout, post_select, run_circuit,
                        sample_shots, tomography)
from .stateprep import (Circuit, Gate, GateKind, circuit_to_qasm,
                        decompose_multiplexor, disentangle_angles, parse_qasm,
                        prepare_state)

__version__ = "0.1.0"

__all__ = [
    "Circuit", "ConfusionModel", "DensityMatrix", "Gate", "GateKind",
    "IncompletePovmError", "JointState", "MathValidityError",
    "MitigationResult", "Povm", "PovmSimError", "QasmParseError",
    "QuantumInstrument", "QuditEncoding", "ShotRecord",
    "SingularConfusionError", "SpecFormatError", "StateVector",
    "ValidationReport", "ZeroProbabilityError", "adjoint", "apply_confusion",
    "branch_probabilities", "circuit_to_qasm", "decompose_multiplexor",
    "disentangle_angles", "encode_to_qubits", "instrument_output",
    "instrument_purification", "is_psd", "isometry_matrix", "joint_state",
    "marginal_probabilities", "mitigate_readout", "outcome_probabilities",
    "parse_qasm", "partial_trace", "post_measurement_state", "post_select",
    "povm_from_instrument", "prepare_state", "run_circuit", "sample_shots",
    "tensor", "tomography", "validate_completeness", "validate_instrument",
]
