"""Exception hierarchy shared across the package.

Two error families matter to callers (and to the CLI exit-code contract):
mathematical invalidity of otherwise well-formed inputs, and format/schema
problems in externally supplied files.
"""


class PovmSimError(Exception):
    """Base class for all package-specific errors."""


class MathValidityError(PovmSimError):
    """Input is structurally fine but mathematically invalid."""


class IncompletePovmError(MathValidityError):
    """Measurement operators do not sum to the identity within tolerance."""

    def __init__(self, deviation: float, tolerance: float):
        self.deviation = deviation
        self.tolerance = tolerance
        super().__init__(
            f"completeness violated: max deviation {deviation:.3e} "
            f"exceeds tolerance {tolerance:.3e}"
        )


class ZeroProbabilityError(MathValidityError):
    """Unconditionable outcome: conditioning on an event of (near-)zero probability."""


class SingularConfusionError(MathValidityError):
    """Readout confusion matrix is singular and cannot be inverted."""


class SpecFormatError(PovmSimError):
    """A job-spec or other input file violates the documented schema."""


class QasmParseError(SpecFormatError):
    """Unsupported or malformed construct in an OpenQASM program."""

    def __init__(self, message: str, line: int, column: int = 1):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")
