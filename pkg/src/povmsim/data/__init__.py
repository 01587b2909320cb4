"""Bundled job specs and readout-noise models.

Five example measurements ship with the package (ex1, ex2, ex3, ex4, qi)
along with two readout-error calibration snapshots of a five-qubit device
(belem_readout_a, belem_readout_b).  Everything is a plain JSON file; the
CLI takes these paths like any user-supplied file.
"""

from importlib import resources
from pathlib import Path

BUNDLED_SPECS = ("ex1", "ex2", "ex3", "ex4", "qi")
BUNDLED_NOISE = ("belem_readout_a", "belem_readout_b")


def bundled_path(name: str) -> Path:
    """Filesystem path of a bundled data file (with or without .json)."""
    if not name.endswith(".json"):
        name = name + ".json"
    path = Path(str(resources.files(__package__).joinpath(name)))
    if not path.exists():
        raise FileNotFoundError(f"no bundled data file named {name!r}")
    return path
