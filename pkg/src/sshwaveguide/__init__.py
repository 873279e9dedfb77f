"""Single-photon scattering off a waveguide-coupled SSH atom array."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    DisorderSpec,
    EffectiveHamiltonian,
    Geometry,
    SystemParams,
    build_effective_hamiltonian,
    build_geometry,
    build_ssh_hamiltonian,
)
from .scattering import LEFT, RIGHT, Direction, ScatteringRecord  # noqa: E402

__all__ = [
    "DisorderSpec",
    "EffectiveHamiltonian",
    "Geometry",
    "SystemParams",
    "build_effective_hamiltonian",
    "build_geometry",
    "build_ssh_hamiltonian",
    "Direction",
    "LEFT",
    "RIGHT",
    "ScatteringRecord",
]
