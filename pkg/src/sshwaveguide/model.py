"""Parameters, atom geometry and Hamiltonians of the waveguide-coupled SSH array.

Units: the waveguide decay rate ``gamma`` is the energy unit, positions are
measured in resonant wavelengths, so the propagation phase between two atoms
is ``2*pi*|x_i - x_j|``. The atomic frequency is the rotating-frame origin.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

Array = np.ndarray


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters of the array and waveguide.

    ``phi`` is the dimerization angle; the two alternating couplings are
    ``j0 * (1 -+ cos(phi))``. ``spacing`` is the lattice constant in units of
    the resonant wavelength.
    """

    n_atoms: int
    j0: float
    phi: float
    spacing: float
    gamma0: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1 or self.n_atoms % 2 == 0:
            raise ValueError(f"n_atoms must be a positive odd integer, got {self.n_atoms!r}")
        if not 0.0 <= self.phi < math.pi / 2:
            raise ValueError(f"phi must lie in [0, pi/2), got {self.phi!r}")
        if self.gamma0 < 0:
            raise ValueError("gamma0 must be non-negative")
        if self.j0 < 0:
            raise ValueError("j0 must be non-negative")
        if self.spacing < 0:
            raise ValueError("spacing must be non-negative")

    @property
    def j_minus(self) -> float:
        return self.j0 * (1.0 - math.cos(self.phi))

    @property
    def j_plus(self) -> float:
        return self.j0 * (1.0 + math.cos(self.phi))

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class DisorderSpec:
    """Uniform coupling and position disorder.

    ``coupling_amplitude`` is the half-width (in units of ``gamma``) of the
    shift added to every nearest-neighbour coupling, ``position_amplitude``
    the half-width (in wavelengths) of the displacement of every atom.
    """

    coupling_amplitude: float = 0.0
    position_amplitude: float = 0.0
    seed: int = 0
    n_samples: int = 1

    def __post_init__(self):
        if self.coupling_amplitude < 0 or self.position_amplitude < 0:
            raise ValueError("disorder amplitudes must be non-negative")
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")

    @property
    def is_clean(self) -> bool:
        return self.coupling_amplitude == 0 and self.position_amplitude == 0


CLEAN = DisorderSpec()


@dataclass(frozen=True)
class Geometry:
    """One realization of the array: atom positions and couplings."""

    positions: Array
    couplings: Array = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        cpl = np.asarray(self.couplings, dtype=float)
        if pos.ndim != 1 or pos.size == 0:
            raise ValueError("positions must be a non-empty 1-d sequence")
        if cpl.shape != (pos.size - 1,):
            raise ValueError(f"expected {pos.size - 1} couplings, got {cpl.size}")
        # d = 0 is a legitimate point of a spacing sweep, so coincident atoms are allowed
        if np.any(np.diff(pos) < 0):
            raise ValueError("positions must be non-decreasing")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "couplings", cpl)

    @property
    def n_atoms(self) -> int:
        return self.positions.size

    def reversed(self) -> "Geometry":
        """Mirror image of the array (atom order and coupling sequence reversed)."""
        pos = self.positions[-1] - self.positions[::-1]
        return Geometry(pos, self.couplings[::-1].copy())

    def shifted(self, offset: float) -> "Geometry":
        return Geometry(self.positions + offset, self.couplings.copy())

    def to_json(self) -> str:
        return json.dumps({"positions": self.positions.tolist(), "couplings": self.couplings.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "Geometry":
        data = json.loads(text)
        return cls(np.array(data["positions"], dtype=float), np.array(data["couplings"], dtype=float))


def clean_couplings(params: SystemParams) -> Array:
    n_links = params.n_atoms - 1
    cpl = np.empty(n_links)
    cpl[0::2] = params.j_minus
    cpl[1::2] = params.j_plus
    return cpl


def sample_rng(seed: int, sample_index: int) -> np.random.Generator:
    """Independent generator for one ensemble member, derived from ``(seed, sample_index)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(sample_index)])))


def build_geometry(params: SystemParams, disorder: DisorderSpec = CLEAN, sample_index: int = 0) -> Geometry:
    if not 0 <= sample_index < disorder.n_samples:
        raise ValueError(f"sample_index {sample_index} outside [0, {disorder.n_samples})")
    n = params.n_atoms
    positions = np.arange(n) * params.spacing
    couplings = clean_couplings(params)
    if disorder.is_clean:
        return Geometry(positions, couplings)

    # draw both streams unconditionally so each realization is independent of which amplitudes are on
    rng = sample_rng(disorder.seed, sample_index)
    eps = rng.uniform(-1.0, 1.0, size=n - 1)
    tau = rng.uniform(-1.0, 1.0, size=n)
    if disorder.coupling_amplitude:
        couplings = couplings + disorder.coupling_amplitude * params.gamma * eps
    if disorder.position_amplitude:
        positions = positions + disorder.position_amplitude * tau
        # only bites when the displacement exceeds half the spacing
        positions = np.maximum.accumulate(positions)
    return Geometry(positions, couplings)


def build_ssh_hamiltonian(geom: Geometry) -> Array:
    n = geom.n_atoms
    h = np.zeros((n, n))
    idx = np.arange(n - 1)
    h[idx, idx + 1] = geom.couplings
    h[idx + 1, idx] = geom.couplings
    return h


def propagation_phases(geom: Geometry) -> Array:
    """Matrix of ``exp(2 pi i |x_i - x_j|)``."""
    sep = np.abs(geom.positions[:, None] - geom.positions[None, :])
    # reduce before multiplying by 2 pi so d and d + 1 give identical phases
    sep = np.mod(sep, 1.0)
    return np.exp(2j * np.pi * sep)


def waveguide_interaction(geom: Geometry, gamma: float = 1.0) -> Array:
    """Waveguide-mediated coupling ``-i gamma exp(2 pi i |x_i - x_j|)``, diagonal included."""
    return -1j * gamma * propagation_phases(geom)


@dataclass(frozen=True)
class EffectiveHamiltonian:
    matrix: Array
    gamma0: float
    gamma: float = 1.0

    @property
    def n_atoms(self) -> int:
        return self.matrix.shape[0]


def build_effective_hamiltonian(geom: Geometry, gamma0: float, gamma: float = 1.0) -> EffectiveHamiltonian:
    if gamma0 < 0:
        raise ValueError("gamma0 must be non-negative")
    n = geom.n_atoms
    m = build_ssh_hamiltonian(geom).astype(complex)
    m -= 1j * gamma0 * np.eye(n)
    m += waveguide_interaction(geom, gamma)
    return EffectiveHamiltonian(m, float(gamma0), float(gamma))


def non_hermitian_part(geom: Geometry, gamma0: float, gamma: float = 1.0) -> Array:
    """``H'`` = environment loss plus waveguide interaction (everything but the SSH hopping)."""
    return -1j * gamma0 * np.eye(geom.n_atoms) + waveguide_interaction(geom, gamma)
