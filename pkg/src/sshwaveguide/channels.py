"""Per-mode interaction spectra and the edge/bulk decomposition of reflection."""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateRatio
from .model import Geometry
from .scattering import LEFT, RIGHT, Direction, modal_weights, phase_vector
from .spectral import BareModes, ModeSet, perturbative_coefficients

Array = np.ndarray


@dataclass(frozen=True)
class ChannelSpectrum:
    """Interaction spectra of every mode for one incidence direction.

    ``xi_weighted[j] = gamma * xi_refl[j] / (detuning - E_j)`` so that the
    reflection amplitude is ``-1j * sum(xi_weighted)``.
    """

    xi_refl: Array
    xi_trans: Array
    xi_weighted: Array
    direction: Direction
    detuning: float
    edge_index: Optional[int] = None

    def csv_rows(self):
        for j in range(self.xi_refl.size):
            yield (
                j,
                self.direction.value,
                float(self.xi_refl[j].real),
                float(self.xi_refl[j].imag),
                float(self.xi_trans[j].real),
                float(self.xi_trans[j].imag),
                float(self.xi_weighted[j].real),
                float(self.xi_weighted[j].imag),
                int(j == self.edge_index),
            )


CSV_HEADER = ("j", "direction", "ReXi", "ImXi", "ReXi_t", "ImXi_t", "Rexi", "Imxi", "is_edge")


def interaction_spectra(
    modes: ModeSet, geom: Geometry, direction: Direction, detuning: Optional[float] = None
) -> ChannelSpectrum:
    """Reflection and transmission interaction spectra.

    ``detuning`` defaults to the edge-mode shift when the edge mode is known,
    otherwise to zero.
    """
    if detuning is None:
        detuning = float(modes.detunings[modes.edge_index]) if modes.edge_index is not None else 0.0
    refl, trans = modal_weights(modes, geom, direction)
    weighted = refl * modes.gamma / (detuning - modes.energies)
    return ChannelSpectrum(refl, trans, weighted, direction, float(detuning), modes.edge_index)


def anisotropy_ratios(modes: ModeSet, geom: Geometry) -> tuple[float, float]:
    """``(|Xi_l / Xi_r|, |Xi~_l / Xi~_r|)`` for the edge channel."""
    j0 = modes._require_edge()
    left = interaction_spectra(modes, geom, LEFT)
    right = interaction_spectra(modes, geom, RIGHT)
    den, den_t = abs(right.xi_refl[j0]), abs(right.xi_trans[j0])
    if den < 1e-14 or den_t < 1e-14:
        raise DegenerateRatio(f"edge interaction spectrum for right incidence vanishes ({den:.2e}, {den_t:.2e})")
    return float(abs(left.xi_refl[j0]) / den), float(abs(left.xi_trans[j0]) / den_t)


@dataclass(frozen=True)
class EdgeBulkSplit:
    xi_e: complex
    xi_b: complex
    phase: float

    @property
    def total(self) -> complex:
        return self.xi_e + self.xi_b

    @property
    def reflection_amplitude(self) -> complex:
        return -1j * self.total


def edge_bulk_split(spectrum: ChannelSpectrum, edge_index: Optional[int] = None) -> EdgeBulkSplit:
    j0 = spectrum.edge_index if edge_index is None else edge_index
    if j0 is None:
        raise ValueError("edge index required")
    xi = spectrum.xi_weighted
    xi_e = complex(xi[j0])
    # exact zero for a single atom rather than a roundoff-level remainder
    xi_b = complex(np.sum(np.delete(xi, j0))) if xi.size > 1 else 0j
    return EdgeBulkSplit(xi_e, xi_b, cmath.phase(xi_e))


def perturbative_spectra(
    bare: BareModes,
    h_prime: Array,
    geom: Geometry,
    direction: Direction,
    edge_index: Optional[int] = None,
    gamma: float = 1.0,
) -> tuple[complex, complex]:
    """First-order edge-channel spectra from the bare SSH modes.

    Builds ``X_lk = <a_l|V V^T|a_k>`` and ``Y_lk = <a_l|V V^dag|a_k>`` and
    returns ``(X_00 - sum(a_j X_j0 + b_j X_0j), Y_00 - sum(a_j Y_j0 + b_j Y_0j))``.
    """
    j0, a, b = perturbative_coefficients(bare, h_prime, edge_index, gamma)
    v = phase_vector(geom, direction)
    proj = bare.vectors.T @ v  # <a_l|V>
    proj_conj = bare.vectors.T @ v.conj()  # <a_l|V*>, i.e. conj(V^dag|a_l>)
    x = np.outer(proj, proj)
    y = np.outer(proj, proj_conj)
    xi = x[j0, j0] - np.sum(a * x[:, j0] + b * x[j0, :])
    xi_t = y[j0, j0] - np.sum(a * y[:, j0] + b * y[j0, :])
    return complex(xi), complex(xi_t)
