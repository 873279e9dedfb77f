"""Biorthogonal eigenanalysis of the effective Hamiltonian and the SSH edge state."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import AmbiguousEdge, GapTooSmall, NearDefectiveWarning
from .model import EffectiveHamiltonian, Geometry, SystemParams, build_ssh_hamiltonian, waveguide_interaction

Array = np.ndarray

DEFECTIVE_TOL = 1e-10
EDGE_OVERLAP_MIN = 0.5
# eigenvalues closer than this (relative to the matrix scale) share a degenerate subspace
_CLUSTER_RTOL = 1e-9
# nearly degenerate clusters are refined by a projected eigensolve
_RITZ_RTOL = 1e-6


@dataclass(frozen=True)
class ModeSet:
    """Eigensystem of a complex-symmetric effective Hamiltonian.

    ``right[:, j]`` is the right eigenvector of mode ``j`` and ``left[j, :]``
    the matching left (row) eigenvector, normalised so that
    ``left @ right == identity``.
    """

    energies: Array
    right: Array
    left: Array
    gamma0: float
    gamma: float = 1.0
    edge_index: Optional[int] = None
    near_defective: bool = False
    min_biorthogonal_norm: float = 1.0
    defective_mode: int = 0

    @property
    def n_modes(self) -> int:
        return self.energies.size

    @property
    def detunings(self) -> Array:
        return self.energies.real

    @property
    def decays(self) -> Array:
        return -self.energies.imag

    @property
    def collective_decays(self) -> Array:
        return self.decays - self.gamma0

    @property
    def edge_energy(self) -> complex:
        return complex(self.energies[self._require_edge()])

    @property
    def edge_collective_decay(self) -> float:
        return float(self.collective_decays[self._require_edge()])

    def _require_edge(self) -> int:
        if self.edge_index is None:
            raise AmbiguousEdge((), (), reason="edge mode has not been identified")
        return self.edge_index

    def with_edge_index(self, index: Optional[int]) -> "ModeSet":
        return replace(self, edge_index=index)

    def shifted_loss(self, gamma0: float) -> "ModeSet":
        """Same eigenvectors with a different uniform environment loss.

        ``-i gamma0`` times the identity commutes with everything, so only the
        energies move.
        """
        energies = self.energies - 1j * (gamma0 - self.gamma0)
        return replace(self, energies=energies, gamma0=float(gamma0))

    def participation_ratios(self) -> Array:
        p = np.abs(self.right) ** 2
        p = p / p.sum(axis=0)
        return 1.0 / np.sum(p**2, axis=0)

    def csv_rows(self):
        """Rows ``(j, delta, decay, collective_decay, is_edge, participation_ratio)``."""
        pr = self.participation_ratios()
        for j in range(self.n_modes):
            yield (
                j,
                float(self.detunings[j]),
                float(self.decays[j]),
                float(self.collective_decays[j]),
                int(j == self.edge_index),
                float(pr[j]),
            )


@dataclass(frozen=True)
class BareModes:
    """Eigenmodes of the Hermitian SSH chain; ``vectors[:, j]`` belongs to ``energies[j]``."""

    energies: Array
    vectors: Array

    @property
    def zero_mode_index(self) -> int:
        return int(np.argmin(np.abs(self.energies)))


def bare_modes(geom: Geometry) -> BareModes:
    e, v = np.linalg.eigh(build_ssh_hamiltonian(geom))
    return BareModes(e, v)


def _bilinear_orthonormalize(vecs: Array) -> tuple[Array, float]:
    """Make the columns of ``vecs`` orthonormal under the bilinear form ``u.T @ v``.

    Returns the new columns (each also scaled to unit bilinear norm) and the
    smallest pivot met before normalisation.
    """
    out = np.array(vecs, dtype=complex)
    m = out.shape[1]
    min_pivot = np.inf
    for k in range(m):
        v = out[:, k]
        # a second projection pass restores orthogonality lost to rounding
        for _ in range(2):
            for q in range(k):
                u = out[:, q]
                v = v - (u @ v) * u
        v = v / np.linalg.norm(v)
        pivot = v @ v
        min_pivot = min(min_pivot, abs(pivot))
        out[:, k] = v / np.sqrt(pivot) if pivot != 0 else v
    return out, float(min_pivot)


def _clusters(energies: Array, tol: float):
    """Groups of indices whose eigenvalues lie within ``tol`` of each other.

    Linked pairwise rather than by neighbours in the sorted order: the
    lexicographic sort can interleave a degenerate cluster with another
    eigenvalue sharing its real part.
    """
    close = np.abs(energies[:, None] - energies[None, :]) <= tol
    n_groups, labels = connected_components(csr_matrix(close), directed=False)
    return [list(np.flatnonzero(labels == g)) for g in range(n_groups)]


def _ritz_refine(m: Array, q: Array, scale: float) -> tuple[Array, Array]:
    """Eigenpairs of ``m`` inside the span of ``q`` (with ``q.T q = 1``).

    Individual eigenvectors of a nearly degenerate cluster are poorly
    determined, but their span is not. Diagonalising the projected, shifted
    block resolves the splitting on its own scale and keeps the new vectors
    exactly biorthonormal.
    """
    b = q.T @ m @ q
    # rounding breaks the symmetry at the level of the splitting itself
    b = 0.5 * (b + b.T)
    shift = np.trace(b) / b.shape[0]
    w, vecs = np.linalg.eig(b - shift * np.eye(b.shape[0]))
    # exact degeneracies are judged against the full matrix scale
    for group in _clusters(w, _CLUSTER_RTOL * scale):
        if len(group) == 1:
            v = vecs[:, group[0]]
            vecs[:, group[0]] = v / np.sqrt(v @ v)
        else:
            vecs[:, group], _ = _bilinear_orthonormalize(vecs[:, group])
    return w + shift, q @ vecs


def _project_invariant(m: Array, cluster: Array, block: Array) -> Array:
    """Project ``block`` onto the span of the smallest right singular vectors of ``m - c``.

    ``eig`` leaves degenerate eigenvectors contaminated by the rest of the
    spectrum at the level of the rounding error amplified by the conditioning of
    the cluster basis. The singular subspace of the shifted matrix is stable.
    """
    k = block.shape[1]
    c = np.mean(cluster)
    _, _, vh = np.linalg.svd(m - c * np.eye(m.shape[0]))
    q = vh[-k:].conj().T
    return q @ (q.conj().T @ block)


def decompose(h: EffectiveHamiltonian, gamma0: Optional[float] = None) -> ModeSet:
    """Right/left eigenvectors of ``h`` with ``left[j] = right[:, j].T / (right[:, j].T right[:, j])``.

    A complex-symmetric matrix has left eigenvectors equal to the transposed
    right ones, so no second eigensolve is needed. Inside a degenerate
    eigenvalue cluster the basis is re-orthogonalised with respect to the
    bilinear form, and nearly degenerate clusters are re-solved inside their
    own span so that biorthogonality survives small splittings. When any normalisation ``psi.T psi`` of a unit vector falls
    below ``1e-10`` a ``NearDefectiveWarning`` is emitted and the returned
    ``ModeSet`` is flagged.
    """
    m = np.asarray(h.matrix, dtype=complex)
    if not np.all(np.isfinite(m)):
        raise ValueError("effective Hamiltonian has non-finite entries")
    gamma0 = h.gamma0 if gamma0 is None else float(gamma0)

    energies, right = np.linalg.eig(m)
    order = np.lexsort((energies.imag, energies.real))
    energies = energies[order]
    right = right[:, order]

    scale = float(np.max(np.abs(m))) if m.size else 1.0
    min_norm = np.inf
    worst = 0
    for group in _clusters(energies, _RITZ_RTOL * max(scale, 1.0)):
        if len(group) == 1:
            j = group[0]
            v = right[:, j] / np.linalg.norm(right[:, j])
            norm = v @ v
            if abs(norm) < min_norm:
                min_norm, worst = abs(norm), j
            right[:, j] = v / np.sqrt(norm) if norm != 0 else v
        else:
            block, pivot = _bilinear_orthonormalize(right[:, group])
            if pivot >= DEFECTIVE_TOL:
                if np.ptp(energies[group]) <= _CLUSTER_RTOL * max(scale, 1.0):
                    block, _ = _bilinear_orthonormalize(_project_invariant(m, energies[group], block))
                energies[group], block = _ritz_refine(m, block, max(scale, 1.0))
            right[:, group] = block
            if pivot < min_norm:
                min_norm, worst = pivot, group[0]
    order = np.lexsort((energies.imag, energies.real))
    energies = energies[order]
    right = right[:, order]
    # transpose identity: psi_L = psi_R^T once psi_R^T psi_R = 1
    left = right.T.copy()

    near_defective = bool(min_norm < DEFECTIVE_TOL)
    if near_defective:
        warnings.warn(
            f"mode {worst} has biorthogonal norm {min_norm:.3e} (near an exceptional point)",
            NearDefectiveWarning,
            stacklevel=2,
        )
    return ModeSet(
        energies=energies,
        right=right,
        left=left,
        gamma0=gamma0,
        gamma=h.gamma,
        near_defective=near_defective,
        min_biorthogonal_norm=float(min_norm),
        defective_mode=int(worst),
    )


def analytic_edge_state(params: SystemParams) -> Array:
    """Left edge state of the clean odd chain, supported on odd sites with alternating sign."""
    n = params.n_atoms
    if n % 2 == 0:
        raise ValueError("edge state requires an odd number of atoms")
    ratio = np.tan(params.phi / 2)
    vec = np.zeros(n)
    k = np.arange(0, n, 2)  # zero-based index of odd (one-based) sites
    vec[k] = (-1.0) ** (k // 2) * ratio**k
    return vec / np.linalg.norm(vec)


def edge_overlaps(modes: ModeSet, edge_state: Array) -> Array:
    r = modes.right / np.linalg.norm(modes.right, axis=0)
    return np.abs(np.asarray(edge_state).conj() @ r)


def identify_edge_mode(modes: ModeSet, bare: BareModes, edge_state: Array) -> int:
    """Index of the mode with largest overlap with ``edge_state``.

    Raises ``AmbiguousEdge`` when the chain has no gap (all bare energies
    zero) or no mode overlaps the edge state by more than 0.5.
    """
    overlaps = edge_overlaps(modes, edge_state)
    ranked = sorted(range(modes.n_modes), key=lambda j: (-round(overlaps[j], 12), abs(modes.detunings[j])))
    best = ranked[:2]
    if modes.n_modes > 1 and np.max(np.abs(bare.energies)) < 1e-12:
        raise AmbiguousEdge(best, [overlaps[j] for j in best], reason="SSH chain has no band gap")
    if overlaps[best[0]] < EDGE_OVERLAP_MIN:
        raise AmbiguousEdge(best, [overlaps[j] for j in best])
    return best[0]


def decompose_with_edge(h: EffectiveHamiltonian, geom: Geometry, params: SystemParams) -> ModeSet:
    """``decompose`` followed by edge-mode identification against the analytic edge state."""
    modes = decompose(h)
    j0 = identify_edge_mode(modes, bare_modes(geom), analytic_edge_state(params))
    return modes.with_edge_index(j0)


def edge_lamb_shift(geom: Geometry, params: SystemParams) -> float:
    alpha = analytic_edge_state(params)
    return float((alpha @ waveguide_interaction(geom, params.gamma) @ alpha).real)


def _edge_gap(bare: BareModes, j0: int) -> float:
    others = np.delete(bare.energies, j0)
    return float(np.min(np.abs(bare.energies[j0] - others))) if others.size else np.inf


def perturbative_edge_channel(
    bare: BareModes,
    h_prime: Array,
    edge_index: Optional[int] = None,
    gamma: float = 1.0,
) -> tuple[Array, Array]:
    """First-order right and left edge vectors in the bare-mode basis.

    Returns ``(right, left)`` where ``right`` is a column vector and ``left``
    the row vector such that ``left @ right = 1`` to first order.
    """
    j0 = bare.zero_mode_index if edge_index is None else edge_index
    gap = _edge_gap(bare, j0)
    if gap < gamma:
        raise GapTooSmall(gap, gamma)
    a = bare.vectors
    hp = a.T @ np.asarray(h_prime) @ a  # <alpha_l|H'|alpha_k>, bare vectors are real
    denom = bare.energies[j0] - bare.energies
    denom[j0] = 1.0
    cr = hp[:, j0] / denom
    cl = hp[j0, :] / denom
    cr[j0] = cl[j0] = 0.0
    right = a[:, j0] + a @ cr
    left = a[:, j0] + cl @ a.T
    return right.astype(complex), left.astype(complex)


def perturbative_coefficients(bare: BareModes, h_prime: Array, edge_index: Optional[int] = None, gamma: float = 1.0):
    """``(j0, a, b)`` with ``a_j = <a_j0|H'|a_j>/eps_j`` and ``b_j = <a_j|H'|a_j0>/eps_j`` (zero at ``j0``)."""
    j0 = bare.zero_mode_index if edge_index is None else edge_index
    gap = _edge_gap(bare, j0)
    if gap < gamma:
        raise GapTooSmall(gap, gamma)
    av = bare.vectors
    hp = av.T @ np.asarray(h_prime) @ av
    eps = bare.energies.copy()
    eps[j0] = 1.0
    a = hp[j0, :] / eps
    b = hp[:, j0] / eps
    a[j0] = b[j0] = 0.0
    return j0, a, b
