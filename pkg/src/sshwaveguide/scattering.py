"""Single-photon transmission and reflection, and observables built on them."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import optimize, stats
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .errors import AmbiguousEdge, NearDefective, NoZeroFound, ScalingBreakdown, SingularResolvent
from .model import (
    EffectiveHamiltonian,
    Geometry,
    SystemParams,
    build_effective_hamiltonian,
    build_geometry,
)
from .spectral import ModeSet, analytic_edge_state, bare_modes, decompose, identify_edge_mode

Array = np.ndarray


class Direction(enum.Enum):
    """Incidence side. A left-incident photon moves to the right (phase sign +1)."""

    LEFT_INCIDENT = "left_incident"
    RIGHT_INCIDENT = "right_incident"

    @property
    def sign(self) -> int:
        return 1 if self is Direction.LEFT_INCIDENT else -1

    @property
    def short(self) -> str:
        return "l" if self is Direction.LEFT_INCIDENT else "r"

    def flipped(self) -> "Direction":
        return Direction.RIGHT_INCIDENT if self is Direction.LEFT_INCIDENT else Direction.LEFT_INCIDENT

    @classmethod
    def parse(cls, value) -> "Direction":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"l": cls.LEFT_INCIDENT, "left": cls.LEFT_INCIDENT, "r": cls.RIGHT_INCIDENT, "right": cls.RIGHT_INCIDENT}
        if key in aliases:
            return aliases[key]
        return cls(key)


LEFT = Direction.LEFT_INCIDENT
RIGHT = Direction.RIGHT_INCIDENT


@dataclass(frozen=True)
class ScatteringRecord:
    detuning: float
    direction: Direction
    t: complex
    r: complex

    @property
    def transmission(self) -> float:
        return abs(self.t) ** 2

    @property
    def reflection(self) -> float:
        return abs(self.r) ** 2

    @property
    def absorption(self) -> float:
        return 1.0 - self.transmission - self.reflection

    T = transmission
    R = reflection
    eta = absorption


# a detuning this close (relative to the matrix scale) to a real eigenvalue has no resolvent
_SINGULAR_RTOL = 1e-13


def phase_vector(geom: Geometry, direction: Direction) -> Array:
    """Incoming photon profile ``exp(i s 2 pi x_i)`` on the atoms."""
    return np.exp(1j * direction.sign * 2 * np.pi * np.mod(geom.positions, 1.0))


def amplitudes_direct(
    h: EffectiveHamiltonian, geom: Geometry, detuning: float, direction: Direction
) -> ScatteringRecord:
    """Green's-function amplitudes from one linear solve ``(dw - H) y = V``."""
    n = h.n_atoms
    v = phase_vector(geom, direction)
    a = detuning * np.eye(n) - h.matrix
    scale = max(float(np.max(np.abs(a))), 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(a, check_finite=False)
    if np.min(np.abs(np.diag(lu))) > _SINGULAR_RTOL * scale:
        y = lu_solve((lu, piv), v, check_finite=False)
    else:
        y = None
    if y is None or not np.all(np.isfinite(y)) or np.max(np.abs(y)) > 1e14:
        evals = np.linalg.eigvals(h.matrix)
        raise SingularResolvent(detuning, int(np.argmin(np.abs(evals - detuning))))
    t = 1.0 - 1j * h.gamma * (v.conj() @ y)
    r = -1j * h.gamma * (v @ y)
    return ScatteringRecord(float(detuning), direction, complex(t), complex(r))


def modal_weights(modes: ModeSet, geom: Geometry, direction: Direction) -> tuple[Array, Array]:
    """Per-mode numerators ``(V^T R_j L_j V, V^dag R_j L_j V)`` for reflection and transmission."""
    v = phase_vector(geom, direction)
    into = modes.left @ v
    refl = (v @ modes.right) * into
    trans = (v.conj() @ modes.right) * into
    return refl, trans


def modal_amplitudes(modes: ModeSet, geom: Geometry, detunings, direction: Direction) -> tuple[Array, Array]:
    """Vectorised ``(t, r)`` over an array of detunings from the mode expansion."""
    if modes.near_defective:
        raise NearDefective(modes.min_biorthogonal_norm, modes.defective_mode)
    dw = np.atleast_1d(np.asarray(detunings, dtype=float))
    refl, trans = modal_weights(modes, geom, direction)
    denom = dw[:, None] - modes.energies[None, :]
    scale = max(float(np.max(np.abs(modes.energies))), 1.0)
    hit = np.abs(denom) <= _SINGULAR_RTOL * scale
    if np.any(hit):
        i, j = np.argwhere(hit)[0]
        raise SingularResolvent(float(dw[i]), int(j))
    t = 1.0 - 1j * modes.gamma * np.sum(trans[None, :] / denom, axis=1)
    r = -1j * modes.gamma * np.sum(refl[None, :] / denom, axis=1)
    return t, r


def amplitudes_modal(modes: ModeSet, geom: Geometry, detuning: float, direction: Direction) -> ScatteringRecord:
    t, r = modal_amplitudes(modes, geom, detuning, direction)
    return ScatteringRecord(float(detuning), direction, complex(t[0]), complex(r[0]))


def single_qubit(detuning: float, gamma0: float, gamma: float = 1.0, direction: Direction = LEFT) -> ScatteringRecord:
    r = -1j * gamma / (detuning + 1j * (gamma + gamma0))
    return ScatteringRecord(float(detuning), direction, complex(1.0 + r), complex(r))


def edge_modes(params: SystemParams, geom: Geometry, h: Optional[EffectiveHamiltonian] = None) -> ModeSet:
    if h is None:
        h = build_effective_hamiltonian(geom, params.gamma0, params.gamma)
    modes = decompose(h)
    return modes.with_edge_index(identify_edge_mode(modes, bare_modes(geom), analytic_edge_state(params)))


def _has_no_hopping(geom: Geometry) -> bool:
    return bool(np.all(geom.couplings == 0))


def edge_resonance(params: SystemParams, geom: Geometry, modes: Optional[ModeSet] = None) -> float:
    """Photon detuning resonant with the edge mode.

    Without any direct hopping there is no edge mode; the bare atomic
    resonance ``0`` is used instead.
    """
    if modes is not None and modes.edge_index is not None:
        return float(modes.detunings[modes.edge_index])
    try:
        m = edge_modes(params, geom) if modes is None else modes.with_edge_index(
            identify_edge_mode(modes, bare_modes(geom), analytic_edge_state(params))
        )
    except AmbiguousEdge:
        if _has_no_hopping(geom):
            return 0.0
        raise
    return float(m.detunings[m.edge_index])


def nonreciprocity(
    params: SystemParams,
    geom: Geometry,
    modes: Optional[ModeSet] = None,
    detuning: Optional[float] = None,
) -> float:
    """``|R_l - R_r|`` at the edge resonance (or at ``detuning`` if given)."""
    h = build_effective_hamiltonian(geom, params.gamma0, params.gamma)
    if detuning is None:
        detuning = edge_resonance(params, geom, modes)
    r_l = amplitudes_direct(h, geom, detuning, LEFT).reflection
    r_r = amplitudes_direct(h, geom, detuning, RIGHT).reflection
    return abs(r_l - r_r)


def beta_factor(modes: ModeSet) -> float:
    """Share of the edge-mode decay that goes into the waveguide."""
    g = modes.edge_collective_decay
    total = g + modes.gamma0
    if total == 0:
        return 1.0
    return float(g / total)


def _right_reflection_amplitude(params: SystemParams, geom: Geometry, detuning: float):
    def amp(g0: float) -> complex:
        h = build_effective_hamiltonian(geom, g0, params.gamma)
        return amplitudes_direct(h, geom, detuning, RIGHT).r

    return amp


@dataclass(frozen=True)
class Gamma0Zero:
    gamma0: float
    residual: float
    detuning: float


def find_gamma0m(
    params: SystemParams,
    geom: Optional[Geometry] = None,
    bracket: tuple[float, float] = (0.0, 1.0),
    expand_to: float = 10.0,
    xtol: float = 1e-10,
    target: float = 1e-8,
    full_output: bool = False,
):
    """Environment loss at which right-incident reflection vanishes on the edge resonance.

    The edge resonance does not depend on ``gamma0`` (a uniform loss shifts all
    eigenvalues vertically), so it is located once. ``R_r`` is scanned on a
    log-spaced grid, and the minimum is polished with Brent's method on the
    reflection amplitude projected onto its local direction of travel, which
    changes sign through the zero. Falls back to bounded Brent minimisation of
    ``R_r`` when no sign change is found.
    """
    if geom is None:
        geom = build_geometry(params)
    detuning = edge_resonance(params, geom)
    amp = _right_reflection_amplitude(params, geom, detuning)
    gamma = params.gamma

    best = None
    lo, hi = bracket[0] * gamma, bracket[1] * gamma
    for upper in (hi, expand_to * gamma):
        grid = np.unique(np.concatenate([[lo], np.geomspace(max(lo, 1e-7 * gamma), upper, 600)]))
        vals = np.array([abs(amp(g)) ** 2 for g in grid])
        k = int(np.argmin(vals))
        a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
        root = _polish_zero(amp, a, b, grid[k], xtol)
        res = abs(amp(root)) ** 2
        if best is None or res < best[1]:
            best = (root, res)
        if res < target:
            break
    root, res = best
    if res >= target:
        raise NoZeroFound(root, res)
    out = Gamma0Zero(float(root), float(res), float(detuning))
    return out if full_output else out.gamma0


def _polish_zero(amp, a: float, b: float, guess: float, xtol: float) -> float:
    ra, rb = amp(a), amp(b)
    chord = rb - ra
    if abs(chord) > 0:
        u = np.conj(chord) / abs(chord)
        fa, fb = (u * ra).real, (u * rb).real
        if fa * fb < 0:
            return optimize.brentq(lambda g: (u * amp(g)).real, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps)
    if b <= a:
        return guess
    res = optimize.minimize_scalar(lambda g: abs(amp(g)) ** 2, bounds=(a, b), method="bounded", options={"xatol": xtol})
    return float(res.x)


@dataclass(frozen=True)
class ScalingFit:
    nu: float
    intercept: float
    r_squared: float
    n_values: tuple[int, ...]
    collective_decays: tuple[float, ...]


def edge_collective_decay(params: SystemParams) -> float:
    geom = build_geometry(params)
    return edge_modes(params.with_(gamma0=0.0), geom).edge_collective_decay


def decay_scaling_fit(template: SystemParams, n_values: Sequence[int], raise_on_breakdown: bool = True) -> ScalingFit:
    """Least-squares slope of ``-ln(edge collective decay)`` against ``N``."""
    ns = [int(n) for n in n_values]
    if any(n % 2 == 0 for n in ns):
        raise ValueError("all N must be odd")
    decays = [edge_collective_decay(template.with_(n_atoms=n)) for n in ns]
    y = -np.log(np.asarray(decays))
    fit = stats.linregress(np.asarray(ns, dtype=float), y)
    result = ScalingFit(float(fit.slope), float(fit.intercept), float(fit.rvalue**2), tuple(ns), tuple(decays))
    if raise_on_breakdown and result.r_squared < 0.9:
        raise ScalingBreakdown(result)
    return result


def frequency_averaged_absorption(
    h: EffectiveHamiltonian,
    geom: Geometry,
    direction: Direction,
    carrier: float,
    width: float,
) -> float:
    """Absorption of a Lorentzian-spectrum photon, ``int |f(w)|^2 eta(w) dw``."""
    from scipy import integrate

    def eta(w):
        rec = amplitudes_direct(h, geom, w, direction)
        return rec.absorption

    def integrand(u):
        # w = carrier + width * tan(u) maps the Lorentzian weight to a flat one on (-pi/2, pi/2)
        return eta(carrier + width * math.tan(u)) / math.pi

    edge = math.pi / 2
    pts = sorted({0.0} | {math.atan((e.real - carrier) / width) for e in np.linalg.eigvals(h.matrix)})
    pts = [p for p in pts if -edge < p < edge]
    val, _ = integrate.quad(integrand, -edge, edge, points=pts, limit=2000, epsabs=1e-11, epsrel=1e-10)
    return float(val)
