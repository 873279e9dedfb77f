"""Time-domain scattering of a single-photon wave packet in the one-excitation sector.

The atomic amplitudes obey

    dc/dt = -i H_eff c - i sqrt(gamma) E(t) V

with ``V_i = exp(i s 2 pi (x_i - x_ref))`` and ``E(t)`` the temporal
envelope of the incoming photon, normalised to ``int |E|^2 dt = 1``. A
Lorentzian spectrum ``sqrt(g/pi) / (k - i g)`` corresponds to the one-sided
exponential ``E(t) = sqrt(2 g) exp(-g t)`` for ``t >= 0``. Retardation
across the array is neglected, consistent with the Markovian ``H_eff``.

Alongside the amplitudes the integrator accumulates the photon number lost
to the environment (``2 gamma0 int |c|^2``) and the transmitted and reflected
photon numbers from the output fields

    E_t = E - i sqrt(gamma) V^dag c,    E_r = -i sqrt(gamma) V^T c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import StepFailure, TruncatedEvolution
from .model import EffectiveHamiltonian, Geometry
from .scattering import RIGHT, Direction

Array = np.ndarray


@dataclass(frozen=True)
class PacketSpec:
    """Single-photon packet with Lorentzian spectrum of half-width ``gamma_packet``.

    ``carrier`` is the centre detuning. ``amplitude`` scales the drive (1 is
    one photon). The launch reference is the first atom the packet meets:
    ``x_N`` for a right-incident (left-propagating) photon, ``x_1`` otherwise.
    """

    gamma_packet: float
    direction: Direction = RIGHT
    carrier: float = 0.0
    t_start: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.gamma_packet > 0:
            raise ValueError("gamma_packet must be positive")

    @property
    def narrow_band(self) -> bool:
        return self.gamma_packet < 0.1

    def reference_position(self, geom: Geometry) -> float:
        return float(geom.positions[-1] if self.direction is RIGHT else geom.positions[0])

    def envelope(self, t):
        t = np.asarray(t, dtype=float)
        tau = t - self.t_start
        env = self.amplitude * math.sqrt(2 * self.gamma_packet) * np.exp(-(self.gamma_packet + 1j * self.carrier) * tau)
        return np.where(tau >= 0, env, 0.0)


@dataclass
class Trajectory:
    times: Array
    amplitudes: Array  # shape (len(times), N)
    env_loss: Array
    transmitted: Array
    reflected: Array
    input_norm: Array
    valid: bool = True
    metadata: dict = field(default_factory=dict)

    @property
    def populations(self) -> Array:
        return np.abs(self.amplitudes) ** 2

    @property
    def excitation(self) -> Array:
        return self.populations.sum(axis=1)

    def ledger_residual(self) -> Array:
        """Input photon number minus everything accounted for, per time."""
        return self.input_norm - (self.excitation + self.env_loss + self.transmitted + self.reflected)

    def csv_rows(self):
        pops = self.populations
        for k, t in enumerate(self.times):
            yield (float(t), *map(float, pops[k]), float(self.env_loss[k]))

    def csv_header(self) -> tuple[str, ...]:
        n = self.amplitudes.shape[1]
        return ("t", *[f"pop_{i + 1}" for i in range(n)], "L_env")


def _drive_vector(geom: Geometry, packet: PacketSpec) -> Array:
    x = geom.positions - packet.reference_position(geom)
    return np.exp(1j * packet.direction.sign * 2 * np.pi * x)


def evolve(
    geom: Geometry,
    h: EffectiveHamiltonian,
    packet: Optional[PacketSpec],
    t_end: float,
    dt_max: float = np.inf,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    n_out: int = 2001,
    initial: Optional[Array] = None,
    method: str = "DOP853",
) -> Trajectory:
    """Integrate the driven amplitude equations from ``t = 0`` to ``t_end``.

    ``packet=None`` switches the drive off (free evolution of ``initial``).
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    n = h.n_atoms
    m = np.asarray(h.matrix, dtype=complex)
    sqrt_g = math.sqrt(h.gamma)
    v = _drive_vector(geom, packet) if packet is not None else np.zeros(n, dtype=complex)
    c0 = np.zeros(n, dtype=complex) if initial is None else np.asarray(initial, dtype=complex)

    def envelope(t: float) -> complex:
        return complex(packet.envelope(t)) if packet is not None else 0j

    def rhs(t, y):
        c = y[:n]
        e = envelope(t)
        out = np.empty_like(y)
        out[:n] = -1j * (m @ c) - 1j * sqrt_g * e * v
        et = e - 1j * sqrt_g * (v.conj() @ c)
        er = -1j * sqrt_g * (v @ c)
        out[n] = 2 * h.gamma0 * np.vdot(c, c).real
        out[n + 1] = abs(et) ** 2
        out[n + 2] = abs(er) ** 2
        out[n + 3] = abs(e) ** 2
        return out

    y0 = np.concatenate([c0, np.zeros(4, dtype=complex)])
    times = np.linspace(0.0, t_end, n_out)
    # the envelope switches on abruptly, so integrate the two sides of t_start separately
    breaks = [0.0]
    if packet is not None and 0.0 < packet.t_start < t_end:
        breaks.append(packet.t_start)
    breaks.append(t_end)

    chunks = []
    valid = True
    message = ""
    y = y0
    for a, b in zip(breaks[:-1], breaks[1:]):
        last = b == t_end
        sel = times[(times >= a) & (times < b)]
        t_eval = np.append(sel, b)
        sol = solve_ivp(rhs, (a, b), y, method=method, t_eval=t_eval, rtol=rtol, atol=atol, max_step=dt_max)
        keep = sol.t.size if (last or sol.status != 0) else sol.t.size - 1
        chunks.append((sol.t[:keep], sol.y[:, :keep]))
        if sol.status != 0:
            valid, message = False, sol.message
            break
        y = sol.y[:, -1]

    ts = np.concatenate([c[0] for c in chunks]) if chunks else np.zeros(0)
    ys = np.concatenate([c[1] for c in chunks], axis=1) if chunks else np.zeros((n + 4, 0))
    traj = Trajectory(
        times=ts,
        amplitudes=ys[:n].T.copy(),
        env_loss=ys[n].real.copy(),
        transmitted=ys[n + 1].real.copy(),
        reflected=ys[n + 2].real.copy(),
        input_norm=ys[n + 3].real.copy(),
        valid=valid,
        metadata={
            "method": method,
            "rtol": rtol,
            "atol": atol,
            "dt_max": None if not np.isfinite(dt_max) else dt_max,
            "t_end": t_end,
            "gamma0": h.gamma0,
            "gamma": h.gamma,
            "packet": None
            if packet is None
            else {
                "gamma_packet": packet.gamma_packet,
                "direction": packet.direction.value,
                "carrier": packet.carrier,
                "t_start": packet.t_start,
                "amplitude": packet.amplitude,
                "reference_position": packet.reference_position(geom),
            },
        },
    )
    if not valid:
        raise StepFailure(f"integration failed: {message}", traj)
    return traj


def integrated_absorption(traj: Trajectory, residual_tol: float = 1e-6) -> float:
    """Fraction of the photon lost to the environment by the end of ``traj``."""
    if not traj.valid:
        raise StepFailure("trajectory is flagged invalid", traj)
    residual = float(traj.excitation[-1])
    if residual > residual_tol:
        raise TruncatedEvolution(residual)
    return float(traj.env_loss[-1])


def settle_time(packet: PacketSpec, slowest_decay: float, residual: float = 1e-8) -> float:
    """End time after which both the drive and the slowest mode have decayed below ``residual``."""
    rate = min(packet.gamma_packet, slowest_decay)
    return packet.t_start + math.log(1.0 / residual) / (2 * rate) + 10.0
