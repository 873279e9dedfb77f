import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from sshwaveguide import dynamics
from sshwaveguide.dynamics import PacketSpec, evolve, integrated_absorption, settle_time
from sshwaveguide.errors import StepFailure, TruncatedEvolution
from sshwaveguide.model import SystemParams, build_effective_hamiltonian, build_geometry
from sshwaveguide.scattering import LEFT, RIGHT
from sshwaveguide.spectral import decompose


def _system(n=5, j0=3.0, phi=0.3 * math.pi, d=0.75, g0=0.1):
    p = SystemParams(n, j0, phi, d, g0)
    geom = build_geometry(p)
    return p, geom, build_effective_hamiltonian(geom, g0)


def modal_solution(geom, h, packet, times):
    """c(t) = sum_j R_j a_j (exp(-lam t) - exp(-i E_j t)) / (i E_j - lam) for a packet launched at t = 0."""
    modes = decompose(h)
    lam = packet.gamma_packet + 1j * packet.carrier
    x = geom.positions - packet.reference_position(geom)
    v = np.exp(1j * packet.direction.sign * 2 * np.pi * x)
    a = -1j * math.sqrt(h.gamma) * math.sqrt(2 * packet.gamma_packet) * (modes.left @ v)
    e = modes.energies
    t = np.asarray(times)[:, None]
    cj = a * (np.exp(-lam * t) - np.exp(-1j * e * t)) / (1j * e - lam)
    return cj @ modes.right.T


@pytest.mark.parametrize("direction", [LEFT, RIGHT])
def test_matches_modal_solution(direction):
    _, geom, h = _system()
    packet = PacketSpec(0.3, direction, carrier=0.4)
    traj = evolve(geom, h, packet, 30.0, n_out=301)
    ref = modal_solution(geom, h, packet, traj.times)
    assert np.max(np.abs(traj.amplitudes - ref)) < 1e-7


def test_photon_number_ledger():
    _, geom, h = _system(n=11, j0=8.0)
    traj = evolve(geom, h, PacketSpec(0.2, RIGHT), 80.0, n_out=401)
    assert np.max(np.abs(traj.ledger_residual())) < 1e-7
    assert traj.input_norm[-1] == pytest.approx(1 - math.exp(-2 * 0.2 * 80.0), abs=1e-8)


def test_single_atom_absorption_matches_lorentzian_average():
    g0, width = 0.3, 0.2
    _, geom, h = _system(n=1, j0=0.0, g0=g0)
    packet = PacketSpec(width, RIGHT)
    traj = evolve(geom, h, packet, settle_time(packet, 1.0 + g0))
    w = 1 + g0
    assert integrated_absorption(traj) == pytest.approx(2 * g0 / (w * (w + width)), rel=1e-6)


def test_free_decay_of_eigenmode():
    _, geom, h = _system()
    modes = decompose(h)
    j = 2
    c0 = modes.right[:, j]
    traj = evolve(geom, h, None, 5.0, initial=c0, n_out=51)
    expect = np.exp(-1j * modes.energies[j] * traj.times)[:, None] * c0
    assert np.max(np.abs(traj.amplitudes - expect)) < 1e-8


def test_delayed_launch():
    _, geom, h = _system()
    packet = PacketSpec(0.3, LEFT, carrier=0.4, t_start=5.0)
    traj = evolve(geom, h, packet, 30.0, n_out=301)
    before = traj.times < 5.0
    assert np.all(traj.amplitudes[before] == 0)
    after = traj.times >= 5.0
    ref = modal_solution(geom, h, PacketSpec(0.3, LEFT, carrier=0.4), traj.times[after] - 5.0)
    assert np.max(np.abs(traj.amplitudes[after] - ref)) < 1e-7


def test_truncated_evolution():
    _, geom, h = _system()
    traj = evolve(geom, h, PacketSpec(0.05, RIGHT), 10.0, n_out=11)
    with pytest.raises(TruncatedEvolution):
        integrated_absorption(traj)


def test_step_failure_keeps_partial_trajectory(monkeypatch):
    real = dynamics.solve_ivp

    def failing(*args, **kwargs):
        sol = real(*args, **kwargs)
        sol.status = -1
        sol.message = "step size too small"
        return sol

    monkeypatch.setattr(dynamics, "solve_ivp", failing)
    _, geom, h = _system()
    with pytest.raises(StepFailure) as info:
        evolve(geom, h, PacketSpec(0.3, RIGHT), 5.0, n_out=11)
    assert info.value.trajectory is not None
    assert not info.value.trajectory.valid


def test_packet_envelope_is_normalised():
    packet = PacketSpec(0.05, RIGHT, carrier=1.0, t_start=2.0)
    t = np.linspace(0, 400, 400001)
    e = packet.envelope(t)
    assert e[t < 2.0].max() == 0
    assert trapezoid(np.abs(e) ** 2, t) == pytest.approx(1.0, abs=1e-4)
    assert packet.narrow_band
    with pytest.raises(ValueError):
        PacketSpec(0.0)


def test_csv_rows():
    _, geom, h = _system(n=3)
    traj = evolve(geom, h, PacketSpec(0.5, RIGHT), 2.0, n_out=5)
    rows = list(traj.csv_rows())
    assert len(rows) == 5
    assert len(rows[0]) == len(traj.csv_header()) == 5
    assert traj.metadata["packet"]["reference_position"] == pytest.approx(1.5)


def test_closed_system_free_evolution():
    from scipy.linalg import expm

    p = SystemParams(7, 2.0, 0.3 * math.pi, 0.75, 0.0, gamma=0.0)
    geom = build_geometry(p)
    h = build_effective_hamiltonian(geom, 0.0, 0.0)
    c0 = np.zeros(7, dtype=complex)
    c0[0] = 1.0
    traj = evolve(geom, h, None, 10.0, initial=c0, n_out=11)
    assert np.max(np.abs(traj.excitation - 1)) < 1e-9
    np.testing.assert_allclose(traj.amplitudes[-1], expm(-1j * h.matrix * 10.0) @ c0, atol=1e-8)


def test_linear_in_drive_amplitude():
    _, geom, h = _system()
    a = evolve(geom, h, PacketSpec(0.3, RIGHT), 20.0, n_out=41)
    b = evolve(geom, h, PacketSpec(0.3, RIGHT, amplitude=3.0), 20.0, n_out=41)
    np.testing.assert_allclose(b.populations, 9 * a.populations, rtol=1e-6, atol=1e-12)
