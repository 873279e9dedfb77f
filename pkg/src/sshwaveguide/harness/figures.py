"""Data behind each named figure, generated at that figure's reference parameters.

Every command writes ``<name>.csv`` (plus ``<name>_manifest.json``) into the
output directory. ``fast=True`` thins the grids for smoke tests; the physical
parameters are unchanged.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .. import __version__
from ..channels import CSV_HEADER, anisotropy_ratios, edge_bulk_split, interaction_spectra
from ..dynamics import PacketSpec, evolve, integrated_absorption, settle_time
from ..errors import UnknownFigure, WaveguideError
from ..model import DisorderSpec, SystemParams, build_effective_hamiltonian, build_geometry
from ..scattering import (
    RIGHT,
    Direction,
    amplitudes_direct,
    beta_factor,
    edge_modes,
    edge_resonance,
    find_gamma0m,
    nonreciprocity,
    single_qubit,
)
from ..spectral import analytic_edge_state, bare_modes, decompose, identify_edge_mode
from .sweep import RunManifest, SweepSpec, _fmt, _now, run_sweep

PI = math.pi
# reference parameter sets
FIG1 = dict(N=11, J0=8.0, phi=0.3 * PI, gamma0=0.05)
FIG3 = dict(N=11, J0=8.0, phi=0.3 * PI, gamma0=0.05, d=0.75)
FIG4 = dict(N=21, J0=8.0, phi=0.3 * PI, d=0.75)
FIG5 = dict(N=21, J0=8.0, phi=0.3 * PI, d=0.75, gamma0=0.05)
FIG7 = dict(N=21, J0=8.0, phi=0.3 * PI, d=0.75, gamma0=0.0246)
FIG8 = dict(J0=8.0, phi=0.3 * PI)


def _params(**kw) -> SystemParams:
    return SystemParams(
        n_atoms=int(kw["N"]), j0=float(kw["J0"]), phi=float(kw["phi"]),
        spacing=float(kw.get("d", 0.75)), gamma0=float(kw.get("gamma0", 0.0)),
    )


def _grid(n: int, fast: bool, minimum: int = 5) -> int:
    return max(minimum, n // 8) if fast else n


def _write_table(outdir: Path, name: str, header, rows, config: dict, summary=None) -> RunManifest:
    outdir.mkdir(parents=True, exist_ok=True)
    started = _now()
    path = outdir / f"{name}.csv"
    n_rows = n_err = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
            n_rows += 1
            if "error" in header and row[header.index("error")]:
                n_err += 1
    blob = json.dumps({"figure": name, **config}, sort_keys=True, default=str)
    manifest = RunManifest(
        config_hash=hashlib.sha256(blob.encode()).hexdigest(),
        engine_version=__version__,
        seed=config.get("seed"),
        started=started,
        finished=_now(),
        outputs=[str(path)],
        n_rows=n_rows,
        n_errors=n_err,
        summary=summary or {},
    )
    manifest.write(outdir / f"{name}_manifest.json")
    return manifest


def _sweep(outdir, name, axes, fixed, outputs=(), disorder=None) -> RunManifest:
    spec = SweepSpec(tuple((a, tuple(v)) for a, v in axes), fixed, tuple(outputs), disorder, name)
    return run_sweep(spec, outdir)


def fig1d(outdir, fast=False):
    """Real part of the effective spectrum versus spacing."""
    ds = np.linspace(0.0, 1.0, _grid(201, fast))

    def rows():
        for d in ds:
            p = _params(**FIG1, d=d)
            geom = build_geometry(p)
            modes = decompose(build_effective_hamiltonian(geom, p.gamma0))
            try:
                j0 = identify_edge_mode(modes, bare_modes(geom), analytic_edge_state(p))
            except WaveguideError:
                j0 = None
            modes = modes.with_edge_index(j0)
            for j, delta, dec, cdec, is_edge, pr in modes.csv_rows():
                yield (float(d), j, delta, dec, cdec, is_edge, pr)

    return _write_table(Path(outdir), "fig1d", ("d", "j", "Delta", "Gamma", "Gamma_tilde", "is_edge", "PR"),
                        rows(), {**FIG1, "d": ds.tolist()})


def fig1e(outdir, fast=False):
    j0 = FIG1["J0"]
    dw = np.linspace(-3 * j0, 3 * j0, _grid(1201, fast))
    return _sweep(outdir, "fig1e", [("d", (0.25, 0.5, 0.75)), ("delta_omega", dw.tolist())],
                  {k: v for k, v in FIG1.items()})


def fig3a(outdir, fast=False):
    dw = np.linspace(-24.0, 24.0, _grid(1201, fast))
    return _sweep(outdir, "fig3a", [("delta_omega", dw.tolist())], dict(FIG3))


def fig3b(outdir, fast=False):
    ds = np.linspace(0.0, 1.0, _grid(256, fast))
    js = np.linspace(0.0, 10.0, _grid(64, fast))
    fixed = {k: v for k, v in FIG3.items() if k not in ("d", "J0")}
    return _sweep(outdir, "fig3b", [("d", ds.tolist()), ("J0", js.tolist())], fixed, outputs=("delta_R",))


def fig3c(outdir, fast=False):
    g0 = np.linspace(0.0, 1.0, _grid(201, fast))
    fixed = {k: v for k, v in FIG3.items() if k not in ("d", "gamma0")}
    return _sweep(outdir, "fig3c", [("d", (0.25, 0.75)), ("gamma0", g0.tolist())], fixed, outputs=("delta_R",))


def fig4a(outdir, fast=False):
    g0 = np.linspace(0.0, 0.1, _grid(401, fast))
    p = _params(**FIG4)
    zero = find_gamma0m(p, full_output=True)
    m = _sweep(outdir, "fig4a", [("gamma0", g0.tolist())], dict(FIG4))
    m.summary = {"gamma0m": zero.gamma0, "R_r_at_gamma0m": zero.residual}
    m.write(Path(outdir) / "fig4a_manifest.json")
    return m


def fig4b(outdir, fast=False):
    """Zero-reflection loss and nonreciprocity (at loss 0.05) versus dimerization angle."""
    phis = np.linspace(0.0, 0.49, _grid(99, fast)) * PI

    def rows():
        for n in (11, 21):
            for phi in phis:
                p = _params(**{**FIG4, "N": n, "phi": phi, "gamma0": 0.05})
                geom = build_geometry(p)
                err, g0m, res = "", "", ""
                try:
                    z = find_gamma0m(p, geom, full_output=True)
                    g0m, res = z.gamma0, z.residual
                except WaveguideError as exc:
                    err = type(exc).__name__
                try:
                    dr = nonreciprocity(p, geom)
                except WaveguideError as exc:
                    dr, err = "", (err + "; " if err else "") + type(exc).__name__
                yield (n, float(phi), g0m, res, dr, err)

    return _write_table(Path(outdir), "fig4b", ("N", "phi", "gamma0m", "R_r_residual", "delta_R", "error"),
                        rows(), {**FIG4, "phi": phis.tolist(), "N": [11, 21], "gamma0_inset": 0.05})


def fig5a(outdir, fast=False):
    """Edge-channel anisotropy ratios versus spacing, plus the J0 trend at d = 3/4."""
    ds = np.linspace(0.0, 1.0, _grid(201, fast))
    js = np.geomspace(1.0, 200.0, _grid(60, fast))

    def rows():
        for sweep, values in (("d", ds), ("J0", js)):
            for v in values:
                kw = {**FIG5, sweep: float(v)}
                p = _params(**kw)
                geom = build_geometry(p)
                try:
                    zeta, zeta_t = anisotropy_ratios(edge_modes(p, geom), geom)
                    err = ""
                except WaveguideError as exc:
                    zeta, zeta_t, err = "", "", type(exc).__name__
                yield (sweep, float(kw["d"]), float(kw["J0"]), zeta, zeta_t, err)

    return _write_table(Path(outdir), "fig5a", ("sweep", "d", "J0", "zeta", "zeta_tilde", "error"), rows(),
                        {**FIG5, "d": ds.tolist(), "J0_inset": js.tolist()})


def fig5bc(outdir, fast=False):
    p = _params(**FIG5)
    geom = build_geometry(p)
    modes = edge_modes(p, geom)

    def rows():
        for direction in ("left_incident", "right_incident"):
            spec = interaction_spectra(modes, geom, Direction(direction))
            for row in spec.csv_rows():
                yield (*row, abs(spec.xi_weighted[row[0]]), float(modes.detunings[row[0]]))

    return _write_table(Path(outdir), "fig5bc", (*CSV_HEADER, "abs_xi", "Delta"), rows(), dict(FIG5))


def fig5d(outdir, fast=False):
    g0 = np.linspace(0.0, 0.1, _grid(201, fast))
    p = _params(**FIG5)
    geom = build_geometry(p)
    base = edge_modes(p.with_(gamma0=0.0), geom)

    def rows():
        for g in g0:
            modes = base.shifted_loss(float(g))
            split = edge_bulk_split(interaction_spectra(modes, geom, RIGHT))
            yield (float(g), split.xi_e.real, split.xi_e.imag, split.xi_b.real, split.xi_b.imag,
                   abs(split.xi_e), abs(split.xi_b), abs(split.total))

    return _write_table(Path(outdir), "fig5d",
                        ("gamma0", "Rexi_e", "Imxi_e", "Rexi_b", "Imxi_b", "abs_xi_e", "abs_xi_b", "abs_sum"),
                        rows(), {**FIG5, "gamma0": g0.tolist()})


def fig5e(outdir, fast=False):
    ns = list(range(7, 33, 2))
    phis = (0.1, 0.2, 0.3, 0.4, 0.45)

    def rows():
        for f in phis:
            for n in ns:
                p = _params(**{**FIG5, "N": n, "phi": f * PI, "gamma0": 0.0})
                try:
                    g = edge_modes(p, build_geometry(p)).edge_collective_decay
                    yield (f * PI, n, g, math.log(g), "")
                except WaveguideError as exc:
                    yield (f * PI, n, "", "", type(exc).__name__)

    return _write_table(Path(outdir), "fig5e", ("phi", "N", "Gamma_tilde_edge", "ln_Gamma_tilde_edge", "error"),
                        rows(), {**FIG5, "N": ns, "phi_over_pi": list(phis)})


def fig5f(outdir, fast=False):
    phis = np.linspace(0.05, 0.45, _grid(41, fast)) * PI

    def rows():
        for phi in phis:
            p = _params(**{**FIG5, "phi": phi})
            geom = build_geometry(p)
            try:
                g0m = find_gamma0m(p, geom)
                p_m = p.with_(gamma0=g0m)
                modes = edge_modes(p_m, geom)
                h = build_effective_hamiltonian(geom, g0m)
                eta = amplitudes_direct(h, geom, edge_resonance(p_m, geom, modes), RIGHT).absorption
                yield (float(phi), g0m, beta_factor(modes), eta, "")
            except WaveguideError as exc:
                yield (float(phi), "", "", "", type(exc).__name__)

    return _write_table(Path(outdir), "fig5f", ("phi", "gamma0m", "beta", "eta_r", "error"), rows(),
                        {**FIG5, "phi": phis.tolist()})


def fig6(outdir, fast=False):
    """Absorption of a right-incident photon versus loss for three systems."""
    g0 = np.geomspace(1e-3, 10.0, _grid(401, fast))
    topo = _params(N=21, J0=8.0, phi=0.3 * PI, d=0.75)
    free = _params(N=21, J0=0.0, phi=0.3 * PI, d=0.75)
    g_topo, g_free = build_geometry(topo), build_geometry(free)
    dw_topo = edge_resonance(topo, g_topo)

    def rows():
        for g in g0:
            g = float(g)
            yield ("single_atom", g, single_qubit(0.0, g).absorption)
            yield ("array_J0_0", g, amplitudes_direct(build_effective_hamiltonian(g_free, g), g_free, 0.0, RIGHT).absorption)
            yield ("topological", g, amplitudes_direct(build_effective_hamiltonian(g_topo, g), g_topo, dw_topo, RIGHT).absorption)

    return _write_table(Path(outdir), "fig6", ("system", "gamma0", "eta"), rows(),
                        {"N": 21, "d": 0.75, "J0": 8.0, "phi": 0.3 * PI, "gamma0": g0.tolist()})


def fig7c(outdir, fast=False, gamma_packet=0.01):
    p = _params(**FIG7)
    geom = build_geometry(p)
    h = build_effective_hamiltonian(geom, p.gamma0)
    modes = edge_modes(p, geom, h)
    carrier = float(modes.detunings[modes.edge_index])
    packet = PacketSpec(gamma_packet, RIGHT, carrier=carrier)
    t_end = settle_time(packet, float(np.min(modes.decays)))
    traj = evolve(geom, h, packet, t_end, n_out=_grid(3001, fast, 101))
    summary = {"carrier": carrier, "t_end": t_end, **traj.metadata}
    try:
        summary["integrated_absorption"] = integrated_absorption(traj)
    except WaveguideError as exc:
        summary["integrated_absorption_error"] = str(exc)
    return _write_table(Path(outdir), "fig7c", traj.csv_header(), traj.csv_rows(), {**FIG7, "gamma_packet": gamma_packet},
                        summary=summary)


def _disorder_sweep(outdir, name, axes, fixed, disorder, outputs):
    clean = _sweep(outdir, f"{name}_clean", axes, fixed, outputs)
    dis = _sweep(outdir, name, axes, fixed, outputs, disorder)
    dis.outputs = clean.outputs + dis.outputs
    dis.write(Path(outdir) / f"{name}_manifest.json")
    return dis


def fig8a(outdir, fast=False, n_samples=100, seed=2021):
    ds = np.linspace(0.0, 1.0, _grid(201, fast))
    dis = DisorderSpec(coupling_amplitude=1.0, seed=seed, n_samples=n_samples if not fast else 8)
    return _disorder_sweep(outdir, "fig8a", [("d", ds.tolist())], {**FIG8, "N": 11, "gamma0": 0.05}, dis, ("delta_R",))


def fig8b(outdir, fast=False, n_samples=100, seed=2021):
    ds = np.linspace(0.0, 1.0, _grid(201, fast))
    dis = DisorderSpec(position_amplitude=0.002, seed=seed, n_samples=n_samples if not fast else 8)
    return _disorder_sweep(outdir, "fig8b", [("d", ds.tolist())], {**FIG8, "N": 11, "gamma0": 0.05}, dis, ("delta_R",))


def fig8c(outdir, fast=False, n_samples=100, seed=2021):
    g0 = np.geomspace(1e-3, 1.0, _grid(121, fast))
    dis = DisorderSpec(coupling_amplitude=1.0, seed=seed, n_samples=n_samples if not fast else 8)
    return _disorder_sweep(outdir, "fig8c", [("gamma0", g0.tolist())], {**FIG8, "N": 21, "d": 0.75}, dis, ())


FIGURES = {
    "fig1d": fig1d,
    "fig1e": fig1e,
    "fig3a": fig3a,
    "fig3b": fig3b,
    "fig3c": fig3c,
    "fig4a": fig4a,
    "fig4b": fig4b,
    "fig5a": fig5a,
    "fig5bc": fig5bc,
    "fig5d": fig5d,
    "fig5e": fig5e,
    "fig5f": fig5f,
    "fig6": fig6,
    "fig7c": fig7c,
    "fig8a": fig8a,
    "fig8b": fig8b,
    "fig8c": fig8c,
}


def reproduce_figure(name: str, outdir=".", fast: bool = False) -> RunManifest:
    try:
        fn = FIGURES[name]
    except KeyError:
        raise UnknownFigure(f"unknown figure {name!r}; choose from {sorted(FIGURES)}") from None
    return fn(outdir, fast=fast)
