"""Command line entry point.

Subcommands: ``sweep``, ``figure``, ``point``, ``dynamics``, ``fit-scaling``,
``find-gamma0m``. The exit status is 0 on success and 1 on any fatal error;
per-point errors inside a sweep are not fatal.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from ..dynamics import PacketSpec, evolve, integrated_absorption, settle_time
from ..errors import ConfigError, WaveguideError
from ..model import DisorderSpec, SystemParams, build_effective_hamiltonian, build_geometry
from ..scattering import (
    LEFT,
    RIGHT,
    Direction,
    amplitudes_direct,
    beta_factor,
    decay_scaling_fit,
    edge_modes,
    edge_resonance,
    find_gamma0m,
)
from .config import load_config, parse_value
from .figures import FIGURES, reproduce_figure
from .sweep import SweepSpec, run_sweep

log = logging.getLogger("sshwaveguide")


def _number(text: str) -> float:
    try:
        value = parse_value(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if not isinstance(value, (int, float)):
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    return float(value)


def _add_system(p: argparse.ArgumentParser, n_atoms=21) -> None:
    g = p.add_argument_group("system")
    g.add_argument("--n-atoms", "-N", type=int, default=n_atoms)
    g.add_argument("--j0", type=_number, default=8.0)
    g.add_argument("--phi", type=_number, default=0.3 * math.pi, help="dimerization angle, e.g. 0.3pi")
    g.add_argument("--spacing", "-d", type=_number, default=0.75, help="spacing in wavelengths")
    g.add_argument("--gamma0", type=_number, default=0.05)
    g.add_argument("--gamma", type=_number, default=1.0)


def _params(args) -> SystemParams:
    return SystemParams(args.n_atoms, args.j0, args.phi, args.spacing, args.gamma0, args.gamma)


def _emit(obj, out) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if args.name:
        cfg["name"] = args.name
    manifest = run_sweep(SweepSpec.from_config(cfg), args.outdir, args.workers)
    print(f"{manifest.n_rows} rows, {manifest.n_errors} with errors -> {', '.join(manifest.outputs)}")
    return 0


def cmd_figure(args) -> int:
    names = sorted(FIGURES) if args.name == "all" else [args.name]
    for name in names:
        m = reproduce_figure(name, args.outdir, fast=args.fast)
        print(f"{name}: {m.n_rows} rows, {m.n_errors} with errors")
    return 0


def _record(rec) -> dict:
    return {
        "t": [rec.t.real, rec.t.imag],
        "r": [rec.r.real, rec.r.imag],
        "T": rec.transmission,
        "R": rec.reflection,
        "eta": rec.absorption,
    }


def cmd_point(args) -> int:
    """Both incidence directions at one detuning, with the headline observables."""
    params = _params(args)
    geom = build_geometry(params, DisorderSpec(args.coupling_disorder, args.position_disorder, args.seed, args.sample + 1), args.sample)
    h = build_effective_hamiltonian(geom, params.gamma0, params.gamma)
    dw = edge_resonance(params, geom) if args.detuning is None else args.detuning
    recs = {d: amplitudes_direct(h, geom, dw, d) for d in (LEFT, RIGHT)}
    out = {
        "params": params.__dict__,
        "detuning": dw,
        "left_incident": _record(recs[LEFT]),
        "right_incident": _record(recs[RIGHT]),
        "delta_R": abs(recs[LEFT].reflection - recs[RIGHT].reflection),
    }
    try:
        out["beta"] = beta_factor(edge_modes(params, geom, h))
    except WaveguideError as exc:
        out["beta"] = None
        log.warning("beta unavailable: %s", exc)
    if args.summary:
        out["gamma0m"] = _safe(find_gamma0m, params, geom)
        fit = _safe(decay_scaling_fit, params, range(7, 33, 2), False)
        out["nu"] = fit.nu if fit is not None else None
    _emit(out, args.output)
    return 0


def _safe(fn, *a):
    try:
        return fn(*a)
    except WaveguideError as exc:
        log.warning("%s failed: %s", fn.__name__, exc)
        return None


def cmd_dynamics(args) -> int:
    params = _params(args)
    geom = build_geometry(params)
    h = build_effective_hamiltonian(geom, params.gamma0, params.gamma)
    modes = edge_modes(params, geom, h)
    carrier = float(modes.detunings[modes.edge_index]) if args.carrier is None else args.carrier
    packet = PacketSpec(args.packet_width, Direction.parse(args.direction), carrier=carrier)
    t_end = args.t_end or settle_time(packet, float(np.min(modes.decays)))
    traj = evolve(geom, h, packet, t_end, n_out=args.n_out)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(traj.csv_header())
            w.writerows([repr(v) for v in row] for row in traj.csv_rows())
    summary = {
        "t_end": t_end,
        "carrier": carrier,
        "env_loss": float(traj.env_loss[-1]),
        "final_excitation": float(traj.excitation[-1]),
        "max_ledger_residual": float(np.max(np.abs(traj.ledger_residual()))),
        "peak_populations": traj.populations.max(axis=0).tolist(),
    }
    try:
        summary["integrated_absorption"] = integrated_absorption(traj)
    except WaveguideError as exc:
        summary["integrated_absorption"] = None
        log.warning("%s", exc)
    _emit(summary, args.output)
    return 0


def cmd_fit_scaling(args) -> int:
    params = _params(args)
    fit = decay_scaling_fit(params, range(args.n_min, args.n_max + 1, 2), raise_on_breakdown=not args.allow_breakdown)
    _emit({"nu": fit.nu, "intercept": fit.intercept, "r_squared": fit.r_squared,
           "N": list(fit.n_values), "edge_collective_decay": list(fit.collective_decays)}, args.output)
    return 0


def cmd_find_gamma0m(args) -> int:
    params = _params(args)
    z = find_gamma0m(params, full_output=True)
    geom = build_geometry(params)
    p_m = params.with_(gamma0=z.gamma0)
    h = build_effective_hamiltonian(geom, z.gamma0, params.gamma)
    eta = amplitudes_direct(h, geom, z.detuning, RIGHT).absorption
    _emit({"gamma0m": z.gamma0, "R_r": z.residual, "detuning": z.detuning,
           "beta": beta_factor(edge_modes(p_m, geom, h)), "eta_r": eta}, args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sshwg", description="Single-photon scattering off a waveguide-coupled SSH array")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a parameter sweep from a key = value config")
    p.add_argument("config")
    p.add_argument("--outdir", default=".")
    p.add_argument("--name")
    p.add_argument("--workers", type=int, help="overrides SSHWG_WORKERS")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figure", help="write the data behind a figure")
    p.add_argument("name", choices=sorted(FIGURES) + ["all"])
    p.add_argument("--outdir", default=".")
    p.add_argument("--fast", action="store_true", help="coarse grids")
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("point", help="amplitudes and observables at one parameter point")
    _add_system(p)
    p.add_argument("--detuning", type=_number, help="defaults to the edge resonance")
    p.add_argument("--coupling-disorder", type=_number, default=0.0)
    p.add_argument("--position-disorder", type=_number, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sample", type=int, default=0)
    p.add_argument("--summary", action="store_true", help="also compute gamma0m and nu")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_point)

    p = sub.add_parser("dynamics", help="time evolution under a single-photon packet")
    _add_system(p)
    p.add_argument("--packet-width", type=_number, default=0.01)
    p.add_argument("--direction", default="right")
    p.add_argument("--carrier", type=_number)
    p.add_argument("--t-end", type=_number)
    p.add_argument("--n-out", type=int, default=2001)
    p.add_argument("--csv")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_dynamics)

    p = sub.add_parser("fit-scaling", help="fit of -ln(edge collective decay) against N")
    _add_system(p)
    p.add_argument("--n-min", type=int, default=7)
    p.add_argument("--n-max", type=int, default=31)
    p.add_argument("--allow-breakdown", action="store_true")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_fit_scaling)

    p = sub.add_parser("find-gamma0m", help="environment loss that cancels right-incident reflection")
    _add_system(p)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_find_gamma0m)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (WaveguideError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
