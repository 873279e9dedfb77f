"""Cartesian parameter sweeps streamed to CSV, with a JSON run manifest."""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from .. import __version__
from ..errors import ConfigError, WaveguideError
from ..model import DisorderSpec, SystemParams, build_effective_hamiltonian, build_geometry
from ..scattering import LEFT, RIGHT, amplitudes_direct, beta_factor, edge_resonance, find_gamma0m
from ..spectral import AmbiguousEdge, analytic_edge_state, bare_modes, decompose, edge_lamb_shift, identify_edge_mode
from .config import AXIS_NAMES, canonical_name

WORKERS_ENV = "SSHWG_WORKERS"

BASE_COLUMNS = (
    "N", "J0", "phi", "d", "gamma0", "delta_omega", "direction", "sample",
    "ReT", "ImT", "ReR_amp", "ImR_amp", "T", "R", "eta",
)
# scalar observables that can be requested in addition to the amplitudes
OBSERVABLES = ("delta_R", "beta", "gamma0m", "edge_delta", "edge_decay", "lamb_shift")

DEFAULTS = {"N": 11, "J0": 8.0, "phi": 0.3 * math.pi, "d": 0.75, "gamma0": 0.05, "delta_omega": "edge"}


@dataclass(frozen=True)
class SweepSpec:
    axes: tuple  # ((name, (values...)), ...)
    fixed: dict = field(default_factory=dict)
    outputs: tuple = ()
    disorder: Optional[DisorderSpec] = None
    name: str = "sweep"

    def __post_init__(self):
        names = [a for a, _ in self.axes]
        if len(set(names)) != len(names):
            raise ConfigError(f"axis names must be unique: {names}")
        for a in names:
            if a not in AXIS_NAMES:
                raise ConfigError(f"unknown axis {a!r}; choose from {AXIS_NAMES}")
        for a, vals in self.axes:
            if a == "N" and any(int(v) % 2 == 0 for v in vals):
                raise ConfigError("all N values must be odd")
        for o in self.outputs:
            if o not in OBSERVABLES:
                raise ConfigError(f"unknown observable {o!r}; choose from {OBSERVABLES}")

    @property
    def n_points(self) -> int:
        return math.prod(len(v) for _, v in self.axes) if self.axes else 1

    def points(self):
        """Parameter dicts in axis-major order (the first axis varies slowest)."""
        names = [a for a, _ in self.axes]
        base = {**DEFAULTS, **self.fixed}
        for combo in itertools.product(*[v for _, v in self.axes]):
            yield {**base, **dict(zip(names, combo))}

    def canonical(self) -> dict:
        return {
            "axes": [[a, [_plain(v) for v in vals]] for a, vals in self.axes],
            "fixed": {k: _plain(v) for k, v in sorted(self.fixed.items())},
            "outputs": list(self.outputs),
            "disorder": asdict(self.disorder) if self.disorder else None,
            "name": self.name,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @classmethod
    def from_config(cls, cfg: dict) -> "SweepSpec":
        cfg = dict(cfg)
        name = str(cfg.pop("name", "sweep"))
        outputs = cfg.pop("outputs", ())
        if isinstance(outputs, str):
            outputs = (outputs,)
        dis_keys = {"coupling_disorder": "coupling_amplitude", "position_disorder": "position_amplitude",
                    "seed": "seed", "n_samples": "n_samples"}
        dis = {dis_keys[k]: cfg.pop(k) for k in list(cfg) if k in dis_keys}
        disorder = None
        if dis:
            dis = {k: (int(v) if k in ("seed", "n_samples") else float(v)) for k, v in dis.items()}
            disorder = DisorderSpec(**dis)
        axes, fixed = [], {}
        for key, value in cfg.items():
            key = canonical_name(key)
            if key not in AXIS_NAMES:
                raise ConfigError(f"unknown key {key!r}")
            if isinstance(value, list):
                axes.append((key, tuple(value)))
            else:
                fixed[key] = value
        return cls(tuple(axes), fixed, tuple(outputs), disorder, name)


@dataclass
class RunManifest:
    config_hash: str
    engine_version: str
    seed: Optional[int]
    started: str
    finished: str
    outputs: list
    n_rows: int = 0
    n_errors: int = 0
    summary: dict = field(default_factory=dict)

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (np.floating,)):
        return repr(float(v))
    return str(v)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def params_from_point(point: dict) -> SystemParams:
    return SystemParams(
        n_atoms=int(point["N"]),
        j0=float(point["J0"]),
        phi=float(point["phi"]),
        spacing=float(point["d"]),
        gamma0=float(point["gamma0"]),
    )


def evaluate_point(point: dict, outputs=(), disorder: Optional[DisorderSpec] = None, sample: int = 0) -> list[list]:
    """Both incidence directions for one grid point and disorder sample.

    Errors are caught and returned in the ``error`` column.
    """
    head = [int(point["N"]), float(point["J0"]), float(point["phi"]), float(point["d"]), float(point["gamma0"])]
    n_extra = len(outputs)
    try:
        params = params_from_point(point)
        geom = build_geometry(params, disorder or DisorderSpec(), sample)
        h = build_effective_hamiltonian(geom, params.gamma0, params.gamma)
        modes = None
        edge_err = None
        needs_edge = point["delta_omega"] == "edge" or any(o in ("beta", "edge_delta", "edge_decay") for o in outputs)
        if needs_edge:
            modes = decompose(h)
            try:
                modes = modes.with_edge_index(identify_edge_mode(modes, bare_modes(geom), analytic_edge_state(params)))
            except AmbiguousEdge as exc:
                edge_err = exc
        if point["delta_omega"] == "edge":
            dw = edge_resonance(params, geom, modes if modes is not None and modes.edge_index is not None else None)
        else:
            dw = float(point["delta_omega"])
        recs = [amplitudes_direct(h, geom, dw, d) for d in (LEFT, RIGHT)]
        extras, errors = [], []
        for o in outputs:
            try:
                extras.append(_observable(o, params, geom, modes, recs, edge_err))
            except WaveguideError as exc:
                extras.append("")
                errors.append(f"{o}: {type(exc).__name__}")
        rows = []
        for rec in recs:
            rows.append(
                head
                + [dw, rec.direction.value, sample, rec.t.real, rec.t.imag, rec.r.real, rec.r.imag,
                   rec.transmission, rec.reflection, rec.absorption]
                + extras
                + ["; ".join(errors)]
            )
        return rows
    except (WaveguideError, ValueError) as exc:
        msg = f"{type(exc).__name__}: {exc}".replace("\n", " ")
        return [head + ["", d.value, sample] + [""] * 7 + [""] * n_extra + [msg] for d in (LEFT, RIGHT)]


def _observable(name, params, geom, modes, recs, edge_err):
    if name == "delta_R":
        return abs(recs[0].reflection - recs[1].reflection)
    if name == "lamb_shift":
        return edge_lamb_shift(geom, params)
    if name == "gamma0m":
        return find_gamma0m(params, geom)
    if edge_err is not None:
        raise edge_err
    if name == "beta":
        return beta_factor(modes)
    if name == "edge_delta":
        return float(modes.detunings[modes.edge_index])
    if name == "edge_decay":
        return modes.edge_collective_decay
    raise ConfigError(name)


def _task(args):
    index, point, outputs, disorder, sample = args
    return [(index, row) for row in evaluate_point(point, outputs, disorder, sample)]


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def iter_rows(spec: SweepSpec, workers: Optional[int] = None):
    """``(point_index, row)`` pairs in deterministic order regardless of worker count."""
    n_samples = spec.disorder.n_samples if spec.disorder else 1
    tasks = (
        (i, p, spec.outputs, spec.disorder, s) for i, p in enumerate(spec.points()) for s in range(n_samples)
    )
    workers = worker_count() if workers is None else workers
    if workers <= 1:
        for t in tasks:
            yield from _task(t)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            # map yields results in submission order
            for rows in pool.map(_task, tasks, chunksize=16):
                yield from rows


def header(spec: SweepSpec) -> list[str]:
    return list(BASE_COLUMNS) + list(spec.outputs) + ["error"]


def run_sweep(spec: SweepSpec, outdir=".", workers: Optional[int] = None) -> RunManifest:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    started = _now()
    path = outdir / f"{spec.name}.csv"
    cols = header(spec)
    n_rows = n_err = 0
    groups: dict = {}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for index, row in iter_rows(spec, workers):
            writer.writerow([_fmt(v) for v in row])
            n_rows += 1
            n_err += bool(row[-1])
            if spec.disorder and spec.disorder.n_samples > 1:
                groups.setdefault((index, row[6]), []).append(row)
    outputs = [str(path)]
    if groups:
        outputs.append(str(_write_ensemble_mean(outdir / f"{spec.name}_mean.csv", cols, groups)))
    manifest = RunManifest(
        config_hash=spec.config_hash(),
        engine_version=__version__,
        seed=spec.disorder.seed if spec.disorder else None,
        started=started,
        finished=_now(),
        outputs=outputs,
        n_rows=n_rows,
        n_errors=n_err,
    )
    manifest.write(outdir / f"{spec.name}_manifest.json")
    return manifest


def _write_ensemble_mean(path, cols, groups):
    """Sample means per grid point and direction; samples with any error are skipped."""
    numeric = ["delta_omega"] + [c for c in cols[8:] if c != "error"]
    idx = [cols.index(c) for c in numeric]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["N", "J0", "phi", "d", "gamma0", "direction", "n_ok"] + [f"mean_{c}" for c in numeric])
        for (_, direction), rows in groups.items():
            ok = [r for r in rows if not r[-1]]
            means = [float(np.mean([r[i] for r in ok])) if ok else "" for i in idx]
            writer.writerow([_fmt(v) for v in (*rows[0][:5], direction, len(ok), *means)])
    return path
