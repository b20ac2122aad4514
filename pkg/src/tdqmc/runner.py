"""Run orchestration: ground state, optional real-time stage, reference stage, artifacts."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import platform
import struct
import time
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np
import yaml

from .config import ExperimentConfig, dump_config
from .engine import (
    EnsembleState,
    GroundStateResult,
    RealtimeRecord,
    optimize_alpha,
    propagate_real,
    save_checkpoint,
)
from .observables import density_matrix, linear_entropy, occupation_spectrum
from .oracles import (
    MAX_EXACT_PARTICLES,
    MoshinskyAnalytic,
    exact_ground_state,
    exact_propagate,
    reduced_density,
    release_entropy,
)
from .grid import Grid1D
from .potentials import MOSHINSKY

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"
FLOAT_FMT = "{:.12g}"
# largest tensor grid (points) the reference stage will propagate in real time
EXACT_REALTIME_POINTS = 2**17

THRESHOLDS = {
    "energy_rel": 5e-4,
    "energy_abs": 1e-3,
    "ground_linear_entropy": 0.01,
    "linear_entropy_t": 0.02,
}


def code_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


@dataclass
class RunManifest:
    config_digest: str
    code_version: str
    started: float
    finished: float | None = None
    status: str = "incomplete"
    error: str | None = None
    diagnostics: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)

    def write(self, out: Path) -> None:
        with open(out / MANIFEST, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True, default=_json_default)


def sha256_of(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return FLOAT_FMT.format(float(v))


def write_csv(path: Path, header: list[str], rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path: Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: data[:, j] for j, name in enumerate(header)}


def write_json(path: Path, obj) -> Path:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
    return path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(type(o))


def write_density(path: Path, rho: np.ndarray, dx: float) -> Path:
    """Binary density matrix: little-endian int64 n, float64 dx, then n*n (re, im) float64 pairs, row-major."""
    rho = np.asarray(rho, dtype=np.complex128)
    n = rho.shape[0]
    with open(path, "wb") as fh:
        fh.write(struct.pack("<qd", n, dx))
        pairs = np.empty((n, n, 2), dtype="<f8")
        pairs[..., 0] = rho.real
        pairs[..., 1] = rho.imag
        fh.write(pairs.tobytes(order="C"))
    return path


def read_density(path: Path) -> tuple[np.ndarray, float]:
    with open(path, "rb") as fh:
        n, dx = struct.unpack("<qd", fh.read(16))
        pairs = np.frombuffer(fh.read(), dtype="<f8").reshape(n, n, 2)
    return pairs[..., 0] + 1j * pairs[..., 1], dx


@dataclass
class RunOutcome:
    out_dir: Path
    manifest: RunManifest
    ground: GroundStateResult | None = None
    records: list[RealtimeRecord] = field(default_factory=list)
    final_state: EnsembleState | None = None


def run_experiment(config: ExperimentConfig, out_dir: str | Path | None = None) -> RunOutcome:
    """Execute one configured experiment and write its artifacts.

    Stages: ground-state relaxation (with alpha scan when a grid is given),
    optional real-time propagation, optional reference stage. On failure the
    latest ensemble is checkpointed and the manifest is marked incomplete.
    """
    out = Path(out_dir or Path(config.output_dir) / config.name)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config.digest(), code_version(), time.time())
    manifest.diagnostics["platform"] = platform.python_version()
    outcome = RunOutcome(out, manifest)
    files: list[Path] = [out / "config.yaml"]
    dump_config(config, files[0])
    try:
        ground = optimize_alpha(config)
        outcome.ground = ground
        outcome.final_state = ground.state
        files += _write_ground(out, config, ground)
        manifest.diagnostics.update(
            alpha_opt=ground.alpha_opt,
            energy=ground.energy,
            acceptance=[p.acceptance for p in ground.scan],
            converged=[p.converged for p in ground.scan],
            energy_trace=ground.scan[-1].energy_trace[:, 1][:: max(1, len(ground.scan[-1].energy_trace) // 200)],
            counters=dict(ground.state.counters),
        )
        if config.realtime is not None:
            final, records = propagate_real(ground.state, config, config.pulse, config.realtime.t_end, ground.alpha_opt)
            outcome.records = records
            outcome.final_state = final
            files += _write_series(out, "series.csv", "spectra.json", records)
            manifest.diagnostics.update(
                absorbed=records[-1].absorbed,
                node_clamped=int(sum(r.node_clamped for r in records)),
                norm_range=[min(r.norm_min for r in records), max(r.norm_max for r in records)],
                counters=dict(final.counters),
            )
        if config.oracle:
            files += _write_oracle(out, config, outcome)
        files.append(save_checkpoint(out / "checkpoint.npz", outcome.final_state, {"name": config.name}))
        manifest.status = "complete"
    except Exception as exc:
        manifest.error = f"{type(exc).__name__}: {exc}"
        if outcome.final_state is not None:
            files.append(save_checkpoint(out / "checkpoint.npz", outcome.final_state, {"name": config.name}))
        raise
    finally:
        manifest.finished = time.time()
        manifest.artifacts = {p.name: sha256_of(p) for p in files if p.exists()}
        manifest.write(out)
    return outcome


def _write_ground(out: Path, config: ExperimentConfig, ground: GroundStateResult) -> list[Path]:
    model = config.model
    header = ["alpha", "energy", "energy_error", "linear_entropy", "linear_entropy_error", "sigma", "acceptance", "converged"]
    table = ground.table()
    ref = MoshinskyAnalytic(model.n_particles, model.kappa) if model.kind == MOSHINSKY and model.nuclear_on else None
    rows = []
    for row in table:
        vals = [row[h] for h in header]
        if ref is not None:
            vals += [ref.energy, ref.linear_entropy]
        rows.append(vals)
    if ref is not None:
        header = header + ["exact_energy", "exact_linear_entropy"]
    files = [write_csv(out / "alpha_scan.csv", header, rows)]
    grid = ground.state.grid
    dm = density_matrix(ground.state.fields[0], grid.dx)
    files.append(write_density(out / "rho_ground.bin", dm.rho, grid.dx))
    files.append(write_json(out / "ground.json", {
        "energy": ground.energy,
        "energy_error": ground.energy_error,
        "alpha_opt": ground.alpha_opt,
        "linear_entropy": ground.linear_entropy,
        "spectrum": ground.spectrum,
        "sigma": ground.sigma,
    }))
    return files


def _series_rows(records: list[RealtimeRecord]):
    n = len(records[0].linear_entropy)
    header = (["t"] + [f"linear_entropy_{i}" for i in range(n)] + [f"inverse_purity_{i}" for i in range(n)]
              + [f"mean_position_{i}" for i in range(n)] + ["norm_min", "norm_max", "absorbed", "node_clamped"])
    rows = [[r.t, *r.linear_entropy, *r.inverse_purity, *r.mean_position, r.norm_min, r.norm_max, r.absorbed, r.node_clamped]
            for r in records]
    return header, rows


def _write_series(out: Path, csv_name: str, spec_name: str, records: list[RealtimeRecord]) -> list[Path]:
    header, rows = _series_rows(records)
    files = [write_csv(out / csv_name, header, rows)]
    spectra = [{"t": r.t, "spectrum": r.spectrum} for r in records if r.spectrum is not None]
    if spectra:
        files.append(write_json(out / spec_name, spectra))
    return files


def _write_oracle(out: Path, config: ExperimentConfig, outcome: RunOutcome) -> list[Path]:
    model = config.model
    files = []
    times = [r.t for r in outcome.records]
    if model.kind == MOSHINSKY:
        ref = MoshinskyAnalytic(model.n_particles, model.kappa)
        files.append(write_json(out / "oracle_ground.json", {
            "energy": ref.energy, "linear_entropy": ref.linear_entropy, "spectrum": ref.spectrum(32),
            "source": "closed form",
        }))
        rt = config.realtime
        if rt is not None and rt.release_confinement and config.pulse is None:
            s = release_entropy(model.n_particles, model.kappa, times)
            rows = [[t, *([v] * model.n_particles)] for t, v in zip(times, s)]
            files.append(write_csv(out / "oracle_series.csv", ["t"] + [f"linear_entropy_{i}" for i in range(model.n_particles)], rows))
        return files
    if model.n_particles > MAX_EXACT_PARTICLES:
        log.info("no exact reference for %d particles", model.n_particles)
        return files
    grid = _exact_grid(config)
    wf, energy = exact_ground_state(model, grid)
    dm = reduced_density(wf)
    files.append(write_json(out / "oracle_ground.json", {
        "energy": energy, "linear_entropy": linear_entropy(dm), "spectrum": occupation_spectrum(dm)[:32],
        "source": f"tensor grid n={grid.n}", "grid_length": grid.length,
    }))
    rt = config.realtime
    if rt is not None and outcome.records and grid.n**model.n_particles <= EXACT_REALTIME_POINTS:
        ex_model = model.replace(nuclear_on=False) if rt.release_confinement else model
        stride = max(1, int(round((times[1] - times[0]) / rt.dt))) if len(times) > 1 else 1
        _, samples = exact_propagate(wf, ex_model, config.pulse, rt.t_end, dt=rt.dt, stride=stride,
                                     absorber_width=rt.absorber_width)
        rows = [[s.t, *([s.linear_entropy] * model.n_particles), s.norm, s.dipole] for s in samples]
        header = ["t"] + [f"linear_entropy_{i}" for i in range(model.n_particles)] + ["norm", "dipole"]
        files.append(write_csv(out / "oracle_series.csv", header, rows))
    return files


def _exact_grid(config: ExperimentConfig) -> Grid1D:
    n_part = config.model.n_particles
    n_axis = {1: config.grid_points, 2: config.grid_points, 3: 128, 4: 32}[n_part]
    n_axis = min(n_axis, config.grid_points) if n_part > 2 else n_axis
    return Grid1D.centered(config.grid_length, n_axis)


class SchemaError(ValueError):
    pass


@dataclass
class CompareRow:
    observable: str
    max_deviation: float | None
    rms_deviation: float | None
    threshold: float | None
    status: str


def _load_side(d: Path, oracle: bool) -> tuple[dict | None, dict | None]:
    prefix = "oracle_" if oracle else ""
    g = d / f"{prefix}ground.json"
    s = d / f"{prefix}series.csv"
    ground = json.loads(g.read_text()) if g.exists() else None
    series = read_csv(s) if s.exists() else None
    return ground, series


def compare_runs(run_dir: str | Path, reference_dir: str | Path | None = None, *, write: bool = True) -> list[CompareRow]:
    """Deviation report between a run and its reference.

    Without ``reference_dir`` the run's own ``oracle_*`` files are the
    reference; otherwise the plain artifacts of another run directory are.
    Observables without a reference are reported as ``no reference``.
    """
    run_dir = Path(run_dir)
    ground, series = _load_side(run_dir, oracle=False)
    if ground is None:
        raise SchemaError(f"{run_dir}: no ground.json")
    ref_dir = Path(reference_dir) if reference_dir is not None else run_dir
    rg, rs = _load_side(ref_dir, oracle=reference_dir is None)
    rows: list[CompareRow] = []
    kind = _model_kind(run_dir)
    if rg is None:
        rows.append(CompareRow("energy", None, None, None, "no reference"))
        rows.append(CompareRow("ground_linear_entropy", None, None, None, "no reference"))
    else:
        for key in ("energy", "linear_entropy"):
            if key not in ground or key not in rg:
                raise SchemaError(f"ground record lacks {key!r}")
        dev = abs(ground["energy"] - rg["energy"])
        if kind == MOSHINSKY:
            rel = dev / abs(rg["energy"])
            rows.append(CompareRow("energy_rel", rel, rel, THRESHOLDS["energy_rel"], _status(rel, THRESHOLDS["energy_rel"])))
        else:
            rows.append(CompareRow("energy", dev, dev, THRESHOLDS["energy_abs"], _status(dev, THRESHOLDS["energy_abs"])))
        d = abs(ground["linear_entropy"] - rg["linear_entropy"])
        rows.append(CompareRow("ground_linear_entropy", d, d, THRESHOLDS["ground_linear_entropy"],
                               _status(d, THRESHOLDS["ground_linear_entropy"])))
    if series is not None:
        if rs is None:
            rows.append(CompareRow("linear_entropy_t", None, None, None, "no reference"))
        else:
            for need in ("t", "linear_entropy_0"):
                if need not in series or need not in rs:
                    raise SchemaError(f"series lacks column {need!r}")
            ref_s = np.interp(series["t"], rs["t"], rs["linear_entropy_0"])
            covered = (series["t"] >= rs["t"][0] - 1e-9) & (series["t"] <= rs["t"][-1] + 1e-9)
            delta = series["linear_entropy_0"][covered] - ref_s[covered]
            mx = float(np.max(np.abs(delta))) if delta.size else 0.0
            rms = float(np.sqrt(np.mean(delta**2))) if delta.size else 0.0
            rows.append(CompareRow("linear_entropy_t", mx, rms, THRESHOLDS["linear_entropy_t"],
                                   _status(mx, THRESHOLDS["linear_entropy_t"])))
            if write:
                write_csv(run_dir / "compare_series.csv", ["t", "linear_entropy", "reference", "delta"],
                          zip(series["t"][covered], series["linear_entropy_0"][covered], ref_s[covered], delta))
    if write:
        write_json(run_dir / "compare.json", [asdict(r) for r in rows])
    return rows


def _status(value: float, threshold: float) -> str:
    return "pass" if value <= threshold else "fail"


def _model_kind(run_dir: Path) -> str | None:
    cfg = run_dir / "config.yaml"
    if not cfg.exists():
        return None
    return (yaml.safe_load(cfg.read_text()) or {}).get("model")
