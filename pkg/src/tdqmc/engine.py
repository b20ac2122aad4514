"""Coupled walker and guide-wave ensembles in imaginary and real time.

Every particle ``i`` carries ``M`` walkers ``r_i^k`` and ``M`` guide waves
``phi_i^k``. One step builds the effective potentials from the
start-of-step walker snapshot, advances every guide wave on the grid, and
then moves the walkers:

* imaginary time: Metropolis-adjusted Langevin moves that sample
  ``|phi_i^k|^2`` with drift ``phi'/phi``;
* real time: Bohmian guidance with velocity ``Im(phi'/phi)``.
"""
from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .effective import KernelParams, WalkerSnapshot, effective_potentials
from .grid import (
    NODE_GUARD,
    Grid1D,
    absorbing_mask,
    cubic_stencil,
    interpolate,
    spectral_derivatives,
    step_imag,
    step_real,
)
from .observables import N_SPECTRUM, density_matrix, gram_purity, occupation_spectrum
from .potentials import ModelSpec, PulseSpec, all_pair_energy, confinement, laser_potential

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
START_WIDTH = 1 / np.sqrt(2)


class ConvergenceWarning(UserWarning):
    pass


@dataclass
class EnsembleState:
    """Guide waves ``(N, M, n)``, walkers ``(N, M)``, clock and random stream."""

    fields: np.ndarray
    positions: np.ndarray
    grid: Grid1D
    t: float
    rng: np.random.Generator
    counters: dict = field(default_factory=dict)

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]

    @property
    def n_walkers(self) -> int:
        return self.positions.shape[1]

    def snapshot(self, spread: str = "std") -> WalkerSnapshot:
        return WalkerSnapshot.from_positions(self.positions, spread)

    def copy(self) -> "EnsembleState":
        rng = np.random.Generator(np.random.PCG64())
        rng.bit_generator.state = self.rng.bit_generator.state
        return EnsembleState(self.fields.copy(), self.positions.copy(), self.grid, self.t, rng, dict(self.counters))

    def bump(self, key: str, amount: int = 1) -> None:
        self.counters[key] = self.counters.get(key, 0) + int(amount)


def initial_state(model: ModelSpec, grid: Grid1D, n_walkers: int, seed: int, width: float = START_WIDTH) -> EnsembleState:
    """Common Gaussian guess for every guide wave, walkers drawn from its density."""
    rng = np.random.default_rng(seed)
    guess = grid.gaussian(0.0, width).real
    n = model.n_particles
    fields = np.broadcast_to(guess, (n, n_walkers, grid.n)).copy()
    pos, _ = grid.clamp(rng.normal(0.0, width, (n, n_walkers)))
    return EnsembleState(fields, pos, grid, 0.0, rng)


def regrid_state(state: EnsembleState, grid: Grid1D) -> EnsembleState:
    """Move the ensemble onto another grid; fields vanish outside the old box.

    Same spacing with an integer offset is an exact zero-padding, otherwise
    cubic interpolation is used.
    """
    old = state.grid
    if grid == old:
        return state.copy()
    out = state.copy()
    shift = (old.x_min - grid.x_min) / grid.dx
    if np.isclose(old.dx, grid.dx) and np.isclose(shift, round(shift)) and 0 <= round(shift) <= grid.n - old.n:
        start = int(round(shift))
        fields = np.zeros(state.fields.shape[:-1] + (grid.n,), dtype=state.fields.dtype)
        fields[..., start : start + old.n] = state.fields
    else:
        x = grid.x
        inside = (x >= old.x_min) & (x <= old.x_max)
        i0, w = cubic_stencil(old, x[inside])
        src = state.fields
        fields = np.zeros(src.shape[:-1] + (grid.n,), dtype=src.dtype)
        fields[..., inside] = sum(wk * src[..., np.clip(i0 + o, 0, old.n - 1)] for wk, o in zip(w, (-1, 0, 1, 2)))
        fields = grid.normalize(fields)
    out.fields = fields
    out.grid = grid
    out.positions, _ = grid.clamp(state.positions)
    return out


def _density_and_ratio(dens: np.ndarray, prod: np.ndarray, grid: Grid1D, x: np.ndarray, scale: np.ndarray):
    """Interpolated ``|phi|^2`` and ``conj(phi) phi^(p) / |phi|^2`` with a node flag."""
    d_at, p_at = interpolate(dens, grid, x, prod)
    floor = (NODE_GUARD * scale) ** 2
    near = d_at < floor
    ratio = p_at / np.where(near, np.maximum(floor, np.finfo(float).tiny), d_at)
    return d_at, ratio, near


def _mala_move(state: EnsembleState, deriv: np.ndarray, h: float) -> float:
    """Metropolis-adjusted Langevin step of size ``h`` targeting ``|phi_i^k|^2``."""
    grid = state.grid
    phi = state.fields
    dens = phi * phi
    prod = phi * deriv
    scale = np.max(np.abs(phi), axis=-1)
    r = state.positions
    d_r, v_r, _ = _density_and_ratio(dens, prod, grid, r, scale)
    noise = state.rng.standard_normal(r.shape)
    u = state.rng.random(r.shape)
    y = r + h * v_r + np.sqrt(h) * noise
    y_in, escaped = grid.clamp(y)
    d_y, v_y, _ = _density_and_ratio(dens, prod, grid, y_in, scale)
    tiny = np.finfo(float).tiny
    log_acc = (
        np.log(np.maximum(d_y, tiny))
        - np.log(np.maximum(d_r, tiny))
        - ((r - y_in - h * v_y) ** 2 - (y_in - r - h * v_r) ** 2) / (2 * h)
    )
    accept = (np.log(u) < log_acc) & ~escaped & (d_y > 0)
    state.positions = np.where(accept, y_in, r)
    state.bump("escapes", escaped.sum())
    return float(accept.mean())


def _metropolis_move(state: EnsembleState, widths: np.ndarray) -> np.ndarray:
    """Random-walk Metropolis step targeting ``|phi_i^k|^2``; acceptance per particle."""
    grid = state.grid
    dens = np.abs(state.fields) ** 2
    r = state.positions
    noise = state.rng.standard_normal(r.shape)
    u = state.rng.random(r.shape)
    y, escaped = grid.clamp(r + widths[:, None] * noise)
    d_r = interpolate(dens, grid, r)
    d_y = interpolate(dens, grid, y)
    accept = (u * d_r < d_y) & ~escaped & (d_y > 0)
    state.positions = np.where(accept, y, r)
    state.bump("escapes", escaped.sum())
    return accept.mean(axis=1)


def local_energies(state: EnsembleState, model: ModelSpec, second: np.ndarray | None = None):
    """Local energy of every walker configuration ``k`` and a mask of near-node walkers.

    ``E_L^k = sum_i [-phi''/(2 phi) + U(r_i^k)] + sum_{i<j} V(r_i^k, r_j^k)``
    """
    grid = state.grid
    phi = state.fields
    if second is None:
        (second,) = spectral_derivatives(phi, grid, (2,))
    scale = np.max(np.abs(phi), axis=-1)
    _, ratio, near = _density_and_ratio(np.abs(phi) ** 2, np.conj(phi) * second if np.iscomplexobj(phi) else phi * second, grid, state.positions, scale)
    kin = -0.5 * np.real(ratio)
    e = np.sum(kin + confinement(model, state.positions), axis=0) + all_pair_energy(model, state.positions)
    return e, np.any(near, axis=0)


def local_energy(state: EnsembleState, model: ModelSpec, k: int) -> float:
    """Local energy of walker configuration ``k``; raises at a guide-wave node."""
    e, near = local_energies(state, model)
    if near[k]:
        raise FloatingPointError(f"walker {k} sits at a node of its guide wave")
    return float(e[k])


def marginal_ks_distance(state: EnsembleState, i: int) -> float:
    """Kolmogorov-Smirnov distance between walkers of particle ``i`` and ``(1/M) sum_k |phi_i^k|^2``."""
    grid = state.grid
    dens = np.mean(np.abs(state.fields[i]) ** 2, axis=0)
    cdf = np.cumsum(dens) * grid.dx
    cdf /= cdf[-1]
    # cumulative sum of cell values approximates the CDF at the right edge of each cell
    edges = grid.x + 0.5 * grid.dx
    r = np.sort(state.positions[i])
    model_cdf = np.interp(r, edges, cdf, left=0.0, right=1.0)
    m = r.size
    hi = np.arange(1, m + 1) / m
    lo = np.arange(m) / m
    return float(max(np.max(hi - model_cdf), np.max(model_cdf - lo)))


def block_error(series: np.ndarray, n_blocks: int) -> float:
    """Standard error of the mean from ``n_blocks`` contiguous block averages."""
    series = np.asarray(series, dtype=float)
    n_blocks = max(2, min(n_blocks, series.size))
    usable = series[: series.size // n_blocks * n_blocks]
    blocks = usable.reshape(n_blocks, -1).mean(axis=1)
    return float(blocks.std(ddof=1) / np.sqrt(n_blocks))


@dataclass
class RelaxationResult:
    """One imaginary-time relaxation at fixed ``alpha``."""

    alpha: float
    state: EnsembleState
    energy: float
    energy_error: float
    linear_entropy: float
    linear_entropy_error: float
    spectrum: np.ndarray
    sigma: np.ndarray
    acceptance: float
    converged: bool
    drift: float
    energy_trace: np.ndarray
    excluded: int


@dataclass
class GroundStateResult:
    state: EnsembleState
    alpha_opt: float
    energy: float
    energy_error: float
    linear_entropy: float
    spectrum: np.ndarray
    sigma: np.ndarray
    scan: list[RelaxationResult]

    def table(self) -> list[dict]:
        return [
            {
                "alpha": p.alpha,
                "energy": p.energy,
                "energy_error": p.energy_error,
                "linear_entropy": p.linear_entropy,
                "linear_entropy_error": p.linear_entropy_error,
                "sigma": float(np.mean(p.sigma)),
                "acceptance": p.acceptance,
                "converged": p.converged,
            }
            for p in sorted(self.scan, key=lambda p: p.alpha)
        ]


def relax_ground_state(
    config: ExperimentConfig,
    alpha: float,
    initial: EnsembleState | None = None,
    steps: int | None = None,
) -> RelaxationResult:
    """Imaginary-time relaxation of the coupled ensembles at fixed ``alpha``.

    Walkers start with the full Langevin step ``dtau`` whose size shrinks
    linearly to ``mobility_floor * dtau`` over the relaxation phase. After
    that they either keep the floor step or, with the Metropolis sampler,
    resample their guide-wave densities with a step width adapted (outside
    the averaging window) to the target acceptance band. Energy, entropy and
    spectrum are averaged over the final part of the run.
    """
    model = config.model
    grid = config.grid
    sched = config.relax
    kernel = config.kernel.with_alpha(alpha)
    state = initial.copy() if initial is not None else initial_state(model, grid, config.n_walkers, config.seed)
    if state.grid != grid:
        raise ValueError("initial state lives on a different grid")
    n_steps = int(steps or sched.steps)
    dtau = sched.dtau
    relax_steps = max(1, int(sched.relax_fraction * n_steps))
    avg_start = int((1 - sched.average_fraction) * n_steps)
    entropy_every = max(1, (n_steps - avg_start) // max(1, sched.entropy_samples))
    conf = confinement(model, grid.x)
    widths = np.maximum(np.std(state.positions, axis=1), 0.5 * grid.dx)

    trace_steps, trace_e = [], []
    window_e, window_sd, sigmas, entropies, spectra, accepts = [], [], [], [], [], []
    excluded = 0
    for s in range(n_steps):
        snap = state.snapshot(kernel.spread)
        v = conf + effective_potentials(snap, kernel, model, grid, state.rng)
        state.fields = step_imag(state.fields, v, dtau, grid, check=False)
        mobility = sched.mobility_floor + (1 - sched.mobility_floor) * max(0.0, 1 - (s + 1) / relax_steps)
        in_window = s >= avg_start
        measure = (s % sched.measure_every == 0) or (in_window and s == n_steps - 1)
        langevin = sched.sampler == "langevin" or s < relax_steps
        orders = (1,) * langevin + (2,) * measure
        derivs = spectral_derivatives(state.fields, grid, orders) if orders else []
        if measure:
            e, near = local_energies(state, model, derivs[-1])
            excluded += int(near.sum())
            e_mean = float(np.mean(e[~near])) if np.any(~near) else np.nan
            trace_steps.append(s)
            trace_e.append(e_mean)
            if in_window:
                window_e.append(e_mean)
                window_sd.append(float(np.std(e[~near])) / np.sqrt(max(1, int(np.sum(~near)))))
        if not langevin:
            acc = _metropolis_move(state, widths)
            if not in_window:
                lo, hi = sched.target_acceptance
                widths = np.where(acc < lo, 0.8 * widths, np.where(acc > hi, 1.25 * widths, widths))
                widths = np.clip(widths, 0.5 * grid.dx, 0.25 * grid.length)
            accepts.append(float(acc.mean()))
        else:
            accepts.append(_mala_move(state, derivs[0], dtau * mobility))
        if in_window:
            sigmas.append(kernel.alpha * snap.sigma)
            if (n_steps - 1 - s) % entropy_every == 0:
                for i in range(model.n_particles):
                    dm = density_matrix(state.fields[i], grid.dx, particle=i)
                    lam = occupation_spectrum(dm)
                    spectra.append(lam[:N_SPECTRUM])
                    entropies.append(1.0 - float(np.sum(np.abs(dm.rho) ** 2) * grid.dx**2))

    window_e = np.asarray(window_e)
    energy = float(np.nanmean(window_e))
    # walkers move little within the window, so blocks alone miss the
    # spread of a single walker configuration, std(E_L)/sqrt(M)
    err = max(block_error(window_e[np.isfinite(window_e)], sched.n_blocks), float(np.nanmean(window_sd)))
    # energy drift over the averaging window, in units of its statistical error
    half = window_e.size // 2
    drift = float(abs(np.nanmean(window_e[half:]) - np.nanmean(window_e[:half]))) if half else 0.0
    converged = drift < max(sched.tol_e, 6 * err)
    if not converged:
        warnings.warn(f"alpha={alpha:.4g}: energy drifted by {drift:.2e} over the averaging window", ConvergenceWarning, stacklevel=2)
    state.bump("node_excluded", excluded)
    ent = np.asarray(entropies)
    return RelaxationResult(
        alpha=float(alpha),
        state=state,
        energy=energy,
        energy_error=err,
        linear_entropy=float(ent.mean()),
        linear_entropy_error=float(ent.std(ddof=1) / np.sqrt(ent.size)) if ent.size > 1 else 0.0,
        spectrum=np.mean(spectra, axis=0),
        sigma=np.mean(sigmas, axis=0),
        acceptance=float(np.mean(accepts)),
        converged=bool(converged),
        drift=drift,
        energy_trace=np.column_stack([np.asarray(trace_steps) * dtau, trace_e]),
        excluded=excluded,
    )


def _parabola_vertex(xs, ys) -> float | None:
    a, b, _ = np.polyfit(xs, ys, 2)
    if a <= 0:
        return None
    return float(-b / (2 * a))


def optimize_alpha(config: ExperimentConfig, alpha_grid=None, *, refine: bool | None = None, progress=None) -> GroundStateResult:
    """Relax at every ``alpha`` of the grid and keep the lowest-energy ensemble.

    Points are visited in ascending order and each run starts from the
    previous ensemble (``warm_steps`` steps instead of ``steps``). With
    ``refine`` a parabola through the three lowest neighbours proposes one
    more point. The result reports the argmin over all evaluated points.
    """
    alphas = sorted(float(a) for a in (alpha_grid if alpha_grid is not None else config.alpha_grid or (config.kernel.alpha,)))
    if any(a <= 0 for a in alphas):
        raise ValueError("alpha values must be positive")
    refine = config.refine_alpha if refine is None else refine
    warm = config.relax.warm_steps
    scan: list[RelaxationResult] = []
    prev = None
    for a in alphas:
        res = relax_ground_state(config, a, initial=prev, steps=warm if prev is not None else None)
        scan.append(res)
        prev = res.state
        if progress:
            progress(res)
    if refine and len(scan) >= 3:
        energies = np.array([p.energy for p in scan])
        j = int(np.clip(np.argmin(energies), 1, len(scan) - 2))
        xs = np.log([scan[j - 1].alpha, scan[j].alpha, scan[j + 1].alpha])
        vertex = _parabola_vertex(xs, energies[j - 1 : j + 2])
        if vertex is not None and xs[0] < vertex < xs[2] and not np.isclose(np.exp(vertex), [p.alpha for p in scan]).any():
            nearest = min(scan, key=lambda p: abs(np.log(p.alpha) - vertex))
            res = relax_ground_state(config, float(np.exp(vertex)), initial=nearest.state, steps=warm)
            scan.append(res)
            if progress:
                progress(res)
    _check_unimodal(scan)
    best = min(scan, key=lambda p: p.energy)
    return GroundStateResult(
        state=best.state,
        alpha_opt=best.alpha,
        energy=best.energy,
        energy_error=best.energy_error,
        linear_entropy=best.linear_entropy,
        spectrum=best.spectrum,
        sigma=best.sigma,
        scan=scan,
    )


def _check_unimodal(scan: list[RelaxationResult]) -> None:
    pts = sorted(scan, key=lambda p: p.alpha)
    e = np.array([p.energy for p in pts])
    err = np.array([p.energy_error for p in pts])
    minima = [
        j for j in range(1, len(pts) - 1)
        if e[j] + 2 * err[j] < e[j - 1] and e[j] + 2 * err[j] < e[j + 1]
    ]
    if len(minima) > 1:
        warnings.warn("E(alpha) has several minima beyond noise; returning the lowest", ConvergenceWarning, stacklevel=3)


@dataclass(frozen=True)
class RealtimeRecord:
    t: float
    linear_entropy: np.ndarray
    inverse_purity: np.ndarray
    mean_position: np.ndarray
    norm_min: float
    norm_max: float
    absorbed: float
    node_clamped: int
    spectrum: np.ndarray | None = None


def _velocities(phi: np.ndarray, deriv: np.ndarray, grid: Grid1D, x: np.ndarray, dt: float):
    scale = np.max(np.abs(phi), axis=-1)
    _, ratio, near = _density_and_ratio(np.abs(phi) ** 2, np.conj(phi) * deriv, grid, x, scale)
    v = ratio.imag
    cap = 2 * grid.dx / dt
    clamped = near & (np.abs(v) > cap)
    return np.where(near, np.clip(v, -cap, cap), v), clamped


def propagate_real(
    state: EnsembleState,
    config: ExperimentConfig,
    pulse: PulseSpec | None,
    t_end: float,
    alpha: float,
    *,
    callback=None,
) -> tuple[EnsembleState, list[RealtimeRecord]]:
    """Real-time evolution with Bohmian walkers; ``alpha`` stays frozen.

    With ``release_confinement`` the one-body trap is removed at the start
    while the pair interaction stays on. The laser acts at mid-step. Walkers
    move with Heun's method from the velocity fields before and after the
    guide-wave step; velocities at near-node points are capped at two grid
    cells per step.
    """
    sched = config.realtime
    if sched is None:
        raise ValueError("config has no real-time schedule")
    grid = sched.grid_for(state.grid)
    model = config.model.replace(nuclear_on=False) if sched.release_confinement else config.model
    kernel = config.kernel.with_alpha(alpha)
    dt = sched.dt
    state = regrid_state(state, grid)
    state.fields = state.fields.astype(complex)
    conf = confinement(model, grid.x)
    mask = absorbing_mask(grid, sched.absorber_width) if sched.absorber_width > 0 else None
    t0 = state.t
    n_steps = int(round((t_end - t0) / dt))
    (deriv,) = spectral_derivatives(state.fields, grid, (1,))
    records = [_record(state, model, sched.spectrum, 0)]
    if callback:
        callback(records[-1])
    step_clamped = 0
    for s in range(1, n_steps + 1):
        snap = state.snapshot(kernel.spread)
        t_mid = t0 + (s - 0.5) * dt
        v = conf + effective_potentials(snap, kernel, model, grid, state.rng)
        if pulse is not None:
            v = v + laser_potential(pulse, grid.x, t_mid)
        v_old, c_old = _velocities(state.fields, deriv, grid, state.positions, dt)
        state.fields = step_real(state.fields, v, dt, grid, check=False)
        if mask is not None:
            state.fields *= mask
        (deriv,) = spectral_derivatives(state.fields, grid, (1,))
        pred, _ = grid.clamp(state.positions + v_old * dt)
        v_new, c_new = _velocities(state.fields, deriv, grid, pred, dt)
        pos, escaped = grid.clamp(state.positions + 0.5 * (v_old + v_new) * dt)
        state.positions = pos
        state.t = t0 + s * dt
        n_clamped = int((c_old | c_new).sum())
        step_clamped += n_clamped
        state.bump("node_clamped", n_clamped)
        state.bump("escapes", escaped.sum())
        if n_clamped > 0.01 * state.positions.size:
            log.warning("t=%.3f: %d walkers node-clamped", state.t, n_clamped)
        if s % sched.stride == 0 or s == n_steps:
            rec = _record(state, model, sched.spectrum, step_clamped)
            step_clamped = 0
            records.append(rec)
            if rec.absorbed > 0.1:
                log.warning("t=%.3f: absorbed norm %.3f exceeds 0.1, box may be too small", rec.t, rec.absorbed)
            if callback:
                callback(rec)
    return state, records


def _record(state: EnsembleState, model: ModelSpec, with_spectrum: bool, clamped: int) -> RealtimeRecord:
    grid = state.grid
    norms = grid.norm(state.fields)
    ent, inv, spec, means = [], [], [], []
    for i in range(state.n_particles):
        phi = state.fields[i]
        if with_spectrum:
            dm = density_matrix(phi, grid.dx, particle=i, t=state.t)
            p = float(np.sum(np.abs(dm.rho) ** 2) * grid.dx**2)
            spec.append(occupation_spectrum(dm)[:N_SPECTRUM])
        else:
            p = gram_purity(phi, grid.dx)
        ent.append(1.0 - p)
        inv.append(1.0 / p)
        means.append(state.positions[i].mean())
    return RealtimeRecord(
        t=state.t,
        linear_entropy=np.array(ent),
        inverse_purity=np.array(inv),
        mean_position=np.array(means),
        norm_min=float(norms.min()),
        norm_max=float(norms.max()),
        absorbed=float(1.0 - np.mean(norms**2)),
        node_clamped=clamped,
        spectrum=np.array(spec) if with_spectrum else None,
    )


def save_checkpoint(path: str | Path, state: EnsembleState, meta: dict | None = None) -> Path:
    """Write the full ensemble (fields, walkers, clock, RNG state) to an ``.npz`` container."""
    path = Path(path)
    header = {
        "version": CHECKPOINT_VERSION,
        "grid": {"x_min": state.grid.x_min, "dx": state.grid.dx, "n": state.grid.n},
        "t": state.t,
        "rng": state.rng.bit_generator.state,
        "counters": state.counters,
        "meta": meta or {},
    }
    with open(path, "wb") as fh:
        np.savez(fh, fields=state.fields, positions=state.positions,
                 header=np.frombuffer(json.dumps(header, default=int).encode(), dtype=np.uint8))
    return path


def load_checkpoint(path: str | Path) -> tuple[EnsembleState, dict]:
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(bytes(data["header"]).decode())
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {header.get('version')}")
        g = header["grid"]
        grid = Grid1D(g["x_min"], g["dx"], g["n"])
        rng = np.random.Generator(np.random.PCG64())
        rng.bit_generator.state = header["rng"]
        state = EnsembleState(data["fields"].copy(), data["positions"].copy(), grid, float(header["t"]), rng,
                              dict(header.get("counters", {})))
    return state, header


__all__ = [
    "EnsembleState", "GroundStateResult", "RelaxationResult", "RealtimeRecord", "KernelParams",
    "initial_state", "relax_ground_state", "optimize_alpha", "local_energy", "local_energies",
    "propagate_real", "save_checkpoint", "load_checkpoint", "marginal_ks_distance", "block_error",
]
