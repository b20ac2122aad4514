"""Named experiment sets for the benchmark figures, in "desk" and "paper" profiles.

Each preset expands into one config per particle number (and chirp, for
the pulse study). The desk profile trims walker count, grid and step counts
so that every run finishes in minutes on one core.
"""
from __future__ import annotations

from .config import ExperimentConfig, RealtimeSchedule, RelaxSchedule
from .effective import KernelParams
from .potentials import MOSHINSKY, SOFT_COULOMB, ModelSpec, PulseSpec

PROFILES = ("desk", "paper")

DESCRIPTIONS = {
    "fig1": "Moshinsky kappa=0.2: E(alpha) and S_L(alpha) scans with analytic references, N in {2, 4, 10}",
    "fig2": "Moshinsky kappa=0.2: ground-state occupation spectra, N in {2, 3, 10}",
    "fig3": "Moshinsky kappa=-0.2: S_L(t) after the trap is switched off, N in {2, 3, 4}",
    "fig4": "soft-Coulomb atom: E(alpha) and S_L(alpha) scans with tensor-grid references, N in {2, 3, 4}",
    "fig5": "soft-Coulomb atom in a chirped pulse: S_L(t) for chirp in {-3e-5, 0, +3e-5}, N in {2, 3, 8}",
}

ALPHA_SCAN = (0.3, 0.5, 0.7, 1.0, 1.4, 2.0, 3.0)
CHIRPS = (-3e-5, 0.0, 3e-5)


def _relax(profile: str) -> RelaxSchedule:
    if profile == "paper":
        return RelaxSchedule(dtau=0.02, steps=10_000, warm_steps=5_000)
    return RelaxSchedule(dtau=0.1, steps=1500, warm_steps=800)


def _scale(profile: str) -> dict:
    if profile == "paper":
        return {"n_walkers": 10_000, "kernel": KernelParams(m_pot=2048)}
    return {"n_walkers": 1000, "kernel": KernelParams(m_pot=256)}


def _moshinsky_grid(profile: str) -> dict:
    if profile == "paper":
        return {"grid_length": 50.0, "grid_points": 512}
    return {"grid_length": 16.0, "grid_points": 128}


def _soft_coulomb_grid(profile: str) -> dict:
    if profile == "paper":
        return {"grid_length": 50.0, "grid_points": 512}
    return {"grid_length": 51.2, "grid_points": 256}


def fig1(profile: str = "desk") -> list[ExperimentConfig]:
    return [
        ExperimentConfig(
            ModelSpec(MOSHINSKY, n, kappa=0.2),
            alpha_grid=ALPHA_SCAN,
            relax=_relax(profile),
            name=f"fig1-n{n}",
            **_scale(profile),
            **_moshinsky_grid(profile),
        )
        for n in (2, 4, 10)
    ]


def fig2(profile: str = "desk") -> list[ExperimentConfig]:
    return [
        ExperimentConfig(
            ModelSpec(MOSHINSKY, n, kappa=0.2),
            alpha_grid=(0.5, 0.8, 1.2),
            relax=_relax(profile),
            name=f"fig2-n{n}",
            **_scale(profile),
            **_moshinsky_grid(profile),
        )
        for n in (2, 3, 10)
    ]


def fig3(profile: str = "desk") -> list[ExperimentConfig]:
    scale = _scale(profile)
    if profile == "desk":
        scale["n_walkers"] = 500
        realtime = RealtimeSchedule(dt=0.05, t_end=10.0, stride=10, release_confinement=True, spectrum=False,
                                    grid_length=512.0, grid_points=8192)
    else:
        realtime = RealtimeSchedule(dt=0.01, t_end=10.0, stride=50, release_confinement=True, spectrum=False,
                                    grid_length=1024.0, grid_points=32768)
    return [
        ExperimentConfig(
            ModelSpec(MOSHINSKY, n, kappa=-0.2),
            alpha_grid=(0.7, 1.0, 1.4),
            relax=_relax(profile),
            realtime=realtime,
            name=f"fig3-n{n}",
            **scale,
            **_moshinsky_grid(profile),
        )
        for n in (2, 3, 4)
    ]


def fig4(profile: str = "desk") -> list[ExperimentConfig]:
    return [
        ExperimentConfig(
            ModelSpec(SOFT_COULOMB, n),
            alpha_grid=ALPHA_SCAN,
            relax=_relax(profile),
            name=f"fig4-n{n}",
            **_scale(profile),
            **_soft_coulomb_grid(profile),
        )
        for n in (2, 3, 4)
    ]


def fig5(profile: str = "desk") -> list[ExperimentConfig]:
    scale = _scale(profile)
    if profile == "desk":
        scale["n_walkers"] = 500
        scale["kernel"] = KernelParams(m_pot=128)
        realtime = RealtimeSchedule(dt=0.1, t_end=PulseSpec().duration, stride=20, absorber_width=6.0, spectrum=False)
    else:
        realtime = RealtimeSchedule(dt=0.05, t_end=PulseSpec().duration, stride=40, absorber_width=6.0)
    out = []
    for n in (2, 3, 8):
        for chirp in CHIRPS:
            out.append(
                ExperimentConfig(
                    ModelSpec(SOFT_COULOMB, n),
                    alpha_grid=(0.7, 1.0, 1.4),
                    relax=_relax(profile),
                    realtime=realtime,
                    pulse=PulseSpec(chirp=chirp),
                    name=f"fig5-n{n}-chirp{chirp:+.0e}",
                    **scale,
                    **_soft_coulomb_grid(profile),
                )
            )
    return out


PRESETS = {"fig1": fig1, "fig2": fig2, "fig3": fig3, "fig4": fig4, "fig5": fig5}


def expand(name: str, profile: str = "desk", seed: int | None = None) -> list[ExperimentConfig]:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    if profile not in PROFILES:
        raise KeyError(f"unknown profile {profile!r}; choose from {PROFILES}")
    configs = PRESETS[name](profile)
    if seed is not None:
        configs = [c.with_changes(seed=seed) for c in configs]
    return configs
