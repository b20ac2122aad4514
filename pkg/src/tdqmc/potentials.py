"""Model potentials: Moshinsky and soft-Coulomb atoms plus a chirped laser pulse."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

MOSHINSKY = "moshinsky"
SOFT_COULOMB = "soft_coulomb"


@dataclass(frozen=True)
class ModelSpec:
    """Which atom is simulated.

    ``kappa`` is the signed Moshinsky coupling: the pair term is
    ``(kappa/2)(x - x')^2``, so positive values attract and negative values
    repel. ``charge`` defaults to the particle count (neutral soft-Coulomb
    atom). ``nuclear_on=False`` switches off the one-body confinement.
    """

    kind: Literal["moshinsky", "soft_coulomb"]
    n_particles: int
    kappa: float = 0.0
    nuclear_on: bool = True
    charge: float | None = None

    def __post_init__(self):
        if self.kind not in (MOSHINSKY, SOFT_COULOMB):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if int(self.n_particles) < 1:
            raise ValueError("need at least one particle")
        object.__setattr__(self, "n_particles", int(self.n_particles))
        if self.kind == MOSHINSKY and 1 + self.kappa * self.n_particles <= 0:
            raise ValueError(f"1 + kappa*N must be positive (kappa={self.kappa}, N={self.n_particles})")

    @property
    def nuclear_charge(self) -> float:
        return float(self.n_particles if self.charge is None else self.charge)

    def replace(self, **changes) -> "ModelSpec":
        data = dict(kind=self.kind, n_particles=self.n_particles, kappa=self.kappa,
                    nuclear_on=self.nuclear_on, charge=self.charge)
        data.update(changes)
        return ModelSpec(**data)


def confinement(model: ModelSpec, x) -> np.ndarray:
    """One-body potential seen by every particle (zero when the core is off)."""
    x = np.asarray(x, dtype=float)
    if not model.nuclear_on:
        return np.zeros_like(x)
    if model.kind == MOSHINSKY:
        return 0.5 * x**2
    return -model.nuclear_charge / np.sqrt(1.0 + x**2)


def pair_potential(model: ModelSpec, x, xp) -> np.ndarray:
    """Interaction energy of two particles at ``x`` and ``xp`` (broadcasts)."""
    d = np.asarray(x, dtype=float) - np.asarray(xp, dtype=float)
    if model.kind == MOSHINSKY:
        return 0.5 * model.kappa * d**2
    return 1.0 / np.sqrt(1.0 + d**2)


def pair_separable_terms(model: ModelSpec):
    """Rank decomposition ``V(x, r) = sum_a f_a(x) g_a(r)`` if one exists.

    Used to average the pair potential over walkers with a few weighted sums
    instead of a dense matrix product. Returns ``None`` for soft-Coulomb.
    """
    if model.kind != MOSHINSKY:
        return None
    h = 0.5 * model.kappa
    return (
        (lambda x: h * x**2, lambda r: np.ones_like(r)),
        (lambda x: -2 * h * x, lambda r: r),
        (lambda x: h * np.ones_like(x), lambda r: r**2),
    )


def all_pair_energy(model: ModelSpec, positions: np.ndarray) -> np.ndarray:
    """Sum of pair energies over ``i < j`` for configurations ``positions[i, ...]``."""
    total = np.zeros(positions.shape[1:])
    for i in range(positions.shape[0]):
        for j in range(i + 1, positions.shape[0]):
            total = total + pair_potential(model, positions[i], positions[j])
    return total


@dataclass(frozen=True)
class PulseSpec:
    """Linearly polarized pulse ``E(t) = E0 env(t) cos(omega0 t + chirp t^2)``.

    The envelope spans ``n_cycles`` carrier periods starting at t = 0 and is
    normalized to a peak of 1 at mid-pulse.
    """

    omega0: float = 0.092
    e0: float = 0.12
    chirp: float = 0.0
    n_cycles: float = 6.0
    envelope: Literal["sin2", "gaussian"] = "sin2"

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError("carrier frequency must be positive")
        if self.e0 < 0:
            raise ValueError("peak field must be non-negative")
        if not self.n_cycles > 0:
            raise ValueError("pulse needs a positive number of cycles")
        if self.envelope not in ("sin2", "gaussian"):
            raise ValueError(f"unknown envelope {self.envelope!r}")

    @property
    def duration(self) -> float:
        return 2 * np.pi * self.n_cycles / self.omega0

    def envelope_at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        T = self.duration
        inside = (t >= 0) & (t <= T)
        if self.envelope == "sin2":
            env = np.sin(np.pi * t / T) ** 2
        else:
            fwhm = T / 3
            env = np.exp(-4 * np.log(2) * ((t - T / 2) / fwhm) ** 2)
        return np.where(inside, env, 0.0)

    def field(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.e0 * self.envelope_at(t) * np.cos(self.omega0 * t + self.chirp * t**2)

    def instantaneous_frequency(self, t) -> np.ndarray:
        return self.omega0 + 2 * self.chirp * np.asarray(t, dtype=float)


def laser_potential(pulse: PulseSpec, x, t: float) -> np.ndarray:
    """Dipole (length gauge) interaction ``-x E(t)``; zero outside the pulse."""
    return -np.asarray(x, dtype=float) * pulse.field(t)
