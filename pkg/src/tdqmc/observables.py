"""One-body density matrices and entanglement measures from guide-wave ensembles."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

N_SPECTRUM = 32


@dataclass(frozen=True)
class DensityMatrix:
    """``rho[a, b] = <x_a|rho|x_b>`` sampled on a uniform grid with spacing ``dx``.

    The discrete operator acting on grid vectors is ``rho * dx``; its
    eigenvalues are natural-orbital occupations.
    """

    rho: np.ndarray
    dx: float
    particle: int = 0
    t: float = 0.0

    @property
    def n(self) -> int:
        return self.rho.shape[0]

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)) * self.dx)

    @property
    def kernel(self) -> np.ndarray:
        return self.rho * self.dx

    @property
    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.rho))


def density_matrix(fields: np.ndarray, dx: float, *, particle: int = 0, t: float = 0.0) -> DensityMatrix:
    """Average of ``phi_k(x) conj(phi_k(x'))`` over the guide waves ``fields[k]``.

    The result is rescaled to unit trace (absorbed norm is discarded) and
    symmetrized so it is Hermitian to rounding.
    """
    phi = np.asarray(fields)
    if phi.ndim != 2 or phi.shape[0] == 0:
        raise ValueError("need a non-empty (M, n) stack of guide waves")
    if np.iscomplexobj(phi):
        rho = phi.T @ phi.conj()
    else:
        rho = phi.T @ phi
    tr = np.real(np.trace(rho)) * dx
    if not tr > 0:
        raise ValueError("guide waves have zero norm")
    rho = rho / tr
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho, float(dx), particle, float(t))


def purity(dm: DensityMatrix) -> float:
    """``Tr rho^2`` as the quadrature of ``|rho(x, x')|^2``."""
    return float(np.sum(np.abs(dm.rho) ** 2) * dm.dx**2)


def linear_entropy(dm: DensityMatrix) -> float:
    return 1.0 - purity(dm)


def inverse_purity(dm: DensityMatrix) -> float:
    p = purity(dm)
    if not p > 0:
        raise ValueError("non-positive purity: density matrix is not positive")
    return 1.0 / p


def occupation_spectrum(dm: DensityMatrix) -> np.ndarray:
    """Natural-orbital occupations, descending."""
    w = np.linalg.eigvalsh(dm.kernel)
    return w[::-1]


def mean_trajectory(positions: np.ndarray, fields: np.ndarray | None = None, x: np.ndarray | None = None):
    """Walker mean position, and the density-weighted mean when fields are given."""
    positions = np.asarray(positions, dtype=float)
    if positions.size == 0:
        raise ValueError("no walkers")
    walker_mean = float(positions.mean())
    if fields is None:
        return walker_mean, None
    dens = np.mean(np.abs(fields) ** 2, axis=0)
    return walker_mean, float(np.sum(dens * x) / np.sum(dens))


@dataclass(frozen=True)
class EntanglementRecord:
    t: float
    particle: int
    linear_entropy: float
    inverse_purity: float
    spectrum: np.ndarray = field(repr=False)

    @classmethod
    def from_density(cls, dm: DensityMatrix, n_keep: int = N_SPECTRUM) -> "EntanglementRecord":
        return cls(dm.t, dm.particle, linear_entropy(dm), inverse_purity(dm), occupation_spectrum(dm)[:n_keep])


def gram_purity(fields: np.ndarray, dx: float) -> float:
    """``Tr rho^2`` through the ``M x M`` overlap matrix; cheaper when ``M < n``."""
    phi = np.asarray(fields)
    g = (phi.conj() @ phi.T) * dx
    norm = np.real(np.trace(g))
    return float(np.sum(np.abs(g) ** 2) / norm**2)
