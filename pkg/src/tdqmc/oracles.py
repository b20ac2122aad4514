"""Reference results: closed-form Moshinsky quantities and a direct N-body grid solver.

The Moshinsky atom (harmonic trap plus harmonic pair coupling) has a
Gaussian ground state, so its one-body density matrix, occupation spectrum
and linear entropy are known analytically. After the trap is released the
state stays Gaussian, and its entropy follows from the phase-space
covariance. For anything else the full N-dimensional Schrodinger equation is
solved on a tensor grid (N <= 4).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.linalg import expm

from .grid import Grid1D, absorbing_mask
from .observables import DensityMatrix
from .potentials import ModelSpec, PulseSpec, confinement, pair_potential

MAX_EXACT_PARTICLES = 4


@dataclass(frozen=True)
class MoshinskyAnalytic:
    """Closed-form ground-state data of the N-particle Moshinsky atom."""

    n_particles: int
    kappa: float

    def __post_init__(self):
        if self.n_particles < 1:
            raise ValueError("need at least one particle")
        if 1 + self.kappa * self.n_particles <= 0:
            raise ValueError("1 + kappa*N must be positive for a bound ground state")

    @property
    def delta(self) -> float:
        return float(np.sqrt(1 + self.kappa * self.n_particles))

    @property
    def a1(self) -> float:
        n, d = self.n_particles, self.delta
        return ((n - 1) * (1 + d * d) + 2 * (n * n - n + 1) * d) / (4 * n * (n - 1 + d))

    @property
    def a2(self) -> float:
        n, d = self.n_particles, self.delta
        return (n - 1) * (1 - d) ** 2 / (2 * n * (n - 1 + d))

    @property
    def prefactor(self) -> float:
        n, d = self.n_particles, self.delta
        return float(np.sqrt(d * n / (np.pi * (n - 1 + d))))

    @property
    def energy(self) -> float:
        return 0.5 * ((self.n_particles - 1) * self.delta + 1)

    def density(self, x, xp) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        xp = np.asarray(xp, dtype=float)
        return self.prefactor * np.exp(-self.a1 * (x**2 + xp**2) + self.a2 * (x * xp))

    @property
    def purity(self) -> float:
        """``Tr rho^2`` from the Gaussian integral of ``rho(x, x')^2``."""
        return self.prefactor**2 * np.pi / np.sqrt(4 * self.a1**2 - self.a2**2)

    @property
    def linear_entropy(self) -> float:
        return 1.0 - self.purity

    @property
    def ratio(self) -> float:
        """Geometric ratio ``q`` of the occupation numbers ``(1 - q) q^n``."""
        a1, a2 = self.a1, self.a2
        if a2 == 0:
            return 0.0
        return (2 * a1 - np.sqrt(4 * a1**2 - a2**2)) / a2

    def spectrum(self, count: int = 32) -> np.ndarray:
        q = self.ratio
        return (1 - q) * q ** np.arange(count)

    def width(self) -> float:
        """Standard deviation of the one-body density."""
        return float(1.0 / np.sqrt(2 * (2 * self.a1 - self.a2)))


def moshinsky_density(params: MoshinskyAnalytic, x, xp) -> np.ndarray:
    return params.density(x, xp)


def moshinsky_density_matrix(params: MoshinskyAnalytic, grid: Grid1D) -> DensityMatrix:
    x = grid.x
    return DensityMatrix(params.density(x[:, None], x[None, :]), grid.dx)


def moshinsky_entropy(params: MoshinskyAnalytic, grid: Grid1D | None = None, *, max_widen: int = 6) -> float:
    """``1 - Tr rho^2`` by 2D quadrature of the analytic density matrix.

    The box is doubled until the diagonal holds all but 1e-6 of the mass.
    """
    if grid is None:
        grid = Grid1D.centered(16 * params.width() + 8, 256)
    for _ in range(max_widen):
        x = grid.x
        rho = params.density(x[:, None], x[None, :])
        mass = np.trace(rho) * grid.dx
        if mass > 1 - 1e-6:
            return float(1.0 - np.sum(rho**2) * grid.dx**2)
        grid = Grid1D.centered(2 * grid.length, 2 * grid.n)
    raise ValueError("quadrature box could not be widened enough")


def moshinsky_spectrum_dense(params: MoshinskyAnalytic, grid: Grid1D) -> np.ndarray:
    """Occupations from a dense eigensolve of the discretized density matrix."""
    dm = moshinsky_density_matrix(params, grid)
    return np.linalg.eigvalsh(dm.kernel)[::-1]


def release_entropy(n_particles: int, kappa: float, times) -> np.ndarray:
    """Linear entropy after the trap of a Moshinsky ground state is switched off at t = 0.

    The pair coupling keeps acting. Dynamics are linear, so the state stays
    Gaussian: the ``2N x 2N`` covariance is propagated with the symplectic
    flow and one particle's purity is ``1 / (2 sqrt(det C_1))``.
    """
    MoshinskyAnalytic(n_particles, kappa)
    n = n_particles
    coupling = kappa * (n * np.eye(n) - np.ones((n, n)))
    w, u = np.linalg.eigh(np.eye(n) + coupling)
    root = u @ np.diag(np.sqrt(w)) @ u.T
    cov = np.zeros((2 * n, 2 * n))
    cov[:n, :n] = np.linalg.inv(root) / 2
    cov[n:, n:] = root / 2
    gen = np.zeros((2 * n, 2 * n))
    gen[:n, n:] = np.eye(n)
    gen[n:, :n] = -coupling
    idx = [0, n]
    out = []
    for t in np.atleast_1d(np.asarray(times, dtype=float)):
        f = expm(gen * t)
        c = f @ cov @ f.T
        out.append(1.0 - 1.0 / (2.0 * np.sqrt(np.linalg.det(c[np.ix_(idx, idx)]))))
    return np.array(out)


@dataclass
class FullWavefunction:
    """Many-body wavefunction on the tensor product of one 1D grid per particle."""

    psi: np.ndarray
    grid: Grid1D
    t: float = 0.0

    @property
    def n_particles(self) -> int:
        return self.psi.ndim

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.psi) ** 2) * self.grid.dx**self.n_particles))


class _TensorHamiltonian:
    def __init__(self, model: ModelSpec, grid: Grid1D):
        n = model.n_particles
        if n > MAX_EXACT_PARTICLES:
            raise ValueError(f"exact solver supports at most {MAX_EXACT_PARTICLES} particles")
        self.model = model
        self.grid = grid
        self.n = n
        self.axes = tuple(range(n))

    def coord(self, i: int) -> np.ndarray:
        shape = [1] * self.n
        shape[i] = self.grid.n
        return self.grid.x.reshape(shape)

    @cached_property
    def static_potential(self) -> np.ndarray:
        v = np.zeros((self.grid.n,) * self.n)
        for i in range(self.n):
            v = v + confinement(self.model, self.coord(i))
            for j in range(i + 1, self.n):
                v = v + pair_potential(self.model, self.coord(i), self.coord(j))
        return v

    @cached_property
    def k2(self) -> np.ndarray:
        k2 = np.zeros((self.grid.n,) * self.n)
        for i in range(self.n):
            shape = [1] * self.n
            shape[i] = self.grid.n
            k2 = k2 + self.grid.k.reshape(shape) ** 2
        return k2

    def coordinate_sum(self) -> np.ndarray:
        return sum(self.coord(i) for i in range(self.n))

    def energy(self, psi: np.ndarray) -> float:
        vol = self.grid.dx**self.n
        f = np.fft.fftn(psi, axes=self.axes)
        kin = 0.5 * np.sum(self.k2 * np.abs(f) ** 2) * vol / psi.size
        pot = np.sum(self.static_potential * np.abs(psi) ** 2) * vol
        return float((kin + pot) / (np.sum(np.abs(psi) ** 2) * vol))


def _initial_product(model: ModelSpec, grid: Grid1D) -> np.ndarray:
    g = np.exp(-0.5 * grid.x**2)
    psi = g
    for _ in range(model.n_particles - 1):
        psi = np.multiply.outer(psi, g)
    return psi


def exact_ground_state(
    model: ModelSpec,
    grid: Grid1D,
    *,
    dtau: float = 0.05,
    tol: float = 1e-10,
    max_steps: int = 50_000,
    check_every: int = 20,
    refine: bool = True,
) -> tuple[FullWavefunction, float]:
    """Imaginary-time relaxation of the full N-body problem to its symmetric ground state.

    Converged when, over a check interval, both the energy and the L2 norm of
    the wavefunction change by less than ``tol`` per step. The energy alone is
    quadratic in the state error and would stop far too early. With ``refine`` a second pass at ``dtau/4`` removes most of the
    splitting bias. Returns the normalized wavefunction and ``<H>``.
    """
    ham = _TensorHamiltonian(model, grid)
    vol = grid.dx**ham.n
    psi = _initial_product(model, grid).astype(float)
    psi /= np.sqrt(np.sum(psi**2) * vol)
    energy = ham.energy(psi)
    for step_dtau in (dtau, dtau / 4) if refine else (dtau,):
        half = np.exp(-0.5 * step_dtau * ham.static_potential)
        kin = np.exp(-0.5 * step_dtau * ham.k2)
        converged = False
        last = psi
        for step in range(1, max_steps + 1):
            psi = half * np.fft.ifftn(kin * np.fft.fftn(half * psi, axes=ham.axes), axes=ham.axes).real
            psi /= np.sqrt(np.sum(psi**2) * vol)
            if step % check_every == 0:
                e_new = ham.energy(psi)
                moved = np.sqrt(np.sum((psi - last) ** 2) * vol)
                last = psi
                if abs(e_new - energy) < tol * check_every and moved < tol * check_every:
                    energy = e_new
                    converged = True
                    break
                energy = e_new
        if not converged:
            raise RuntimeError(f"exact ground state not converged; last energy {energy:.10f}")
    return FullWavefunction(psi.astype(complex), grid, 0.0), energy


@dataclass(frozen=True)
class ExactSample:
    t: float
    linear_entropy: float
    norm: float
    dipole: float


def reduced_density(wf: FullWavefunction, particle: int = 0) -> DensityMatrix:
    """One-body density matrix of ``particle`` by contracting all other axes."""
    psi = np.moveaxis(wf.psi, particle, 0).reshape(wf.grid.n, -1)
    vol = wf.grid.dx ** (wf.n_particles - 1)
    rho = (psi @ psi.conj().T) * vol
    rho = rho / (np.real(np.trace(rho)) * wf.grid.dx)
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho, wf.grid.dx, particle, wf.t)


def _entropy_of(psi: np.ndarray, dx: float) -> float:
    flat = psi.reshape(psi.shape[0], -1)
    # Tr rho^2 through the smaller of the two Gram matrices
    if flat.shape[0] <= flat.shape[1]:
        g = flat @ flat.conj().T
    else:
        g = flat.conj().T @ flat
    tr = np.real(np.trace(g))
    return float(1.0 - np.sum(np.abs(g) ** 2) / tr**2)


def exact_propagate(
    wf: FullWavefunction,
    model: ModelSpec,
    pulse: PulseSpec | None,
    t_end: float,
    *,
    dt: float = 0.05,
    stride: int = 10,
    absorber_width: float = 0.0,
) -> tuple[FullWavefunction, list[ExactSample]]:
    """Real-time split-step evolution of the full N-body wavefunction.

    ``model`` may differ from the one used to prepare ``wf`` (for instance
    with the confinement switched off). The laser acts at mid-step.
    """
    ham = _TensorHamiltonian(model, wf.grid)
    grid = wf.grid
    vol = grid.dx**ham.n
    psi = np.array(wf.psi, dtype=complex)
    kin = np.exp(-0.5j * dt * ham.k2)
    static_half = np.exp(-0.5j * dt * ham.static_potential)
    xsum = ham.coordinate_sum()
    mask = None
    if absorber_width > 0:
        m1 = absorbing_mask(grid, absorber_width)
        mask = 1.0
        for i in range(ham.n):
            shape = [1] * ham.n
            shape[i] = grid.n
            mask = mask * m1.reshape(shape)
    n_steps = int(round((t_end - wf.t) / dt))
    t = wf.t

    def sample() -> ExactSample:
        norm2 = float(np.sum(np.abs(psi) ** 2) * vol)
        dip = float(np.sum(np.abs(psi) ** 2 * ham.coord(0)) * vol / norm2)
        return ExactSample(t, _entropy_of(psi, grid.dx), np.sqrt(norm2), dip)

    samples = [sample()]
    for step in range(1, n_steps + 1):
        if pulse is not None:
            field = float(pulse.field(t + 0.5 * dt))
            half = static_half * np.exp(0.5j * dt * field * xsum)
        else:
            half = static_half
        psi = half * np.fft.ifftn(kin * np.fft.fftn(half * psi, axes=ham.axes), axes=ham.axes)
        if mask is not None:
            psi *= mask
        t = wf.t + step * dt
        if step % stride == 0 or step == n_steps:
            samples.append(sample())
    if mask is None and abs(samples[-1].norm - 1) > 1e-6:
        raise FloatingPointError("norm drift above 1e-6 in exact propagation")
    return FullWavefunction(psi, grid, t), samples


def resample_density(dm: DensityMatrix, x_from: np.ndarray, grid: Grid1D) -> DensityMatrix:
    """Cubic-spline transfer of a density matrix onto another grid (zero outside the source box)."""
    xt = grid.x
    inside = (xt >= x_from[0]) & (xt <= x_from[-1])
    out = np.zeros((grid.n, grid.n), dtype=complex)
    sel = np.flatnonzero(inside)
    re = RectBivariateSpline(x_from, x_from, dm.rho.real)(xt[sel], xt[sel])
    im = RectBivariateSpline(x_from, x_from, dm.rho.imag)(xt[sel], xt[sel])
    out[np.ix_(sel, sel)] = re + 1j * im
    return DensityMatrix(out, grid.dx, dm.particle, dm.t)
