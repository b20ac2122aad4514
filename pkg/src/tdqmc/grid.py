"""Uniform 1D grid and split-step propagation of complex one-body fields.

All propagators act on arrays whose last axis is the grid axis, so a whole
ensemble of guide waves with shape ``(..., n)`` is advanced in one call.
Atomic units throughout (hbar = m = 1).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

NODE_GUARD = 1e-8
UNDERFLOW_NORM = 1e-300


class GridMismatchError(ValueError):
    """Field or potential sampled on a different grid."""


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid ``x_j = x_min + j*dx``, ``j = 0..n-1``."""

    x_min: float
    dx: float
    n: int

    def __post_init__(self):
        n = int(self.n)
        if n < 8 or n & (n - 1):
            raise ValueError(f"grid size must be a power of two >= 8, got {self.n}")
        if not self.dx > 0:
            raise ValueError(f"grid spacing must be positive, got {self.dx}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "dx", float(self.dx))

    @classmethod
    def centered(cls, length: float = 50.0, n: int = 512) -> "Grid1D":
        """Grid of ``n`` points spanning ``[-length/2, length/2)``."""
        return cls(-0.5 * length, length / n, n)

    @property
    def length(self) -> float:
        return self.n * self.dx

    @property
    def x_max(self) -> float:
        return self.x_min + (self.n - 1) * self.dx

    @cached_property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @cached_property
    def k(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n, self.dx)

    @cached_property
    def k_half(self) -> np.ndarray:
        return 2 * np.pi * np.fft.rfftfreq(self.n, self.dx)

    @property
    def k_max(self) -> float:
        return np.pi / self.dx

    def norm(self, field: np.ndarray) -> np.ndarray:
        """L2 norm along the grid axis."""
        return np.sqrt(np.sum(np.abs(field) ** 2, axis=-1) * self.dx)

    def normalize(self, field: np.ndarray) -> np.ndarray:
        return field / self.norm(field)[..., None]

    def gaussian(self, center: float = 0.0, width: float = 1.0, momentum: float = 0.0) -> np.ndarray:
        """Normalized Gaussian with ``|phi|^2`` of standard deviation ``width``."""
        x = self.x
        g = np.exp(-((x - center) ** 2) / (4 * width**2))
        if momentum:
            g = g * np.exp(1j * momentum * x)
        return self.normalize(g)

    def inner(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.sum(np.conj(a) * b, axis=-1) * self.dx

    def check(self, arr: np.ndarray, what: str = "field") -> None:
        if np.shape(arr)[-1:] != (self.n,):
            raise GridMismatchError(f"{what} has trailing size {np.shape(arr)[-1:]} but grid has n={self.n}")

    def clamp(self, positions: np.ndarray, margin: int = 2) -> tuple[np.ndarray, np.ndarray]:
        """Clip positions into the grid interior; return clipped values and an escape mask."""
        lo = self.x_min + margin * self.dx
        hi = self.x_max - margin * self.dx
        out = (positions < lo) | (positions > hi)
        return np.clip(positions, lo, hi), out


@lru_cache(maxsize=64)
def _kinetic_factor(grid: Grid1D, dt: float, imaginary: bool, half_spectrum: bool) -> np.ndarray:
    k = grid.k_half if half_spectrum else grid.k
    if imaginary:
        return np.exp(-0.5 * k**2 * dt)
    return np.exp(-0.5j * k**2 * dt)


def _require_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"non-finite values in {what}")


def _strang(field, half_kick, kin_full, kin_half, n):
    psi = field * half_kick
    if np.iscomplexobj(psi):
        psi = np.fft.ifft(kin_full * np.fft.fft(psi, axis=-1), axis=-1)
    else:
        psi = np.fft.irfft(kin_half * np.fft.rfft(psi, axis=-1), n, axis=-1)
    return psi * half_kick


def step_real(field: np.ndarray, potential: np.ndarray, dt: float, grid: Grid1D, *, check: bool = True) -> np.ndarray:
    """One Strang step of ``i d/dt phi = (-1/2 d^2/dx^2 + V) phi``.

    Half potential kick, exact kinetic step in momentum space, half kick.
    ``potential`` broadcasts against ``field``. A negative ``dt`` runs the
    step backwards and inverts a forward step to rounding error.
    """
    if check:
        grid.check(field)
        grid.check(potential, "potential")
        _require_finite(field, "field")
        _require_finite(potential, "potential")
    if dt == 0:
        raise ValueError("dt must be nonzero")
    kin = _kinetic_factor(grid, float(dt), False, False)
    half = np.exp(-0.5j * dt * np.asarray(potential))
    psi = np.asarray(field, dtype=complex) * half
    psi = np.fft.ifft(kin * np.fft.fft(psi, axis=-1), axis=-1)
    return psi * half


def step_imag(field: np.ndarray, potential: np.ndarray, dtau: float, grid: Grid1D, *, check: bool = True) -> np.ndarray:
    """One Strang step of ``exp(-H dtau)`` followed by renormalization.

    Real input stays real (real FFTs are used). Raises ``FloatingPointError``
    if the propagated field underflows before renormalization.
    """
    if check:
        grid.check(field)
        grid.check(potential, "potential")
        _require_finite(field, "field")
        _require_finite(potential, "potential")
    if not dtau > 0:
        raise ValueError("dtau must be positive")
    half = np.exp(-0.5 * dtau * np.asarray(potential))
    psi = _strang(
        field,
        half,
        _kinetic_factor(grid, float(dtau), True, False),
        _kinetic_factor(grid, float(dtau), True, True),
        grid.n,
    )
    norm = grid.norm(psi)
    if np.any(norm < UNDERFLOW_NORM) or not np.all(np.isfinite(norm)):
        raise FloatingPointError("guide wave underflow in imaginary-time step")
    return psi / norm[..., None]


def absorbing_mask(grid: Grid1D, width: float) -> np.ndarray:
    """``cos^(1/8)`` mask that is 1 in the interior and falls to 0 over ``width`` at each edge."""
    x = grid.x
    d = np.minimum(x - grid.x_min, grid.x_max - x)
    mask = np.ones(grid.n)
    edge = d < width
    mask[edge] = np.abs(np.cos(0.5 * np.pi * (width - d[edge]) / width)) ** 0.125
    return mask


def energy_expectation(field: np.ndarray, potential: np.ndarray, grid: Grid1D) -> np.ndarray:
    """``<phi|H|phi> / <phi|phi>`` with the kinetic term evaluated spectrally."""
    f = np.fft.fft(field, axis=-1)
    kin = 0.5 * np.sum(grid.k**2 * np.abs(f) ** 2, axis=-1) * grid.dx / grid.n
    pot = np.sum(potential * np.abs(field) ** 2, axis=-1) * grid.dx
    return (kin + pot) / (grid.norm(field) ** 2)


def spectral_derivatives(field: np.ndarray, grid: Grid1D, orders=(1,)) -> list[np.ndarray]:
    """Derivatives of ``field`` along the grid axis, one array per requested order."""
    real = not np.iscomplexobj(field)
    if real:
        f = np.fft.rfft(field, axis=-1)
        ik = 1j * grid.k_half
        return [np.fft.irfft(f * ik**p, grid.n, axis=-1) for p in orders]
    f = np.fft.fft(field, axis=-1)
    ik = 1j * grid.k
    return [np.fft.ifft(f * ik**p, axis=-1) for p in orders]


def cubic_stencil(grid: Grid1D, positions: np.ndarray):
    u = (np.asarray(positions, dtype=float) - grid.x_min) / grid.dx
    i0 = np.floor(u).astype(np.intp)
    t = u - i0
    weights = (
        -t * (t - 1) * (t - 2) / 6,
        (t + 1) * (t - 1) * (t - 2) / 2,
        -(t + 1) * t * (t - 2) / 2,
        (t + 1) * t * (t - 1) / 6,
    )
    return i0, weights


def interpolate(values: np.ndarray, grid: Grid1D, positions, *extra: np.ndarray):
    """Cubic Lagrange interpolation of grid samples at off-grid positions.

    ``values`` has shape ``batch + (n,)`` and ``positions`` shape ``batch``
    (each row is sampled at its own point), or ``values`` is a single row and
    ``positions`` any shape. Indices wrap periodically. Extra arrays of the
    same shape as ``values`` reuse the stencil; a tuple is returned then.
    """
    positions = np.asarray(positions, dtype=float)
    i0, w = cubic_stencil(grid, positions)
    arrays = (values,) + extra
    out = []
    for arr in arrays:
        arr = np.asarray(arr)
        if arr.ndim == 1:
            acc = sum(wk * arr[(i0 + o) % grid.n] for wk, o in zip(w, (-1, 0, 1, 2)))
        else:
            flat = arr.reshape(-1, grid.n)
            rows = np.arange(flat.shape[0]).reshape(positions.shape) * grid.n
            src = flat.ravel()
            acc = sum(wk * src[rows + (i0 + o) % grid.n] for wk, o in zip(w, (-1, 0, 1, 2)))
        out.append(acc)
    return out[0] if not extra else tuple(out)


def log_derivative_at(field: np.ndarray, grid: Grid1D, x, *, order: int = 1, guard: float = NODE_GUARD):
    """``(d^p phi/dx^p) / phi`` at off-grid points, with a near-node flag.

    ``field`` may be a batch ``(..., n)`` with ``x`` of shape ``(...)``.
    The smooth products ``conj(phi) * phi^(p)`` and ``|phi|^2`` are
    interpolated instead of the oscillating amplitude itself, so plane-wave
    phases do not spoil the result. Where ``|phi(x)| < guard * max|phi|`` the
    value is clipped to the grid's Nyquist scale and flagged.

    For ``order=1`` the imaginary part is the Bohmian velocity and the real
    part the imaginary-time drift.
    """
    field = np.asarray(field)
    (deriv,) = spectral_derivatives(field, grid, (order,))
    return log_derivative_from(field, deriv, grid, x, order=order, guard=guard)


def log_derivative_from(field, deriv, grid: Grid1D, x, *, order: int = 1, guard: float = NODE_GUARD):
    """Same as :func:`log_derivative_at` with a precomputed derivative field."""
    dens = np.abs(field) ** 2
    prod = np.conj(field) * deriv if np.iscomplexobj(field) or np.iscomplexobj(deriv) else field * deriv
    d_at, p_at = interpolate(dens, grid, x, prod)
    floor = (guard * np.max(np.abs(field), axis=-1)) ** 2
    near = d_at < floor
    safe = np.where(near, np.maximum(floor, np.finfo(float).tiny), d_at)
    val = p_at / safe
    if np.any(near):
        cap = grid.k_max**order
        if np.iscomplexobj(val):
            val = np.where(near, np.clip(val.real, -cap, cap) + 1j * np.clip(val.imag, -cap, cap), val)
        else:
            val = np.where(near, np.clip(val, -cap, cap), val)
    return val, near
