"""Stochastic non-local effective potential built from walker ensembles.

For guide wave ``k`` of particle ``i`` the other particles ``j`` contribute
a kernel-weighted Monte Carlo average of the pair potential over their
walkers::

    V_eff^k(x) = sum_{j != i} sum_l V(x, r_j^l) K_l / sum_l K_l,
    K_l = exp(-(r_j^l - r_j^k)^2 / (2 sigma_jk^2)),  sigma_jk = alpha * std(r_j).

``alpha -> inf`` recovers the Hartree mean field and ``alpha -> 0`` the
local (ultra-correlated) limit where only walker ``k`` itself contributes.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .grid import Grid1D
from .potentials import ModelSpec, pair_potential, pair_separable_terms

KERNEL = "kernel"
HARTREE = "hartree"
LOCAL = "local"
SEMICLASSICAL = "semiclassical"
MODES = (KERNEL, HARTREE, LOCAL, SEMICLASSICAL)
SPREADS = ("std", "mad")
MAD_SCALE = 1.4826  # MAD -> std for a normal sample

Z_UNDERFLOW = 1e-300


@dataclass(frozen=True)
class KernelParams:
    """Non-local length control.

    ``m_pot`` caps how many walkers of each other particle enter the
    convolution sum (``None`` uses all of them). The subsample is redrawn
    every step and always contains walker ``k`` itself.

    ``spread`` picks the walker-cloud width that ``alpha`` multiplies: the
    population standard deviation, or the scaled median absolute deviation,
    which ignores the few walkers that ionize and drift toward the box edge.
    """

    alpha: float = 1.0
    mode: str = KERNEL
    m_pot: int | None = 512
    spread: str = "std"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown kernel mode {self.mode!r}")
        if self.mode == KERNEL and not self.alpha > 0:
            raise ValueError("alpha must be positive in kernel mode")
        if self.m_pot is not None and self.m_pot < 1:
            raise ValueError("m_pot must be positive")
        if self.spread not in SPREADS:
            raise ValueError(f"unknown spread estimator {self.spread!r}")

    def with_alpha(self, alpha: float) -> "KernelParams":
        return replace(self, alpha=alpha)


@dataclass(frozen=True)
class WalkerSnapshot:
    """Walker positions ``(N, M)`` frozen at one instant, with per-particle spread."""

    positions: np.ndarray
    sigma: np.ndarray

    @classmethod
    def from_positions(cls, positions, spread: str = "std") -> "WalkerSnapshot":
        pos = np.array(positions, dtype=float, copy=True)
        if pos.ndim != 2 or pos.shape[1] == 0:
            raise ValueError("snapshot needs positions of shape (N, M) with M >= 1")
        pos.setflags(write=False)
        if spread == "mad":
            dev = np.abs(pos - np.median(pos, axis=1, keepdims=True))
            sig = MAD_SCALE * np.median(dev, axis=1)
            # degenerate clouds (over half the walkers coincide) fall back to std
            sig = np.where(sig > 0, sig, pos.std(axis=1))
        elif spread == "std":
            sig = pos.std(axis=1)
        else:
            raise ValueError(f"unknown spread estimator {spread!r}")
        sig.setflags(write=False)
        return cls(pos, sig)

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]

    @property
    def n_walkers(self) -> int:
        return self.positions.shape[1]

    @property
    def mean(self) -> np.ndarray:
        return self.positions.mean(axis=1)

    def nonlocal_length(self, alpha: float) -> np.ndarray:
        return alpha * self.sigma


def kernel_weight(r, r_center, sigma):
    """Gaussian window ``exp(-(r - r_center)^2 / (2 sigma^2))``; ``sigma=inf`` gives 1."""
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("kernel width must be positive")
    d = np.asarray(r, dtype=float) - np.asarray(r_center, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.exp(-(d**2) / (2 * sigma**2))
    return np.where(np.isinf(sigma), 1.0, w)


def kernel_matrix(centers: np.ndarray, samples: np.ndarray, sigma: float, *, fallback: bool = True) -> np.ndarray:
    """Weights ``K[c, l]`` of every sample around every center.

    With ``fallback``, rows whose weights all underflow get weight 1 on the
    nearest sample (the continuous sigma -> 0 limit).
    """
    d = centers[:, None] - samples[None, :]
    if sigma == 0:
        return np.ones_like(d)
    w = np.exp(-(d**2) / (2 * sigma**2))
    dead = w.sum(axis=1) < Z_UNDERFLOW
    if fallback and np.any(dead):
        rows = np.flatnonzero(dead)
        w[rows, np.argmin(np.abs(d[rows]), axis=1)] = 1.0
    return w


def _draw_subsample(m: int, m_pot: int | None, rng) -> np.ndarray | None:
    if m_pot is None or m_pot >= m:
        return None
    if rng is None:
        raise ValueError("an rng is required when subsampling walkers")
    return np.sort(rng.choice(m, size=m_pot, replace=False))


def kernel_average_weights(r_j: np.ndarray, sigma: float, subset: np.ndarray | None):
    """Normalized weights over ``subset`` plus the weight of each walker's own term.

    Returns ``(W, w_self, cols)`` with ``W`` of shape ``(M, len(cols))`` and
    ``w_self`` of shape ``(M,)``: the average for walker ``k`` is
    ``W[k] @ g[cols] + w_self[k] * g[k]``. ``w_self`` is nonzero only for
    walkers left out of the subsample.
    """
    m = r_j.shape[0]
    if subset is None:
        w = kernel_matrix(r_j, r_j, sigma)
        z = w.sum(axis=1)
        return w / z[:, None], np.zeros(m), slice(None)
    # the own term (weight 1) is always present, so no row can underflow
    w = kernel_matrix(r_j, r_j[subset], sigma, fallback=False)
    extra = np.ones(m)
    extra[subset] = 0.0
    z = w.sum(axis=1) + extra
    return w / z[:, None], extra / z, subset


def effective_potentials(
    snapshot: WalkerSnapshot,
    params: KernelParams,
    model: ModelSpec,
    grid: Grid1D,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Effective potentials for every particle and guide wave.

    Returns an array broadcastable to ``(N, M, n)``: in Hartree and
    semiclassical modes the walker axis has length 1.
    """
    pos = snapshot.positions
    n_part, m = pos.shape
    x = grid.x
    if n_part == 1:
        return np.zeros((1, 1, grid.n))

    if params.mode in (HARTREE, SEMICLASSICAL):
        per_j = np.empty((n_part, grid.n))
        for j in range(n_part):
            if params.mode == HARTREE:
                per_j[j] = _mean_pair_over(model, x, pos[j])
            else:
                per_j[j] = pair_potential(model, x, pos[j].mean())
        total = per_j.sum(axis=0)
        return (total[None, :] - per_j)[:, None, :]

    if params.mode == LOCAL:
        out = np.zeros((n_part, m, grid.n))
        for j in range(n_part):
            vj = pair_potential(model, x[None, :], pos[j][:, None])
            for i in range(n_part):
                if i != j:
                    out[i] += vj
        return out

    sep = pair_separable_terms(model)
    if sep is not None:
        # weighted moments of g_a(r_j) for every j, combined before touching the grid
        mom = np.empty((n_part, len(sep), m))
        for j in range(n_part):
            subset = _draw_subsample(m, params.m_pot, rng)
            w, w_self, cols = kernel_average_weights(pos[j], params.alpha * snapshot.sigma[j], subset)
            for a, (_, g) in enumerate(sep):
                gj = g(pos[j])
                mom[j, a] = w @ gj[cols] + w_self * gj
        others = mom.sum(axis=0)[None] - mom
        out = np.zeros((n_part, m, grid.n))
        for a, (f, _) in enumerate(sep):
            out += others[:, a, :, None] * f(x)[None, None, :]
        return out

    per_j = np.empty((n_part, m, grid.n))
    for j in range(n_part):
        subset = _draw_subsample(m, params.m_pot, rng)
        w, w_self, cols = kernel_average_weights(pos[j], params.alpha * snapshot.sigma[j], subset)
        vmat = pair_potential(model, x[None, :], pos[j][:, None])
        per_j[j] = w @ vmat[cols]
        if subset is not None:
            per_j[j] += w_self[:, None] * vmat
    total = per_j.sum(axis=0)
    return total[None] - per_j


def _mean_pair_over(model: ModelSpec, x: np.ndarray, r: np.ndarray) -> np.ndarray:
    sep = pair_separable_terms(model)
    if sep is not None:
        return sum(f(x) * np.mean(g(r)) for f, g in sep)
    return pair_potential(model, x[None, :], r[:, None]).mean(axis=0)


def effective_potential_for(
    i: int,
    k: int,
    snapshot: WalkerSnapshot,
    params: KernelParams,
    model: ModelSpec,
    grid: Grid1D,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Effective potential on the grid for guide wave ``k`` of particle ``i``.

    Direct per-(i, k) evaluation of the convolution sum; the batched
    :func:`effective_potentials` is what the propagation loop uses.
    """
    pos = snapshot.positions
    if pos.size == 0:
        raise ValueError("empty walker snapshot")
    n_part, m = pos.shape
    if not 0 <= i < n_part or not 0 <= k < m:
        raise IndexError("particle or walker index out of range")
    x = grid.x
    v = np.zeros(grid.n)
    for j in range(n_part):
        if j == i:
            continue
        if params.mode == HARTREE:
            v += _mean_pair_over(model, x, pos[j])
            continue
        if params.mode == SEMICLASSICAL:
            v += pair_potential(model, x, pos[j].mean())
            continue
        if params.mode == LOCAL:
            v += pair_potential(model, x, pos[j, k])
            continue
        subset = _draw_subsample(m, params.m_pot, rng)
        cols = np.arange(m) if subset is None else np.union1d(subset, [k])
        sigma = params.alpha * snapshot.sigma[j]
        w = kernel_matrix(pos[j, k : k + 1], pos[j, cols], sigma)[0]
        v += (w[:, None] * pair_potential(model, x[None, :], pos[j, cols][:, None])).sum(axis=0) / w.sum()
    return v


def semiclassical_potential_for(i: int, snapshot: WalkerSnapshot, model: ModelSpec, grid: Grid1D) -> np.ndarray:
    """Pair potential evaluated at the mean walker positions of the other particles."""
    means = snapshot.mean
    v = np.zeros(grid.n)
    for j in range(snapshot.n_particles):
        if j != i:
            v += pair_potential(model, grid.x, means[j])
    return v
