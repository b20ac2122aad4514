import numpy as np
import pytest
from hypothesis import given, strategies as st

from tdqmc.effective import (
    HARTREE,
    KERNEL,
    LOCAL,
    SEMICLASSICAL,
    KernelParams,
    WalkerSnapshot,
    effective_potential_for,
    effective_potentials,
    kernel_average_weights,
    kernel_weight,
    semiclassical_potential_for,
)
from tdqmc.grid import Grid1D
from tdqmc.potentials import MOSHINSKY, SOFT_COULOMB, ModelSpec, pair_potential

GRID = Grid1D.centered(20.0, 64)
MODELS = [ModelSpec(MOSHINSKY, 3, kappa=0.2), ModelSpec(SOFT_COULOMB, 3)]


def test_two_walker_example():
    # walkers of the other particle at 0 and 1 (std 0.5), alpha = 2 gives sigma = 1
    model = ModelSpec(SOFT_COULOMB, 2)
    snap = WalkerSnapshot.from_positions([[0.3, -0.4], [0.0, 1.0]])
    v = effective_potential_for(0, 0, snap, KernelParams(alpha=2.0, m_pot=None), model, GRID)
    w = np.exp(-0.5)
    expect = (pair_potential(model, GRID.x, 0.0) + w * pair_potential(model, GRID.x, 1.0)) / (1 + w)
    assert np.allclose(v, expect, atol=1e-14)


def test_kernel_weight_limits():
    assert kernel_weight(3.0, 1.0, np.inf) == 1.0
    assert kernel_weight(1.0, 1.0, 0.5) == 1.0
    with pytest.raises(ValueError):
        kernel_weight(0.0, 1.0, 0.0)


def _separated(n_part=3, m=16, seed=0):
    rng = np.random.default_rng(seed)
    base = np.linspace(-6, 6, m)
    return WalkerSnapshot.from_positions(base[None, :] + 0.01 * rng.standard_normal((n_part, m)))


@pytest.mark.parametrize("model", MODELS, ids=["moshinsky", "soft_coulomb"])
def test_large_alpha_is_hartree(model):
    snap = _separated()
    v_big = effective_potentials(snap, KernelParams(alpha=1e6, m_pot=None), model, GRID)
    v_h = effective_potentials(snap, KernelParams(mode=HARTREE), model, GRID)
    assert np.max(np.abs(v_big - v_h)) < 1e-6


@pytest.mark.parametrize("model", MODELS, ids=["moshinsky", "soft_coulomb"])
def test_small_alpha_is_local(model):
    snap = _separated()
    v_small = effective_potentials(snap, KernelParams(alpha=1e-3, m_pot=None), model, GRID)
    v_loc = effective_potentials(snap, KernelParams(mode=LOCAL), model, GRID)
    assert np.max(np.abs(v_small - v_loc)) < 1e-6


@pytest.mark.parametrize("model", MODELS, ids=["moshinsky", "soft_coulomb"])
@pytest.mark.parametrize("mode", [KERNEL, HARTREE, LOCAL, SEMICLASSICAL])
def test_batched_matches_direct(model, mode):
    rng = np.random.default_rng(3)
    snap = WalkerSnapshot.from_positions(rng.normal(size=(3, 12)))
    params = KernelParams(alpha=0.8, mode=mode, m_pot=None)
    batched = np.broadcast_to(effective_potentials(snap, params, model, GRID), (3, 12, GRID.n))
    for i in range(3):
        for k in (0, 5, 11):
            direct = effective_potential_for(i, k, snap, params, model, GRID)
            assert np.allclose(batched[i, k], direct, atol=1e-11)


def test_semiclassical_uses_mean_positions():
    model = MODELS[1]
    snap = WalkerSnapshot.from_positions([[0.0, 2.0], [1.0, 3.0], [-1.0, -1.0]])
    v = semiclassical_potential_for(0, snap, model, GRID)
    assert np.allclose(v, pair_potential(model, GRID.x, 2.0) + pair_potential(model, GRID.x, -1.0))


@given(st.integers(1, 30), st.integers(0, 2**31 - 1))
def test_subsample_always_keeps_the_walker_itself(m_pot, seed):
    rng = np.random.default_rng(seed)
    r = rng.permutation(40) * 0.5
    subset = np.sort(rng.choice(40, size=min(m_pot, 40), replace=False))
    w, w_self, cols = kernel_average_weights(r, 1e-3, subset)
    # with a vanishing width only the walker's own term survives
    total_self = w_self + np.array([w[k][list(subset).index(k)] if k in subset else 0.0 for k in range(40)])
    assert np.allclose(total_self, 1.0)
    assert np.allclose(w.sum(axis=1) + w_self, 1.0)


def test_subsampled_potential_is_reproducible_and_unbiased_in_the_hartree_limit():
    model = MODELS[1]
    rng = np.random.default_rng(5)
    snap = WalkerSnapshot.from_positions(rng.normal(size=(2, 400)))
    params = KernelParams(alpha=1e6, m_pot=100)
    a = effective_potentials(snap, params, model, GRID, np.random.default_rng(9))
    b = effective_potentials(snap, params, model, GRID, np.random.default_rng(9))
    assert np.array_equal(a, b)
    full = effective_potentials(snap, KernelParams(mode=HARTREE), model, GRID)
    # one draw of 100 walkers carries sampling noise; the mean over draws is unbiased
    draws = [effective_potentials(snap, params, model, GRID, np.random.default_rng(s)).mean(axis=1) for s in range(20)]
    assert np.max(np.abs(np.mean(draws, axis=0) - full[:, 0])) < 0.01
    with pytest.raises(ValueError):
        effective_potentials(snap, params, model, GRID, None)


def test_no_interaction_partners():
    snap = WalkerSnapshot.from_positions(np.zeros((1, 5)))
    assert not np.any(effective_potentials(snap, KernelParams(), MODELS[0], GRID))


def test_invalid_parameters():
    with pytest.raises(ValueError):
        KernelParams(alpha=0.0)
    with pytest.raises(ValueError):
        KernelParams(mode="nearest")
    with pytest.raises(ValueError):
        WalkerSnapshot.from_positions(np.zeros((2, 0)))
    snap = WalkerSnapshot.from_positions(np.zeros((2, 3)))
    with pytest.raises(IndexError):
        effective_potential_for(2, 0, snap, KernelParams(), MODELS[0], GRID)


def test_mad_spread_ignores_escaped_walkers():
    rng = np.random.default_rng(5)
    pos = rng.normal(0.0, 1.0, (1, 4000))
    pos[0, :40] = 20.0
    std = WalkerSnapshot.from_positions(pos).sigma[0]
    mad = WalkerSnapshot.from_positions(pos, "mad").sigma[0]
    assert std > 2.0
    assert abs(mad - 1.0) < 0.06
    flat = np.zeros((1, 10))
    flat[0, -2:] = 1.0
    assert WalkerSnapshot.from_positions(flat, "mad").sigma[0] > 0
    with pytest.raises(ValueError):
        KernelParams(spread="iqr")
