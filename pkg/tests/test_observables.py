import numpy as np
import pytest
from hypothesis import given, strategies as st

from tdqmc.grid import Grid1D
from tdqmc.observables import (
    EntanglementRecord,
    density_matrix,
    gram_purity,
    inverse_purity,
    linear_entropy,
    mean_trajectory,
    occupation_spectrum,
    purity,
)

GRID = Grid1D.centered(30.0, 128)


def oscillator_states(count):
    """First ``count`` harmonic-oscillator eigenfunctions on the grid (orthonormal)."""
    x = GRID.x
    out = [np.exp(-0.5 * x**2)]
    out.append(x * out[0])
    for n in range(2, count):
        out.append(x * out[-1] - (n - 1) / 2 * out[-2])
    return np.array([GRID.normalize(f) for f in out[:count]])


def random_fields(seed, m=20):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=(m, 1)) * 2
    w = rng.uniform(0.5, 1.5, size=(m, 1))
    p = rng.normal(size=(m, 1))
    return GRID.normalize(np.exp(-((GRID.x - c) ** 2) / (4 * w**2) + 1j * p * GRID.x))


def test_identical_guide_waves_give_a_pure_state():
    phi = np.tile(GRID.gaussian(0.5, 1.0, 0.3), (7, 1))
    dm = density_matrix(phi, GRID.dx)
    assert abs(linear_entropy(dm)) < 1e-12
    lam = occupation_spectrum(dm)
    assert lam[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.abs(lam[1:]) < 1e-12)


def test_two_orthonormal_guide_waves():
    dm = density_matrix(oscillator_states(2), GRID.dx)
    assert linear_entropy(dm) == pytest.approx(0.5, abs=1e-12)
    assert inverse_purity(dm) == pytest.approx(2.0, abs=1e-12)
    assert np.allclose(occupation_spectrum(dm)[:2], 0.5)


@given(st.integers(1, 8))
def test_uniform_mixture_of_orthonormal_states(m):
    dm = density_matrix(oscillator_states(m), GRID.dx)
    assert linear_entropy(dm) == pytest.approx(1 - 1 / m, abs=1e-10)
    assert inverse_purity(dm) == pytest.approx(m, abs=1e-8)


@given(st.integers(0, 10_000))
def test_density_matrix_invariants(seed):
    dm = density_matrix(random_fields(seed), GRID.dx)
    assert np.array_equal(dm.rho, dm.rho.conj().T)
    assert dm.trace == pytest.approx(1.0, abs=1e-8)
    lam = occupation_spectrum(dm)
    assert lam.min() >= -1e-10
    assert np.sum(lam) == pytest.approx(1.0, abs=1e-8)
    assert linear_entropy(dm) == pytest.approx(1 - np.sum(lam**2), abs=1e-8)
    assert inverse_purity(dm) == pytest.approx(1 / np.sum(lam**2), rel=1e-8)
    assert 0 <= linear_entropy(dm) < 1


@given(st.integers(0, 10_000), st.floats(0, 2 * np.pi))
def test_global_phase_does_not_change_entropy(seed, phase):
    phi = random_fields(seed)
    a = linear_entropy(density_matrix(phi, GRID.dx))
    b = linear_entropy(density_matrix(phi * np.exp(1j * phase), GRID.dx))
    assert a == pytest.approx(b, abs=1e-12)


def test_gram_purity_agrees_with_density_matrix():
    phi = random_fields(4, m=9)
    assert gram_purity(phi, GRID.dx) == pytest.approx(purity(density_matrix(phi, GRID.dx)), abs=1e-12)


def test_record_and_trajectory():
    dm = density_matrix(random_fields(1), GRID.dx, particle=1, t=2.5)
    rec = EntanglementRecord.from_density(dm)
    assert rec.t == 2.5 and rec.particle == 1 and len(rec.spectrum) == 32
    walker, weighted = mean_trajectory(np.full(5, 1.5))
    assert walker == 1.5 and weighted is None
    phi = np.tile(GRID.gaussian(2.0, 1.0), (3, 1))
    _, weighted = mean_trajectory(np.zeros(3), phi, GRID.x)
    assert weighted == pytest.approx(2.0, abs=1e-8)


def test_rejects_empty_input():
    with pytest.raises(ValueError):
        density_matrix(np.zeros((0, GRID.n)), GRID.dx)
    with pytest.raises(ValueError):
        mean_trajectory(np.array([]))
