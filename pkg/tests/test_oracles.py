import numpy as np
import pytest
from hypothesis import given, strategies as st

from tdqmc.grid import Grid1D
from tdqmc.observables import linear_entropy, occupation_spectrum
from tdqmc.oracles import (
    FullWavefunction,
    MoshinskyAnalytic,
    exact_ground_state,
    exact_propagate,
    moshinsky_density,
    moshinsky_density_matrix,
    moshinsky_entropy,
    moshinsky_spectrum_dense,
    reduced_density,
    release_entropy,
    resample_density,
)
from tdqmc.potentials import MOSHINSKY, SOFT_COULOMB, ModelSpec

GRID = Grid1D.centered(16.0, 128)


def test_closed_form_values():
    m = MoshinskyAnalytic(2, 0.2)
    assert m.energy == pytest.approx(0.5 * (np.sqrt(1.4) + 1))
    assert m.energy == pytest.approx(1.0916080, abs=1e-7)
    assert m.linear_entropy == pytest.approx(0.0035275, abs=1e-7)
    assert MoshinskyAnalytic(10, 0.2).spectrum(1)[0] == pytest.approx(0.993, abs=5e-4)


def test_no_coupling_is_a_product_state():
    m = MoshinskyAnalytic(3, 0.0)
    assert m.delta == 1 and m.a2 == 0 and m.a1 == pytest.approx(0.5)
    assert m.linear_entropy == pytest.approx(0.0, abs=1e-15)
    x, xp = 0.3, -1.1
    assert moshinsky_density(m, x, xp) == pytest.approx(np.exp(-(x * x + xp * xp) / 2) / np.sqrt(np.pi))


@given(st.integers(2, 10), st.sampled_from([0.2, 0.5, -0.05]))
def test_density_is_normalized_symmetric_and_normalizable(n, kappa):
    m = MoshinskyAnalytic(n, kappa)
    assert m.a1 > abs(m.a2) / 2
    dm = moshinsky_density_matrix(m, Grid1D.centered(24.0, 256))
    assert dm.trace == pytest.approx(1.0, abs=1e-10)
    assert np.array_equal(dm.rho, dm.rho.T)


def test_quadrature_matches_closed_form_entropy():
    for n in (2, 3, 10):
        m = MoshinskyAnalytic(n, 0.2)
        assert moshinsky_entropy(m) == pytest.approx(m.linear_entropy, abs=1e-12)
        # a too-small box is widened until the diagonal holds all but 1e-6 of the mass
        assert moshinsky_entropy(m, Grid1D.centered(4.0, 64)) == pytest.approx(m.linear_entropy, abs=1e-7)


def test_entropy_grows_with_particle_number():
    s = [MoshinskyAnalytic(n, 0.2).linear_entropy for n in range(2, 11)]
    assert np.all(np.diff(s) > 0)


def test_spectrum_closed_form_matches_dense_eigensolve():
    m = MoshinskyAnalytic(2, 0.2)
    dense = moshinsky_spectrum_dense(m, GRID)[:5]
    closed = m.spectrum(5)
    assert np.allclose(dense, closed, rtol=1e-6, atol=1e-15)
    assert np.sum(m.spectrum(64)) == pytest.approx(1.0, abs=1e-12)
    assert 1 - np.sum(m.spectrum(64) ** 2) == pytest.approx(m.linear_entropy, abs=1e-12)


def test_unbound_parameters_are_rejected():
    with pytest.raises(ValueError):
        MoshinskyAnalytic(5, -0.2)


def test_release_entropy_starts_at_ground_state_and_grows():
    s = release_entropy(2, -0.2, [0.0, 1.0, 2.0, 4.0, 10.0])
    assert s[0] == pytest.approx(MoshinskyAnalytic(2, -0.2).linear_entropy, abs=1e-12)
    assert np.all(np.diff(s) > 0) and s[-1] < 1
    assert np.allclose(release_entropy(3, 0.0, [0.0, 5.0]), 0.0, atol=1e-12)


@pytest.mark.parametrize("n,kappa,points,length", [(2, 0.2, 128, 16.0), (2, -0.2, 128, 16.0), (2, 0.0, 64, 16.0),
                                                  (3, 0.2, 64, 14.0), (3, -0.2, 64, 16.0)])
def test_grid_ground_state_matches_closed_form(n, kappa, points, length):
    wf, e = exact_ground_state(ModelSpec(MOSHINSKY, n, kappa=kappa), Grid1D.centered(length, points))
    ref = MoshinskyAnalytic(n, kappa)
    assert e == pytest.approx(ref.energy, abs=1e-4)
    assert wf.norm == pytest.approx(1.0, abs=1e-8)
    dm = reduced_density(wf)
    assert np.max(np.abs(dm.rho - moshinsky_density(ref, wf.grid.x[:, None], wf.grid.x[None, :]))) < 1e-4
    assert linear_entropy(dm) == pytest.approx(ref.linear_entropy, abs=3e-6)


@pytest.mark.slow
def test_four_particle_grid_ground_state():
    wf, e = exact_ground_state(ModelSpec(MOSHINSKY, 4, kappa=0.2), Grid1D.centered(12.0, 32), dtau=0.05)
    assert e == pytest.approx(MoshinskyAnalytic(4, 0.2).energy, abs=1e-4)


def test_soft_coulomb_hydrogen_converges_with_the_grid():
    model = ModelSpec(SOFT_COULOMB, 1, charge=1.0)
    _, coarse = exact_ground_state(model, Grid1D.centered(60.0, 256))
    _, fine = exact_ground_state(model, Grid1D.centered(80.0, 512))
    assert coarse == pytest.approx(fine, abs=1e-5)
    assert fine == pytest.approx(-0.6698, abs=1e-3)


def test_reduced_density_is_symmetric_under_relabeling():
    wf, _ = exact_ground_state(ModelSpec(SOFT_COULOMB, 2), Grid1D.centered(30.0, 64))
    a = linear_entropy(reduced_density(wf, 0))
    b = linear_entropy(reduced_density(wf, 1))
    assert a == pytest.approx(b, abs=1e-12)
    dm = reduced_density(wf)
    assert np.array_equal(dm.rho, dm.rho.conj().T)
    assert dm.trace == pytest.approx(1.0, abs=1e-8)
    assert occupation_spectrum(dm).min() > -1e-10


def test_product_state_is_pure():
    g = Grid1D.centered(20.0, 64)
    phi = g.gaussian(0.5, 1.0)
    wf = FullWavefunction(np.multiply.outer(phi, phi), g)
    assert linear_entropy(reduced_density(wf)) == pytest.approx(0.0, abs=1e-12)


def test_stationary_state_stays_put():
    model = ModelSpec(MOSHINSKY, 2, kappa=0.2)
    wf, _ = exact_ground_state(model, GRID)
    # imaginary- and real-time split steps have slightly different eigenstates (O(dt^2))
    _, samples = exact_propagate(wf, model, None, 2.0, dt=0.01, stride=20)
    s = [x.linear_entropy for x in samples]
    assert np.ptp(s) < 5e-6
    assert abs(samples[-1].norm - 1) < 1e-10


def test_grid_release_matches_gaussian_covariance():
    model = ModelSpec(MOSHINSKY, 2, kappa=-0.2)
    wf, _ = exact_ground_state(model, Grid1D.centered(16.0, 128))
    big = Grid1D.centered(64.0, 512)
    pad = np.zeros((big.n, big.n), dtype=complex)
    pad[192:320, 192:320] = wf.psi
    free = model.replace(nuclear_on=False)
    _, samples = exact_propagate(FullWavefunction(pad, big), free, None, 2.0, dt=0.01, stride=50)
    ref = release_entropy(2, -0.2, [x.t for x in samples])
    assert np.max(np.abs(np.array([x.linear_entropy for x in samples]) - ref)) < 1e-4


def test_resample_round_trip():
    m = MoshinskyAnalytic(2, 0.2)
    fine = Grid1D.centered(16.0, 256)
    dm = moshinsky_density_matrix(m, fine)
    back = resample_density(dm, fine.x, GRID)
    assert np.max(np.abs(back.rho - moshinsky_density_matrix(m, GRID).rho)) < 1e-6
