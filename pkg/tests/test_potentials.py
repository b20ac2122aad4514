import numpy as np
import pytest
from hypothesis import given, strategies as st

from tdqmc.potentials import (
    MOSHINSKY,
    SOFT_COULOMB,
    ModelSpec,
    PulseSpec,
    all_pair_energy,
    confinement,
    laser_potential,
    pair_potential,
    pair_separable_terms,
)


def test_values():
    m = ModelSpec(MOSHINSKY, 2, kappa=0.2)
    assert confinement(m, 2.0) == pytest.approx(2.0)
    assert pair_potential(m, 1.0, -1.0) == pytest.approx(0.4)
    s = ModelSpec(SOFT_COULOMB, 2)
    assert confinement(s, 0.0) == pytest.approx(-2.0)
    assert pair_potential(s, 0.0, 0.0) == pytest.approx(1.0)
    assert confinement(s.replace(nuclear_on=False), 1.0) == 0.0


def test_unbound_moshinsky_is_rejected():
    with pytest.raises(ValueError):
        ModelSpec(MOSHINSKY, 5, kappa=-0.2)
    with pytest.raises(ValueError):
        ModelSpec("helium", 2)


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-0.4, 0.4))
def test_separable_terms_reproduce_pair_potential(x, r, kappa):
    m = ModelSpec(MOSHINSKY, 2, kappa=kappa)
    total = sum(f(np.array(x)) * g(np.array(r)) for f, g in pair_separable_terms(m))
    assert total == pytest.approx(pair_potential(m, x, r), abs=1e-9)


def test_soft_coulomb_has_no_separable_form():
    assert pair_separable_terms(ModelSpec(SOFT_COULOMB, 2)) is None


def test_pair_energy_counts_each_pair_once():
    m = ModelSpec(SOFT_COULOMB, 3)
    pos = np.zeros((3, 1))
    assert all_pair_energy(m, pos)[0] == pytest.approx(3.0)


def test_pulse_envelope_and_chirp():
    p = PulseSpec(chirp=3e-5)
    T = p.duration
    assert T == pytest.approx(2 * np.pi * 6 / 0.092)
    assert p.field(-1.0) == 0.0 and p.field(T + 1.0) == 0.0
    assert p.envelope_at(T / 2) == pytest.approx(1.0)
    assert p.instantaneous_frequency(100.0) == pytest.approx(0.092 + 6e-3)
    x = np.linspace(-3, 3, 7)
    assert np.allclose(laser_potential(p, x, 50.0), -x * p.field(50.0))
    g = PulseSpec(envelope="gaussian")
    assert g.envelope_at(T / 2) == pytest.approx(1.0)
    assert g.envelope_at(T / 2 + T / 6) == pytest.approx(0.5)
