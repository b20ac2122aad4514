import numpy as np
import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st

from tdqmc.config import (
    ConfigError,
    ExperimentConfig,
    RealtimeSchedule,
    config_keys,
    dump_config,
    env_overrides,
    from_mapping,
    load_config,
    to_mapping,
)
from tdqmc.effective import KernelParams
from tdqmc.potentials import MOSHINSKY, SOFT_COULOMB, ModelSpec, PulseSpec
from tdqmc.presets import PRESETS, PROFILES, expand


def test_mapping_round_trip_preserves_everything():
    cfg = ExperimentConfig(ModelSpec(SOFT_COULOMB, 3), alpha_grid=(0.5, 1.0),
                           realtime=RealtimeSchedule(absorber_width=4.0, grid_points=512, grid_length=100.0),
                           pulse=PulseSpec(chirp=-3e-5), seed=7, name="x")
    back = from_mapping(to_mapping(cfg))
    assert back == cfg
    assert back.digest() == cfg.digest()


@pytest.mark.parametrize("name", sorted(PRESETS))
@pytest.mark.parametrize("profile", PROFILES)
def test_every_preset_survives_yaml(name, profile, tmp_path):
    for cfg in expand(name, profile):
        path = tmp_path / f"{cfg.name}.yaml"
        dump_config(cfg, path)
        assert load_config(path, environ={}) == cfg


@given(st.integers(0, 2**31 - 1), st.floats(-0.15, 0.3), st.integers(1, 6))
def test_digest_tracks_content(seed, kappa, n):
    cfg = ExperimentConfig(ModelSpec(MOSHINSKY, n, kappa=kappa), seed=seed)
    assert from_mapping(to_mapping(cfg)).digest() == cfg.digest()
    assert cfg.with_changes(seed=seed + 1).digest() != cfg.digest()
    assert cfg.with_changes(kernel=KernelParams(spread="mad")).digest() != cfg.digest()


@pytest.mark.parametrize(
    "patch, key",
    [
        ({"walkers": "many"}, "walkers"),
        ({"grid_points": 100}, "grid_points"),
        ({"mode": "nearest"}, "kernel"),
        ({"typo_key": 1}, "typo_key"),
        ({"particles": 0}, "model"),
        ({"model": "helium"}, "model"),
        ({"schema": 9}, "schema"),
        ({"dtau": -0.1}, "dtau"),
    ],
)
def test_errors_name_the_offending_key(patch, key):
    data = {"model": MOSHINSKY, "particles": 2, **patch}
    with pytest.raises(ConfigError, match=key):
        from_mapping(data)


def test_missing_required_keys():
    with pytest.raises(ConfigError, match="model"):
        from_mapping({"particles": 2})
    with pytest.raises(ConfigError, match="particles"):
        from_mapping({"model": MOSHINSKY})


def test_environment_then_explicit_overrides(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump({"model": MOSHINSKY, "particles": 2, "seed": 1, "walkers": 300}))
    env = {"TDQMC_SEED": "5", "TDQMC_KAPPA": "-0.2", "OTHER": "x", "TDQMC_NOT_A_KEY": "1"}
    assert env_overrides(env) == {"seed": 5, "kappa": -0.2}
    cfg = load_config(path, {"seed": 9}, environ=env)
    assert cfg.seed == 9
    assert cfg.model.kappa == -0.2
    assert cfg.n_walkers == 300


def test_unreadable_or_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml", environ={})
    bad = tmp_path / "bad.yaml"
    bad.write_text("- just\n- a list\n")
    with pytest.raises(ConfigError):
        load_config(bad, environ={})


def test_realtime_grid_defaults_to_ground_grid():
    cfg = ExperimentConfig(ModelSpec(MOSHINSKY, 2), realtime=RealtimeSchedule())
    assert cfg.realtime.grid_for(cfg.grid) == cfg.grid
    big = RealtimeSchedule(grid_length=200.0, grid_points=1024).grid_for(cfg.grid)
    assert big.n == 1024
    assert big.length == pytest.approx(200.0)


def test_key_table_is_flat_and_unique():
    keys = config_keys()
    assert len(keys) == len(set(keys))
    assert all(k == k.lower() and "." not in k for k in keys)


def test_presets_cover_the_benchmark_matrix():
    assert [c.model.n_particles for c in expand("fig1")] == [2, 4, 10]
    fig5 = expand("fig5", seed=11)
    assert len(fig5) == 9
    assert {c.pulse.chirp for c in fig5} == {-3e-5, 0.0, 3e-5}
    assert all(c.seed == 11 for c in fig5)
    assert all(c.realtime.release_confinement for c in expand("fig3"))
    with pytest.raises(KeyError):
        expand("fig9")
    assert np.isclose(fig5[0].realtime.t_end, PulseSpec().duration)
