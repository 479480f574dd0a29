"""Config parsing, validation, unit conversion and round trips."""

import numpy as np
import pytest

from cellshare.config import (db_to_linear, dbm_to_mw, default_config,
                              dump_config, linear_to_db, mw_to_dbm,
                              parse_config, resolved_dict, validate_config)
from cellshare.errors import ConfigError


def test_unit_conversions():
    assert dbm_to_mw(0.0) == 1.0
    assert dbm_to_mw(30.0) == pytest.approx(1000.0, rel=1e-12)
    assert dbm_to_mw(-110.0) == pytest.approx(1e-11, rel=1e-12)
    assert linear_to_db(10.0) == pytest.approx(10.0, rel=1e-12)
    rng = np.random.default_rng(0)
    for _ in range(1000):
        dbm = float(rng.uniform(-150.0, 50.0))
        assert mw_to_dbm(dbm_to_mw(dbm)) == pytest.approx(dbm, abs=1e-9)
        ratio = float(rng.uniform(1e-12, 1e6))
        assert db_to_linear(linear_to_db(ratio)) == pytest.approx(
            ratio, rel=1e-12)
    with pytest.raises(ValueError):
        mw_to_dbm(0.0)
    with pytest.raises(ValueError):
        linear_to_db(-1.0)


def test_documented_defaults_frozen():
    # the resolved defaults are part of the interface; pin every value
    expected = {
        "network": {
            "cells": 2, "users_per_cell": 3, "antennas": 8,
            "codebook_bits": 3, "cell_radius_m": 112.0,
            "inter_site_distance_m": 225.0, "carrier_freq_hz": 28e9,
            "ue_speed_mps": 0.556, "step_duration_s": 1e-3,
            "pathloss_exponent": 3.0, "paths": 3,
            "noise_power_dbm": -110.0, "max_bs_power_dbm": 40.0,
            "min_ue_power_dbm": 0.0, "min_sinr_db": -3.0,
            "interference_threshold_dbm": -110.0, "punishment": 100.0,
        },
        "training": {
            "episodes": 200, "steps_per_episode": 50,
            "learning_rate": 0.01, "discount": 0.995, "batch_size": 32,
            "buffer_capacity": 10000, "epsilon_start": 1.0,
            "epsilon_decay": 0.99, "epsilon_min": 0.05,
            "target_refresh_steps": 1, "eval_episodes": 20,
            "sumrate_mode": "final",
        },
        "sharing": {"attribution": "measured", "ctde_sync_period": 1},
        "oracle": {"power_step_db": 3.0},
    }
    assert resolved_dict(default_config()) == expected


def test_derived_quantities():
    net = default_config().network
    assert net.noise_mw == pytest.approx(1e-11, rel=1e-12)
    assert net.max_bs_power_mw == pytest.approx(1e4, rel=1e-12)
    assert net.codebook_size == 8
    assert net.min_sinr == pytest.approx(10.0 ** -0.3, rel=1e-12)
    # even split with 3 dB headroom: 40 - 10 log10(3) - 3
    assert net.initial_ue_power_dbm() == pytest.approx(
        32.228787452803374, rel=1e-12)


def test_parse_overrides_defaults():
    cfg = parse_config(
        "[network]\n"
        "cells = 3\n"
        "max_bs_power_dbm = 20.0  # inline comment\n"
        "\n"
        "; comment line\n"
        "[training]\n"
        "episodes = 7\n")
    assert cfg.network.cells == 3
    assert cfg.network.max_bs_power_dbm == 20.0
    assert cfg.training.episodes == 7
    # untouched keys keep defaults
    assert cfg.network.users_per_cell == 3


def test_parse_errors_are_line_precise():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("cells = 2\n")  # key before any section
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("[network]\nnot a pair\n")
    with pytest.raises(ConfigError, match="line 1.*unknown section"):
        parse_config("[grid]\n")
    with pytest.raises(ConfigError, match="line 2.*unknown key"):
        parse_config("[network]\nwidth = 3\n")
    with pytest.raises(ConfigError, match="line 2.*cannot parse"):
        parse_config("[network]\ncells = two\n")
    with pytest.raises(ConfigError, match="unterminated"):
        parse_config("[network\n")


def test_validation_catches_bad_values():
    bad = [
        ("network", "cells", 0),
        ("network", "codebook_bits", 9),
        ("network", "cell_radius", -1.0),
        ("network", "step_duration", 0.0),
        ("network", "punishment", -5.0),
        ("training", "discount", 1.0),
        ("training", "batch_size", 0),
        ("training", "epsilon_decay", 0.0),
        ("training", "sumrate_mode", "median"),
        ("sharing", "attribution", "oracle"),
        ("oracle", "power_step_db", 0.0),
    ]
    for section, attr, value in bad:
        cfg = default_config()
        setattr(getattr(cfg, section), attr, value)
        with pytest.raises(ConfigError):
            validate_config(cfg)
    # buffer smaller than one minibatch is unusable
    cfg = default_config()
    cfg.training.buffer_capacity = cfg.training.batch_size - 1
    with pytest.raises(ConfigError):
        validate_config(cfg)
    # a full cell of floor-power users must fit the budget
    cfg = default_config()
    cfg.network.max_bs_power_dbm = 3.0
    cfg.network.min_ue_power_dbm = 0.0
    cfg.network.users_per_cell = 3
    with pytest.raises(ConfigError):
        validate_config(cfg)


def test_dump_parse_round_trip():
    cfg = default_config()
    cfg.network.cells = 4
    cfg.network.noise_dbm = -120.0
    cfg.training.sumrate_mode = "mean"
    again = parse_config(dump_config(cfg))
    assert resolved_dict(again) == resolved_dict(cfg)
