"""Run configuration: dataclasses, file parsing and unit conversion.

Config files are flat ``key = value`` text grouped into ``[section]``
headers. Physical quantities are written in engineering units (dB, dBm,
meters, Hz, seconds) and converted to linear mW / SI on load; everything
internal to the simulator works in linear units and dB only reappears at
reporting boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Tuple

from .errors import ConfigError


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    if mw <= 0.0:
        raise ValueError("mw_to_dbm needs a positive power, got %r" % (mw,))
    return 10.0 * math.log10(mw)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    if x <= 0.0:
        raise ValueError("linear_to_db needs a positive ratio, got %r" % (x,))
    return 10.0 * math.log10(x)


@dataclass
class NetworkConfig:
    """Physical-layer and scenario parameters.

    Power-like fields keep both the configured dBm value (used by the
    +-1 dB command arithmetic and state normalization) and the linear mW
    value (used by all signal math) so neither direction accumulates
    round-trip error.
    """

    cells: int = 2                      # number of base stations (one agent each)
    users_per_cell: int = 3
    antennas: int = 8                   # ULA size at each BS
    codebook_bits: int = 3              # 2**bits beamforming vectors
    cell_radius: float = 112.0          # m, user drop radius around the BS
    inter_site_distance: float = 225.0  # m, spacing of the hex BS grid
    carrier_freq: float = 28e9          # Hz
    ue_speed: float = 0.556             # m/s (walking pace)
    step_duration: float = 1e-3         # s, one control interval
    pathloss_exponent: float = 3.0
    paths: int = 3                      # multipath components per link
    noise_dbm: float = -110.0
    max_bs_power_dbm: float = 40.0      # per-BS downlink budget (sum over users)
    min_ue_power_dbm: float = 0.0       # per-user transmit floor
    min_sinr_db: float = -3.0           # reward threshold on each user's SINR
    interference_threshold_dbm: float = -110.0  # inter-cell power that triggers sharing
    punishment: float = 100.0           # magnitude of the negative reward

    @property
    def noise_mw(self) -> float:
        return dbm_to_mw(self.noise_dbm)

    @property
    def max_bs_power_mw(self) -> float:
        return dbm_to_mw(self.max_bs_power_dbm)

    @property
    def min_ue_power_mw(self) -> float:
        return dbm_to_mw(self.min_ue_power_dbm)

    @property
    def min_sinr(self) -> float:
        return db_to_linear(self.min_sinr_db)

    @property
    def interference_threshold_mw(self) -> float:
        return dbm_to_mw(self.interference_threshold_dbm)

    @property
    def codebook_size(self) -> int:
        return 2 ** self.codebook_bits

    def initial_ue_power_dbm(self) -> float:
        """Even split of the budget minus 3 dB of headroom."""
        return (self.max_bs_power_dbm
                - 10.0 * math.log10(self.users_per_cell) - 3.0)


@dataclass
class TrainingConfig:
    episodes: int = 200
    steps_per_episode: int = 50
    learning_rate: float = 0.01
    discount: float = 0.995
    batch_size: int = 32
    buffer_capacity: int = 10000
    epsilon_start: float = 1.0
    epsilon_decay: float = 0.99         # multiplicative, applied per episode
    epsilon_min: float = 0.05
    target_refresh_steps: int = 1       # gradient steps between target-net copies
    eval_episodes: int = 20
    sumrate_mode: str = "final"         # final | mean: which step SINRs define an episode's sum-rate


@dataclass
class SharingConfig:
    attribution: str = "measured"       # measured | genie
    ctde_sync_period: int = 1           # env steps between central weight broadcasts


@dataclass
class OracleConfig:
    power_step_db: float = 3.0          # grid spacing for the exhaustive search


@dataclass
class RunConfig:
    network: NetworkConfig = field(default_factory=NetworkConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    sharing: SharingConfig = field(default_factory=SharingConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)


# section -> key -> (attribute, converter). Converters run before validation.
_INT = int
_FLOAT = float
_STR = str

_SCHEMA: Dict[str, Dict[str, Tuple[str, type]]] = {
    "network": {
        "cells": ("cells", _INT),
        "users_per_cell": ("users_per_cell", _INT),
        "antennas": ("antennas", _INT),
        "codebook_bits": ("codebook_bits", _INT),
        "cell_radius_m": ("cell_radius", _FLOAT),
        "inter_site_distance_m": ("inter_site_distance", _FLOAT),
        "carrier_freq_hz": ("carrier_freq", _FLOAT),
        "ue_speed_mps": ("ue_speed", _FLOAT),
        "step_duration_s": ("step_duration", _FLOAT),
        "pathloss_exponent": ("pathloss_exponent", _FLOAT),
        "paths": ("paths", _INT),
        "noise_power_dbm": ("noise_dbm", _FLOAT),
        "max_bs_power_dbm": ("max_bs_power_dbm", _FLOAT),
        "min_ue_power_dbm": ("min_ue_power_dbm", _FLOAT),
        "min_sinr_db": ("min_sinr_db", _FLOAT),
        "interference_threshold_dbm": ("interference_threshold_dbm", _FLOAT),
        "punishment": ("punishment", _FLOAT),
    },
    "training": {
        "episodes": ("episodes", _INT),
        "steps_per_episode": ("steps_per_episode", _INT),
        "learning_rate": ("learning_rate", _FLOAT),
        "discount": ("discount", _FLOAT),
        "batch_size": ("batch_size", _INT),
        "buffer_capacity": ("buffer_capacity", _INT),
        "epsilon_start": ("epsilon_start", _FLOAT),
        "epsilon_decay": ("epsilon_decay", _FLOAT),
        "epsilon_min": ("epsilon_min", _FLOAT),
        "target_refresh_steps": ("target_refresh_steps", _INT),
        "eval_episodes": ("eval_episodes", _INT),
        "sumrate_mode": ("sumrate_mode", _STR),
    },
    "sharing": {
        "attribution": ("attribution", _STR),
        "ctde_sync_period": ("ctde_sync_period", _INT),
    },
    "oracle": {
        "power_step_db": ("power_step_db", _FLOAT),
    },
}

_SECTION_ATTR = {"network": "network", "training": "training",
                 "sharing": "sharing", "oracle": "oracle"}


def default_config() -> RunConfig:
    return RunConfig()


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    """Parse config text over the defaults.

    Unknown sections/keys and malformed lines raise ConfigError with the
    offending line number so CLI users get an actionable message.
    """
    cfg = default_config()
    section = None
    lines_seen: Dict[Tuple[str, str], int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError("%s line %d: unterminated section header %r"
                                  % (source, lineno, raw))
            name = line[1:-1].strip().lower()
            if name not in _SCHEMA:
                raise ConfigError("%s line %d: unknown section [%s]"
                                  % (source, lineno, name))
            section = name
            continue
        if "=" not in line:
            raise ConfigError("%s line %d: expected 'key = value', got %r"
                              % (source, lineno, raw))
        if section is None:
            raise ConfigError("%s line %d: key before any [section] header"
                              % (source, lineno))
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.split("#", 1)[0].strip()
        if key not in _SCHEMA[section]:
            raise ConfigError("%s line %d: unknown key %r in [%s]"
                              % (source, lineno, key, section))
        attr, conv = _SCHEMA[section][key]
        try:
            if conv is _INT:
                parsed = int(value)
            elif conv is _FLOAT:
                parsed = float(value)
            else:
                parsed = value
        except ValueError:
            raise ConfigError("%s line %d: cannot parse %r as %s for key %r"
                              % (source, lineno, value, conv.__name__, key))
        setattr(getattr(cfg, _SECTION_ATTR[section]), attr, parsed)
        lines_seen[(section, key)] = lineno
    validate_config(cfg, source=source, lines=lines_seen)
    return cfg


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, source=path)


def _fail(source, lines, section, key, message):
    lineno = lines.get((section, key)) if lines else None
    where = "%s line %d: " % (source, lineno) if lineno else ""
    raise ConfigError(where + message)


def validate_config(cfg: RunConfig, source: str = "<config>",
                    lines: Dict[Tuple[str, str], int] | None = None) -> None:
    net, tr, sh, orc = cfg.network, cfg.training, cfg.sharing, cfg.oracle

    def check(section, key, ok, message):
        if not ok:
            _fail(source, lines, section, key, message)

    check("network", "cells", net.cells >= 1, "cells must be >= 1")
    check("network", "users_per_cell", net.users_per_cell >= 1,
          "users_per_cell must be >= 1")
    check("network", "antennas", net.antennas >= 1, "antennas must be >= 1")
    check("network", "codebook_bits", 1 <= net.codebook_bits <= 8,
          "codebook_bits must be in [1, 8]")
    check("network", "cell_radius_m", net.cell_radius > 0,
          "cell_radius_m must be positive")
    check("network", "inter_site_distance_m", net.inter_site_distance > 0,
          "inter_site_distance_m must be positive")
    check("network", "carrier_freq_hz", net.carrier_freq > 0,
          "carrier_freq_hz must be positive")
    check("network", "ue_speed_mps", net.ue_speed >= 0,
          "ue_speed_mps must be non-negative")
    check("network", "step_duration_s", net.step_duration > 0,
          "step_duration_s must be positive")
    check("network", "pathloss_exponent", net.pathloss_exponent > 0,
          "pathloss_exponent must be positive")
    check("network", "paths", net.paths >= 1, "paths must be >= 1")
    check("network", "punishment", net.punishment > 0,
          "punishment must be positive")
    check("network", "max_bs_power_dbm",
          net.max_bs_power_dbm > net.min_ue_power_dbm,
          "max_bs_power_dbm must exceed min_ue_power_dbm")
    check("network", "min_ue_power_dbm",
          net.users_per_cell * net.min_ue_power_mw <= net.max_bs_power_mw,
          "users_per_cell users at min_ue_power_dbm would exceed the "
          "per-BS budget max_bs_power_dbm")

    check("training", "episodes", tr.episodes >= 1, "episodes must be >= 1")
    check("training", "steps_per_episode", tr.steps_per_episode >= 1,
          "steps_per_episode must be >= 1")
    check("training", "learning_rate", tr.learning_rate >= 0,
          "learning_rate must be non-negative")
    check("training", "discount", 0.0 <= tr.discount < 1.0,
          "discount must be in [0, 1)")
    check("training", "batch_size", tr.batch_size >= 1,
          "batch_size must be >= 1")
    check("training", "buffer_capacity", tr.buffer_capacity >= tr.batch_size,
          "buffer_capacity must be >= batch_size")
    check("training", "epsilon_start", 0.0 <= tr.epsilon_start <= 1.0,
          "epsilon_start must be in [0, 1]")
    check("training", "epsilon_decay", 0.0 < tr.epsilon_decay <= 1.0,
          "epsilon_decay must be in (0, 1]")
    check("training", "epsilon_min", 0.0 <= tr.epsilon_min <= 1.0,
          "epsilon_min must be in [0, 1]")
    check("training", "target_refresh_steps", tr.target_refresh_steps >= 1,
          "target_refresh_steps must be >= 1")
    check("training", "eval_episodes", tr.eval_episodes >= 1,
          "eval_episodes must be >= 1")
    check("training", "sumrate_mode", tr.sumrate_mode in ("final", "mean"),
          "sumrate_mode must be 'final' or 'mean'")

    check("sharing", "attribution", sh.attribution in ("measured", "genie"),
          "attribution must be 'measured' or 'genie'")
    check("sharing", "ctde_sync_period", sh.ctde_sync_period >= 1,
          "ctde_sync_period must be >= 1")

    check("oracle", "power_step_db", orc.power_step_db > 0,
          "power_step_db must be positive")


def resolved_dict(cfg: RunConfig) -> Dict[str, Dict[str, object]]:
    """Every resolved value, in file units, for run.json and print-config."""
    out: Dict[str, Dict[str, object]] = {}
    for section, keys in _SCHEMA.items():
        holder = getattr(cfg, _SECTION_ATTR[section])
        out[section] = {key: getattr(holder, attr)
                        for key, (attr, _conv) in keys.items()}
    return out


def dump_config(cfg: RunConfig) -> str:
    """Render a RunConfig back to parseable file text."""
    parts = []
    for section, values in resolved_dict(cfg).items():
        parts.append("[%s]" % section)
        for key, value in values.items():
            parts.append("%s = %s" % (key, value))
        parts.append("")
    return "\n".join(parts)
