"""Command line entry point.

Subcommands: train, compare, ccdf, oracle, print-config. Exit codes:
0 success, 1 config error, 2 runtime abort, 3 I/O error. The CELLSHARE_SEED
environment variable overrides --seed; the effective seed and the fact
that it was overridden are echoed into run.json.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__, metrics, oracle, sharing
from .channel import beam_codebook, sample_channels
from .config import (RunConfig, default_config, dump_config, load_config,
                     resolved_dict, validate_config)
from .errors import (CellshareError, ConfigError, ContractViolation,
                     MeasurementError, SearchSpaceError, TrainingFault)
from .geometry import build_layout, spawn_users
from .training import RunArtifacts, evaluate, run_training

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_IO = 3

SEED_ENV_VAR = "CELLSHARE_SEED"
EVAL_SEED_OFFSET = 9973

SUMMARY_HEADER = ("framework", "seed", "final_sum_rate", "mean_eval_sinr_db",
                  "overhead_scalars", "zero_share_fraction", "status")
ORACLE_FIXED_COLUMNS = ("sum_rate",)


def _resolve_seed(cli_seed: int) -> Tuple[int, bool]:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return cli_seed, False
    try:
        return int(raw), True
    except ValueError:
        raise ConfigError("%s=%r is not an integer" % (SEED_ENV_VAR, raw))


def _load(config_path: Optional[str]) -> RunConfig:
    if config_path is None:
        cfg = default_config()
        validate_config(cfg)
        return cfg
    if not os.path.isfile(config_path):
        raise IOError("config file not found: %s" % config_path)
    return load_config(config_path)


def _final_quarter_mean(sumrate_rows: Sequence[Tuple[int, float]]) -> float:
    """Mean sum-rate over the last quarter of training episodes."""
    values = [row[1] for row in sumrate_rows]
    if not values:
        return math.nan
    window = max(1, len(values) // 4)
    return float(np.mean(values[-window:]))


def _run_info(artifacts: RunArtifacts, seed: int, overridden: bool,
              status: str, single_thread: bool) -> Dict:
    ledger = artifacts.ledger
    zero_frac = ledger.zero_share_fraction() if ledger.rows else math.nan
    return {
        "version": __version__,
        "framework": artifacts.framework,
        "seed": seed,
        "seed_env_override": overridden,
        "single_thread": single_thread,
        "status": status,
        "config": resolved_dict(artifacts.config),
        "train_step_count": artifacts.train_step_count,
        "final_epsilon": artifacts.final_epsilon,
        "experiences_shared_total": ledger.experiences_total,
        "scalars_shared_total": ledger.scalars_total,
        "zero_share_fraction": zero_frac,
        "final_quarter_sum_rate": _final_quarter_mean(
            artifacts.log.sumrate_rows),
    }


def _write_artifacts(out_dir: str, artifacts: RunArtifacts, seed: int,
                     overridden: bool, status: str,
                     single_thread: bool) -> None:
    info = _run_info(artifacts, seed, overridden, status, single_thread)
    metrics.write_run_outputs(out_dir, artifacts.log, artifacts.ledger.rows,
                              info)


def cmd_train(args) -> int:
    cfg = _load(args.config)
    seed, overridden = _resolve_seed(args.seed)
    try:
        artifacts = run_training(cfg, args.framework, seed)
    except TrainingFault as fault:
        # keep whatever the run produced before it died
        if fault.artifacts is not None:
            _write_artifacts(args.out, fault.artifacts, seed, overridden,
                             "aborted: %s" % fault, args.single_thread)
        print("training aborted: %s" % fault, file=sys.stderr)
        return EXIT_RUNTIME
    _write_artifacts(args.out, artifacts, seed, overridden, "ok",
                     args.single_thread)
    return EXIT_OK


def _summary_row(framework: str, seed: int,
                 artifacts: RunArtifacts) -> Tuple:
    eval_log = evaluate(artifacts.agent_nets, artifacts.config,
                        artifacts.config.training.eval_episodes,
                        seed + EVAL_SEED_OFFSET)
    sinr_values = [row[3] for row in eval_log.sinr_rows]
    ledger = artifacts.ledger
    zero_frac = ledger.zero_share_fraction() if ledger.rows else math.nan
    return (framework, seed,
            _final_quarter_mean(artifacts.log.sumrate_rows),
            float(np.mean(sinr_values)) if sinr_values else math.nan,
            ledger.scalars_total, zero_frac, "ok")


def cmd_compare(args) -> int:
    cfg = _load(args.config)
    base_seed, overridden = _resolve_seed(args.seed)
    frameworks = [name.strip() for name in args.frameworks.split(",")
                  if name.strip()]
    for name in frameworks:
        if name not in sharing.FRAMEWORKS:
            raise ConfigError("unknown framework %r (expected one of %s)"
                              % (name, ", ".join(sharing.FRAMEWORKS)))
    if args.seeds < 1:
        raise ConfigError("--seeds must be >= 1")

    os.makedirs(args.out, exist_ok=True)
    rows: List[Tuple] = []
    per_framework: Dict[str, List[Tuple]] = {name: [] for name in frameworks}
    failures = 0
    for name in frameworks:
        for k in range(args.seeds):
            seed = base_seed + k
            run_dir = os.path.join(args.out, name, "seed%d" % seed)
            try:
                artifacts = run_training(cfg, name, seed)
                _write_artifacts(run_dir, artifacts, seed, overridden, "ok",
                                 True)
                row = _summary_row(name, seed, artifacts)
            except CellshareError as err:
                failures += 1
                fault_art = getattr(err, "artifacts", None)
                if fault_art is not None:
                    _write_artifacts(run_dir, fault_art, seed, overridden,
                                     "aborted: %s" % err, True)
                print("%s seed %d failed: %s" % (name, seed, err),
                      file=sys.stderr)
                row = (name, seed, math.nan, math.nan, 0, math.nan, "failed")
            rows.append(row)
            if row[-1] == "ok":
                per_framework[name].append(row)

    # aggregate rows over the successful seeds (population std)
    for name in frameworks:
        good = per_framework[name]
        for label, reducer in (("mean", np.mean), ("std", np.std)):
            if good:
                agg = tuple(float(reducer([r[col] for r in good]))
                            for col in (2, 3, 4, 5))
            else:
                agg = (math.nan,) * 4
            rows.append((name, label) + agg + ("aggregate",))

    metrics.write_csv(os.path.join(args.out, "summary.csv"), SUMMARY_HEADER,
                      rows)
    return EXIT_RUNTIME if failures else EXIT_OK


def _parse_sinr_column(path: str) -> List[float]:
    header, rows = metrics.read_csv(path)
    if "sinr_db" not in header:
        raise IOError("%s: no sinr_db column in header %r" % (path, header))
    col = header.index("sinr_db")
    samples = []
    for i, row in enumerate(rows):
        line_no = i + 2  # header is line 1
        if len(row) != len(header):
            raise IOError("%s: row %d has %d cells, expected %d"
                          % (path, line_no, len(row), len(header)))
        try:
            samples.append(float(row[col]))
        except ValueError:
            raise IOError("%s: row %d: unparsable sinr_db %r"
                          % (path, line_no, row[col]))
    if not samples:
        raise IOError("%s: no sample rows" % path)
    return samples


def cmd_ccdf(args) -> int:
    if not os.path.isfile(args.input):
        raise IOError("input file not found: %s" % args.input)
    samples = _parse_sinr_column(args.input)
    grid = metrics.ccdf_grid(samples)
    rows = metrics.ccdf(samples, grid)
    metrics.write_csv(args.out, ("threshold_db", "fraction"), rows)
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = _load(args.config)
    seed, overridden = _resolve_seed(args.seed)
    del overridden  # the snapshot seed is recorded in the CSV itself
    net_cfg = cfg.network
    root = np.random.SeedSequence(seed)
    users_rng, channel_rng = map(np.random.default_rng, root.spawn(2))
    layout = build_layout(net_cfg.cells, net_cfg.inter_site_distance)
    users = spawn_users(layout, net_cfg.users_per_cell, net_cfg.cell_radius,
                        users_rng)
    channels = sample_channels(layout, users, net_cfg, channel_rng)
    codebook = beam_codebook(net_cfg.antennas, net_cfg.codebook_bits)
    grid = oracle.default_power_grid(net_cfg, cfg.oracle.power_step_db)
    powers, beams, rate = oracle.global_csi_search(channels, grid, codebook,
                                                   net_cfg)
    header: List[str] = ["seed"] + list(ORACLE_FIXED_COLUMNS)
    row: List = [seed, rate]
    for ell in range(net_cfg.cells):
        for u in range(net_cfg.users_per_cell):
            header.append("power_dbm_c%du%d" % (ell, u))
            header.append("beam_c%du%d" % (ell, u))
            row.append(float(powers[ell, u]))
            row.append(int(beams[ell, u]))
    metrics.write_csv(args.out, header, [row])
    return EXIT_OK


def cmd_print_config(args) -> int:
    cfg = _load(args.config)
    sys.stdout.write(dump_config(cfg))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cellshare",
        description="Multi-cell downlink simulator with selective "
                    "experience-sharing DQN agents.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run one framework on one seed")
    p.add_argument("--config", default=None, help="config file (key=value)")
    p.add_argument("--framework", default="smart",
                   choices=sharing.FRAMEWORKS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--single-thread", action="store_true",
                   help="pin the run to one thread (runs are "
                        "single-threaded either way; recorded in run.json)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("compare", help="frameworks x seeds sweep")
    p.add_argument("--config", default=None)
    p.add_argument("--frameworks", default=",".join(sharing.FRAMEWORKS),
                   help="comma-separated subset of: %s"
                        % ", ".join(sharing.FRAMEWORKS))
    p.add_argument("--seeds", type=int, default=3,
                   help="number of consecutive seeds per framework")
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("ccdf", help="SINR CCDF on a 1 dB grid")
    p.add_argument("--in", dest="input", required=True,
                   help="sinr_samples.csv from a training run")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ccdf)

    p = sub.add_parser("oracle",
                       help="exhaustive full-CSI search on one snapshot")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("print-config",
                       help="dump every resolved config value")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_print_config)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print("config error: %s" % err, file=sys.stderr)
        return EXIT_CONFIG
    except (TrainingFault, ContractViolation, MeasurementError,
            SearchSpaceError) as err:
        print("runtime error: %s" % err, file=sys.stderr)
        return EXIT_RUNTIME
    except (IOError, OSError) as err:
        print("i/o error: %s" % err, file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
