"""Exhaustive baselines: one-step joint-action search and a full
configuration search over a power/beam grid.

Both optimize the instantaneous network sum-rate on a frozen channel
snapshot (myopic; no lookahead) and break ties lexicographically, so
identical inputs always produce identical outputs.
"""

from __future__ import annotations

import itertools
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import control
from .channel import ChannelSet, Codebook
from .config import NetworkConfig
from .errors import ContractViolation, SearchSpaceError
from .metrics import network_sum_rate
from .physics import received_powers, sinr

BRUTE_FORCE_LIMIT = 2 ** 20
GLOBAL_SEARCH_LIMIT = 2 ** 22


def evaluate_configuration(channels: ChannelSet, powers_dbm: np.ndarray,
                           beams: np.ndarray, config: NetworkConfig,
                           codebook: Codebook) -> float:
    """Network sum-rate of one explicit power/beam configuration."""
    powers_mw = 10.0 ** (np.asarray(powers_dbm, dtype=float) / 10.0)
    table = received_powers(channels, powers_mw, np.asarray(beams), codebook)
    return network_sum_rate(sinr(table, config.noise_mw))


def brute_force_step(channels: ChannelSet, powers_dbm: np.ndarray,
                     beams: np.ndarray, config: NetworkConfig,
                     codebook: Codebook) -> Tuple[Tuple[int, ...], float]:
    """Best one-step joint action of every agent, exhaustively.

    Enumerates all (2^(2U))^L combinations in lexicographic order and
    keeps the first strict maximum of the resulting sum-rate.
    """
    L = config.cells
    n_actions = control.action_space_size(config.users_per_cell)
    total = n_actions ** L
    if total > BRUTE_FORCE_LIMIT:
        raise SearchSpaceError(
            "joint-action space %d exceeds limit %d"
            % (total, BRUTE_FORCE_LIMIT))
    powers_dbm = np.asarray(powers_dbm, dtype=float)
    beams = np.asarray(beams, dtype=int)
    if powers_dbm.shape != (L, config.users_per_cell):
        raise ContractViolation("powers must be (cells, users_per_cell)")

    best_combo: Optional[Tuple[int, ...]] = None
    best_rate = -np.inf
    for combo in itertools.product(range(n_actions), repeat=L):
        new_powers = powers_dbm.copy()
        new_beams = beams.copy()
        for ell, action in enumerate(combo):
            new_powers[ell], new_beams[ell] = control.apply_joint_action(
                action, powers_dbm[ell], beams[ell], config)
        rate = evaluate_configuration(channels, new_powers, new_beams,
                                      config, codebook)
        if rate > best_rate:
            best_rate = rate
            best_combo = combo
    assert best_combo is not None
    return best_combo, float(best_rate)


def default_power_grid(config: NetworkConfig,
                       step_db: float | None = None) -> np.ndarray:
    """dB levels from the per-user floor up to the full budget."""
    if step_db is None:
        step_db = 3.0
    if step_db <= 0:
        raise ContractViolation("power grid step must be positive")
    lo = config.min_ue_power_dbm
    hi = config.max_bs_power_dbm
    n = int(np.floor((hi - lo) / step_db + 1e-12)) + 1
    return lo + step_db * np.arange(n)


def global_csi_search(channels: ChannelSet, power_grid_dbm: Sequence[float],
                      codebook: Codebook, config: NetworkConfig
                      ) -> Tuple[np.ndarray, np.ndarray, float]:
    """Exhaustive power-level x beam search over every user of every BS.

    Candidate cell configurations whose linear power sum exceeds the
    budget are skipped. Returns (powers_dbm, beams, sum_rate).
    """
    L = config.cells
    U = config.users_per_cell
    grid = np.asarray(list(power_grid_dbm), dtype=float)
    if grid.size == 0:
        raise ContractViolation("power grid is empty")
    slots = L * U
    options = grid.size * codebook.size
    if options ** slots > GLOBAL_SEARCH_LIMIT:
        raise SearchSpaceError(
            "configuration space %d exceeds limit %d"
            % (options ** slots, GLOBAL_SEARCH_LIMIT))

    # per-cell candidate assignments that respect the budget
    grid_mw = 10.0 ** (grid / 10.0)
    per_cell: List[Tuple[Tuple[int, ...], Tuple[int, ...]]] = []
    for p_idx in itertools.product(range(grid.size), repeat=U):
        if grid_mw[list(p_idx)].sum() > config.max_bs_power_mw:
            continue
        for b_idx in itertools.product(range(codebook.size), repeat=U):
            per_cell.append((p_idx, b_idx))
    if not per_cell:
        raise ContractViolation("no feasible cell configuration on the grid")

    best: Optional[Tuple[np.ndarray, np.ndarray]] = None
    best_rate = -np.inf
    powers = np.empty((L, U), dtype=float)
    beams = np.empty((L, U), dtype=int)
    for assignment in itertools.product(per_cell, repeat=L):
        for ell, (p_idx, b_idx) in enumerate(assignment):
            powers[ell] = grid[list(p_idx)]
            beams[ell] = b_idx
        rate = evaluate_configuration(channels, powers, beams, config,
                                      codebook)
        if rate > best_rate:
            best_rate = rate
            best = (powers.copy(), beams.copy())
    assert best is not None
    return best[0], best[1], float(best_rate)
