"""Joint-action codec, command application, state encoding and reward.

Each agent controls one cell and picks one joint action per step: an
index below 2**(2U) whose bits hold, per user u, a power command (bit
2u: 0 -> -1 dB, 1 -> +1 dB) and a beam command (bit 2u+1: 0 -> step
down, 1 -> step up the codebook).
"""

from __future__ import annotations

from typing import List, Tuple

import numpy as np

from .config import NetworkConfig
from .errors import ContractViolation


def action_space_size(users_per_cell: int) -> int:
    return 2 ** (2 * users_per_cell)


def decode_action(index: int, users_per_cell: int) -> List[Tuple[int, int]]:
    """Unpack a joint-action index into per-user (power_bit, beam_bit)."""
    n = action_space_size(users_per_cell)
    if not 0 <= index < n:
        raise ContractViolation(
            "action index %d outside [0, %d)" % (index, n))
    out = []
    for u in range(users_per_cell):
        power_bit = (index >> (2 * u)) & 1
        beam_bit = (index >> (2 * u + 1)) & 1
        out.append((power_bit, beam_bit))
    return out


def encode_action(commands: List[Tuple[int, int]]) -> int:
    """Inverse of decode_action."""
    index = 0
    for u, (power_bit, beam_bit) in enumerate(commands):
        if power_bit not in (0, 1) or beam_bit not in (0, 1):
            raise ContractViolation("command bits must be 0 or 1")
        index |= power_bit << (2 * u)
        index |= beam_bit << (2 * u + 1)
    return index


def apply_power_command(prev_dbm: np.ndarray, power_bits: np.ndarray,
                        config: NetworkConfig) -> np.ndarray:
    """One cell's +-1 dB power update under the budget constraint.

    Tentatively applies every command; if the cell's linear sum would
    exceed the budget, every user steps -1 dB instead. Results are
    floored at the per-user minimum. The returned linear sum can never
    exceed the budget provided the previous powers respected it.
    """
    prev_dbm = np.asarray(prev_dbm, dtype=float)
    power_bits = np.asarray(power_bits)
    delta = np.where(power_bits == 1, 1.0, -1.0)
    tentative = np.maximum(prev_dbm + delta, config.min_ue_power_dbm)
    if np.sum(10.0 ** (tentative / 10.0)) > config.max_bs_power_mw:
        tentative = np.maximum(prev_dbm - 1.0, config.min_ue_power_dbm)
    return tentative


def apply_beam_command(prev_index: int, beam_bit: int,
                       codebook_size: int) -> int:
    """Saturating +-1 move along the codebook."""
    if not 0 <= prev_index < codebook_size:
        raise ContractViolation("beam index %d outside codebook" % prev_index)
    step = 1 if beam_bit == 1 else -1
    return min(max(prev_index + step, 0), codebook_size - 1)


def apply_joint_action(index: int, prev_powers_dbm: np.ndarray,
                       prev_beams: np.ndarray,
                       config: NetworkConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Decode and apply one agent's joint action to its cell."""
    commands = decode_action(index, config.users_per_cell)
    power_bits = np.array([c[0] for c in commands])
    new_powers = apply_power_command(prev_powers_dbm, power_bits, config)
    new_beams = np.array([
        apply_beam_command(int(b), c[1], config.codebook_size)
        for b, c in zip(prev_beams, commands)], dtype=int)
    return new_powers, new_beams


def encode_state(prev_powers_dbm: np.ndarray, prev_beams: np.ndarray,
                 offsets: np.ndarray, config: NetworkConfig) -> np.ndarray:
    """Flatten one agent's observation into the network input vector.

    Per user: [normalized power, normalized beam index, x/R, y/R] where
    the power scale runs from the per-user floor to the full budget and
    offsets are user positions relative to the serving BS.
    """
    U = config.users_per_cell
    prev_powers_dbm = np.asarray(prev_powers_dbm, dtype=float)
    prev_beams = np.asarray(prev_beams, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    if prev_powers_dbm.shape != (U,) or prev_beams.shape != (U,) \
            or offsets.shape != (U, 2):
        raise ContractViolation("encode_state arguments must cover U users")
    span = config.max_bs_power_dbm - config.min_ue_power_dbm
    power_norm = (prev_powers_dbm - config.min_ue_power_dbm) / span
    beam_norm = prev_beams / max(config.codebook_size - 1, 1)
    state = np.empty(4 * U, dtype=float)
    state[0::4] = power_norm
    state[1::4] = beam_norm
    state[2::4] = offsets[:, 0] / config.cell_radius
    state[3::4] = offsets[:, 1] / config.cell_radius
    return state


def state_size(users_per_cell: int) -> int:
    return 4 * users_per_cell


def reward(sinrs: np.ndarray, inter_mw: np.ndarray, min_sinr: float,
           interference_threshold_mw: float, punishment: float) -> float:
    """Product of (1 + SINR) over users, or -punishment.

    The positive branch requires every user to clear the SINR floor and
    every user's inter-cell interference to stay strictly below the
    threshold; any violation collapses the whole cell to -punishment.
    """
    sinrs = np.asarray(sinrs, dtype=float)
    inter_mw = np.asarray(inter_mw, dtype=float)
    ok = np.all(sinrs > min_sinr) and np.all(
        inter_mw < interference_threshold_mw)
    if not ok:
        return -float(punishment)
    return float(np.prod(1.0 + sinrs))


def initial_powers_dbm(config: NetworkConfig) -> np.ndarray:
    """Per-user starting powers: equal split with 3 dB headroom."""
    value = config.initial_ue_power_dbm()
    if value < config.min_ue_power_dbm:
        value = config.min_ue_power_dbm
    return np.full(config.users_per_cell, value, dtype=float)


def initial_beams(config: NetworkConfig) -> np.ndarray:
    """Start every user in the middle of the codebook."""
    return np.full(config.users_per_cell, config.codebook_size // 2, dtype=int)
