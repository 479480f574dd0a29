"""Signal, interference and SINR arithmetic, all in linear mW.

Also implements the measurement trick each BS uses to estimate the
inter-cell interference hitting its own users: reconstruct the serving
power and intra-cell interference from local knowledge, divide the
user-reported SINR out of the serving power to get total received
power-plus-noise, and subtract the known parts. When the report comes
from the same power/beam/channel snapshot the estimate matches the true
aggregate to float precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, Codebook
from .errors import ContractViolation, MeasurementError


@dataclass
class PowerTable:
    """Per-user received power decomposition, linear mW.

    inter_by_source[l, u, j] is the interference user (l, u) receives
    from BS j; the diagonal j == l is zero by definition.
    """

    serving: np.ndarray          # (L, U)
    intra: np.ndarray            # (L, U)
    inter_by_source: np.ndarray  # (L, U, L)
    inter_total: np.ndarray      # (L, U), sum over sources

    @property
    def cells(self) -> int:
        return self.serving.shape[0]


def _beam_gain(channels: np.ndarray, beams: np.ndarray,
               codebook: Codebook) -> np.ndarray:
    """|h^H w|^2 for every (serving l, source j, victim u, tx user k).

    channels: (L, L, U, M); beams: (L, U) codebook indices of every
    transmit user. Returns (L, L, U, U) where the last axis is the
    transmitting user k of source cell j.
    """
    w = codebook.vectors[beams]          # (L, U, M)
    # inner product between victim channel (l, j, u, :) and beam (j, k, :)
    inner = np.einsum("ljum,jkm->ljuk", np.conj(channels), w)
    return np.abs(inner) ** 2


def received_powers(channels: ChannelSet, powers_mw: np.ndarray,
                    beam_indices: np.ndarray, codebook: Codebook) -> PowerTable:
    """Decompose every user's received power into serving/intra/inter."""
    L, Lj, U, M = channels.vectors.shape
    powers_mw = np.asarray(powers_mw, dtype=float)
    beam_indices = np.asarray(beam_indices)
    if powers_mw.shape != (L, U) or beam_indices.shape != (L, U):
        raise ContractViolation("powers and beam indices must be (L, U)")
    if np.any(powers_mw < 0):
        raise ContractViolation("transmit powers must be non-negative")
    if np.any(beam_indices < 0) or np.any(beam_indices >= codebook.size):
        raise ContractViolation("beam index outside codebook")
    if codebook.antennas != M:
        raise ContractViolation("codebook antenna count does not match channels")

    gains = _beam_gain(channels.vectors, beam_indices, codebook)  # (L,L,U,U)
    weighted = powers_mw[None, :, None, :] * gains                # P_{j,k} |.|^2

    ell = np.arange(L)
    u = np.arange(U)
    own = weighted[ell, ell]        # (L, U, U) same-cell contributions
    serving = own[:, u, u].copy()   # (L, U)
    off_diag = own.copy()
    off_diag[:, u, u] = 0.0
    intra = off_diag.sum(axis=2)

    # (L, U, L): interference on victim (l, u) from each source cell j
    inter_by_source = np.transpose(weighted.sum(axis=3), (0, 2, 1)).copy()
    inter_by_source[ell, :, ell] = 0.0
    inter_total = inter_by_source.sum(axis=2)

    return PowerTable(serving=serving, intra=intra,
                      inter_by_source=inter_by_source,
                      inter_total=inter_total)


def sinr(table: PowerTable, noise_mw: float) -> np.ndarray:
    """Per-user SINR, linear: serving / (noise + intra + inter)."""
    if noise_mw <= 0:
        raise ContractViolation("noise power must be positive")
    return table.serving / (noise_mw + table.intra + table.inter_total)


def measure_inter_cell(reported_sinr: np.ndarray, prev_powers_mw: np.ndarray,
                       prev_beams: np.ndarray, prev_channels: ChannelSet,
                       noise_mw: float, codebook: Codebook) -> np.ndarray:
    """Estimate aggregate inter-cell interference from SINR reports.

    Each BS uses only its own cell's channels, powers and beams: the
    slice [l, l, u] of the channel tensor. Raises MeasurementError for
    non-positive reports (a real report of a received signal is > 0).
    """
    L, _, U, _ = prev_channels.vectors.shape
    reported_sinr = np.asarray(reported_sinr, dtype=float)
    if reported_sinr.shape != (L, U):
        raise ContractViolation("reported SINR must be (L, U)")
    if np.any(~np.isfinite(reported_sinr)) or np.any(reported_sinr <= 0.0):
        raise MeasurementError("SINR reports must be positive and finite")

    prev_powers_mw = np.asarray(prev_powers_mw, dtype=float)
    prev_beams = np.asarray(prev_beams)
    w = codebook.vectors[prev_beams]  # (L, U, M)

    estimates = np.empty((L, U), dtype=float)
    u = np.arange(U)
    for ell in range(L):
        h = prev_channels.vectors[ell, ell]            # (U, M) local CSI only
        inner = np.abs(np.conj(h) @ w[ell].T) ** 2     # (U victim, U beam)
        per_user = prev_powers_mw[ell][None, :] * inner
        serving = per_user[u, u].copy()
        off_diag = per_user.copy()
        off_diag[u, u] = 0.0
        intra = off_diag.sum(axis=1)
        total_received = serving / reported_sinr[ell]  # noise + intra + inter
        estimates[ell] = total_received - noise_mw - intra
    return estimates
