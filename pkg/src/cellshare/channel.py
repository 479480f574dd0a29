"""Beamforming codebook and the geometric multipath channel.

The codebook holds 2**r constant-modulus steering vectors whose
generator phases sweep [0, pi] in equal steps, ordered so that moving to
index +-1 moves to the adjacent beam. Channels follow a multipath ray
model with log-distance path loss and first-order autoregressive fading
whose correlation comes from the Jakes model at the configured speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.special import j0

from .config import NetworkConfig
from .errors import ContractViolation
from .geometry import CellLayout, UserSet

# close-in clamp before the path-loss law; matches the usual 10 m
# minimum BS-UE distance of street-canyon deployment models
MIN_PATHLOSS_DISTANCE = 10.0


@dataclass
class Codebook:
    vectors: np.ndarray  # (2**r, M) complex, rows are beams
    phases: np.ndarray   # (2**r,) generator phase of each beam

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    @property
    def antennas(self) -> int:
        return self.vectors.shape[1]


def _snap_modulus(x: float, y: float, target: float) -> complex:
    """Nearest representable complex with float modulus exactly target.

    cos/sin rounding leaves |t*exp(i*phi)| a few ulp off t; nudging the
    components by ulps lands back on it. Falls back to the best
    candidate if no exact neighbour exists (deep codebooks only).
    """
    if np.abs(np.complex128(complex(x, y))) == target:
        return complex(x, y)
    xs = [x]
    ys = [y]
    up, dn = x, x
    for _ in range(6):
        up = np.nextafter(up, np.inf)
        dn = np.nextafter(dn, -np.inf)
        xs.extend((up, dn))
    up, dn = y, y
    for _ in range(6):
        up = np.nextafter(up, np.inf)
        dn = np.nextafter(dn, -np.inf)
        ys.extend((up, dn))
    best = None
    fallback = None
    for xi in xs:
        for yi in ys:
            mod = np.abs(np.complex128(complex(xi, yi)))
            err = abs(mod - target)
            d = (xi - x) ** 2 + (yi - y) ** 2
            if mod == target and (best is None or d < best[0]):
                best = (d, xi, yi)
            if fallback is None or err < fallback[0] or \
                    (err == fallback[0] and d < fallback[1]):
                fallback = (err, d, xi, yi)
    if best is not None:
        return complex(best[1], best[2])
    return complex(fallback[2], fallback[3])


def beam_codebook(antennas: int, bits: int) -> Codebook:
    """Progressive phase-shift codebook over [0, pi].

    Beam n applies phase n*pi/(2**bits - 1) between neighbouring
    antennas; every entry has magnitude exactly 1/sqrt(antennas).
    """
    if antennas < 1:
        raise ContractViolation("antennas must be >= 1")
    if not 1 <= bits <= 8:
        raise ContractViolation("codebook bits must be in [1, 8]")
    n_beams = 2 ** bits
    q = n_beams - 1
    target = 1.0 / math.sqrt(antennas)
    vectors = np.empty((n_beams, antennas), dtype=np.complex128)
    phases = np.empty(n_beams, dtype=float)
    for n in range(n_beams):
        phases[n] = n * math.pi / q
        for m in range(antennas):
            # reduce the integer phase index first so large m*n keep
            # full precision: angle = pi * (m*n mod 2q) / q
            k = (m * n) % (2 * q)
            ang = math.pi * k / q
            vectors[n, m] = _snap_modulus(target * math.cos(ang),
                                          target * math.sin(ang), target)
    return Codebook(vectors=vectors, phases=phases)


def ula_response(antennas: int, angle: float) -> np.ndarray:
    """Half-wavelength ULA steering vector, unit norm."""
    m = np.arange(antennas)
    return np.exp(1j * np.pi * m * np.sin(angle)) / math.sqrt(antennas)


def matched_beams(channels: "ChannelSet", codebook: Codebook) -> np.ndarray:
    """Beam-training result: per user, the index maximizing |h^H w|.

    Uses only each BS's serving-cell CSI (the h[l, l, u] slice), the
    same information the SINR-report pipeline relies on. Ties resolve
    to the lowest index.
    """
    L, _, U, M = channels.vectors.shape
    if codebook.antennas != M:
        raise ContractViolation("codebook antenna count mismatch")
    serving = channels.vectors[np.arange(L), np.arange(L)]  # (L, U, M)
    scores = np.abs(np.einsum("lum,nm->lun", serving.conj(),
                              codebook.vectors)) ** 2
    return np.argmax(scores, axis=-1).astype(int)


def path_loss_gain(distance: float, config: NetworkConfig) -> float:
    """Linear power gain: free-space reference at 1 m, then d**-n."""
    d = max(float(distance), MIN_PATHLOSS_DISTANCE)
    lam_over_4pi = SPEED_OF_LIGHT / (4.0 * math.pi * config.carrier_freq)
    return (lam_over_4pi ** 2) * d ** (-config.pathloss_exponent)


def doppler_correlation(config: NetworkConfig) -> float:
    """Jakes AR(1) coefficient for one control interval."""
    doppler = config.ue_speed * config.carrier_freq / SPEED_OF_LIGHT
    return float(j0(2.0 * math.pi * doppler * config.step_duration))


@dataclass
class ChannelSet:
    """Downlink channels of every (serving-cell, source-cell, user) triple.

    vectors[l, j, u] is the channel from BS j to user u of cell l. Path
    gains and departure angles are kept so the next step can evolve the
    small-scale fading while geometry-driven quantities are recomputed.
    """

    vectors: np.ndarray  # (L, L, U, M) complex
    gains: np.ndarray    # (L, L, U, P) complex per-path gains, unit variance
    angles: np.ndarray   # (L, L, U, P) departure angles, fixed per episode

    @property
    def shape(self):
        return self.vectors.shape


def sample_channels(layout: CellLayout, users: UserSet,
                    config: NetworkConfig, rng: np.random.Generator,
                    prev: Optional[ChannelSet] = None) -> ChannelSet:
    """Draw or evolve all channels for the current user positions.

    Without prev, departure angles and path gains are drawn fresh. With
    prev, angles persist and gains follow g' = rho*g + sqrt(1-rho^2)*w
    with w standard circular Gaussian, preserving the marginal law.
    """
    L = layout.cells
    U = users.users_per_cell
    M = config.antennas
    P = config.paths

    if prev is None:
        # departure angles over the broadside half-plane: sin(angle) then
        # spans [0, 1], the steering range the phase codebook covers
        angles = rng.uniform(0.0, np.pi, size=(L, L, U, P))
        gains = (rng.standard_normal((L, L, U, P))
                 + 1j * rng.standard_normal((L, L, U, P))) / math.sqrt(2.0)
    else:
        if prev.vectors.shape != (L, L, U, M):
            raise ContractViolation(
                "previous ChannelSet shape %r does not match scenario %r"
                % (prev.vectors.shape, (L, L, U, M)))
        rho = doppler_correlation(config)
        angles = prev.angles
        if rho >= 1.0:
            gains = prev.gains
        else:
            noise = (rng.standard_normal((L, L, U, P))
                     + 1j * rng.standard_normal((L, L, U, P))) / math.sqrt(2.0)
            gains = rho * prev.gains + math.sqrt(1.0 - rho * rho) * noise

    # steering matrix per (l, j, u): (P, M)
    m_idx = np.arange(M)
    steer = np.exp(1j * np.pi * np.sin(angles)[..., None] * m_idx) \
        / math.sqrt(M)

    # distance from source BS j to user (l, u)
    diff = users.positions[:, None, :, :] - layout.positions[None, :, None, :]
    dist = np.linalg.norm(diff, axis=-1)
    lam_over_4pi = SPEED_OF_LIGHT / (4.0 * math.pi * config.carrier_freq)
    pl = (lam_over_4pi ** 2) * np.maximum(dist, MIN_PATHLOSS_DISTANCE) \
        ** (-config.pathloss_exponent)

    scale = np.sqrt(M * pl / P)
    vectors = scale[..., None] * np.einsum("ljup,ljupm->ljum", gains, steer)
    return ChannelSet(vectors=vectors, gains=gains, angles=angles)
