"""Base-station layout, user placement and mobility.

Base stations sit on a hexagonal lattice: the first site is at the
origin and further sites are taken ring by ring outwards, each ring
walked counter-clockwise starting from the +x axis, so any two adjacent
sites are exactly one inter-site distance apart. Users are dropped
uniformly on a disk around their serving BS and do a correlated random
walk inside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import NetworkConfig
from .errors import ContractViolation

# per-step heading diffusion of the user random walk (radians, 1-sigma)
HEADING_SIGMA = 0.1


@dataclass
class CellLayout:
    positions: np.ndarray  # (L, 2) BS coordinates in meters
    inter_site_distance: float

    @property
    def cells(self) -> int:
        return self.positions.shape[0]

    def cell_of(self, point: np.ndarray) -> int:
        """Nearest-BS assignment; ties go to the lowest index."""
        d = np.linalg.norm(self.positions - np.asarray(point, dtype=float),
                           axis=1)
        return int(np.argmin(d))


def build_layout(cells: int, inter_site_distance: float) -> CellLayout:
    if cells < 1:
        raise ContractViolation("need at least one cell, got %d" % cells)
    if inter_site_distance <= 0:
        raise ContractViolation("inter_site_distance must be positive")

    # enumerate axial hex coordinates by (ring, angle); ring 0 is the origin
    coords = [(0, 0)]
    ring = 1
    while len(coords) < cells:
        ring_coords = []
        for q in range(-ring, ring + 1):
            for r in range(-ring, ring + 1):
                if max(abs(q), abs(r), abs(q + r)) == ring:
                    ring_coords.append((q, r))
        ring_coords.sort(key=lambda qr: _axial_angle(qr[0], qr[1]))
        coords.extend(ring_coords)
        ring += 1

    pts = np.empty((cells, 2), dtype=float)
    for i, (q, r) in enumerate(coords[:cells]):
        pts[i, 0] = inter_site_distance * (q + 0.5 * r)
        pts[i, 1] = inter_site_distance * (math.sqrt(3.0) / 2.0) * r
    return CellLayout(positions=pts, inter_site_distance=inter_site_distance)


def _axial_angle(q: int, r: int) -> float:
    x = q + 0.5 * r
    y = (math.sqrt(3.0) / 2.0) * r
    ang = math.atan2(y, x)
    return ang if ang >= 0.0 else ang + 2.0 * math.pi


@dataclass
class UserSet:
    """Positions and walk headings of every user, indexed (cell, user)."""

    positions: np.ndarray  # (L, U, 2) meters
    headings: np.ndarray   # (L, U) radians

    @property
    def users_per_cell(self) -> int:
        return self.positions.shape[1]

    def offsets(self, layout: CellLayout) -> np.ndarray:
        """Positions relative to each user's serving BS, shape (L, U, 2)."""
        return self.positions - layout.positions[:, None, :]


def spawn_users(layout: CellLayout, users_per_cell: int,
                cell_radius: float, rng: np.random.Generator) -> UserSet:
    """Drop users uniformly on a disk of cell_radius around each BS."""
    if users_per_cell < 0:
        raise ContractViolation("users_per_cell must be non-negative")
    L = layout.cells
    u = rng.random((L, users_per_cell))
    theta = rng.random((L, users_per_cell)) * 2.0 * np.pi
    # sqrt gives an area-uniform radial density
    radii = cell_radius * np.sqrt(u)
    offsets = np.stack([radii * np.cos(theta), radii * np.sin(theta)], axis=-1)
    positions = layout.positions[:, None, :] + offsets
    headings = rng.random((L, users_per_cell)) * 2.0 * np.pi
    return UserSet(positions=positions, headings=headings)


def step_mobility(users: UserSet, layout: CellLayout, config: NetworkConfig,
                  rng: np.random.Generator) -> UserSet:
    """Advance every user by one control interval.

    Each user moves speed*step_duration along its heading; the heading
    itself diffuses slowly so walks stay persistent but not straight.
    Users that would leave the serving disk are folded back across the
    boundary and their heading is reflected off the circle.
    """
    L, U = users.positions.shape[:2]
    step = config.ue_speed * config.step_duration
    headings = users.headings + HEADING_SIGMA * rng.standard_normal((L, U))
    if step == 0.0:
        return UserSet(positions=users.positions.copy(), headings=headings)

    delta = step * np.stack([np.cos(headings), np.sin(headings)], axis=-1)
    proposed = users.positions + delta

    offsets = proposed - layout.positions[:, None, :]
    dist = np.linalg.norm(offsets, axis=-1)
    out = dist > config.cell_radius
    if np.any(out):
        idx = np.argwhere(out)
        for ell, u in idx:
            off = offsets[ell, u]
            rho = dist[ell, u]
            radial = off / rho
            # fold the overshoot back inside the circle
            folded = max(2.0 * config.cell_radius - rho, 0.0)
            proposed[ell, u] = layout.positions[ell] + radial * folded
            # specular reflection of the walk direction
            h = np.array([math.cos(headings[ell, u]),
                          math.sin(headings[ell, u])])
            h = h - 2.0 * float(h @ radial) * radial
            headings[ell, u] = math.atan2(h[1], h[0])
    return UserSet(positions=proposed, headings=headings)
