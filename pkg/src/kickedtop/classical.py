"""Classical kicked-top map on the unit sphere.

One period of the drive is a pi/2 precession about the y axis followed by
an impulsive torsion about the z axis whose angle is proportional to the
(pre-step) x component.  In Cartesian coordinates the stroboscopic map is

    X' =  Z cos(kappa X) + Y sin(kappa X)
    Y' =  Y cos(kappa X) - Z sin(kappa X)
    Z' = -X

which is a composition of two rotations and therefore preserves the norm
exactly (up to floating-point roundoff, no renormalisation is applied).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "KickParams",
    "SphericalPoint",
    "spherical_to_cartesian",
    "cartesian_to_spherical",
    "classical_step",
    "evolve_trajectory",
    "phase_portrait",
    "PORTRAIT_DTYPE",
]


@dataclass(frozen=True)
class KickParams:
    """Parameters of the stroboscopic map.

    kappa is the torsion strength; the precession angle is fixed at pi/2.
    """

    kappa: float

    def __post_init__(self):
        kappa = float(self.kappa)
        if not np.isfinite(kappa) or kappa < 0.0:
            raise ValueError(f"kappa must be finite and >= 0, got {self.kappa!r}")
        object.__setattr__(self, "kappa", kappa)


class SphericalPoint(NamedTuple):
    """Point on the unit sphere, theta in [0, pi] from +z, phi in [0, 2*pi)."""

    theta: float
    phi: float


def spherical_to_cartesian(point) -> np.ndarray:
    """Unit vector (x, y, z) for a (theta, phi) pair or an array of pairs.

    Accepts anything of shape (..., 2); returns shape (..., 3).
    """
    angles = np.asarray(point, dtype=np.float64)
    theta = angles[..., 0]
    phi = angles[..., 1]
    sin_t = np.sin(theta)
    out = np.stack(
        [sin_t * np.cos(phi), sin_t * np.sin(phi), np.cos(theta)], axis=-1
    )
    return out


def cartesian_to_spherical(vec) -> SphericalPoint:
    """Inverse of spherical_to_cartesian for unit vectors.

    At a pole (x = y = 0) phi is taken to be 0.  phi is reduced to [0, 2*pi).
    Array input of shape (..., 3) returns a SphericalPoint of arrays.
    """
    v = np.asarray(vec, dtype=np.float64)
    theta = np.arccos(np.clip(v[..., 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(v[..., 1], v[..., 0]), 2.0 * np.pi)
    if v.ndim == 1:
        return SphericalPoint(float(theta), float(phi))
    return SphericalPoint(theta, phi)


def kick_rotation(state: np.ndarray, phase) -> np.ndarray:
    """Apply one drive period with an externally supplied kick phase.

    Rotates by pi/2 about y, then by `phase` about z.  `state` has shape
    (..., 3); `phase` must broadcast against the leading dimensions.  The
    bipartite map reuses this with a shared phase for both subsystems.
    """
    state = np.asarray(state, dtype=np.float64)
    x = state[..., 0]
    y = state[..., 1]
    z = state[..., 2]
    c = np.cos(phase)
    s = np.sin(phase)
    out = np.empty_like(state)
    out[..., 0] = z * c + y * s
    out[..., 1] = y * c - z * s
    out[..., 2] = -x
    return out


def classical_step(state, params: KickParams) -> np.ndarray:
    """One period of the kicked-top map.

    state: array-like of shape (..., 3).  The kick phase is kappa times the
    pre-step x component of each vector.  Returns a new array; the input is
    not modified.
    """
    state = np.asarray(state, dtype=np.float64)
    return kick_rotation(state, params.kappa * state[..., 0])


def evolve_trajectory(start, params: KickParams, steps: int) -> np.ndarray:
    """Iterate the map; returns shape (steps + 1, 3) including the start.

    Row i + 1 is exactly classical_step(row i, params).
    """
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    start = np.asarray(start, dtype=np.float64)
    if start.shape != (3,):
        raise ValueError(f"start must have shape (3,), got {start.shape}")
    out = np.empty((steps + 1, 3))
    out[0] = start
    state = start
    for i in range(1, steps + 1):
        state = classical_step(state, params)
        out[i] = state
    return out


PORTRAIT_DTYPE = np.dtype(
    [
        ("traj_id", np.int64),
        ("step", np.int64),
        ("theta", np.float64),
        ("phi", np.float64),
        ("x", np.float64),
        ("y", np.float64),
        ("z", np.float64),
    ]
)


def phase_portrait(initials, params: KickParams, steps: int) -> np.ndarray:
    """Evolve several initial points and tag each record with its trajectory.

    initials: sequence of (theta, phi) pairs.  Returns a structured array
    with fields traj_id, step, theta, phi, x, y, z, ordered by trajectory
    and then by step.
    """
    initials = [SphericalPoint(float(t), float(p)) for t, p in initials]
    records = np.empty(len(initials) * (steps + 1), dtype=PORTRAIT_DTYPE)
    row = 0
    for traj_id, point in enumerate(initials):
        path = evolve_trajectory(spherical_to_cartesian(point), params, steps)
        theta, phi = cartesian_to_spherical(path)
        block = records[row : row + steps + 1]
        block["traj_id"] = traj_id
        block["step"] = np.arange(steps + 1)
        block["theta"] = theta
        block["phi"] = phi
        block["x"] = path[:, 0]
        block["y"] = path[:, 1]
        block["z"] = path[:, 2]
        row += steps + 1
    return records
