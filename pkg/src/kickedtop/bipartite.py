"""Classical limit of a kicked top split into a single spin and the rest.

A top built from N = 2j elementary spins is split 1 : (2j - 1).  In the
classical limit each part is a unit direction n1, n2 carrying fixed spin
magnitudes 1/2 and j - 1/2; the per-period torsion angle is shared,

    phi_c = kappa * (X1 + X2),
    X1 = n1_x * (1/2) / j,      X2 = n2_x * (j - 1/2) / j,

evaluated before the step, after which both directions undergo the usual
quarter turn about y followed by the z rotation through phi_c.  Both
magnitudes are constants of motion; only the directions evolve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classical import KickParams, SphericalPoint, kick_rotation, spherical_to_cartesian

__all__ = [
    "BipartitePair",
    "CapDistribution",
    "SampleSeries",
    "bipartite_step",
    "sample_cap",
    "evolve_ensemble",
]

# smallest ensemble for which downstream k-NN MI (k=3) is defined with margin
_MIN_ENSEMBLE = 8


def _unit_j(j) -> float:
    j = float(j)
    if not np.isfinite(j) or (2 * j) != round(2 * j) or j < 1:
        raise ValueError(f"j must be a half-integer >= 1, got {j!r}")
    return j


@dataclass(frozen=True)
class BipartitePair:
    """Directions of the two subsystems plus the total spin j.

    n1 and n2 are unit vectors (shape (3,) or a matching batch (..., 3)).
    """

    n1: np.ndarray
    n2: np.ndarray
    j: float

    def __post_init__(self):
        n1 = np.asarray(self.n1, dtype=np.float64)
        n2 = np.asarray(self.n2, dtype=np.float64)
        if n1.shape != n2.shape or n1.shape[-1:] != (3,):
            raise ValueError(
                f"n1 and n2 must share a (..., 3) shape, got {n1.shape} and {n2.shape}"
            )
        for name, v in (("n1", n1), ("n2", n2)):
            norms = np.linalg.norm(v, axis=-1)
            if np.any(np.abs(norms - 1.0) > 1e-9):
                raise ValueError(f"{name} must be unit length (worst {norms.max()!r})")
        object.__setattr__(self, "n1", n1)
        object.__setattr__(self, "n2", n2)
        object.__setattr__(self, "j", _unit_j(self.j))

    @property
    def magnitude1(self) -> float:
        return 0.5

    @property
    def magnitude2(self) -> float:
        return self.j - 0.5

    @property
    def x1(self):
        """Subsystem-1 share of the normalised total x component."""
        return self.n1[..., 0] * (0.5 / self.j)

    @property
    def x2(self):
        return self.n2[..., 0] * ((self.j - 0.5) / self.j)


def bipartite_step(state: BipartitePair, params: KickParams) -> BipartitePair:
    """One shared-kick period; the coupling enters only through phi_c."""
    phase = params.kappa * (state.x1 + state.x2)
    return BipartitePair(
        n1=kick_rotation(state.n1, phase),
        n2=kick_rotation(state.n2, phase),
        j=state.j,
    )


@dataclass(frozen=True)
class CapDistribution:
    """Uniform-area patch of the sphere around a centre point.

    The patch is the coordinate rectangle theta0 +/- dtheta/2,
    phi0 +/- dphi/2 with dtheta = dphi = sqrt(solid_angle / sin(theta0)),
    whose area is solid_angle to leading order.  Patches that would reach
    past a pole are rejected.
    """

    center: SphericalPoint
    solid_angle: float

    def __post_init__(self):
        theta0, phi0 = self.center
        if not 0.0 < theta0 < np.pi:
            raise ValueError(f"patch centre must avoid the poles, got theta={theta0!r}")
        if not 0.0 < self.solid_angle <= 4.0 * np.pi:
            raise ValueError(f"solid_angle must be in (0, 4*pi], got {self.solid_angle!r}")
        object.__setattr__(self, "center", SphericalPoint(float(theta0), float(phi0)))
        half = 0.5 * self.half_width
        if theta0 - half < 0.0 or theta0 + half > np.pi:
            raise ValueError(
                f"patch of width {2 * half:.4f} around theta={theta0:.4f} overlaps a pole"
            )

    @property
    def half_width(self) -> float:
        """Angular side length of the square patch."""
        return float(np.sqrt(self.solid_angle / np.sin(self.center.theta)))

    def bounds(self):
        """((theta_lo, theta_hi), (phi_lo, phi_hi)) of the rectangle."""
        half = 0.5 * self.half_width
        t0, p0 = self.center
        return (t0 - half, t0 + half), (p0 - half, p0 + half)


def _draw_cap_point(dist: CapDistribution, rng: np.random.Generator) -> SphericalPoint:
    """One area-uniform draw: uniform in cos(theta), uniform in phi."""
    (t_lo, t_hi), (p_lo, p_hi) = dist.bounds()
    cos_hi, cos_lo = np.cos(t_hi), np.cos(t_lo)
    theta = float(np.arccos(rng.uniform(cos_hi, cos_lo)))
    phi = float(rng.uniform(p_lo, p_hi))
    return SphericalPoint(theta, phi)


def sample_cap(dist: CapDistribution, count: int, seed) -> np.ndarray:
    """count area-uniform points from the patch; rows are (theta, phi).

    seed may be an int or a numpy SeedSequence.  Point i comes from its own
    child stream keyed by i, so per-point draws are reproducible no matter
    how the ensemble is later chunked or parallelised.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    out = np.empty((count, 2))
    for i in range(count):
        rng = np.random.default_rng(np.random.SeedSequence(
            entropy=root.entropy, spawn_key=root.spawn_key + (i,)
        ))
        out[i] = _draw_cap_point(dist, rng)
    return out


@dataclass(frozen=True)
class SampleSeries:
    """Per-step normalised x components of an evolved ensemble.

    x1 and x2 have shape (steps + 1, count); row t holds the ensemble after
    t periods.  Rows of x1/x2 at fixed t are the paired samples handed to
    the mutual-information estimator.
    """

    x1: np.ndarray
    x2: np.ndarray
    j: float
    kappa: float

    def __post_init__(self):
        x1 = np.asarray(self.x1, dtype=np.float64)
        x2 = np.asarray(self.x2, dtype=np.float64)
        if x1.shape != x2.shape or x1.ndim != 2:
            raise ValueError(f"x1/x2 must share an (steps+1, count) shape, got {x1.shape}, {x2.shape}")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)

    @property
    def steps(self) -> int:
        return self.x1.shape[0] - 1

    @property
    def count(self) -> int:
        return self.x1.shape[1]

    def pairs_at(self, step: int) -> np.ndarray:
        """(count, 2) array of (x1, x2) samples after `step` periods."""
        return np.column_stack([self.x1[step], self.x2[step]])

    def iter_rows(self):
        """Yield (step, traj_id, x1, x2) in CSV order."""
        for step in range(self.steps + 1):
            for traj in range(self.count):
                yield step, traj, self.x1[step, traj], self.x2[step, traj]


def evolve_ensemble(
    dist1: CapDistribution,
    dist2: CapDistribution,
    params: KickParams,
    j,
    count: int,
    steps: int,
    seed,
) -> SampleSeries:
    """Evolve `count` paired initial conditions for `steps` shared-kick periods.

    Subsystem i starts from an area-uniform draw of dist_i; the two draws
    use independent child streams of `seed`.  Trajectories never interact,
    so the series is reproducible trajectory by trajectory.
    """
    j = _unit_j(j)
    if count < _MIN_ENSEMBLE:
        raise ValueError(f"count must be >= {_MIN_ENSEMBLE}, got {count}")
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    child1, child2 = root.spawn(2)
    n1 = spherical_to_cartesian(sample_cap(dist1, count, child1))
    n2 = spherical_to_cartesian(sample_cap(dist2, count, child2))
    w1 = 0.5 / j
    w2 = (j - 0.5) / j
    x1 = np.empty((steps + 1, count))
    x2 = np.empty((steps + 1, count))
    x1[0] = w1 * n1[:, 0]
    x2[0] = w2 * n2[:, 0]
    kappa = params.kappa
    for t in range(1, steps + 1):
        phase = kappa * (w1 * n1[:, 0] + w2 * n2[:, 0])
        n1 = kick_rotation(n1, phase)
        n2 = kick_rotation(n2, phase)
        x1[t] = w1 * n1[:, 0]
        x2[t] = w2 * n2[:, 0]
    return SampleSeries(x1=x1, x2=x2, j=j, kappa=kappa)
