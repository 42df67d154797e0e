"""Quantum spin-j top: operators, coherent states, Floquet map, entropies.

The basis is |j, m> with m = j, j-1, ..., -j, so index 0 is the top of the
ladder.  One drive period is the unitary

    U = exp(-i kappa Jz^2 / (2 j)) exp(-i (pi/2) Jy)

applied as kick-after-precession, matching the classical map in this
package.  Bloch vectors are expectation values of (Jx, Jy, Jz) divided by j.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, xlogy

__all__ = [
    "NormDriftError",
    "SpinOperators",
    "SpinState",
    "spin_operators",
    "coherent_state",
    "floquet_unitary",
    "bloch_vector",
    "evolve_expectations",
    "linear_entropy",
    "von_neumann_entropy_single_spin",
    "thermo_limit_entropy",
]

_NORM_DRIFT_TOL = 1e-8


class NormDriftError(RuntimeError):
    """Raised when a state norm drifts by more than 1e-8 during evolution."""


def _two_j(j) -> int:
    two_j = round(2 * float(j))
    if abs(2 * float(j) - two_j) > 1e-9 or two_j < 1:
        raise ValueError(f"j must be a positive half-integer, got {j!r}")
    return two_j


@dataclass(frozen=True)
class SpinOperators:
    """Angular momentum matrices in the m = j..-j basis."""

    j: float
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray


@dataclass(frozen=True)
class SpinState:
    """State vector of a spin-j system; amplitudes[0] is the m = j component."""

    j: float
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        dim = _two_j(self.j) + 1
        if amps.shape != (dim,):
            raise ValueError(f"expected {dim} amplitudes for j={self.j}, got {amps.shape}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > _NORM_DRIFT_TOL:
            raise ValueError(f"state norm {norm!r} is not 1 within {_NORM_DRIFT_TOL}")
        object.__setattr__(self, "amplitudes", amps)


def _m_values(j: float) -> np.ndarray:
    two_j = _two_j(j)
    return (two_j - 2 * np.arange(two_j + 1)) / 2.0


def _raising_coefficients(j: float) -> np.ndarray:
    """c[i] couples basis index i to i-1: J+ |j, m_i> = c[i] |j, m_i + 1>."""
    m = _m_values(j)[1:]
    return np.sqrt(j * (j + 1.0) - m * (m + 1.0))


@lru_cache(maxsize=None)
def _spin_operators_cached(two_j: int) -> SpinOperators:
    j = two_j / 2.0
    dim = two_j + 1
    jz = np.diag(_m_values(j)).astype(np.complex128)
    jp = np.zeros((dim, dim), dtype=np.complex128)
    coeff = _raising_coefficients(j)
    jp[np.arange(dim - 1), np.arange(1, dim)] = coeff
    jx = (jp + jp.conj().T) / 2.0
    jy = (jp - jp.conj().T) / 2.0j
    for arr in (jx, jy, jz):
        arr.setflags(write=False)
    return SpinOperators(j=j, jx=jx, jy=jy, jz=jz)


def spin_operators(j) -> SpinOperators:
    """Jx, Jy, Jz for spin j (cached; the arrays are read-only views)."""
    return _spin_operators_cached(_two_j(j))


def coherent_state(j, theta0: float, phi0: float) -> SpinState:
    """Spin-coherent state centred at (theta0, phi0).

    Amplitudes follow from rotating |j, j> to the target direction:

        <j, m|theta0, phi0> = C(2j, j-m)^(1/2)
                              cos(theta0/2)^(j+m) sin(theta0/2)^(j-m)
                              exp(i (j - m) phi0)

    evaluated in log space so large j stays finite.  The Bloch vector of
    the result is the unit vector at (theta0, phi0).
    """
    j = _two_j(j) / 2.0
    m = _m_values(j)
    cos_half = np.cos(theta0 / 2.0)
    sin_half = np.sin(theta0 / 2.0)
    if cos_half < 0.0 or sin_half < 0.0:
        raise ValueError(f"theta0 must lie in [0, pi], got {theta0!r}")
    ln_binom = gammaln(2 * j + 1) - gammaln(j - m + 1) - gammaln(j + m + 1)
    ln_mag = 0.5 * ln_binom + xlogy(j + m, cos_half) + xlogy(j - m, sin_half)
    amps = np.exp(ln_mag) * np.exp(1j * (j - m) * phi0)
    amps /= np.linalg.norm(amps)
    return SpinState(j=j, amplitudes=amps)


@lru_cache(maxsize=None)
def _quarter_turn_y(two_j: int) -> np.ndarray:
    """exp(-i (pi/2) Jy) from the eigendecomposition of Jy."""
    ops = _spin_operators_cached(two_j)
    vals, vecs = np.linalg.eigh(ops.jy)
    rot = (vecs * np.exp(-0.5j * np.pi * vals)) @ vecs.conj().T
    rot.setflags(write=False)
    return rot


def floquet_unitary(j, kappa: float) -> np.ndarray:
    """One-period unitary: pi/2 turn about y, then the Jz^2 kick.

    The kick phase per basis state is kappa m^2 / (2 j); kappa = 0 reduces
    the map to the bare quarter turn.
    """
    two_j = _two_j(j)
    j = two_j / 2.0
    if kappa < 0.0 or not np.isfinite(kappa):
        raise ValueError(f"kappa must be finite and >= 0, got {kappa!r}")
    m = _m_values(j)
    kick = np.exp(-1j * kappa * m**2 / (2.0 * j))
    return kick[:, None] * _quarter_turn_y(two_j)


def bloch_vector(state: SpinState) -> np.ndarray:
    """< (Jx, Jy, Jz) > / j as a length-3 real vector.

    Uses the ladder structure directly (O(dim), no matrix products):
    <J+> = sum_i c_i conj(psi_{i-1}) psi_i, <Jx> = Re, <Jy> = Im.
    """
    psi = state.amplitudes
    j = state.j
    plus = np.sum(_raising_coefficients(j) * np.conj(psi[:-1]) * psi[1:])
    z = np.sum(_m_values(j) * np.abs(psi) ** 2)
    return np.array([plus.real, plus.imag, z]) / j


def evolve_expectations(state: SpinState, unitary: np.ndarray, steps: int) -> np.ndarray:
    """Bloch vector after 0..steps periods; shape (steps + 1, 3).

    Raises NormDriftError if the state norm leaves 1 by more than 1e-8,
    which would indicate a non-unitary propagator.
    """
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    psi = state.amplitudes.copy()
    out = np.empty((steps + 1, 3))
    out[0] = bloch_vector(state)
    j = state.j
    for i in range(1, steps + 1):
        psi = unitary @ psi
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > _NORM_DRIFT_TOL:
            raise NormDriftError(f"norm drifted to {norm!r} at step {i}")
        out[i] = bloch_vector(SpinState(j=j, amplitudes=psi))
    return out


def linear_entropy(bloch: np.ndarray) -> float:
    """(1 - |r|^2) / 2 for a spin-1/2 reduced state with Bloch vector r.

    Ranges over [0, 1/2]; |r| may exceed 1 by at most 1e-10 of roundoff.
    """
    r2 = float(np.dot(bloch, bloch))
    if r2 > 1.0 + 1e-10:
        raise ValueError(f"Bloch vector norm {np.sqrt(r2)!r} exceeds 1")
    return max(0.5 * (1.0 - r2), 0.0)


def von_neumann_entropy_single_spin(bloch: np.ndarray) -> float:
    """-Tr(rho ln rho) in nats for the spin-1/2 state with Bloch vector r."""
    r = float(np.linalg.norm(bloch))
    if r > 1.0 + 1e-10:
        raise ValueError(f"Bloch vector norm {r!r} exceeds 1")
    lam = np.clip([(1.0 + r) / 2.0, (1.0 - r) / 2.0], 0.0, 1.0)
    return float(-np.sum(xlogy(lam, lam)))


def thermo_limit_entropy(vectors) -> float:
    """Equilibrium entropy proxy of an ensemble of unit vectors.

    (1 - |mean vector|^2) / 2: zero for a fully aligned ensemble, 1/2 for
    an isotropic one.  vectors has shape (n, 3).
    """
    vecs = np.asarray(vectors, dtype=np.float64)
    if vecs.ndim != 2 or vecs.shape[1] != 3:
        raise ValueError(f"vectors must have shape (n, 3), got {vecs.shape}")
    return linear_entropy(vecs.mean(axis=0))
