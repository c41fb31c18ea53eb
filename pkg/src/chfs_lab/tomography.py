"""Unitary process reconstruction under a diamond-distance contract.

The simulator has noiseless access to the black box, so reconstruction reads
off the columns ``Z|j>`` directly.  ``Perturbed`` mode then multiplies by a
random unitary at a calibrated operator-norm distance, which is what a real
tomography procedure with accuracy ``epsilon`` would leave behind.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .hilbert import DimensionError, UnitaryMatrix, haar_unitary_matrix, operator_norm_distance
from .rng import Rng

__all__ = [
    "NoiseMode",
    "TomographyResult",
    "reconstruct_unitary",
    "diamond_distance_bound",
    "fix_phase",
    "perturbation",
    "exact_diamond_distance_1q",
]

log = logging.getLogger(__name__)

MAX_DIM = 1 << 6
GRAM_TOL = 1e-6


class NoiseMode(str, enum.Enum):
    EXACT = "exact"
    PERTURBED = "perturbed"


@dataclass(frozen=True)
class TomographyResult:
    reconstructed: UnitaryMatrix
    epsilon: float
    delta: float
    queries_used: int


def fix_phase(mat: np.ndarray) -> np.ndarray:
    """Make the first nonzero entry of column 0 real and positive."""
    col = mat[:, 0]
    nz = np.flatnonzero(np.abs(col) > 1e-12)
    if nz.size == 0:
        return mat
    a = col[nz[0]]
    return mat * (abs(a) / a)


def perturbation(dim: int, distance: float, rng: Rng) -> np.ndarray:
    """Random unitary W with phase-minimized ||W - I||_op equal to ``distance``.

    Eigenphases are spread over [-a, a] with both ends attained, so the
    covering arc is exactly 2a and the distance is 2 sin(a/2).
    """
    if not 0 <= distance < 2:
        raise ValueError("distance must lie in [0, 2)")
    a = 2.0 * np.arcsin(distance / 2.0)
    phases = rng.gen.uniform(-a, a, size=dim)
    if dim >= 2:
        phases[0], phases[1] = -a, a
    else:
        phases[0] = 0.0
    basis = haar_unitary_matrix(dim, rng)
    return (basis * np.exp(1j * phases)) @ basis.conj().T


def reconstruct_unitary(
    black_box: Callable[[np.ndarray], np.ndarray],
    dim: int,
    eps: float,
    delta: float,
    noise_mode: NoiseMode | str = NoiseMode.EXACT,
    rng: Rng | None = None,
) -> TomographyResult:
    """Recover the unitary behind ``black_box`` (a map from kets to kets)."""
    noise_mode = NoiseMode(noise_mode)
    if dim < 1 or dim > MAX_DIM:
        raise DimensionError(f"tomography limited to dim <= {MAX_DIM}, got {dim}")
    if not (0 < eps < 1 and 0 < delta < 1):
        raise ValueError("epsilon and delta must lie in (0, 1)")
    cols = []
    for j in range(dim):
        e = np.zeros(dim, dtype=complex)
        e[j] = 1.0
        cols.append(np.asarray(black_box(e), dtype=complex).reshape(dim))
    z = np.stack(cols, axis=1)
    gram_dev = np.abs(z.conj().T @ z - np.eye(dim)).max()
    if gram_dev > GRAM_TOL:
        raise ValueError(f"black box is not unitary (Gram deviation {gram_dev:.3g})")
    if noise_mode is NoiseMode.PERTURBED:
        if rng is None:
            raise ValueError("perturbed mode needs an rng")
        w = perturbation(dim, eps / 4.0, rng)
        noisy = w @ z
        bound = diamond_distance_bound(z, noisy)
        # the contract must hold on every run, not just on average
        assert bound <= eps + 1e-12, (bound, eps)
        z = noisy
    log.debug("tomography dim=%d mode=%s queries=%d", dim, noise_mode.value, dim)
    return TomographyResult(UnitaryMatrix(fix_phase(z), check=False), eps, delta, dim)


def diamond_distance_bound(u, v) -> float:
    """Upper bound 2 * min_theta ||U - e^{i theta} V||_op on the channel distance."""
    return 2.0 * operator_norm_distance(u, v)


def exact_diamond_distance_1q(u, v, grid: int = 181) -> float:
    """Diamond distance between two single-qubit unitary channels.

    For unitary channels an ancilla does not help beyond pure inputs with a
    reference system, and the optimum is 2*sqrt(1 - min |<psi|U^dag V|psi>|^2)
    over pure psi.  The minimum is found on a Bloch-sphere grid and refined.
    """
    mu = u.matrix if isinstance(u, UnitaryMatrix) else np.asarray(u)
    mv = v.matrix if isinstance(v, UnitaryMatrix) else np.asarray(v)
    if mu.shape != (2, 2) or mv.shape != (2, 2):
        raise DimensionError("exact diamond distance implemented for one qubit only")
    w = mu.conj().T @ mv

    def overlap(theta, phi):
        psi = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
        return abs(np.vdot(psi, w @ psi)) ** 2

    th = np.linspace(0, np.pi, grid)
    ph = np.linspace(0, 2 * np.pi, 2 * grid)
    tt, pp = np.meshgrid(th, ph, indexing="ij")
    c, s = np.cos(tt / 2), np.exp(1j * pp) * np.sin(tt / 2)
    wpsi0 = w[0, 0] * c + w[0, 1] * s
    wpsi1 = w[1, 0] * c + w[1, 1] * s
    vals = np.abs(c.conj() * wpsi0 + s.conj() * wpsi1) ** 2
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    res = minimize(lambda p: overlap(*p), x0=[th[i], ph[j]], method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14})
    best = min(vals[i, j], res.fun)
    return float(2.0 * np.sqrt(max(0.0, 1.0 - best)))
