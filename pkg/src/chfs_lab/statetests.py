"""Swap test, purity battery and product test.

Every sampled test has an exact counterpart.  The product test is handled
through the purities of all reduced states: with ``t_S = Tr[rho_S^2]`` the
joint distribution of the m pairwise swap-test outcomes on two copies is the
Walsh-Hadamard transform of ``t`` divided by ``2^m``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .hilbert import DensityMatrix, DimensionError, PureState, SubsystemSpec, _matrix
from .rng import Rng

__all__ = [
    "MAX_PARTS",
    "TestOutcome",
    "PurityBatteryConfig",
    "BatteryResult",
    "swap_test_prob",
    "swap_test_sample",
    "purity_battery",
    "subset_purities",
    "product_test_prob",
    "product_test_joint",
    "product_test_joint_direct",
    "product_test_sample",
    "lubkin_expectation",
    "lubkin_product_mean",
    "walsh_hadamard",
]

MAX_PARTS = 16


class TestOutcome(NamedTuple):
    passed: bool
    exact_prob: float | None = None
    outcomes: tuple[bool, ...] | None = None


# keep pytest from trying to collect the NamedTuple when imported in tests
TestOutcome.__test__ = False


@dataclass(frozen=True)
class PurityBatteryConfig:
    repetitions: int = 64
    fail_threshold: int = 8

    def __post_init__(self):
        if self.repetitions < 1 or self.fail_threshold < 0:
            raise ValueError("battery sizes must be positive")
        if self.fail_threshold > self.repetitions:
            raise ValueError("fail_threshold exceeds repetitions")

    @classmethod
    def standard(cls, T: int, lam: int) -> "PurityBatteryConfig":
        """16*T*lam repetitions, flag at 8*lam failures."""
        return cls(16 * T * lam, 8 * lam)


class BatteryResult(NamedTuple):
    fail_count: int
    flagged_impure: bool


def swap_test_prob(rho, sigma) -> float:
    a, b = _matrix(rho), _matrix(sigma)
    if a.shape != b.shape:
        raise DimensionError(f"swap test on mismatched shapes {a.shape} and {b.shape}")
    # Tr(rho sigma) = sum_ij rho_ij sigma_ji
    overlap = np.einsum("ij,ji->", a, b).real
    return float(np.clip((1.0 + overlap) / 2.0, 0.0, 1.0))


def swap_test_sample(rho, sigma, rng: Rng) -> TestOutcome:
    p = swap_test_prob(rho, sigma)
    return TestOutcome(bool(rng.random() < p), p)


def purity_battery(rho, cfg: PurityBatteryConfig, rng: Rng) -> BatteryResult:
    p = swap_test_prob(rho, rho)
    fails = int(np.count_nonzero(rng.random(cfg.repetitions) >= p))
    return BatteryResult(fails, fails >= cfg.fail_threshold)


def _check_parts(spec: SubsystemSpec, dim: int) -> None:
    spec.check(dim)
    if spec.m > MAX_PARTS:
        raise DimensionError(f"product test over {spec.m} parts exceeds the limit of {MAX_PARTS}")


def _axes_for(mask: int, m: int) -> tuple[list[int], list[int]]:
    keep = [i for i in range(m) if mask >> i & 1]
    drop = [i for i in range(m) if not mask >> i & 1]
    return keep, drop


def subset_purities(state, spec: SubsystemSpec) -> np.ndarray:
    """``t[mask] = Tr[rho_S^2]`` where bit i of ``mask`` marks part i as kept."""
    m = spec.m
    dims = spec.local_dims
    out = np.empty(1 << m)
    if isinstance(state, PureState):
        _check_parts(spec, state.dim)
        t = state.amplitudes.reshape(dims)
        for mask in range(1 << m):
            keep, drop = _axes_for(mask, m)
            mat = t.transpose(keep + drop).reshape(spec.dim_of(keep), spec.dim_of(drop))
            # the smaller Gram matrix has the same spectrum
            g = mat @ mat.conj().T if mat.shape[0] <= mat.shape[1] else mat.conj().T @ mat
            out[mask] = np.vdot(g, g).real
        return out
    rho = _matrix(state)
    _check_parts(spec, rho.shape[0])
    t = rho.reshape(dims + dims)
    for mask in range(1 << m):
        keep, drop = _axes_for(mask, m)
        perm = keep + drop + [m + i for i in keep] + [m + i for i in drop]
        dk, dd = spec.dim_of(keep), spec.dim_of(drop)
        red = np.einsum("ajbj->ab", t.transpose(perm).reshape(dk, dd, dk, dd))
        out[mask] = np.vdot(red, red).real
    return out


def walsh_hadamard(v: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform of a length-2^m vector."""
    v = np.array(v, dtype=float)
    m = v.size.bit_length() - 1
    t = v.reshape([2] * m)
    for ax in range(m):
        a = np.take(t, 0, axis=ax)
        b = np.take(t, 1, axis=ax)
        t = np.stack([a + b, a - b], axis=ax)
    return t.reshape(-1)


def product_test_joint(state, spec: SubsystemSpec) -> np.ndarray:
    """Probability of each failure pattern (bit i set = swap test i failed)."""
    t = subset_purities(state, spec)
    joint = walsh_hadamard(t) / (1 << spec.m)
    return np.clip(joint, 0.0, 1.0)


def product_test_prob(state, spec: SubsystemSpec) -> float:
    """(1/2^m) sum_S Tr[rho_S^2]."""
    t = subset_purities(state, spec)
    return float(t.mean())


def product_test_joint_direct(state, spec: SubsystemSpec) -> np.ndarray:
    """Two-copy simulation: Tr[(x)_i P_i^{b_i} (rho (x) rho)] for every pattern b.

    Builds the symmetric/antisymmetric projectors of each pair explicitly, so
    only small systems are feasible (total two-copy dimension <= 2^12).
    """
    rho = _matrix(state)
    _check_parts(spec, rho.shape[0])
    d = rho.shape[0]
    if d * d > 1 << 12:
        raise DimensionError("direct two-copy simulation limited to 12 qubits in total")
    m = spec.m
    dims = spec.local_dims
    two = np.kron(rho, rho)
    # reorder copies so the pairs (part i of copy 1, part i of copy 2) are adjacent
    perm = [c * m + i for i in range(m) for c in (0, 1)]
    t = two.reshape(dims + dims + dims + dims)
    t = t.transpose(perm + [2 * m + p for p in perm])
    dtot = d * d
    two = t.reshape(dtot, dtot)
    swaps = []
    for dd in dims:
        f = np.zeros((dd * dd, dd * dd))
        for a, b in itertools.product(range(dd), repeat=2):
            f[b * dd + a, a * dd + b] = 1.0
        swaps.append(f)
    joint = np.zeros(1 << m)
    for pattern in range(1 << m):
        op = np.ones((1, 1))
        for i, dd in enumerate(dims):
            sign = -1.0 if pattern >> i & 1 else 1.0
            op = np.kron(op, (np.eye(dd * dd) + sign * swaps[i]) / 2.0)
        joint[pattern] = np.einsum("ij,ji->", op, two).real
    return joint


def product_test_sample(state, spec: SubsystemSpec, rng: Rng, *, joint: np.ndarray | None = None) -> TestOutcome:
    """Draw the correlated outcome pattern of the m swap tests."""
    if joint is None:
        joint = product_test_joint(state, spec)
    p = joint / joint.sum()
    pattern = int(rng.gen.choice(p.size, p=p))
    outcomes = tuple(not (pattern >> i & 1) for i in range(spec.m))
    return TestOutcome(pattern == 0, float(joint[0]), outcomes)


def lubkin_expectation(d_s: int, d_sbar: int) -> float:
    """Haar average of Tr[rho_S^2] across a d_S x d_Sbar cut."""
    if d_s < 1 or d_sbar < 1:
        raise ValueError("dimensions must be positive")
    return (d_s + d_sbar) / (d_s * d_sbar + 1)


def lubkin_product_mean(spec: SubsystemSpec) -> float:
    """Haar average of the product-test pass probability."""
    total = spec.total_dim
    acc = 0.0
    for mask in range(1 << spec.m):
        keep, _ = _axes_for(mask, spec.m)
        ds = spec.dim_of(keep)
        acc += lubkin_expectation(ds, total // ds)
    return acc / (1 << spec.m)
