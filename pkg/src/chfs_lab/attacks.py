"""The two distinguishers at desk scale, plus the OR-tester surrogate.

Both attacks evaluate every key's acceptance probability exactly and hand the
scores to :func:`or_surrogate`, an exhaustive maximum that stands in for the
quantum OR tester.  The only sampled parts are the Haar probe state and the
purity battery.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Mapping, NamedTuple

import numpy as np
from scipy.stats import binom

from .hilbert import DensityMatrix, DimensionError, SubsystemSpec, _matrix, haar_state, partial_trace_matrix, purity
from .oracle import ChfsInstance
from .primitives import PruCandidate, PrsgCandidate, pru_apply
from .circuits import Measure, run_branches
from .rng import Rng
from .statetests import PurityBatteryConfig, product_test_prob, purity_battery, swap_test_prob
from .tomography import NoiseMode, reconstruct_unitary

__all__ = [
    "Alg1Config",
    "Alg2Config",
    "QueryLearning",
    "OrSurrogateResult",
    "PairBlocks",
    "Alg1Result",
    "Alg2Result",
    "or_surrogate",
    "p_k_subprotocol",
    "alg1_run",
    "alg1_distinguish",
    "alg2_run",
    "alg2_distinguish",
    "learn_queries",
    "tomography_resolver",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OrSurrogateResult:
    accepted: bool
    best_key: str
    best_score: float
    promise_violated: bool = False
    tester_accept_lower: float | None = None
    tester_accept_upper: float | None = None


def or_surrogate(scores: Mapping[str, float], eps: float, delta: float) -> OrSurrogateResult:
    """Accept iff some key scores at least 1 - eps.

    The real OR tester accepts with probability >= (1-eps)^2/7 when some score
    is >= 1-eps and with probability <= 4 N delta when every score is <= delta.
    Both figures are reported; a best score inside (delta, 1-eps) is outside
    the tester's promise and is flagged.
    """
    if not scores:
        raise ValueError("or_surrogate needs at least one key")
    for k, s in scores.items():
        if not -1e-12 <= s <= 1 + 1e-12:
            raise ValueError(f"score {s} for key {k} outside [0, 1]")
    best_key = max(scores, key=lambda k: (scores[k], k))
    best = float(scores[best_key])
    n = len(scores)
    lower = upper = None
    violated = False
    if best >= 1 - eps:
        lower = (1 - eps) ** 2 / 7
    elif best <= delta:
        upper = 4 * n * delta
        log.info("or tester reject bound 4N delta = %.3g (%s)", upper, "informative" if upper < 1 else "vacuous")
    else:
        violated = True
    return OrSurrogateResult(best >= 1 - eps, best_key, best, violated, lower, upper)


# ---------------------------------------------------------------- PRU attack


@dataclass(frozen=True)
class Alg1Config:
    lam: int = 4
    tau: int = 3
    r: int = 12
    battery: PurityBatteryConfig = field(default_factory=PurityBatteryConfig)
    pass_fraction: Fraction = Fraction(2, 3)
    tomography_eps: float = 0.1
    tomography_delta: float = 0.1
    noise_mode: NoiseMode = NoiseMode.EXACT
    or_eps: float | None = None
    or_delta: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "pass_fraction", Fraction(self.pass_fraction))
        object.__setattr__(self, "noise_mode", NoiseMode(self.noise_mode))
        if self.r < 3 or self.tau < 1 or self.lam < 1:
            raise ValueError("need r >= 3, tau >= 1, lam >= 1")
        if not Fraction(1, 2) < self.pass_fraction < 1:
            raise ValueError("pass_fraction must lie in (1/2, 1)")

    @property
    def eps(self) -> float:
        return self.or_eps if self.or_eps is not None else 2.0**-self.lam

    @property
    def delta(self) -> float:
        return self.or_delta if self.or_delta is not None else 2.0 ** (-2 * self.lam)

    @property
    def pass_count(self) -> int:
        return math.ceil(self.pass_fraction * self.r)

    @classmethod
    def standard(cls, lam: int, m: int) -> "Alg1Config":
        """tau = 2 log(16 m), r = 1200 lam, battery 16 lam^2 / 8 lam."""
        return cls(lam, math.ceil(2 * math.log2(16 * m)), 1200 * lam, PurityBatteryConfig(16 * lam * lam, 8 * lam))


@dataclass(frozen=True)
class PairBlocks:
    """Psi = (rho (x) V(rho))^{(x) r}, kept in factored form."""

    rho: np.ndarray
    v_rho: np.ndarray
    r: int

    def __post_init__(self):
        if self.rho.shape != self.v_rho.shape:
            raise DimensionError("paired blocks differ in shape")


def p_k_subprotocol(cfg: Alg1Config, k: str, psi: PairBlocks, f_k: Callable) -> float:
    """Exact Pr[at least pass_fraction * r of the r swap tests pass]."""
    if psi.r != cfg.r:
        raise DimensionError(f"Psi has {psi.r} blocks, config expects {cfg.r}")
    out = _matrix(f_k(psi.rho))
    if out.shape != psi.v_rho.shape:
        raise DimensionError(f"F_{k} output shape {out.shape} differs from the paired block")
    p = swap_test_prob(out, psi.v_rho)
    return float(binom.sf(cfg.pass_count - 1, cfg.r, p))


def tomography_resolver(cfg: Alg1Config, oracle: ChfsInstance, rng: Rng) -> Callable[[str], np.ndarray]:
    """S~_x: reconstructed reflection for |x| <= tau, identity above."""
    table: dict[str, np.ndarray] = {}
    i = 0
    for d in range(1, cfg.tau + 1):
        dim = 1 << (oracle.length_fn(d) + 1)
        for v in range(1 << d):
            x = format(v, f"0{d}b")
            s = oracle.swap(x).matrix
            res = reconstruct_unitary(lambda vec, s=s: s @ vec, dim, cfg.tomography_eps, cfg.tomography_delta, cfg.noise_mode, rng.child(i))
            table[x] = res.reconstructed.matrix
            i += 1

    def resolve(x: str) -> np.ndarray:
        if x in table:
            return table[x]
        return np.eye(1 << (oracle.length_fn(len(x)) + 1), dtype=complex)

    return resolve


class Alg1Result(NamedTuple):
    bit: int
    flagged: bool
    fail_count: int
    gap_regime: bool
    scores: dict
    or_result: OrSurrogateResult
    probe_purity: float


def alg1_run(cfg: Alg1Config, V: Callable, oracle: ChfsInstance, candidate: PruCandidate, rng: Rng) -> Alg1Result:
    n = candidate.n_qubits
    rho = haar_state(n, rng.child(0)).dm().matrix
    v_rho = _matrix(V(DensityMatrix(rho, n, check=False)))
    if v_rho.shape != rho.shape:
        raise DimensionError(f"V maps {n} qubits to shape {v_rho.shape}")
    # step 1: purity battery on V(rho); flag and carry on
    battery = purity_battery(v_rho, cfg.battery, rng.child(1))
    pur = purity(v_rho)
    detect = 1.0 - 2.0 * cfg.battery.fail_threshold / cfg.battery.repetitions
    lo, hi = sorted((detect, 1.0 - 1.0 / cfg.lam))
    gap = lo < pur < hi
    if gap:
        log.info("alg1 probe purity %.4f lies in the gap regime (%.4f, %.4f)", pur, lo, hi)
    # step 2: tomography of the short reflections
    resolve = tomography_resolver(cfg, oracle, rng.child(2))
    # step 3: exact P_k per key, then the OR surrogate
    psi = PairBlocks(rho, v_rho, cfg.r)
    scores = {}
    for k in candidate.keys():
        scores[k] = p_k_subprotocol(cfg, k, psi, lambda s, k=k: pru_apply(candidate, oracle, k, s, resolve=resolve))
    res = or_surrogate(scores, cfg.eps, cfg.delta)
    bit = int(battery.flagged_impure or res.accepted)
    return Alg1Result(bit, battery.flagged_impure, battery.fail_count, gap, scores, res, pur)


def alg1_distinguish(cfg: Alg1Config, V: Callable, oracle: ChfsInstance, candidate: PruCandidate, rng: Rng) -> int:
    return alg1_run(cfg, V, oracle, candidate, rng).bit


# ---------------------------------------------------------------- PRSG attack


class QueryLearning(str, enum.Enum):
    DIRECT_INSPECTION = "direct"
    ARGMAX_FROM_BRANCHES = "argmax"


@dataclass(frozen=True)
class Alg2Config:
    lam: int = 4
    r: int = 4
    T: int = 8
    battery: PurityBatteryConfig = field(default_factory=PurityBatteryConfig)
    or_eps: float | None = None
    or_delta: float | None = None

    def __post_init__(self):
        if min(self.lam, self.r, self.T) < 1:
            raise ValueError("lam, r and T must be positive")

    @property
    def eps(self) -> float:
        return self.or_eps if self.or_eps is not None else 2.0**-self.lam

    @property
    def delta(self) -> float:
        return self.or_delta if self.or_delta is not None else 2.0 ** (-2 * self.lam)

    @classmethod
    def standard(cls, lam: int, t: int, d: int) -> "Alg2Config":
        """r = 10 lam^2, T = 20 r^2 (2td+1)^3, battery 16 T lam / 8 lam."""
        r = 10 * lam * lam
        T = 20 * r * r * (2 * t * d + 1) ** 3
        return cls(lam, r, T, PurityBatteryConfig.standard(T, lam))


def learn_queries(candidate: PrsgCandidate, oracle: ChfsInstance, k: str, mode: QueryLearning) -> list[int]:
    """Query lengths lambda_i used by the candidate on key k."""
    mode = QueryLearning(mode)
    if mode is QueryLearning.DIRECT_INSPECTION:
        return [lam for lam, _ in candidate.declared_queries(k)]
    n = candidate.n_total
    start = np.zeros(1 << n, dtype=complex)
    start[0] = 1.0
    branches = run_branches(candidate.ops(k), start, n, oracle)
    t = sum(isinstance(op, Measure) for op in candidate.ops(k))
    # most likely outcome of each measurement, marginalised over the others
    out = []
    for i in range(t):
        weights: dict[int, float] = {}
        for b in branches:
            weights[b.outcomes[i]] = weights.get(b.outcomes[i], 0.0) + b.prob
        out.append(max(weights, key=lambda v: (weights[v], -v)))
    return out


@lru_cache(maxsize=256)
def _unitary_part(candidate: PrsgCandidate, k: str) -> np.ndarray:
    u = candidate.unitary_part(k)
    u.setflags(write=False)
    return u


def _parts(candidate: PrsgCandidate, oracle: ChfsInstance, lams: list[int]) -> list[int]:
    sizes: list[int] = []
    for lam in lams:
        ell = oracle.length_fn(lam) if 1 <= lam <= candidate.lam else 0
        ell = min(ell, candidate.ell)
        if ell:
            sizes.append(ell)
        sizes += [1] * (candidate.ell - ell)
    sizes += [1] * (candidate.output_qubits - sum(sizes))
    return sizes


class Alg2Result(NamedTuple):
    bit: int
    aborted: bool
    fail_count: int
    scores: dict
    or_result: OrSurrogateResult | None


def alg2_run(
    cfg: Alg2Config,
    challenge,
    oracle: ChfsInstance,
    candidate: PrsgCandidate,
    query_learning: QueryLearning | str,
    rng: Rng,
) -> Alg2Result:
    rho = _matrix(challenge)
    d, u = candidate.output_qubits, candidate.ancilla_qubits
    if rho.shape != (1 << d, 1 << d):
        raise DimensionError(f"challenge of shape {rho.shape} does not match {d} output qubits")
    battery = purity_battery(rho, cfg.battery, rng.child(0))
    if battery.flagged_impure:
        return Alg2Result(1, True, battery.fail_count, {}, None)
    anc0 = np.zeros((1 << u, 1 << u))
    anc0[0, 0] = 1.0
    padded = np.kron(rho, anc0)
    split = SubsystemSpec([1 << d, 1 << u])
    scores = {}
    for k in candidate.keys():
        lams = learn_queries(candidate, oracle, k, query_learning)
        U = _unitary_part(candidate, k)
        back = U.conj().T @ padded @ U
        out = partial_trace_matrix(back, split, [0])
        p = product_test_prob(DensityMatrix(out, d, check=False), SubsystemSpec.from_sizes(_parts(candidate, oracle, lams)))
        scores[k] = float(np.clip(p, 0.0, 1.0)) ** cfg.r
    res = or_surrogate(scores, cfg.eps, cfg.delta)
    return Alg2Result(int(res.accepted), False, battery.fail_count, scores, res)


def alg2_distinguish(cfg, challenge, oracle, candidate, query_learning, rng) -> int:
    return alg2_run(cfg, challenge, oracle, candidate, query_learning, rng).bit
