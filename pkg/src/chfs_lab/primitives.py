"""Constructions under test: the PRFSG, toy PRU and PRSG candidates, and games.

Candidates are described by a handful of integers and a seed; per-key circuits
are rebuilt deterministically from that description, which is also what the
JSON form stores.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .circuits import (
    ControlledSwapQuery,
    Depolarize,
    Gate,
    Measure,
    Op,
    StateQuery,
    SwapQuery,
    compose_gates,
    haar_gate,
    oracle_resolver,
    pauli_x,
    preparation_unitary,
    run_branches,
    run_density,
)
from .hilbert import (
    DensityMatrix,
    DimensionError,
    PureState,
    SubsystemSpec,
    _check_cap,
    _matrix,
    haar_state,
    partial_trace_matrix,
)
from .oracle import ChfsInstance, LengthFunction, check_bitstring
from .rng import Rng, derive_seed
from .statetests import swap_test_prob

__all__ = [
    "PrfsgParams",
    "prfsg_gen",
    "PruCandidate",
    "pru_apply",
    "PrsgCandidate",
    "PrsgOutput",
    "QuasiPureViolation",
    "prsg_gen",
    "GameResult",
    "distinguishing_game",
    "KeyedChallenge",
    "HaarFunctionChallenge",
    "ZeroQueryAdversary",
    "KeyGuessAdversary",
    "CollisionAdversary",
    "InversionAdversary",
    "RealArm",
    "IdealArm",
    "prfsg_hybrid_adversary_suite",
    "prfsg_sanity_inversion",
    "key_guess_exact",
    "all_keys",
]


def all_keys(bits: int) -> list[str]:
    return [format(i, f"0{bits}b") for i in range(1 << bits)]


# ---------------------------------------------------------------- PRFSG


@dataclass(frozen=True)
class PrfsgParams:
    key_bits: int
    input_bits: int
    oracle: ChfsInstance

    def __post_init__(self):
        if self.key_bits < 1 or self.input_bits < 0:
            raise ValueError("key_bits must be >= 1 and input_bits >= 0")
        _check_cap(self.output_qubits, self.oracle.max_qubits)

    @property
    def output_qubits(self) -> int:
        return self.oracle.length_fn(self.key_bits + self.input_bits)


def prfsg_gen(params: PrfsgParams, k: str, x: str) -> PureState:
    """Gen(k, x) = |phi_{k||x}>: one oracle query on KX, K discarded."""
    if len(k) != params.key_bits or len(x) != params.input_bits:
        raise ValueError(f"expected |k|={params.key_bits}, |x|={params.input_bits}; got {len(k)}, {len(x)}")
    return params.oracle.state(check_bitstring(k + x))


# ---------------------------------------------------------------- PRU candidates


@dataclass(frozen=True)
class PruCandidate:
    """G_k = U_T S_{x_T} ... S_{x_1} U_0 on ``n_qubits`` with no ancilla.

    ``query_lengths`` fixes |x_i|; the strings themselves and the Haar layers are
    drawn per key from ``seed``.  ``mode`` selects how queries are wired:
    ``fixed`` uses a per-key string, ``controlled`` reads x coherently from the
    leading qubits and ``measured`` measures them first (adaptive hook).
    ``depolarize`` adds a final noise layer, the purity-slack knob.
    """

    n_qubits: int
    key_bits: int
    seed: int
    query_lengths: tuple[int, ...] = (2, 3)
    mode: str = "fixed"
    depolarize: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "query_lengths", tuple(int(q) for q in self.query_lengths))
        if self.mode not in ("fixed", "controlled", "measured"):
            raise ValueError(f"unknown query mode {self.mode!r}")
        if not 0.0 <= self.depolarize <= 1.0:
            raise ValueError("depolarize must lie in [0, 1]")
        if any(q < 1 for q in self.query_lengths):
            raise ValueError("query lengths must be positive")

    @property
    def uses_ancilla(self) -> bool:
        return False

    @property
    def n_queries(self) -> int:
        return len(self.query_lengths)

    def keys(self) -> list[str]:
        return all_keys(self.key_bits)

    def query_string(self, k: str, i: int) -> str:
        return Rng(derive_seed("pru-x", self.seed, k, i)).bits(self.query_lengths[i])

    def layers(self, k: str, length_fn: LengthFunction) -> list[Op]:
        if len(k) != self.key_bits:
            raise ValueError(f"key {k!r} has {len(k)} bits, expected {self.key_bits}")
        n = self.n_qubits
        ops: list[Op] = [haar_gate(range(n), derive_seed("pru-u", self.seed, k, 0), "U0")]
        for i, d in enumerate(self.query_lengths):
            width = length_fn(d) + 1
            if self.mode == "fixed":
                if width > n:
                    raise DimensionError(f"S_x for |x|={d} needs {width} qubits, candidate has {n}")
                ops.append(SwapQuery(self.query_string(k, i), tuple(range(width))))
            else:
                if d + width > n:
                    raise DimensionError(f"controlled query on |x|={d} needs {d + width} qubits")
                ops.append(ControlledSwapQuery(tuple(range(d)), tuple(range(d, d + width)), self.mode == "measured"))
            ops.append(haar_gate(range(n), derive_seed("pru-u", self.seed, k, i + 1), f"U{i + 1}"))
        if self.depolarize > 0:
            ops.append(Depolarize(self.depolarize))
        return ops

    def unitary_part(self, k: str, length_fn: LengthFunction) -> np.ndarray:
        """U_T ... U_0 with every query dropped."""
        return compose_gates(self.layers(k, length_fn), self.n_qubits)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["query_lengths"] = list(self.query_lengths)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PruCandidate":
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_dict(cls, d: dict) -> "PruCandidate":
        return cls(**{**d, "query_lengths": tuple(d["query_lengths"])})


def pru_apply(c: PruCandidate, oracle: ChfsInstance, k: str, rho, *, resolve=None) -> DensityMatrix:
    """G_k(rho); ``resolve`` overrides how S_x matrices are obtained."""
    m = _matrix(rho)
    if m.shape != (1 << c.n_qubits,) * 2:
        raise DimensionError(f"candidate acts on {c.n_qubits} qubits, got a state of shape {m.shape}")
    out = run_density(c.layers(k, oracle.length_fn), m, c.n_qubits, resolve or oracle_resolver(oracle))
    return DensityMatrix(out, c.n_qubits, check=False)


# ---------------------------------------------------------------- PRSG candidates


class QuasiPureViolation(RuntimeError):
    """A candidate declared quasi-pure left its ancilla away from |0>."""


class PrsgOutput(NamedTuple):
    output: DensityMatrix
    pre_trace: DensityMatrix
    measurement_log: list[tuple[tuple[int, ...], float]]
    ancilla_fidelity: float


@dataclass(frozen=True)
class PrsgCandidate:
    """Nonadaptive product-form generator V_k(|phi_x1> ... |phi_xt> |0*>).

    Qubit layout: ``t`` output registers Y_i of l(lam) qubits, then an extra
    output register E of ``lam`` qubits that doubles as the query-input X,
    then the ancilla Lambda of ``lam.bit_length()`` qubits.  Each step measures
    Lambda and makes a universal-oracle query.  With ``coin > 0`` Lambda is
    prepared in sqrt(1-coin)|lam> + sqrt(coin)|lam-1>, so the intermediate
    measurement is genuinely random and the ancilla is not reset on the
    minority branch.
    """

    key_bits: int
    seed: int
    t: int = 2
    lam: int = 2
    length_fn: LengthFunction = field(default_factory=LengthFunction.two_floor_log)
    coin: float = 0.0
    quasi_pure: bool = True
    fidelity_threshold: float = 1.0 - 1e-9

    def __post_init__(self):
        if self.t < 0 or self.lam < 1:
            raise ValueError("t must be >= 0 and lam >= 1")
        if not 0.0 <= self.coin <= 1.0:
            raise ValueError("coin must lie in [0, 1]")
        if self.coin > 0 and self.lam < 2:
            raise ValueError("coin branch needs lam >= 2")

    @property
    def ell(self) -> int:
        return self.length_fn(self.lam)

    @property
    def output_qubits(self) -> int:
        return self.t * self.ell + self.lam

    @property
    def ancilla_qubits(self) -> int:
        return self.lam.bit_length()

    @property
    def n_total(self) -> int:
        return self.output_qubits + self.ancilla_qubits

    def y_register(self, i: int) -> tuple[int, ...]:
        return tuple(range(i * self.ell, (i + 1) * self.ell))

    @property
    def x_register(self) -> tuple[int, ...]:
        start = self.t * self.ell
        return tuple(range(start, start + self.lam))

    @property
    def lambda_register(self) -> tuple[int, ...]:
        return tuple(range(self.output_qubits, self.n_total))

    def keys(self) -> list[str]:
        return all_keys(self.key_bits)

    def query_string(self, k: str, i: int) -> str:
        return Rng(derive_seed("prsg-x", self.seed, k, i)).bits(self.lam)

    def declared_queries(self, k: str) -> list[tuple[int, str]]:
        return [(self.lam, self.query_string(k, i)) for i in range(self.t)]

    def _flip(self, qubits: Sequence[int], bits: str) -> list[Gate]:
        return [pauli_x(q) for q, b in zip(qubits, bits) if b == "1"]

    def ops(self, k: str) -> list[Op]:
        if len(k) != self.key_bits:
            raise ValueError(f"key {k!r} has {len(k)} bits, expected {self.key_bits}")
        lq, xq = self.lambda_register, self.x_register
        lam_bits = format(self.lam, f"0{len(lq)}b")
        ops: list[Op] = []
        if self.coin > 0:
            amp = np.zeros(1 << len(lq), dtype=complex)
            amp[self.lam] = math.sqrt(1.0 - self.coin)
            amp[self.lam - 1] = math.sqrt(self.coin)
            ops.append(Gate(lq, preparation_unitary(amp), "coin"))
        else:
            ops += self._flip(lq, lam_bits)
        xs = [self.query_string(k, i) for i in range(self.t)]
        prev = "0" * self.lam
        for i, x in enumerate(xs):
            diff = "".join("1" if a != b else "0" for a, b in zip(prev, x))
            ops += self._flip(xq, diff)
            ops.append(Measure(lq))
            ops.append(StateQuery(lq, xq, self.y_register(i)))
            prev = x
        # uncompute X and Lambda, then the keyed Haar unitary on the output
        ops += self._flip(xq, prev)
        ops += self._flip(lq, lam_bits)
        ops.append(haar_gate(range(self.output_qubits), derive_seed("prsg-v", self.seed, k), "V"))
        return ops

    def unitary_part(self, k: str) -> np.ndarray:
        """U_t ... U_0 on all output and ancilla qubits, queries removed.

        Valid because no gate touches a Y register before its query.
        """
        ops = self.ops(k)
        touched: set[int] = set()
        for op in ops:
            if isinstance(op, Gate):
                touched |= set(op.qubits)
            elif isinstance(op, StateQuery) and touched & set(op.y_qubits):
                raise ValueError("a gate acts on a query register before the query")
        return compose_gates(ops, self.n_total)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["length_fn"] = self.length_fn.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PrsgCandidate":
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_dict(cls, d: dict) -> "PrsgCandidate":
        return cls(**{**d, "length_fn": LengthFunction.from_dict(d["length_fn"])})


def prsg_gen(c: PrsgCandidate, oracle: ChfsInstance, k: str) -> PrsgOutput:
    """Exact output channel of the candidate as a mixture over measurement branches."""
    if oracle.length_fn != c.length_fn:
        raise ValueError("oracle length function differs from the candidate's")
    n = c.n_total
    _check_cap(n, oracle.max_qubits)
    start = np.zeros(1 << n, dtype=complex)
    start[0] = 1.0
    branches = run_branches(c.ops(k), start, n, oracle)
    vecs = np.stack([np.sqrt(b.prob) * b.vec for b in branches])
    pre = vecs.T @ vecs.conj()
    spec = SubsystemSpec([1 << c.output_qubits, 1 << c.ancilla_qubits])
    out = partial_trace_matrix(pre, spec, [0])
    anc = partial_trace_matrix(pre, spec, [1])
    fid = float(anc[0, 0].real)
    if c.quasi_pure and fid < c.fidelity_threshold:
        raise QuasiPureViolation(f"ancilla fidelity with |0> is {fid:.6g} < {c.fidelity_threshold}")
    log = [(b.outcomes, b.prob) for b in branches]
    return PrsgOutput(
        DensityMatrix(out, c.output_qubits, check=False),
        DensityMatrix(pre, n, check=False),
        log,
        fid,
    )


# ---------------------------------------------------------------- games


@dataclass(frozen=True)
class GameResult:
    advantage: float
    trials: int
    rate_real: float
    rate_ideal: float
    standard_error: float
    label: str = ""
    details: tuple = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["details"] = [x.to_dict() if isinstance(x, GameResult) else x for x in self.details]
        return d


def _game_trial(args):
    adversary, arm, rng = args
    return int(adversary(arm(rng.child(0)), rng.child(1)))


def distinguishing_game(
    adversary: Callable,
    real_arm: Callable,
    ideal_arm: Callable,
    trials: int,
    rng: Rng,
    *,
    label: str = "",
    workers: int = 1,
) -> GameResult:
    """Empirical |Pr[A(real) = 1] - Pr[A(ideal) = 1]| over independent trials.

    ``real_arm``/``ideal_arm`` map an Rng to a challenge and ``adversary`` maps
    (challenge, Rng) to a bit.  Trial i of each arm uses its own child stream,
    so results do not depend on ``workers``.
    """
    from .parallel import parallel_map

    if trials < 1:
        raise ValueError("trials must be positive")
    rates = []
    for arm_id, arm in enumerate((real_arm, ideal_arm)):
        base = rng.child(arm_id)
        bits = parallel_map(_game_trial, [(adversary, arm, base.child(i)) for i in range(trials)], workers)
        rates.append(sum(bits) / trials)
    pr, pi = rates
    se = math.sqrt(pr * (1 - pr) / trials + pi * (1 - pi) / trials)
    return GameResult(abs(pr - pi), trials, pr, pi, se, label)


@dataclass(frozen=True)
class KeyedChallenge:
    """Classical-access challenge answering x with Gen(k, x) for a hidden k."""

    params: PrfsgParams
    key: str

    def query(self, x: str) -> np.ndarray:
        return prfsg_gen(self.params, self.key, x).amplitudes


class HaarFunctionChallenge:
    """Lazily sampled Haar state per input: the ideal function-like family."""

    def __init__(self, n_qubits: int, rng: Rng):
        self.n_qubits = n_qubits
        self.rng = rng
        self._table: dict[str, np.ndarray] = {}

    def query(self, x: str) -> np.ndarray:
        if x not in self._table:
            self._table[x] = haar_state(self.n_qubits, self.rng.child(int(x, 2) if x else 0)).amplitudes
        return self._table[x]


@dataclass(frozen=True)
class RealArm:
    params: PrfsgParams

    def __call__(self, rng: Rng) -> KeyedChallenge:
        k = format(int(rng.gen.integers(0, 1 << self.params.key_bits)), f"0{self.params.key_bits}b")
        return KeyedChallenge(self.params, k)


@dataclass(frozen=True)
class IdealArm:
    params: PrfsgParams

    def __call__(self, rng: Rng) -> HaarFunctionChallenge:
        return HaarFunctionChallenge(self.params.output_qubits, rng)


def _swap_pass(a: np.ndarray, b: np.ndarray, rng: Rng) -> bool:
    p = (1.0 + abs(np.vdot(a, b)) ** 2) / 2.0
    return bool(rng.random() < p)


@dataclass(frozen=True)
class ZeroQueryAdversary:
    def __call__(self, challenge, rng: Rng) -> int:
        return int(rng.random() < 0.5)

    @property
    def queries(self) -> int:
        return 0


@dataclass(frozen=True)
class KeyGuessAdversary:
    """Guess ``guesses`` distinct keys; guess j is checked at input x_j = j with
    ``tests`` swap tests against the oracle state phi_{guess||x_j}.  Outputs 1
    when every test of some guess passes."""

    params: PrfsgParams
    guesses: int
    tests: int

    def __post_init__(self):
        if self.guesses > 1 << self.params.input_bits:
            raise ValueError("need a distinct input per guess")
        if self.guesses > 1 << self.params.key_bits:
            raise ValueError("more guesses than keys")

    @property
    def queries(self) -> int:
        return self.guesses * self.tests

    def __call__(self, challenge, rng: Rng) -> int:
        kb, mb = self.params.key_bits, self.params.input_bits
        picks = rng.gen.choice(1 << kb, size=self.guesses, replace=False)
        hit = False
        for j, g in enumerate(picks):
            x = format(j, f"0{mb}b")
            ref = self.params.oracle.state(format(int(g), f"0{kb}b") + x).amplitudes
            ch = challenge.query(x)
            if all(_swap_pass(ref, ch, rng) for _ in range(self.tests)):
                hit = True
        return int(hit)


@dataclass(frozen=True)
class CollisionAdversary:
    """Probe the challenge for structure: swap-test its answers on two inputs."""

    params: PrfsgParams
    pairs: int

    @property
    def queries(self) -> int:
        return 2 * self.pairs

    def __call__(self, challenge, rng: Rng) -> int:
        mb = self.params.input_bits
        passes = 0
        for j in range(self.pairs):
            a = format((2 * j) % (1 << mb), f"0{mb}b")
            b = format((2 * j + 1) % (1 << mb), f"0{mb}b")
            passes += _swap_pass(challenge.query(a), challenge.query(b), rng)
        return int(passes > self.pairs * 0.5 + 0.5 * math.sqrt(self.pairs))


@dataclass(frozen=True)
class InversionAdversary:
    """Given the key explicitly: test the challenge against Gen(k, x)."""

    params: PrfsgParams
    tests: int = 16

    def __call__(self, challenge, rng: Rng) -> int:
        k = getattr(challenge, "key", None)
        if k is None:
            # ideal arm: test against a fixed key, as the adversary would
            k = "0" * self.params.key_bits
        x = "0" * self.params.input_bits
        ref = self.params.oracle.state(k + x).amplitudes
        return int(all(_swap_pass(ref, challenge.query(x), rng) for _ in range(self.tests)))


def _suite(params: PrfsgParams, q: int) -> list[tuple[str, Callable]]:
    advs: list[tuple[str, Callable]] = [("zero-query", ZeroQueryAdversary())]
    cap = min(1 << params.input_bits, 1 << params.key_bits)
    tests = 1
    while tests <= q:
        g = min(q // tests, cap)
        if g >= 1:
            advs.append((f"key-guess g={g} c={tests}", KeyGuessAdversary(params, g, tests)))
        tests *= 2
    if params.input_bits >= 1:
        advs.append((f"collision pairs={max(1, q // 2)}", CollisionAdversary(params, max(1, q // 2))))
    return advs


def prfsg_hybrid_adversary_suite(
    params: PrfsgParams,
    q: int,
    *,
    trials: int = 400,
    rng: Rng | None = None,
    workers: int = 1,
) -> GameResult:
    """Run the generic adversary library with query budget ``q``; report the max."""
    if params.key_bits > 10:
        raise ValueError("the suite enumerates keys; keep key_bits <= 10")
    rng = rng or Rng(0)
    results = []
    for i, (name, adv) in enumerate(_suite(params, q)):
        results.append(
            distinguishing_game(adv, RealArm(params), IdealArm(params), trials, rng.child(i), label=name, workers=workers)
        )
    best = max(results, key=lambda r: r.advantage)
    return GameResult(best.advantage, trials, best.rate_real, best.rate_ideal, best.standard_error, best.label, tuple(results))


def prfsg_sanity_inversion(params: PrfsgParams, *, trials: int = 200, rng: Rng | None = None) -> GameResult:
    rng = rng or Rng(0)
    return distinguishing_game(InversionAdversary(params), RealArm(params), IdealArm(params), trials, rng, label="inversion")


def _haar_swap_moment(dim: int, c: int) -> float:
    """E[((1 + X)/2)^c] for X = |<a|b>|^2 ~ Beta(1, dim - 1)."""
    # E[X^i] = 1 / binom(dim - 1 + i, i)
    return sum(math.comb(c, i) / math.comb(dim - 1 + i, i) for i in range(c + 1)) / 2.0**c


def key_guess_exact(adv: KeyGuessAdversary) -> tuple[float, float]:
    """Exact (real, ideal) acceptance of the key-guess adversary on the fixed oracle.

    The real arm averages over the key and over the ordered guess tuples; the
    ideal arm uses the Haar moments of independent challenge states.
    """
    import itertools

    p = adv.params
    kb, mb = p.key_bits, p.input_bits
    if kb > 4:
        raise ValueError("exact enumeration is limited to key_bits <= 4")
    keys = all_keys(kb)
    g, c = adv.guesses, adv.tests
    xs = [format(j, f"0{mb}b") for j in range(g)]
    # pass[j][guess][key] for the swap test at input x_j
    amps = {(kk, x): p.oracle.state(kk + x).amplitudes for kk in keys for x in xs}
    prob = np.empty((g, len(keys), len(keys)))
    for j, x in enumerate(xs):
        for a, ka in enumerate(keys):
            for b, kb_ in enumerate(keys):
                prob[j, a, b] = ((1.0 + abs(np.vdot(amps[ka, x], amps[kb_, x])) ** 2) / 2.0) ** c
    total = 0.0
    tuples = list(itertools.permutations(range(len(keys)), g))
    for key in range(len(keys)):
        for tup in tuples:
            miss = 1.0
            for j, guess in enumerate(tup):
                miss *= 1.0 - prob[j, guess, key]
            total += 1.0 - miss
    real = total / (len(keys) * len(tuples))
    ideal = 1.0 - (1.0 - _haar_swap_moment(1 << p.output_qubits, c)) ** g
    return real, ideal
