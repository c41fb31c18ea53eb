"""Common Haar function-like state (CHFS) oracles.

A :class:`ChfsInstance` assigns an independent Haar-random state
``|phi_x>`` on ``length_fn(|x|)`` qubits to every bit string ``x``.  States are
sampled lazily from a per-string child seed, so an instance is fully described
by ``(master_seed, length_fn)`` and replays identically in any process.

Two query models are offered on top of the instance:

* the isometry oracle ``sum_x |x><x| (x) |phi_x>``, appending a fresh register;
* the unitarized oracle ``sum_x |x><x| (x) S_x`` where ``S_x`` is the reflection
  exchanging ``|0...0>`` and ``|phi_x>|1>``.
"""

from __future__ import annotations

import enum
import json
import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hilbert import (
    DEFAULT_MAX_QUBITS,
    DensityMatrix,
    DimensionError,
    PureState,
    UnitaryMatrix,
    _check_cap,
    dephase,
    haar_state,
    register_values,
)
from .rng import Rng, derive_seed

__all__ = [
    "LengthKind",
    "LengthFunction",
    "ChfsInstance",
    "SwapUnitary",
    "oracle_state",
    "swap_unitary",
    "swap_matrix",
    "isometry_query",
    "unitarized_query",
    "universal_query",
    "controlled_swap_matrix",
    "check_bitstring",
]


class LengthKind(str, enum.Enum):
    IDENTITY = "identity"
    FLOOR_LOG = "floor_log"
    TWO_FLOOR_LOG = "two_floor_log"
    CONSTANT = "constant"


@dataclass(frozen=True)
class LengthFunction:
    """Output length l(|x|) of the oracle states.

    Logarithmic kinds are clamped below at 1 so that every nonempty input
    produces at least one qubit.
    """

    kind: LengthKind = LengthKind.IDENTITY
    c: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", LengthKind(self.kind))
        if self.kind is LengthKind.CONSTANT and self.c < 1:
            raise ValueError("constant length must be >= 1")
        if self.kind is not LengthKind.CONSTANT:
            # c only matters for constant lengths; keep equality meaningful
            object.__setattr__(self, "c", 1)

    @classmethod
    def identity(cls) -> "LengthFunction":
        return cls(LengthKind.IDENTITY)

    @classmethod
    def floor_log(cls) -> "LengthFunction":
        return cls(LengthKind.FLOOR_LOG)

    @classmethod
    def two_floor_log(cls) -> "LengthFunction":
        return cls(LengthKind.TWO_FLOOR_LOG)

    @classmethod
    def constant(cls, c: int) -> "LengthFunction":
        return cls(LengthKind.CONSTANT, int(c))

    def __call__(self, n: int) -> int:
        n = int(n)
        if n < 1:
            raise ValueError(f"length function is defined for n >= 1, got {n}")
        if self.kind is LengthKind.IDENTITY:
            return n
        if self.kind is LengthKind.FLOOR_LOG:
            # floor(log2 n) in exact integer arithmetic
            return max(1, n.bit_length() - 1)
        if self.kind is LengthKind.TWO_FLOOR_LOG:
            # floor(2 log2 n) = floor(log2 n^2)
            return max(1, (n * n).bit_length() - 1)
        return self.c

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value}
        if self.kind is LengthKind.CONSTANT:
            d["c"] = self.c
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LengthFunction":
        return cls(LengthKind(d["kind"]), int(d.get("c", 1)))


def check_bitstring(x: str) -> str:
    if not isinstance(x, str) or not x or set(x) - {"0", "1"}:
        raise ValueError(f"expected a nonempty bit string, got {x!r}")
    return x


class ChfsInstance:
    """One sample of the oracle family, materialized on demand."""

    def __init__(
        self,
        master_seed: int,
        length_fn: LengthFunction | None = None,
        *,
        max_qubits: int = DEFAULT_MAX_QUBITS,
    ):
        self.master_seed = int(master_seed) & ((1 << 64) - 1)
        self.length_fn = length_fn or LengthFunction.identity()
        self.max_qubits = max_qubits
        self._cache: dict[str, PureState] = {}
        self._swaps: dict[str, SwapUnitary] = {}
        self._lock = threading.Lock()

    def __getstate__(self):
        # caches and the lock are rebuilt lazily on the other side
        return {"master_seed": self.master_seed, "length_fn": self.length_fn, "max_qubits": self.max_qubits}

    def __setstate__(self, state):
        self.__init__(state["master_seed"], state["length_fn"], max_qubits=state["max_qubits"])

    def __repr__(self) -> str:
        return f"ChfsInstance(master_seed={self.master_seed}, length_fn={self.length_fn})"

    def length(self, x: str) -> int:
        return self.length_fn(len(x))

    def state(self, x: str) -> PureState:
        cached = self._cache.get(x)
        if cached is not None:
            return cached
        check_bitstring(x)
        ell = self.length(x)
        _check_cap(ell, self.max_qubits)
        psi = haar_state(ell, Rng(derive_seed("chfs", self.master_seed, x)), max_qubits=self.max_qubits)
        with self._lock:
            return self._cache.setdefault(x, psi)

    def swap(self, x: str) -> "SwapUnitary":
        cached = self._swaps.get(x)
        if cached is not None:
            return cached
        s = SwapUnitary.build(x, self.state(x), self.max_qubits)
        with self._lock:
            return self._swaps.setdefault(x, s)

    def states_for_length(self, n_bits: int) -> np.ndarray:
        """Rows are |phi_x> for x = 0..2^n_bits - 1 in lexicographic order."""
        return np.stack([self.state(format(i, f"0{n_bits}b")).amplitudes for i in range(1 << n_bits)])

    @property
    def materialized(self) -> int:
        return len(self._cache)

    def descriptor(self) -> dict:
        return {"master_seed": self.master_seed, "length_fn": self.length_fn.to_dict()}

    def to_json(self) -> str:
        return json.dumps(self.descriptor(), sort_keys=True)

    @classmethod
    def from_descriptor(cls, d: dict, **kw) -> "ChfsInstance":
        return cls(int(d["master_seed"]), LengthFunction.from_dict(d["length_fn"]), **kw)

    @classmethod
    def from_json(cls, text: str, **kw) -> "ChfsInstance":
        return cls.from_descriptor(json.loads(text), **kw)


def swap_matrix(phi: np.ndarray) -> np.ndarray:
    """Reflection exchanging |0...0> and |phi>|1> on len(phi)*2 dimensions."""
    target = np.kron(phi, np.array([0.0, 1.0]))
    zero = np.zeros_like(target)
    zero[0] = 1.0
    v = (zero - target) / np.sqrt(2.0)
    return np.eye(target.size, dtype=complex) - 2.0 * np.outer(v, v.conj())


@dataclass(frozen=True, eq=False)
class SwapUnitary:
    x: str
    unitary: UnitaryMatrix

    @classmethod
    def build(cls, x: str, phi: PureState, max_qubits: int = DEFAULT_MAX_QUBITS) -> "SwapUnitary":
        _check_cap(phi.n_qubits + 1, max_qubits)
        return cls(x, UnitaryMatrix(swap_matrix(phi.amplitudes), check=False))

    @property
    def matrix(self) -> np.ndarray:
        return self.unitary.matrix

    @property
    def n_qubits(self) -> int:
        return self.unitary.n_qubits


def oracle_state(inst: ChfsInstance, x: str) -> PureState:
    return inst.state(x)


def swap_unitary(inst: ChfsInstance, x: str) -> SwapUnitary:
    return inst.swap(x)


def _as_dm(state) -> tuple[np.ndarray, int]:
    if isinstance(state, PureState):
        return np.outer(state.amplitudes, state.amplitudes.conj()), state.n_qubits
    return state.matrix, state.n_qubits


def _check_register(qubits: Sequence[int], n: int, name: str) -> list[int]:
    qubits = [int(q) for q in qubits]
    if len(set(qubits)) != len(qubits) or any(not 0 <= q < n for q in qubits):
        raise DimensionError(f"register {name}={qubits} invalid for {n} qubits")
    return qubits


def isometry_query(
    inst: ChfsInstance,
    state: PureState | DensityMatrix,
    x_qubits: Sequence[int],
    *,
    classical_access: bool = False,
):
    """Apply ``sum_x |x><x|_X (x) |phi_x>_Y``; Y is appended after the last qubit.

    With ``classical_access`` the X register is measured first and a
    :class:`DensityMatrix` is returned even for pure input.
    """
    n = state.n_qubits
    xq = _check_register(x_qubits, n, "X")
    if not xq:
        raise DimensionError("X register must be nonempty")
    ell = inst.length_fn(len(xq))
    _check_cap(n + ell, inst.max_qubits)
    table = inst.states_for_length(len(xq))
    w = table[register_values(xq, n)]  # row i holds |phi_{x(i)}>
    if isinstance(state, PureState) and not classical_access:
        out = (state.amplitudes[:, None] * w).reshape(-1)
        return PureState(out, n + ell, check=False)
    rho, _ = _as_dm(state)
    if classical_access:
        rho = dephase(rho, xq, n)
    out = np.einsum("ik,ij,kl->ijkl", rho, w, w.conj())
    d = rho.shape[0] * w.shape[1]
    return DensityMatrix(out.reshape(d, d), n + ell, check=False)


def _controlled_blocks(t: np.ndarray, ctrl: list[int], tgt: list[int], blocks: dict[int, np.ndarray]) -> np.ndarray:
    """Apply ``blocks[x]`` to the ``tgt`` axes on the slice where ``ctrl`` holds x."""
    nc, nt = len(ctrl), len(tgt)
    rest = [a for a in range(t.ndim) if a not in ctrl and a not in tgt]
    perm = ctrl + tgt + rest
    u = t.transpose(perm).reshape((1 << nc, 1 << nt, -1))
    out = np.empty_like(u)
    for x in range(1 << nc):
        out[x] = blocks[x] @ u[x]
    out = out.reshape([2] * t.ndim)
    return out.transpose(np.argsort(perm))


def unitarized_query(
    inst: ChfsInstance,
    state: PureState | DensityMatrix,
    x_qubits: Sequence[int],
    y_qubits: Sequence[int],
    *,
    classical_access: bool = False,
):
    """Apply ``sum_x |x><x|_X (x) S_x`` with S_x acting on Y (|Y| = l(|X|) + 1)."""
    n = state.n_qubits
    xq = _check_register(x_qubits, n, "X")
    yq = _check_register(y_qubits, n, "Y")
    if set(xq) & set(yq):
        raise DimensionError("X and Y registers overlap")
    if not xq:
        raise DimensionError("X register must be nonempty")
    if len(yq) != inst.length_fn(len(xq)) + 1:
        raise DimensionError(f"|Y|={len(yq)} but l(|X|)+1={inst.length_fn(len(xq)) + 1}")
    blocks = {i: inst.swap(format(i, f"0{len(xq)}b")).matrix for i in range(1 << len(xq))}
    if isinstance(state, PureState) and not classical_access:
        t = _controlled_blocks(state.amplitudes.reshape([2] * n), xq, yq, blocks)
        return PureState(t.reshape(-1), n, check=False)
    rho, _ = _as_dm(state)
    if classical_access:
        rho = dephase(rho, xq, n)
    t = rho.reshape([2] * (2 * n))
    t = _controlled_blocks(t, xq, yq, blocks)
    conj_blocks = {k: v.conj() for k, v in blocks.items()}
    t = _controlled_blocks(t, [n + q for q in xq], [n + q for q in yq], conj_blocks)
    d = 1 << n
    return DensityMatrix(t.reshape(d, d), n, check=False)


def controlled_swap_matrix(inst: ChfsInstance, d: int) -> UnitaryMatrix:
    """The full controlled reflection S_d on 2d+1 qubits (X first, then Y)."""
    n = d + inst.length_fn(d) + 1
    _check_cap(n, inst.max_qubits)
    dim_y = 1 << (n - d)
    out = np.zeros((1 << n, 1 << n), dtype=complex)
    for i in range(1 << d):
        sl = slice(i * dim_y, (i + 1) * dim_y)
        out[sl, sl] = inst.swap(format(i, f"0{d}b")).matrix
    return UnitaryMatrix(out, check=False)


def universal_query(
    inst: ChfsInstance,
    state: PureState | DensityMatrix,
    lambda_qubits: Sequence[int],
    x_qubits: Sequence[int],
    *,
    y_size: int | None = None,
    classical_access: bool = False,
) -> DensityMatrix:
    """Measure Lambda to get ``lam``, then query the length-``lam`` oracle.

    The oracle reads the first ``lam`` qubits of X.  The appended register has
    ``y_size`` qubits (default: the largest output length reachable from Lambda);
    shorter outputs occupy its leading qubits and the rest stay |0>.  Outcomes
    ``lam = 0`` or ``lam > |X|`` make no query.
    """
    n = state.n_qubits
    lq = _check_register(lambda_qubits, n, "Lambda")
    xq = _check_register(x_qubits, n, "X")
    if set(lq) & set(xq):
        raise DimensionError("Lambda and X registers overlap")
    valid = [lam for lam in range(1, min(len(xq), (1 << len(lq)) - 1) + 1)]
    if y_size is None:
        y_size = max((inst.length_fn(lam) for lam in valid), default=0)
    _check_cap(n + y_size, inst.max_qubits)
    rho, _ = _as_dm(state)
    rho = dephase(rho, lq, n)
    key = register_values(lq, n)
    dim_y = 1 << y_size
    out = np.zeros((rho.shape[0] * dim_y,) * 2, dtype=complex)
    for lam in np.unique(key):
        mask = key == lam
        branch = np.where(mask[:, None] & mask[None, :], rho, 0.0)
        if not np.any(branch):
            continue
        if 1 <= lam <= len(xq):
            ell = inst.length_fn(int(lam))
            if ell > y_size:
                raise DimensionError(f"l({lam})={ell} exceeds the Y register of {y_size} qubits")
            table = inst.states_for_length(int(lam))
            w = table[register_values(xq[:lam], n)]
            if ell < y_size:
                w = np.kron(w, np.eye(1, 1 << (y_size - ell)))
            if classical_access:
                branch = dephase(branch, xq[:lam], n)
        else:
            w = np.zeros((rho.shape[0], dim_y), dtype=complex)
            w[:, 0] = 1.0
        out += np.einsum("ik,ij,kl->ijkl", branch, w, w.conj()).reshape(out.shape)
    return DensityMatrix(out, n + y_size, check=False)

