"""Gate-list circuits with oracle queries and intermediate measurements.

Two simulators share the op vocabulary:

* :func:`run_density` pushes a density matrix through the ops (used for the
  no-ancilla PRU candidates, where a query is the reflection ``S_x``);
* :func:`run_branches` keeps an explicit list of pure measurement branches
  (used for PRSG candidates, whose queries write ``|phi_x>`` into a register
  that is still ``|0>``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence, Union

import numpy as np

from .hilbert import DimensionError, _apply_to_axes, apply_gate, apply_gate_dm, dephase, haar_unitary_matrix, register_values
from .oracle import ChfsInstance, _controlled_blocks
from .rng import Rng

__all__ = [
    "Gate",
    "SwapQuery",
    "ControlledSwapQuery",
    "StateQuery",
    "Measure",
    "Depolarize",
    "Op",
    "Branch",
    "haar_gate",
    "pauli_x",
    "preparation_unitary",
    "run_density",
    "run_branches",
    "compose_gates",
    "oracle_resolver",
]

_X = np.array([[0, 1], [1, 0]], dtype=complex)


@lru_cache(maxsize=4096)
def _haar_cached(dim: int, seed: int) -> np.ndarray:
    m = haar_unitary_matrix(dim, Rng(seed))
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class Gate:
    qubits: tuple[int, ...]
    matrix: np.ndarray
    label: str = ""


def haar_gate(qubits: Sequence[int], seed: int, label: str = "haar") -> Gate:
    qubits = tuple(qubits)
    return Gate(qubits, _haar_cached(1 << len(qubits), int(seed)), label)


def pauli_x(qubit: int) -> Gate:
    return Gate((qubit,), _X, "x")


def preparation_unitary(phi: np.ndarray) -> np.ndarray:
    """A unitary W with W|0> = |phi> exactly (phased Householder reflection)."""
    phi = np.asarray(phi, dtype=complex)
    a = phi[0]
    alpha = a / abs(a) if abs(a) > 1e-15 else 1.0
    e0 = np.zeros_like(phi)
    e0[0] = alpha
    v = e0 - phi
    nv = np.linalg.norm(v)
    if nv < 1e-15:
        h = np.eye(phi.size, dtype=complex)
    else:
        v = v / nv
        h = np.eye(phi.size, dtype=complex) - 2.0 * np.outer(v, v.conj())
    # h maps alpha|0> to phi, so alpha * h maps |0> to phi
    return alpha * h


@dataclass(frozen=True)
class SwapQuery:
    """S_x on ``qubits`` (|qubits| = l(|x|) + 1), x fixed by the circuit."""

    x: str
    qubits: tuple[int, ...]


@dataclass(frozen=True)
class ControlledSwapQuery:
    """sum_x |x><x| (x) S_x with x read from a register; optionally measured first."""

    x_qubits: tuple[int, ...]
    y_qubits: tuple[int, ...]
    classical: bool = False


@dataclass(frozen=True)
class StateQuery:
    """Universal-oracle query: Lambda is read (already measured), then the
    length-lambda prefix of X selects |phi_x>, written into the leading qubits
    of Y, which must still be |0>."""

    lambda_qubits: tuple[int, ...]
    x_qubits: tuple[int, ...]
    y_qubits: tuple[int, ...]


@dataclass(frozen=True)
class Measure:
    qubits: tuple[int, ...]


@dataclass(frozen=True)
class Depolarize:
    """Global depolarizing noise rho -> (1-p) rho + p I/d."""

    p: float


Op = Union[Gate, SwapQuery, ControlledSwapQuery, StateQuery, Measure, Depolarize]

SwapResolver = Callable[[str], np.ndarray]


def oracle_resolver(oracle: ChfsInstance) -> SwapResolver:
    return lambda x: oracle.swap(x).matrix


def run_density(ops: Sequence[Op], rho: np.ndarray, n: int, resolve: SwapResolver) -> np.ndarray:
    rho = np.array(rho, dtype=complex)
    if rho.shape != (1 << n, 1 << n):
        raise DimensionError(f"state of shape {rho.shape} does not match {n} qubits")
    for op in ops:
        if isinstance(op, Gate):
            rho = apply_gate_dm(rho, op.matrix, op.qubits, n)
        elif isinstance(op, SwapQuery):
            s = resolve(op.x)
            if s.shape[0] != 1 << len(op.qubits):
                raise DimensionError(f"S_{op.x} has dim {s.shape[0]} but acts on {len(op.qubits)} qubits")
            rho = apply_gate_dm(rho, s, op.qubits, n)
        elif isinstance(op, ControlledSwapQuery):
            xq, yq = list(op.x_qubits), list(op.y_qubits)
            if op.classical:
                rho = dephase(rho, xq, n)
            blocks = {i: resolve(format(i, f"0{len(xq)}b")) for i in range(1 << len(xq))}
            if any(b.shape[0] != 1 << len(yq) for b in blocks.values()):
                raise DimensionError("controlled query blocks do not match the Y register")
            t = rho.reshape([2] * (2 * n))
            t = _controlled_blocks(t, xq, yq, blocks)
            t = _controlled_blocks(t, [n + q for q in xq], [n + q for q in yq], {k: v.conj() for k, v in blocks.items()})
            rho = t.reshape(1 << n, 1 << n)
        elif isinstance(op, Measure):
            rho = dephase(rho, list(op.qubits), n)
        elif isinstance(op, Depolarize):
            rho = (1.0 - op.p) * rho + op.p * np.eye(1 << n) / (1 << n)
        else:
            raise TypeError(f"op {type(op).__name__} is not supported in density simulation")
    return rho


@dataclass
class Branch:
    prob: float
    vec: np.ndarray
    outcomes: tuple[int, ...] = field(default_factory=tuple)


def _register_value(vec: np.ndarray, qubits: Sequence[int], n: int) -> int:
    vals = register_values(qubits, n)
    support = np.abs(vec) > 1e-12
    found = np.unique(vals[support])
    if found.size != 1:
        raise ValueError(f"register {list(qubits)} is not classical in this branch")
    return int(found[0])


def run_branches(
    ops: Sequence[Op],
    vec: np.ndarray,
    n: int,
    oracle: ChfsInstance,
    *,
    prune: float = 1e-14,
) -> list[Branch]:
    """Exact branch-by-branch simulation of a pure circuit with measurements."""
    branches = [Branch(1.0, np.array(vec, dtype=complex))]
    for op in ops:
        if isinstance(op, Gate):
            for b in branches:
                b.vec = apply_gate(b.vec, op.matrix, op.qubits, n)
        elif isinstance(op, Measure):
            vals = register_values(op.qubits, n)
            nxt = []
            for b in branches:
                for v in range(1 << len(op.qubits)):
                    proj = np.where(vals == v, b.vec, 0.0)
                    p = float(np.vdot(proj, proj).real)
                    if p > prune:
                        nxt.append(Branch(b.prob * p, proj / np.sqrt(p), b.outcomes + (v,)))
            branches = nxt
        elif isinstance(op, StateQuery):
            for b in branches:
                b.vec = _state_query(b.vec, op, n, oracle)
        else:
            raise TypeError(f"op {type(op).__name__} is not supported in branch simulation")
    return branches


def _state_query(vec: np.ndarray, op: StateQuery, n: int, oracle: ChfsInstance) -> np.ndarray:
    lam = _register_value(vec, op.lambda_qubits, n)
    if lam == 0 or lam > len(op.x_qubits):
        return vec
    ell = oracle.length_fn(lam)
    if ell > len(op.y_qubits):
        raise DimensionError(f"l({lam})={ell} exceeds the Y register of {len(op.y_qubits)} qubits")
    yq = list(op.y_qubits[:ell])
    # the target register must be fresh, as for the isometry oracle
    if np.any(np.abs(vec[register_values(yq, n) != 0]) > 1e-10):
        raise ValueError("query output register is not |0>")
    xq = list(op.x_qubits[:lam])
    blocks = {i: preparation_unitary(oracle.state(format(i, f"0{lam}b")).amplitudes) for i in range(1 << lam)}
    t = _controlled_blocks(vec.reshape([2] * n), xq, yq, blocks)
    return t.reshape(-1)


def compose_gates(ops: Sequence[Op], n: int) -> np.ndarray:
    """Dense product of the Gate ops, skipping queries and measurements."""
    m = np.eye(1 << n, dtype=complex).reshape([2] * n + [1 << n])
    for op in ops:
        if isinstance(op, Gate):
            m = _apply_to_axes(m, op.matrix, list(op.qubits))
    return m.reshape(1 << n, 1 << n)
