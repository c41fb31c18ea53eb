"""Dense finite-dimensional quantum linear algebra.

States are stored as numpy arrays in big-endian qubit order: qubit 0 is the
most significant tensor factor, so ``kron(a, b)`` puts ``a`` on the lower
qubit indices.  The wrapper types validate on construction and are read-only
afterwards, which makes them safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .rng import Rng

__all__ = [
    "DEFAULT_MAX_QUBITS",
    "STRUCT_TOL",
    "DERIVED_TOL",
    "DimensionError",
    "PureState",
    "DensityMatrix",
    "UnitaryMatrix",
    "SubsystemSpec",
    "ClosestPure",
    "as_density",
    "basis_state",
    "haar_state",
    "haar_unitary",
    "trace_norm",
    "trace_distance",
    "partial_trace",
    "reduced_density",
    "purity",
    "closest_pure_state",
    "tensor_product",
    "apply_unitary",
    "operator_norm_distance",
    "apply_gate",
    "apply_gate_dm",
    "permute_qubits",
    "projector",
    "maximally_mixed",
    "ket_to_dm",
    "haar_vectors",
    "haar_unitary_matrix",
    "partial_trace_matrix",
    "register_values",
    "dephase",
]

DEFAULT_MAX_QUBITS = 12
STRUCT_TOL = 1e-10
DERIVED_TOL = 1e-8


class DimensionError(ValueError):
    """Raised when shapes disagree or a register exceeds the dimension cap."""


def _check_cap(n_qubits: int, max_qubits: int) -> None:
    if n_qubits < 0:
        raise DimensionError(f"negative qubit count {n_qubits}")
    if n_qubits > max_qubits:
        raise DimensionError(f"{n_qubits} qubits exceeds the cap of {max_qubits}")


def _qubits_of(dim: int) -> int:
    n = dim.bit_length() - 1
    if 1 << n != dim:
        raise DimensionError(f"dimension {dim} is not a power of two")
    return n


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray
    n_qubits: int

    def __init__(self, amplitudes, n_qubits: int | None = None, *, check: bool = True):
        amps = _frozen(np.ravel(amplitudes))
        n = _qubits_of(amps.size) if n_qubits is None else int(n_qubits)
        if amps.size != 1 << n:
            raise DimensionError(f"{amps.size} amplitudes do not describe {n} qubits")
        if check:
            norm = float(np.vdot(amps, amps).real)
            if abs(norm - 1.0) > STRUCT_TOL:
                raise ValueError(f"state norm^2 {norm!r} differs from 1")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "n_qubits", n)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def dm(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.n_qubits, check=False)

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __repr__(self) -> str:
        return f"PureState(n_qubits={self.n_qubits})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray
    n_qubits: int

    def __init__(self, matrix, n_qubits: int | None = None, *, check: bool = True):
        m = _frozen(matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got {m.shape}")
        n = _qubits_of(m.shape[0]) if n_qubits is None else int(n_qubits)
        if m.shape[0] != 1 << n:
            raise DimensionError(f"matrix of size {m.shape[0]} does not describe {n} qubits")
        if check:
            if np.max(np.abs(m - m.conj().T), initial=0.0) > STRUCT_TOL:
                raise ValueError("density matrix is not Hermitian")
            tr = np.trace(m).real
            if abs(tr - 1.0) > STRUCT_TOL:
                raise ValueError(f"density matrix trace {tr!r} differs from 1")
            if np.linalg.eigvalsh(m)[0] < -STRUCT_TOL:
                raise ValueError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "n_qubits", n)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self) -> str:
        return f"DensityMatrix(n_qubits={self.n_qubits})"


@dataclass(frozen=True, eq=False)
class UnitaryMatrix:
    matrix: np.ndarray

    def __init__(self, matrix, *, check: bool = True):
        m = _frozen(matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"unitary must be square, got {m.shape}")
        if check:
            err = np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0]))
            if err > DERIVED_TOL:
                raise ValueError(f"matrix is not unitary (Frobenius error {err:.3g})")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return _qubits_of(self.dim)

    def dagger(self) -> "UnitaryMatrix":
        return UnitaryMatrix(self.matrix.conj().T, check=False)

    def __matmul__(self, other: "UnitaryMatrix") -> "UnitaryMatrix":
        return UnitaryMatrix(self.matrix @ other.matrix, check=False)

    def __repr__(self) -> str:
        return f"UnitaryMatrix(dim={self.dim})"


@dataclass(frozen=True)
class SubsystemSpec:
    """Local dimensions d_1..d_m of a composite system."""

    local_dims: tuple[int, ...]

    def __init__(self, local_dims: Sequence[int]):
        dims = tuple(int(d) for d in local_dims)
        if not dims:
            raise DimensionError("empty subsystem spec")
        if any(d < 2 for d in dims):
            raise DimensionError(f"local dimensions must be >= 2, got {dims}")
        object.__setattr__(self, "local_dims", dims)

    @classmethod
    def qubits(cls, n: int) -> "SubsystemSpec":
        return cls([2] * n)

    @classmethod
    def from_sizes(cls, qubit_counts: Sequence[int]) -> "SubsystemSpec":
        return cls([2**q for q in qubit_counts])

    @property
    def m(self) -> int:
        return len(self.local_dims)

    @property
    def total_dim(self) -> int:
        return math.prod(self.local_dims)

    def dim_of(self, parts) -> int:
        return math.prod(self.local_dims[i] for i in parts)

    def check(self, dim: int) -> None:
        if self.total_dim != dim:
            raise DimensionError(f"subsystem dims {self.local_dims} do not multiply to {dim}")


class ClosestPure(NamedTuple):
    state: PureState
    distance: float
    degenerate: bool


def as_density(state: PureState | DensityMatrix) -> DensityMatrix:
    return state.dm() if isinstance(state, PureState) else state


def ket_to_dm(vec: np.ndarray) -> np.ndarray:
    return np.outer(vec, vec.conj())


def basis_state(bits: str | int, n_qubits: int | None = None) -> PureState:
    if isinstance(bits, str):
        n = len(bits)
        index = int(bits, 2) if bits else 0
    else:
        n, index = int(n_qubits), int(bits)
    amps = np.zeros(1 << n, dtype=complex)
    amps[index] = 1.0
    return PureState(amps, n, check=False)


def maximally_mixed(n_qubits: int) -> DensityMatrix:
    d = 1 << n_qubits
    return DensityMatrix(np.eye(d) / d, n_qubits, check=False)


def projector(vectors: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the column span of ``vectors``."""
    q, _ = np.linalg.qr(np.atleast_2d(vectors))
    return q @ q.conj().T


def haar_state(n_qubits: int, rng: Rng, *, max_qubits: int = DEFAULT_MAX_QUBITS) -> PureState:
    _check_cap(n_qubits, max_qubits)
    z = rng.complex_normal(1 << n_qubits)
    return PureState(z / np.linalg.norm(z), n_qubits, check=False)


def haar_vectors(n_qubits: int, count: int, rng: Rng, *, max_qubits: int = DEFAULT_MAX_QUBITS) -> np.ndarray:
    """``count`` Haar-random state vectors as rows of a (count, 2^n) array."""
    _check_cap(n_qubits, max_qubits)
    z = rng.complex_normal((count, 1 << n_qubits))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def haar_unitary_matrix(dim: int, rng: Rng) -> np.ndarray:
    z = rng.complex_normal((dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    # phase-correct so the distribution is exactly Haar
    ph = np.where(np.abs(d) > 0, d / np.abs(d), 1.0)
    return q * ph


def haar_unitary(n_qubits: int, rng: Rng, *, max_qubits: int = DEFAULT_MAX_QUBITS) -> UnitaryMatrix:
    _check_cap(n_qubits, max_qubits)
    return UnitaryMatrix(haar_unitary_matrix(1 << n_qubits, rng), check=False)


def _matrix(x) -> np.ndarray:
    if isinstance(x, DensityMatrix):
        return x.matrix
    if isinstance(x, PureState):
        return ket_to_dm(x.amplitudes)
    return np.asarray(x)


def trace_norm(a: np.ndarray) -> float:
    """Schatten 1-norm of a Hermitian matrix."""
    return float(np.sum(np.abs(np.linalg.eigvalsh(a))))


def trace_distance(a, b) -> float:
    ma, mb = _matrix(a), _matrix(b)
    if ma.shape != mb.shape:
        raise DimensionError(f"shape mismatch {ma.shape} vs {mb.shape}")
    return 0.5 * trace_norm(ma - mb)


def _split_axes(spec: SubsystemSpec, keep: Sequence[int]) -> tuple[list[int], list[int]]:
    keep = sorted(set(int(k) for k in keep))
    for k in keep:
        if not 0 <= k < spec.m:
            raise DimensionError(f"subsystem index {k} outside 0..{spec.m - 1}")
    drop = [i for i in range(spec.m) if i not in keep]
    return keep, drop


def partial_trace_matrix(rho: np.ndarray, spec: SubsystemSpec, keep: Sequence[int]) -> np.ndarray:
    spec.check(rho.shape[0])
    keep, drop = _split_axes(spec, keep)
    m = spec.m
    dims = spec.local_dims
    t = rho.reshape(dims + dims)
    perm = keep + drop + [m + i for i in keep] + [m + i for i in drop]
    dk, dd = spec.dim_of(keep), spec.dim_of(drop)
    t = t.transpose(perm).reshape(dk, dd, dk, dd)
    return np.einsum("ajbj->ab", t)


def partial_trace(rho: DensityMatrix, spec: SubsystemSpec, keep: Sequence[int]) -> DensityMatrix:
    out = partial_trace_matrix(rho.matrix, spec, keep)
    return DensityMatrix(out, _qubits_of(out.shape[0]), check=False)


def reduced_density(psi: np.ndarray, spec: SubsystemSpec, keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix of a pure state vector without forming |psi><psi|."""
    spec.check(psi.size)
    keep, drop = _split_axes(spec, keep)
    t = psi.reshape(spec.local_dims).transpose(keep + drop)
    mat = t.reshape(spec.dim_of(keep), spec.dim_of(drop))
    return mat @ mat.conj().T


def purity(rho) -> float:
    m = _matrix(rho)
    # Tr(rho^2) for Hermitian rho is the squared Frobenius norm
    return float(np.vdot(m, m).real)


def closest_pure_state(rho: DensityMatrix) -> ClosestPure:
    """Top eigenvector of ``rho`` and its trace-norm distance ``||rho - psi||_1``.

    Ties in the top eigenvalue are broken towards the eigenvector returned
    first by ``eigh`` after sorting by index, and reported via ``degenerate``.
    """
    w, v = np.linalg.eigh(rho.matrix)
    top = w[-1]
    ties = np.flatnonzero(np.abs(w - top) <= DERIVED_TOL)
    degenerate = ties.size > 1
    vec = v[:, ties[0]] if degenerate else v[:, -1]
    # canonical phase: first significant amplitude real-positive
    nz = np.flatnonzero(np.abs(vec) > 1e-12)[0]
    vec = vec * (abs(vec[nz]) / vec[nz])
    psi = PureState(vec / np.linalg.norm(vec), rho.n_qubits, check=False)
    dist = trace_norm(rho.matrix - ket_to_dm(psi.amplitudes))
    return ClosestPure(psi, dist, bool(degenerate))


def tensor_product(*items):
    """Kronecker product of states or unitaries (all of one kind)."""
    if not items:
        raise ValueError("tensor_product needs at least one factor")
    kind = type(items[0])
    if any(type(x) is not kind for x in items):
        raise TypeError("cannot mix state and operator types in tensor_product")
    if kind is PureState:
        out = items[0].amplitudes
        for it in items[1:]:
            out = np.kron(out, it.amplitudes)
        return PureState(out, sum(i.n_qubits for i in items), check=False)
    if kind is DensityMatrix:
        out = items[0].matrix
        for it in items[1:]:
            out = np.kron(out, it.matrix)
        return DensityMatrix(out, sum(i.n_qubits for i in items), check=False)
    if kind is UnitaryMatrix:
        out = items[0].matrix
        for it in items[1:]:
            out = np.kron(out, it.matrix)
        return UnitaryMatrix(out, check=False)
    raise TypeError(f"unsupported factor type {kind.__name__}")


def apply_unitary(u: UnitaryMatrix, state):
    if u.dim != state.dim:
        raise DimensionError(f"unitary of dim {u.dim} applied to state of dim {state.dim}")
    if isinstance(state, PureState):
        return PureState(u.matrix @ state.amplitudes, state.n_qubits, check=False)
    m = u.matrix @ state.matrix @ u.matrix.conj().T
    return DensityMatrix(m, state.n_qubits, check=False)


def operator_norm_distance(u, v) -> float:
    """min over global phase theta of ||U - e^{i theta} V||_op for unitaries.

    With e^{i a_j} the eigenvalues of U^dagger V the minimum is 2 sin(L/4),
    where L is the shortest arc of the unit circle covering every a_j.
    """
    mu = u.matrix if isinstance(u, UnitaryMatrix) else np.asarray(u)
    mv = v.matrix if isinstance(v, UnitaryMatrix) else np.asarray(v)
    if mu.shape != mv.shape:
        raise DimensionError(f"shape mismatch {mu.shape} vs {mv.shape}")
    phases = np.sort(np.mod(np.angle(np.linalg.eigvals(mu.conj().T @ mv)), 2 * np.pi))
    gaps = np.diff(np.concatenate([phases, [phases[0] + 2 * np.pi]]))
    arc = 2 * np.pi - gaps.max()
    return float(2.0 * np.sin(arc / 4.0))


def _apply_to_axes(t: np.ndarray, mat: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    k = len(axes)
    g = mat.reshape([2] * (2 * k))
    out = np.tensordot(g, t, axes=(list(range(k, 2 * k)), list(axes)))
    # tensordot puts the gate's output axes first; move them back in place
    return np.moveaxis(out, list(range(k)), list(axes))


def apply_gate(vec: np.ndarray, gate: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Apply a 2^k x 2^k gate on ``qubits`` of an n-qubit state vector."""
    qubits = list(qubits)
    if gate.shape != (1 << len(qubits), 1 << len(qubits)):
        raise DimensionError(f"gate shape {gate.shape} does not act on {len(qubits)} qubits")
    if not qubits:
        return vec * gate[0, 0]
    t = vec.reshape([2] * n)
    return _apply_to_axes(t, gate, qubits).reshape(-1)


def apply_gate_dm(rho: np.ndarray, gate: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Conjugate an n-qubit density matrix by a gate on ``qubits``."""
    qubits = list(qubits)
    if not qubits:
        return rho * abs(gate[0, 0]) ** 2
    t = rho.reshape([2] * (2 * n))
    t = _apply_to_axes(t, gate, qubits)
    t = _apply_to_axes(t, gate.conj(), [n + q for q in qubits])
    return t.reshape(1 << n, 1 << n)


def permute_qubits(vec: np.ndarray, order: Sequence[int], n: int) -> np.ndarray:
    """Reorder qubits so that new qubit i is old qubit ``order[i]``."""
    return vec.reshape([2] * n).transpose(list(order)).reshape(-1)


def register_values(qubits: Sequence[int], n: int) -> np.ndarray:
    """For every basis index of an n-qubit space, the integer held by ``qubits``.

    The first listed qubit is the most significant bit of the value.
    """
    idx = np.arange(1 << n)
    val = np.zeros(1 << n, dtype=np.int64)
    for q in qubits:
        val = (val << 1) | ((idx >> (n - 1 - q)) & 1)
    return val


def dephase(rho: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Measure ``qubits`` in the computational basis, keeping the unlabelled mixture."""
    if not len(qubits):
        return rho
    key = register_values(qubits, n)
    return np.where(key[:, None] == key[None, :], rho, 0.0)
