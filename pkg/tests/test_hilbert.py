import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from chfs_lab import (
    DensityMatrix,
    DimensionError,
    PureState,
    Rng,
    SubsystemSpec,
    UnitaryMatrix,
    apply_unitary,
    basis_state,
    closest_pure_state,
    haar_state,
    haar_unitary,
    haar_vectors,
    maximally_mixed,
    operator_norm_distance,
    partial_trace,
    purity,
    tensor_product,
    trace_distance,
)

from conftest import random_dm


def test_rng_streams_are_reproducible():
    a, b = Rng(5, (1, 2)), Rng(5, (1, 2))
    assert np.array_equal(a.random(8), b.random(8))
    assert not np.array_equal(Rng(5).child(0).random(8), Rng(5).child(1).random(8))


def test_haar_state_zero_qubits(rng):
    s = haar_state(0, rng)
    assert s.dim == 1 and abs(abs(s.amplitudes[0]) - 1) < 1e-12


def test_haar_state_deterministic():
    a = haar_state(2, Rng(11)).amplitudes
    b = haar_state(2, Rng(11)).amplitudes
    assert np.array_equal(a, b)


def test_haar_state_cap():
    with pytest.raises(DimensionError):
        haar_state(13, Rng(0))


def test_haar_state_first_amplitude_mean(rng):
    p = np.abs(haar_vectors(1, 100_000, rng)[:, 0]) ** 2
    se = p.std(ddof=1) / math.sqrt(p.size)
    assert abs(p.mean() - 0.5) < 3 * se


def test_haar_unitary_is_unitary(rng):
    u = haar_unitary(3, rng)
    assert np.allclose(np.linalg.norm(u.matrix, axis=0), 1, atol=1e-10)
    assert np.linalg.norm(u.matrix.conj().T @ u.matrix - np.eye(8)) < 1e-8
    assert abs(abs(haar_unitary(0, rng).matrix[0, 0]) - 1) < 1e-12


def test_haar_invariance_ks(rng):
    w = haar_unitary(2, rng.child(0)).matrix
    a = haar_vectors(2, 10_000, rng.child(1))
    b = haar_vectors(2, 10_000, rng.child(2)) @ w.T
    assert stats.ks_2samp(np.abs(a[:, 0]) ** 2, np.abs(b[:, 0]) ** 2).pvalue > 1e-3


def test_haar_unitary_applied_to_haar_state(rng):
    u = haar_unitary(2, rng.child(0)).matrix
    fresh = np.abs(haar_vectors(2, 5000, rng.child(1))[:, 0]) ** 2
    rotated = np.abs((haar_vectors(2, 5000, rng.child(2)) @ u.T)[:, 0]) ** 2
    assert stats.ks_2samp(fresh, rotated).pvalue > 1e-3


@pytest.mark.parametrize(
    "a, b, expected",
    [
        ("0", "0", 0.0),
        ("0", "1", 1.0),
    ],
)
def test_trace_distance_basis(a, b, expected):
    assert trace_distance(basis_state(a).dm(), basis_state(b).dm()) == pytest.approx(expected, abs=1e-12)


def test_trace_distance_zero_plus():
    plus = PureState(np.array([1, 1]) / math.sqrt(2))
    got = trace_distance(basis_state("0").dm(), plus.dm())
    overlap = abs(plus.amplitudes[0]) ** 2
    assert got == pytest.approx(math.sqrt(1 - overlap), abs=1e-12)
    assert got == pytest.approx(1 / math.sqrt(2), abs=1e-12)


def test_trace_distance_mismatch():
    with pytest.raises(DimensionError):
        trace_distance(np.eye(2) / 2, np.eye(4) / 4)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 3))
def test_trace_distance_metric(seed, n):
    g = Rng(seed)
    a, b, c = (random_dm(n, g.child(i)) for i in range(3))
    dab, dba = trace_distance(a, b), trace_distance(b, a)
    assert dab == pytest.approx(dba, abs=1e-12)
    assert trace_distance(a, a) < 1e-9
    assert dab <= trace_distance(a, c) + trace_distance(c, b) + 1e-12
    assert 0 <= dab <= 1 + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32))
def test_partial_trace_contracts_distance(seed):
    g = Rng(seed)
    a, b = DensityMatrix(random_dm(3, g.child(0))), DensityMatrix(random_dm(3, g.child(1)))
    spec = SubsystemSpec([2, 4])
    for keep in ([0], [1]):
        assert trace_distance(partial_trace(a, spec, keep), partial_trace(b, spec, keep)) <= trace_distance(a, b) + 1e-12


def test_partial_trace_product_and_bell(rng):
    psi, phi = haar_state(1, rng.child(0)), haar_state(2, rng.child(1))
    prod = tensor_product(psi, phi).dm()
    red = partial_trace(prod, SubsystemSpec([2, 4]), [0])
    assert np.allclose(red.matrix, psi.dm().matrix, atol=1e-12)
    bell = PureState(np.array([1, 0, 0, 1]) / math.sqrt(2)).dm()
    assert np.allclose(partial_trace(bell, SubsystemSpec.qubits(2), [1]).matrix, np.eye(2) / 2, atol=1e-12)


def test_partial_trace_bad_index():
    with pytest.raises(DimensionError):
        partial_trace(maximally_mixed(2), SubsystemSpec.qubits(2), [2])


def test_purity_two_ways(rng):
    psi = haar_state(4, rng)
    spec = SubsystemSpec([4, 4])
    direct = purity(partial_trace(psi.dm(), spec, [0]))
    schmidt = np.linalg.svd(psi.amplitudes.reshape(4, 4), compute_uv=False)
    assert direct == pytest.approx(float(np.sum(schmidt**4)), abs=1e-8)


@pytest.mark.parametrize(
    "rho, expected",
    [
        (basis_state("01").dm(), 1.0),
        (maximally_mixed(3), 1 / 8),
        (DensityMatrix(np.diag([0.5, 0.5])), 0.5),
    ],
)
def test_purity_examples(rho, expected):
    assert purity(rho) == pytest.approx(expected)


def test_closest_pure_state():
    psi = basis_state("1")
    cp = closest_pure_state(psi.dm())
    assert cp.distance < 1e-12 and abs(cp.state.overlap(psi)) == pytest.approx(1)
    rho = DensityMatrix(np.diag([0.99, 0.01]))
    assert closest_pure_state(rho).distance <= 0.02 + 1e-12
    flat = closest_pure_state(maximally_mixed(1))
    assert flat.degenerate and np.allclose(flat.state.amplitudes, [1, 0])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.floats(0.0, 0.2))
def test_closest_pure_bound(seed, p):
    g = Rng(seed)
    psi = haar_state(2, g.child(0)).dm().matrix
    rho = DensityMatrix((1 - p) * psi + p * random_dm(2, g.child(1)))
    eps = 1 - purity(rho)
    lam = np.linalg.eigvalsh(rho.matrix)[-1]
    d = closest_pure_state(rho).distance
    assert d <= 2 * (1 - lam) + 1e-12
    assert d <= 1 - math.sqrt(max(0.0, 1 - 2 * eps)) + 1e-9


def test_density_validation():
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([0.7, 0.7]))
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[1, 1], [0, 0]]))
    with pytest.raises(ValueError):
        UnitaryMatrix(np.diag([1, 2]))
    with pytest.raises(DimensionError):
        SubsystemSpec([1, 4])


def test_operator_norm_distance_phase(rng):
    u = haar_unitary(2, rng)
    assert operator_norm_distance(u, u) < 1e-12
    shifted = UnitaryMatrix(np.exp(0.7j) * u.matrix)
    assert operator_norm_distance(u, shifted) < 1e-8


def test_apply_and_tensor(rng):
    psi = haar_state(2, rng.child(0))
    assert np.allclose(apply_unitary(UnitaryMatrix(np.eye(4)), psi).amplitudes, psi.amplitudes)
    t = tensor_product(psi, haar_state(1, rng.child(1)))
    assert np.linalg.norm(t.amplitudes) == pytest.approx(1)
