import logging
import math

import numpy as np
import pytest
from scipy.stats import binom

from chfs_lab import (
    Alg1Config,
    Alg2Config,
    ChfsInstance,
    DensityMatrix,
    LengthFunction,
    PairBlocks,
    PrsgCandidate,
    PruCandidate,
    PurityBatteryConfig,
    QueryLearning,
    Rng,
    alg1_distinguish,
    alg1_run,
    alg2_distinguish,
    alg2_run,
    haar_state,
    haar_unitary_matrix,
    learn_queries,
    or_surrogate,
    p_k_subprotocol,
    pru_apply,
    prsg_gen,
    purity,
    swap_test_prob,
    tomography_resolver,
    trace_distance,
)

N_QUBITS, KAPPA = 5, 3


@pytest.fixture(scope="module")
def pru_setup():
    cand = PruCandidate(N_QUBITS, KAPPA, 31, (2, 3))
    oracle = ChfsInstance(77)
    return cand, oracle


@pytest.fixture(scope="module")
def prsg_setup():
    cand = PrsgCandidate(KAPPA, 41)
    oracle = ChfsInstance(88, LengthFunction.two_floor_log())
    return cand, oracle


def test_or_surrogate_accepts_single_hit():
    res = or_surrogate({"00": 1.0, "01": 0.0, "10": 0.0}, 0.1, 0.01)
    assert res.accepted and res.best_key == "00" and not res.promise_violated
    assert res.tester_accept_lower == pytest.approx(0.81 / 7)


def test_or_surrogate_rejects_small_scores(caplog):
    lam = 4
    scores = {format(i, "03b"): 1e-4 for i in range(8)}
    with caplog.at_level(logging.INFO, logger="chfs_lab.attacks"):
        res = or_surrogate(scores, 2**-lam, 2 ** (-2 * lam))
    assert not res.accepted and not res.promise_violated
    assert res.tester_accept_upper == pytest.approx(4 * 8 * 2**-8) and res.tester_accept_upper < 1
    assert "4N delta" in caplog.text


def test_or_surrogate_gap_flags_promise():
    res = or_surrogate({"0": 0.5, "1": 0.1}, 0.1, 0.01)
    assert not res.accepted and res.promise_violated
    with pytest.raises(ValueError):
        or_surrogate({}, 0.1, 0.1)


def test_alg1_config_standard():
    cfg = Alg1Config.standard(4, 2)
    assert cfg.r == 4800 and cfg.tau == 10 and cfg.battery.repetitions == 256
    assert Alg1Config().pass_count == 8


def test_p_k_identical_pure_block(rng):
    cfg = Alg1Config()
    rho = haar_state(3, rng).dm().matrix
    assert p_k_subprotocol(cfg, "0", PairBlocks(rho, rho, cfg.r), lambda s: s) == pytest.approx(1.0)


def test_p_k_haar_blocks_small(rng):
    cfg = Alg1Config()
    n = 5
    vals = []
    for i in range(200):
        a = haar_state(n, rng.child(2 * i)).dm().matrix
        b = haar_state(n, rng.child(2 * i + 1)).dm().matrix
        vals.append(p_k_subprotocol(cfg, "0", PairBlocks(a, b, cfg.r), lambda s, b=b: a))
    # each test passes with about 1/2 + 2^-(n+1); the 2/3 threshold tail is small
    tail = binom.sf(cfg.pass_count - 1, cfg.r, 0.5 + 2 ** -(n + 1))
    assert np.mean(vals) <= tail + 0.05


@pytest.mark.parametrize("n", [4, 5])
def test_haar_arm_single_test_pass_probability(n, rng):
    cand = PruCandidate(n, 1, 3, (1, 2))
    probs = []
    for i in range(1500):
        g = rng.child(n).child(i)
        oracle = ChfsInstance(10_000 + i)
        rho = haar_state(n, g.child(0)).dm().matrix
        u = haar_unitary_matrix(1 << n, g.child(1))
        probs.append(swap_test_prob(pru_apply(cand, oracle, "0", rho), u @ rho @ u.conj().T))
    probs = np.array(probs)
    se = probs.std(ddof=1) / math.sqrt(probs.size)
    assert abs(probs.mean() - (0.5 + 2 ** -(n + 1))) < 3 * se


def test_claim_44_pass_probability(rng):
    lam = 4
    psi = haar_state(3, rng.child(0)).amplitudes
    v = 0.97 * np.outer(psi, psi.conj()) + 0.03 * np.eye(8) / 8
    assert purity(v) >= 1 - 1 / lam
    f = np.outer(psi, psi.conj())
    assert trace_distance(f, v) <= 1 / 8
    assert swap_test_prob(f, v) >= 0.75


def test_hybrid_exact_for_short_queries(pru_setup, rng):
    cand, oracle = pru_setup
    cfg = Alg1Config(tau=3)
    resolve = tomography_resolver(cfg, oracle, rng.child(0))
    rho = haar_state(N_QUBITS, rng.child(1)).dm()
    for k in ("000", "110"):
        a = pru_apply(cand, oracle, k, rho)
        b = pru_apply(cand, oracle, k, rho, resolve=resolve)
        assert trace_distance(a, b) < 1e-9


def test_tomography_resolver_identity_above_tau(pru_setup, rng):
    _, oracle = pru_setup
    resolve = tomography_resolver(Alg1Config(tau=2), oracle, rng)
    assert np.allclose(resolve("101"), np.eye(16))
    assert not np.allclose(resolve("10"), np.eye(8))


def _haar_V(n, rng):
    u = haar_unitary_matrix(1 << n, rng)
    return lambda s: DensityMatrix(u @ s.matrix @ u.conj().T, n, check=False)


def test_alg1_separates_arms(pru_setup, rng):
    cand, oracle = pru_setup
    cfg = Alg1Config()
    real = alg1_run(cfg, lambda s: pru_apply(cand, oracle, "101", s), oracle, cand, rng.child(0))
    assert real.bit == 1 and real.or_result.best_key == "101"
    assert real.scores["101"] == pytest.approx(1.0)
    ideal = alg1_run(cfg, _haar_V(N_QUBITS, rng.child(2)), oracle, cand, rng.child(1))
    assert ideal.bit == 0 and max(ideal.scores.values()) < 1 - cfg.eps


def test_alg1_perturbed_tomography_still_accepts(pru_setup, rng):
    cand, oracle = pru_setup
    cfg = Alg1Config(noise_mode="perturbed", tomography_eps=0.01)
    assert alg1_distinguish(cfg, lambda s: pru_apply(cand, oracle, "011", s), oracle, cand, rng) == 1


def test_alg1_depolarized_candidate_is_flagged(rng):
    # strong noise: the default (64, 8) battery needs purity well below 1 - 1/lam
    cand = PruCandidate(N_QUBITS, 2, 5, (2, 3), depolarize=0.35)
    oracle = ChfsInstance(12)
    cfg = Alg1Config()
    lam = cfg.lam
    flags = []
    for i in range(64):
        res = alg1_run(cfg, lambda s: pru_apply(cand, oracle, "10", s), oracle, cand, rng.child(i))
        assert res.probe_purity <= 1 - 1 / lam
        flags.append(res.flagged)
        assert res.bit == 1
    assert np.mean(flags) >= 1 - 2**-lam


def test_alg1_reseed_invariance(pru_setup):
    cand, oracle = pru_setup
    cfg = Alg1Config()
    V = lambda s: pru_apply(cand, oracle, "010", s)  # noqa: E731
    bits = [alg1_distinguish(cfg, V, oracle, cand, Rng(s)) for s in range(20)]
    assert len(set(bits)) == 1


def test_learn_queries_modes_agree(prsg_setup):
    cand, oracle = prsg_setup
    for k in cand.keys():
        assert learn_queries(cand, oracle, k, "argmax") == learn_queries(cand, oracle, k, QueryLearning.DIRECT_INSPECTION)


def test_alg2_planted_key_scores_one(prsg_setup, rng):
    cand, oracle = prsg_setup
    out = prsg_gen(cand, oracle, "110").output
    res = alg2_run(Alg2Config(), out, oracle, cand, "argmax", rng)
    assert res.bit == 1 and not res.aborted
    assert res.scores["110"] == pytest.approx(1.0, abs=1e-9)


def test_alg2_haar_rejected(prsg_setup, rng):
    cand, oracle = prsg_setup
    for i in range(10):
        ch = haar_state(cand.output_qubits, rng.child(i)).dm()
        res = alg2_run(Alg2Config(), ch, oracle, cand, "argmax", rng.child(100 + i))
        assert res.bit == 0 and max(res.scores.values()) <= 2 * 0.75**6


def test_alg2_mixed_challenge_aborts(rng):
    cand = PrsgCandidate(2, 5, coin=0.5, quasi_pure=False)
    oracle = ChfsInstance(9, LengthFunction.two_floor_log())
    out = prsg_gen(cand, oracle, "01").output
    assert purity(out) <= 1 - 1 / 8
    runs = [alg2_run(Alg2Config(), out, oracle, cand, "argmax", rng.child(i)) for i in range(64)]
    assert np.mean([r.aborted for r in runs]) >= 1 - 2**-4
    assert all(r.bit == 1 for r in runs if r.aborted)


def test_alg2_config_standard():
    cfg = Alg2Config.standard(2, 2, 6)
    assert cfg.r == 40 and cfg.T == 20 * 40 * 40 * 25**3
    assert cfg.battery.repetitions == 16 * cfg.T * 2


def test_alg2_reseed_invariance(prsg_setup):
    cand, oracle = prsg_setup
    out = prsg_gen(cand, oracle, "001").output
    bits = [alg2_distinguish(Alg2Config(), out, oracle, cand, "argmax", Rng(s)) for s in range(20)]
    assert bits == [1] * 20
