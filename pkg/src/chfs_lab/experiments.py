"""Seeded experiment drivers shared by the CLI and the acceptance suite.

Each driver takes plain parameters and a seed, derives every random stream
from that seed, and returns JSON-ready summaries.  Trials are independent
tasks so they can run on a process pool without changing the result.
"""

from __future__ import annotations

import itertools
import math
from typing import Any

import numpy as np

from .attacks import Alg1Config, Alg2Config, QueryLearning, alg1_run, alg2_run
from .hilbert import DensityMatrix, SubsystemSpec, haar_state, haar_unitary_matrix
from .lemmas import (
    CapCase,
    VerificationReport,
    conjecture_cap_geometry,
    engineered_circuit,
    random_density,
    random_projector,
    verify_concentration_overlap,
    verify_gentle_measurement,
    verify_gentle_subsystem,
    verify_haar_projection,
    verify_lipschitz_tail,
    verify_lubkin,
    verify_measurement_decomposition,
    verify_product_test_haar,
    verify_purity_battery,
    verify_purity_structure,
    verify_swap_test,
)
from .oracle import ChfsInstance, LengthFunction
from .parallel import parallel_map
from .primitives import (
    KeyGuessAdversary,
    PrfsgParams,
    PrsgCandidate,
    PruCandidate,
    distinguishing_game,
    key_guess_exact,
    prfsg_hybrid_adversary_suite,
    prfsg_sanity_inversion,
    pru_apply,
    prsg_gen,
)
from .primitives import IdealArm, RealArm
from .rng import Rng, derive_seed
from .statetests import PurityBatteryConfig

__all__ = [
    "LEMMA_IDS",
    "lemma_reports",
    "conjecture_reports",
    "run_alg1",
    "run_alg2",
    "run_prfsg_game",
    "prfsg_exact_check",
]


def _grid(params: dict, keys: list[str]) -> list[dict]:
    """Cartesian product over any list-valued entries among ``keys``."""
    axes = [(k, params[k] if isinstance(params[k], (list, tuple)) else [params[k]]) for k in keys]
    return [dict(zip([a for a, _ in axes], combo)) for combo in itertools.product(*[v for _, v in axes])]


# ---------------------------------------------------------------- lemma instances


def _swap_instance(i: int, rng: Rng) -> tuple[np.ndarray, np.ndarray]:
    n = 1 + i % 4
    rank_a = 1 + int(rng.gen.integers(0, 1 << n))
    rank_b = 1 + int(rng.gen.integers(0, 1 << n))
    return random_density(n, rng.child(0), rank_a), random_density(n, rng.child(1), rank_b)


def _gentle_instance(i: int, rng: Rng) -> tuple[np.ndarray, np.ndarray]:
    n = 1 + i % 3
    d = 1 << n
    proj = random_projector(n, 1 + int(rng.gen.integers(0, d)), rng.child(0))
    rho = random_density(n, rng.child(1), 1 + int(rng.gen.integers(0, d)))
    if i % 2:
        # pull the state towards the projector's range so eps is small
        inside = proj @ rho @ proj
        if np.trace(inside).real > 1e-9:
            eta = 10 ** rng.gen.uniform(-4, -0.5)
            rho = (1 - eta) * inside / np.trace(inside).real + eta * rho
    return rho, proj


def _subsystem_instance(i: int, rng: Rng) -> tuple[np.ndarray, np.ndarray, SubsystemSpec]:
    nb = 1 + i % 2
    db = 1 << nb
    a = haar_state(1, rng.child(0)).amplitudes
    sigma = random_density(nb, rng.child(1))
    eta = 10 ** rng.gen.uniform(-5, -0.7)
    rho = (1 - eta) * np.kron(np.outer(a, a.conj()), sigma) + eta * random_density(1 + nb, rng.child(2))
    kind = i % 3
    if kind == 0:
        proj = np.kron(np.eye(2), random_projector(nb, max(1, db // 2), rng.child(3)))
    elif kind == 1:
        proj = random_projector(1 + nb, 1 + int(rng.gen.integers(0, 2 * db)), rng.child(3))
    else:
        proj = np.kron(np.outer(a, a.conj()), np.eye(db))
    return rho, proj, SubsystemSpec([2, db])


def _lemma_cell(task) -> list[dict]:
    lemma_id, p, seed, stream = task
    rng = Rng(seed, (stream,))
    if lemma_id == "swap_test":
        reps = [verify_swap_test(*_swap_instance(i, rng.child(i)), p["trials"], rng.child(i).child(9)) for i in range(p["instances"])]
    elif lemma_id == "purity_battery":
        cfg = PurityBatteryConfig(p["repetitions"], p["threshold"]) if p.get("repetitions") else None
        reps = [verify_purity_battery(p["T"], p["lam"], p["batteries"], rng, cfg)]
    elif lemma_id == "lubkin":
        reps = [verify_lubkin(p["n"], p["samples"], rng, p.get("keep"))]
    elif lemma_id == "haar_projection":
        reps = [verify_haar_projection(p["n"], p["D"], p["samples"], rng)]
    elif lemma_id == "concentration_overlap":
        reps = [verify_concentration_overlap(p["n"], p["eps"], p["samples"], rng)]
    elif lemma_id == "product_test_haar":
        reps = [verify_product_test_haar(p["m"], p["samples"], rng)]
    elif lemma_id == "measurement_decomposition":
        reps = []
        for i in range(p["instances"]):
            g = rng.child(i)
            t = 1 + i % int(p["t"])
            circ = engineered_circuit(t, 2, p["eps"], g)
            psi = np.zeros(1 << circ.n_qubits, dtype=complex)
            psi[0] = 1.0
            reps.append(verify_measurement_decomposition(circ, psi))
    elif lemma_id == "gentle_measurement":
        reps = [verify_gentle_measurement(*_gentle_instance(i, rng.child(i))) for i in range(p["instances"])]
    elif lemma_id == "gentle_subsystem":
        reps = [verify_gentle_subsystem(*_subsystem_instance(i, rng.child(i))) for i in range(p["instances"])]
    elif lemma_id == "purity_structure":
        reps = []
        for i in range(p["instances"]):
            g = rng.child(i)
            a = haar_state(1, g.child(0)).amplitudes
            sb = random_density(1, g.child(1))
            noise = random_density(2, g.child(2))
            rho = (1 - p["p"]) * np.kron(np.outer(a, a.conj()), sb) + p["p"] * noise
            reps.append(verify_purity_structure(rho, SubsystemSpec([2, 2]), p["C"]))
    elif lemma_id == "lipschitz_tail":
        reps = [verify_lipschitz_tail(p["n"], p["m"], p["t"], p["samples"], rng)]
    else:
        raise ValueError(f"unknown lemma id {lemma_id!r}")
    return [r.to_dict() for r in reps]


LEMMA_DEFAULTS: dict[str, dict[str, Any]] = {
    "swap_test": {"instances": 200, "trials": 10_000},
    "purity_battery": {"T": 8, "lam": 4, "batteries": 500, "repetitions": 0, "threshold": 0},
    "lubkin": {"n": 4, "samples": 20_000, "keep": None},
    "haar_projection": {"n": [2, 3, 4], "D": [1, 2], "samples": 10_000},
    "concentration_overlap": {"n": [1, 2, 3], "eps": [0.25, 0.5, 0.75], "samples": 100_000},
    "product_test_haar": {"m": 4, "samples": 5_000},
    "measurement_decomposition": {"instances": 100, "t": 4, "eps": 0.02},
    "gentle_measurement": {"instances": 1000},
    "gentle_subsystem": {"instances": 1000},
    "purity_structure": {"instances": 1000, "p": 0.01, "C": 8.0},
    "lipschitz_tail": {"n": [4, 6], "m": 1, "t": 0.3, "samples": 20_000},
}
GRID_KEYS = {
    "haar_projection": ["n", "D"],
    "concentration_overlap": ["n", "eps"],
    "lipschitz_tail": ["n", "t"],
    "lubkin": ["n"],
    "product_test_haar": ["m"],
}
LEMMA_IDS = sorted(LEMMA_DEFAULTS)


def lemma_reports(lemma_id: str, params: dict | None, seed: int, workers: int = 1) -> list[VerificationReport]:
    if lemma_id not in LEMMA_DEFAULTS:
        raise ValueError(f"unknown lemma id {lemma_id!r}; choose from {', '.join(LEMMA_IDS)}")
    p = {**LEMMA_DEFAULTS[lemma_id], **{k: v for k, v in (params or {}).items() if v is not None}}
    cells = [{**p, **c} for c in _grid(p, GRID_KEYS.get(lemma_id, []))] if lemma_id in GRID_KEYS else [p]
    tasks = [(lemma_id, c, derive_seed("lemma", lemma_id, seed), i) for i, c in enumerate(cells)]
    out = parallel_map(_lemma_cell, tasks, workers)
    return [VerificationReport.from_dict(d) for cell in out for d in cell]


def _cap_cell(task) -> dict:
    n, eps, delta, case, samples, seed, stream = task
    return conjecture_cap_geometry(n, eps, delta, case, samples=samples, rng=Rng(seed, (stream,))).to_dict()


def conjecture_reports(
    ns=(1, 2), eps_grid=(0.1, 0.3), delta_grid=(0.02, 0.05), case="cap1", samples: int = 1_000_000, seed: int = 0, workers: int = 1
) -> list[VerificationReport]:
    cells = list(itertools.product(ns, eps_grid, delta_grid))
    tasks = [(n, e, d, CapCase(case), samples, derive_seed("cap", seed), i) for i, (n, e, d) in enumerate(cells)]
    return [VerificationReport.from_dict(d) for d in parallel_map(_cap_cell, tasks, workers)]


# ---------------------------------------------------------------- PRU attack


def _alg1_trial(task) -> dict:
    arm, i, seed, n, kappa, lengths, cfg_kw = task
    cfg = Alg1Config(**cfg_kw)
    cand = PruCandidate(n, kappa, derive_seed("alg1-candidate", seed), tuple(lengths))
    oracle = ChfsInstance(derive_seed("alg1-oracle", seed, i))
    rng = Rng(derive_seed("alg1-trial", seed, arm), (i,))
    key = format(int(rng.child(7).gen.integers(0, 1 << kappa)), f"0{kappa}b")
    if arm == "real":
        V = lambda s: pru_apply(cand, oracle, key, s)  # noqa: E731
    else:
        u = haar_unitary_matrix(1 << n, rng.child(8))
        V = lambda s: DensityMatrix(u @ s.matrix @ u.conj().T, n, check=False)  # noqa: E731
    res = alg1_run(cfg, V, oracle, cand, rng)
    return {
        "bit": res.bit,
        "flagged": res.flagged,
        "best_score": res.or_result.best_score,
        "best_key": res.or_result.best_key,
        "planted": key if arm == "real" else None,
        "promise_violated": res.or_result.promise_violated,
        "gap_regime": res.gap_regime,
    }


def run_alg1(
    n: int = 5, kappa: int = 3, lengths=(2, 3), tau: int = 3, r: int = 12, lam: int = 4,
    trials: int = 50, seed: int = 0, workers: int = 1,
) -> dict:
    cfg_kw = {"lam": lam, "tau": tau, "r": r}
    out = {}
    for arm in ("real", "ideal"):
        tasks = [(arm, i, seed, n, kappa, list(lengths), cfg_kw) for i in range(trials)]
        out[arm] = parallel_map(_alg1_trial, tasks, workers)
    rate_real = sum(t["bit"] for t in out["real"]) / trials
    rate_ideal = sum(t["bit"] for t in out["ideal"]) / trials
    return {
        "trials": out,
        "summary": {
            "rate_real": rate_real,
            "rate_ideal": rate_ideal,
            "advantage": abs(rate_real - rate_ideal),
            "mean_best_score_real": float(np.mean([t["best_score"] for t in out["real"]])),
            "mean_best_score_ideal": float(np.mean([t["best_score"] for t in out["ideal"]])),
        },
    }


# ---------------------------------------------------------------- PRSG attack


def _alg2_trial(task) -> dict:
    arm, i, seed, kappa, t, lam, r, learning = task
    cand = PrsgCandidate(kappa, derive_seed("alg2-candidate", seed), t=t, lam=lam)
    oracle = ChfsInstance(derive_seed("alg2-oracle", seed, i), LengthFunction.two_floor_log())
    rng = Rng(derive_seed("alg2-trial", seed, arm), (i,))
    key = format(int(rng.child(7).gen.integers(0, 1 << kappa)), f"0{kappa}b")
    if arm == "real":
        challenge = prsg_gen(cand, oracle, key).output
    else:
        challenge = haar_state(cand.output_qubits, rng.child(8)).dm()
    res = alg2_run(Alg2Config(r=r), challenge, oracle, cand, QueryLearning(learning), rng)
    best = res.or_result.best_score if res.or_result else None
    return {"bit": res.bit, "aborted": res.aborted, "best_score": best,
            "best_key": res.or_result.best_key if res.or_result else None, "planted": key if arm == "real" else None}


def run_alg2(
    kappa: int = 3, t: int = 2, lam: int = 2, r: int = 4, trials: int = 50, seed: int = 0,
    learning: str = "argmax", workers: int = 1,
) -> dict:
    out = {}
    for arm in ("real", "ideal"):
        tasks = [(arm, i, seed, kappa, t, lam, r, learning) for i in range(trials)]
        out[arm] = parallel_map(_alg2_trial, tasks, workers)
    rate_real = sum(x["bit"] for x in out["real"]) / trials
    rate_ideal = sum(x["bit"] for x in out["ideal"]) / trials
    d = PrsgCandidate(kappa, 0, t=t, lam=lam).output_qubits
    return {
        "trials": out,
        "summary": {"rate_real": rate_real, "rate_ideal": rate_ideal, "advantage": abs(rate_real - rate_ideal), "d": d},
    }


# ---------------------------------------------------------------- PRFSG game


def run_prfsg_game(kappa: int = 8, m: int = 4, q: int = 16, trials: int = 400, seed: int = 0, workers: int = 1) -> dict:
    oracle = ChfsInstance(derive_seed("prfsg-oracle", seed), LengthFunction.floor_log())
    params = PrfsgParams(kappa, m, oracle)
    res = prfsg_hybrid_adversary_suite(params, q, trials=trials, rng=Rng(derive_seed("prfsg-game", seed)), workers=workers)
    sanity = prfsg_sanity_inversion(params, trials=min(trials, 200), rng=Rng(derive_seed("prfsg-sanity", seed)))
    return {
        "suite": res.to_dict(),
        "sanity_inversion": sanity.to_dict(),
        "summary": {"max_advantage": res.advantage, "best_adversary": res.label, "q_over_2k": q / 2**kappa,
                    "sanity_advantage": sanity.advantage},
    }


def prfsg_exact_check(kappa: int = 3, m: int = 3, guesses: int = 2, tests: int = 2, trials: int = 2000, seed: int = 0) -> dict:
    """Exact enumeration of the key-guess game against its Monte Carlo estimate."""
    oracle = ChfsInstance(derive_seed("prfsg-exact-oracle", seed), LengthFunction.floor_log())
    params = PrfsgParams(kappa, m, oracle)
    adv = KeyGuessAdversary(params, guesses, tests)
    real, ideal = key_guess_exact(adv)
    mc = distinguishing_game(adv, RealArm(params), IdealArm(params), trials, Rng(derive_seed("prfsg-exact-mc", seed)))
    se_r = math.sqrt(real * (1 - real) / trials)
    se_i = math.sqrt(ideal * (1 - ideal) / trials)
    return {
        "exact_real": real, "exact_ideal": ideal, "exact_advantage": abs(real - ideal),
        "mc_real": mc.rate_real, "mc_ideal": mc.rate_ideal, "mc_advantage": mc.advantage,
        "z_real": (mc.rate_real - real) / se_r if se_r else 0.0,
        "z_ideal": (mc.rate_ideal - ideal) / se_i if se_i else 0.0,
        "trials": trials,
    }
