"""Acceptance criteria 1-13 at their stated tolerances.

Each test records a PASS/FAIL line (printed in the terminal summary and to
stdout) and then asserts the criterion.  Nothing is loosened: a criterion
that cannot hold is left to fail, with diagnostics in the line.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from chfs_lab import Rng, SubsystemSpec, Verdict, lubkin_expectation, lubkin_product_mean
from chfs_lab import experiments as ex
from chfs_lab.cli import replay, run
from chfs_lab.lemmas import verify_lubkin, verify_purity_battery
from chfs_lab.parallel import default_workers
from chfs_lab.records import RunConfig

from conftest import ACCEPTANCE_LINES

SEED = 2026
WORKERS = default_workers()


def record(number: int, ok: bool, detail: str, elapsed: float, limit: float) -> bool:
    ok = ok and elapsed < limit
    line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f}s of {limit:.0f}s) {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def test_criterion_01_swap_test_identity():
    t0 = time.perf_counter()
    reps = ex.lemma_reports("swap_test", {"instances": 200, "trials": 10_000}, SEED, WORKERS)
    worst_z = max(abs(r.z) for r in reps)
    worst_gap = max(r.details["exact_gap"] for r in reps)
    outside = sum(abs(r.z) > 3 for r in reps)
    ok = len(reps) == 200 and outside == 0 and worst_gap <= 1e-10
    assert record(1, ok, f"pairs=200 outside_3SE={outside} max|z|={worst_z:.2f} exact_gap={worst_gap:.1e}",
                  time.perf_counter() - t0, 60)


def test_criterion_02_purity_battery():
    t0 = time.perf_counter()
    rep = verify_purity_battery(8, 4, 500, Rng(SEED))
    rate = rep.estimate
    ok = rate >= 0.90
    detail = (f"flag_rate={rate:.3f} need>=0.90 (claim {rep.claimed_value}); exact flag prob "
              f"{rep.details['exact_flag_prob']:.4f} with {rep.details['repetitions']} tests, threshold "
              f"{rep.details['threshold']}, expected failures {rep.details['expected_fails']:.1f}")
    assert record(2, ok, detail, time.perf_counter() - t0, 60)


def test_criterion_03_lubkin():
    t0 = time.perf_counter()
    rep = verify_lubkin(4, 20_000, Rng(SEED), keep=2)
    target = 4 / 5
    z = (rep.estimate - target) / rep.standard_error
    ok = abs(z) <= 4
    detail = (f"mean={rep.estimate:.4f} target=4/5 z={z:.1f}; formula value for a 4x4 cut is "
              f"{lubkin_expectation(4, 4):.4f} (z={rep.z:.2f})")
    small = verify_lubkin(2, 20_000, Rng(SEED).child(1), keep=1)
    detail += f"; 2-qubit 1|1 cut gives {small.estimate:.4f} vs 4/5"
    assert record(3, ok, detail, time.perf_counter() - t0, 60)


def test_criterion_04_product_test_haar():
    t0 = time.perf_counter()
    reps = ex.lemma_reports("product_test_haar", {"m": 4, "samples": 5000}, SEED, WORKERS)
    rep = reps[0]
    exact = Fraction(162, 272)
    assert lubkin_product_mean(SubsystemSpec.qubits(4)) == pytest.approx(float(exact), abs=1e-12)
    within = abs(rep.estimate - float(exact)) <= 4 * rep.standard_error
    below = rep.estimate < 0.6328
    symbolic = 2 * Fraction(3, 4) ** 13 <= Fraction(1, 20)
    ok = within and below and symbolic
    detail = f"mean={rep.estimate:.4f} +/- {rep.standard_error:.4f} vs 162/272; 2(3/4)^13={float(2 * Fraction(3, 4) ** 13):.4f}<=0.05"
    assert record(4, ok, detail, time.perf_counter() - t0, 120)


def test_criterion_05_overlap_concentration():
    t0 = time.perf_counter()
    reps = ex.lemma_reports("concentration_overlap", {"n": [1, 2, 3], "eps": [0.25, 0.5, 0.75], "samples": 100_000},
                            SEED, WORKERS)
    worst = max(abs(r.z) for r in reps)
    ok = len(reps) == 9 and worst <= 5
    assert record(5, ok, f"cells=9 max|z|={worst:.2f}", time.perf_counter() - t0, 120)


def test_criterion_06_haar_projection():
    t0 = time.perf_counter()
    reps = ex.lemma_reports("haar_projection", {"n": [2, 3, 4], "D": [1, 2], "samples": 10_000}, SEED, WORKERS)
    worst = max(abs(r.z) for r in reps)
    ok = len(reps) == 6 and worst <= 4
    assert record(6, ok, f"cells=6 max|z|={worst:.2f}", time.perf_counter() - t0, 60)


def test_criterion_07_measurement_decomposition():
    t0 = time.perf_counter()
    reps = ex.lemma_reports("measurement_decomposition", {"instances": 100, "t": 4, "eps": 0.02}, SEED, WORKERS)
    eps = [r.details["eps"] for r in reps]
    bound_ok = all(r.estimate <= r.details["t"] * r.details["eps"] + 1e-12 for r in reps)
    step_ok = all(min(r.details["step_probs"]) >= 1 - r.details["eps"] - 1e-12 for r in reps)
    ok = len(reps) == 100 and max(eps) <= 0.02 and bound_ok and step_ok and max(r.details["t"] for r in reps) <= 4
    slack = min(r.details["t"] * r.details["eps"] - r.estimate for r in reps)
    assert record(7, ok, f"circuits=100 max_eps={max(eps):.4f} min_slack={slack:.2e} steps_ok={step_ok}",
                  time.perf_counter() - t0, 120)


def test_criterion_08_gentle_measurement():
    t0 = time.perf_counter()
    gm = ex.lemma_reports("gentle_measurement", {"instances": 1000}, SEED, WORKERS)
    gs = ex.lemma_reports("gentle_subsystem", {"instances": 1000}, SEED, WORKERS)
    v_gm = sum(r.verdict is Verdict.VIOLATED for r in gm)
    v_gs = sum(r.verdict is Verdict.VIOLATED for r in gs)
    inc = sum(r.verdict is Verdict.INCONCLUSIVE for r in gs)
    ok = len(gm) == 1000 and len(gs) == 1000 and v_gm == 0 and v_gs == 0
    detail = (f"gentle violations={v_gm}/1000 (max ratio {max(r.estimate for r in gm):.3f}); fourth-root violations="
              f"{v_gs}/1000, hypothesis unmet={inc}")
    assert record(8, ok, detail, time.perf_counter() - t0, 120)


def test_criterion_09_algorithm_1():
    t0 = time.perf_counter()
    res = ex.run_alg1(n=5, kappa=3, lengths=(2, 3), tau=3, r=12, trials=50, seed=SEED, workers=WORKERS)
    s = res["summary"]
    ok = s["rate_real"] >= 0.9 and s["rate_ideal"] <= 0.1 and s["advantage"] >= 0.8
    detail = f"real={s['rate_real']:.2f} haar={s['rate_ideal']:.2f} advantage={s['advantage']:.2f}"
    assert record(9, ok, detail, time.perf_counter() - t0, 600)


def test_criterion_10_algorithm_2():
    t0 = time.perf_counter()
    res = ex.run_alg2(kappa=3, t=2, lam=2, r=4, trials=50, seed=SEED, workers=WORKERS)
    s = res["summary"]
    ok = s["d"] == 6 and s["rate_real"] >= 0.9 and s["rate_ideal"] <= 0.1 and s["advantage"] >= 0.8
    detail = f"d={s['d']} real={s['rate_real']:.2f} haar={s['rate_ideal']:.2f} advantage={s['advantage']:.2f}"
    assert record(10, ok, detail, time.perf_counter() - t0, 600)


def test_criterion_11_prfsg_game():
    t0 = time.perf_counter()
    game = ex.run_prfsg_game(kappa=8, m=4, q=16, trials=400, seed=SEED, workers=WORKERS)
    exact = ex.prfsg_exact_check(kappa=3, m=3, trials=2000, seed=SEED)
    adv = game["summary"]["max_advantage"]
    agree = abs(exact["z_real"]) <= 3 and abs(exact["z_ideal"]) <= 3
    ok = adv <= 0.25 and agree
    detail = (f"max_advantage={adv:.3f} ({game['summary']['best_adversary']}); kappa=3 exact adv="
              f"{exact['exact_advantage']:.3f} mc={exact['mc_advantage']:.3f} z=({exact['z_real']:.2f}, {exact['z_ideal']:.2f})")
    assert record(11, ok, detail, time.perf_counter() - t0, 600)


def test_criterion_12_conjecture_geometry():
    t0 = time.perf_counter()
    reps = ex.conjecture_reports((1, 2), (0.1, 0.3), (0.02, 0.05), "cap1", 1_000_000, SEED, WORKERS)
    analytic = all(r.details["analytic_ok"] for r in reps)
    worst = max(r.details["max_mc_z"] for r in reps)
    ok = len(reps) == 8 and analytic and worst <= 5
    assert record(12, ok, f"cells=8 analytic_ok={analytic} max_mc|z|={worst:.2f}", time.perf_counter() - t0, 120)


def test_criterion_13_determinism(tmp_path):
    t0 = time.perf_counter()
    configs = [
        RunConfig("lemma", SEED, {"id": "lubkin", "n": 4, "samples": 5000}, str(tmp_path), WORKERS),
        RunConfig("lemma", SEED, {"id": "gentle_subsystem", "instances": 100}, str(tmp_path), WORKERS),
        RunConfig("attack-prsg", SEED, {"trials": 5}, str(tmp_path), WORKERS),
        RunConfig("attack-pru", SEED, {"trials": 5}, str(tmp_path), WORKERS),
        RunConfig("prfsg-game", SEED, {"kappa": 4, "m": 4, "q": 4, "trials": 40, "exact_kappa": 0}, str(tmp_path), WORKERS),
        RunConfig("conjecture", SEED, {"n": 1, "eps": 0.3, "delta": 0.05, "samples": 20_000}, str(tmp_path), WORKERS),
    ]
    matches = []
    for cfg in configs:
        run(cfg)
    for path in sorted(tmp_path.glob("*.json")):
        ok, _, _ = replay(path)
        matches.append(ok)
    ok = len(matches) == len(configs) and all(matches)
    assert record(13, ok, f"records={len(matches)} identical={sum(matches)}", time.perf_counter() - t0, 60)
