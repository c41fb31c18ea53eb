"""``chfs-lab`` command-line entry point.

Exit codes: 0 success, 1 a Violated verdict (or a replay mismatch), 2 usage
error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
import traceback
from pathlib import Path
from typing import Any

from . import experiments as ex
from .lemmas import Verdict, fit_cap_exponents
from .parallel import default_workers
from .records import COMMANDS, ExperimentRecord, RunConfig, plain, summary_bytes, version_string, write_csv, write_markdown

log = logging.getLogger("chfs_lab")

EXIT_OK, EXIT_VIOLATED, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(ValueError):
    pass


def _scalar_or_list(cast):
    def parse(text: str):
        parts = [p for p in text.split(",") if p.strip()]
        if not parts:
            raise argparse.ArgumentTypeError("empty value")
        vals = [cast(p) for p in parts]
        return vals[0] if len(vals) == 1 else vals

    parse.__name__ = cast.__name__
    return parse


INT = _scalar_or_list(int)
FLOAT = _scalar_or_list(float)

# flag name -> (type, help); the params dict uses the same names
COMMAND_FLAGS: dict[str, dict[str, tuple]] = {
    "lemma": {
        "id": (str, f"lemma id, one of: {', '.join(ex.LEMMA_IDS)}"),
        "n": (INT, "qubits (comma list for a grid)"),
        "D": (INT, "projection rank"),
        "m": (INT, "parts or queries"),
        "t": (FLOAT, "tail offset, or max measurements for measurement_decomposition"),
        "eps": (FLOAT, "epsilon"),
        "T": (int, "purity slack parameter"),
        "lam": (int, "security parameter"),
        "samples": (int, "Monte Carlo samples"),
        "trials": (int, "sampled tests per instance"),
        "instances": (int, "random instances"),
        "batteries": (int, "battery repetitions"),
        "repetitions": (int, "swap tests per battery (0 = standard setting)"),
        "threshold": (int, "battery failure threshold"),
        "keep": (int, "qubits kept in the Lubkin split"),
        "p": (float, "noise weight for purity_structure"),
        "C": (float, "product-structure constant"),
    },
    "conjecture": {
        "case": (str, "cap1, far2 or product2"),
        "n": (INT, "qubits (comma list)"),
        "eps": (FLOAT, "epsilon grid"),
        "delta": (FLOAT, "Delta grid"),
        "samples": (int, "Monte Carlo samples per cell"),
    },
    "attack-pru": {
        "n": (int, "qubits"),
        "kappa": (int, "key bits"),
        "lengths": (INT, "query lengths, comma separated"),
        "tau": (int, "tomography cutoff"),
        "r": (int, "repetitions"),
        "lam": (int, "security parameter"),
        "trials": (int, "trials per arm"),
    },
    "attack-prsg": {
        "d": (int, "output qubits (checked against t and lam)"),
        "t": (int, "queries"),
        "lam": (int, "query input length"),
        "kappa": (int, "key bits"),
        "r": (int, "repetitions"),
        "trials": (int, "trials per arm"),
        "learning": (str, "argmax or direct"),
    },
    "prfsg-game": {
        "kappa": (int, "key bits"),
        "m": (int, "input bits"),
        "q": (int, "query budget"),
        "trials": (int, "trials per arm"),
        "exact_kappa": (int, "key bits of the exact cross-check (0 to skip)"),
    },
    "report": {
        "dir": (str, "directory of records"),
    },
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chfs-lab", description="Desk-scale experiments on CHFS oracles.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd)
        sp.add_argument("--seed", type=int, default=None, help="64-bit seed (default: $CHFS_LAB_SEED or 0)")
        sp.add_argument("--config", type=Path, default=None, help="TOML config; flags override it")
        sp.add_argument("--output-dir", default=None)
        sp.add_argument("--workers", type=int, default=None, help="worker processes (default: logical cores)")
        sp.add_argument("--save-config", type=Path, default=None, help="write the resolved config and continue")
        for name, (typ, help_) in COMMAND_FLAGS[cmd].items():
            sp.add_argument(f"--{name.replace('_', '-')}", dest=name, type=typ, default=None, help=help_)
    rp = sub.add_parser("replay")
    rp.add_argument("record", type=Path)
    rp.add_argument("--workers", type=int, default=None)
    return p


def _env_seed() -> int:
    raw = os.environ.get("CHFS_LAB_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"CHFS_LAB_SEED: not an integer: {raw!r}") from None


def resolve_config(args: argparse.Namespace) -> RunConfig:
    base = RunConfig.load(args.config) if args.config else None
    if base is not None and base.command != args.command:
        raise UsageError(f"command: config file is for {base.command!r}, not {args.command!r}")
    params = dict(base.params) if base else {}
    for name in COMMAND_FLAGS[args.command]:
        v = getattr(args, name)
        if v is not None:
            params[name] = v
    seed = args.seed if args.seed is not None else (base.seed if base else _env_seed())
    out = args.output_dir or (base.output_dir if base else "out")
    workers = args.workers or (base.workers if base else default_workers())
    return RunConfig(args.command, seed, params, out, workers)


def _need_positive(params: dict, *names: str) -> None:
    for name in names:
        if name in params:
            vals = params[name] if isinstance(params[name], list) else [params[name]]
            if any(not isinstance(v, (int, float)) or v <= 0 for v in vals):
                raise UsageError(f"{name}: must be positive, got {params[name]!r}")


def validate(cfg: RunConfig) -> None:
    p = cfg.params
    if cfg.workers < 1:
        raise UsageError("workers: must be >= 1")
    _need_positive(p, "n", "D", "m", "T", "lam", "samples", "trials", "instances", "batteries", "kappa",
                   "tau", "r", "d", "q", "lengths")
    if cfg.command == "lemma":
        if "id" not in p:
            raise UsageError("id: a lemma id is required")
        if p["id"] not in ex.LEMMA_IDS:
            raise UsageError(f"id: unknown lemma {p['id']!r}; choose from {', '.join(ex.LEMMA_IDS)}")
    if cfg.command == "conjecture" and p.get("case", "cap1") not in ("cap1", "far2", "product2"):
        raise UsageError(f"case: unknown case {p['case']!r}")
    if cfg.command == "attack-prsg":
        t, lam = p.get("t", 2), p.get("lam", 2)
        from .primitives import PrsgCandidate

        d = PrsgCandidate(1, 0, t=t, lam=lam).output_qubits
        if "d" in p and p["d"] != d:
            raise UsageError(f"d: t={t}, lam={lam} give {d} output qubits, not {p['d']}")
        if p.get("learning", "argmax") not in ("argmax", "direct"):
            raise UsageError(f"learning: unknown mode {p['learning']!r}")
    if cfg.command == "prfsg-game" and p.get("kappa", 8) > 10:
        raise UsageError("kappa: the adversary suite enumerates keys, keep kappa <= 10")


def _as_tuple(v) -> tuple:
    return tuple(v) if isinstance(v, list) else (v,)


def execute(cfg: RunConfig) -> tuple[Any, dict, list[dict]]:
    """Run the experiment described by ``cfg``: (outcomes, summary, table rows)."""
    p, seed, w = dict(cfg.params), cfg.seed, cfg.workers
    if cfg.command == "lemma":
        lemma_id = p.pop("id")
        reports = ex.lemma_reports(lemma_id, p, seed, w)
        rows = [_report_row(r) for r in reports]
        return [r.to_dict() for r in reports], _verdict_summary(reports), rows
    if cfg.command == "conjecture":
        case = p.get("case", "cap1")
        ns, eps, delta = _as_tuple(p.get("n", [1, 2])), _as_tuple(p.get("eps", [0.1, 0.3])), _as_tuple(p.get("delta", [0.02, 0.05]))
        reports = ex.conjecture_reports(ns, eps, delta, case, p.get("samples", 1_000_000), seed, w)
        summary = _verdict_summary(reports)
        if case == "cap1":
            summary["fitted_exponents"] = {str(n): fit_cap_exponents(n, eps, delta) for n in ns}
        return [r.to_dict() for r in reports], summary, [_report_row(r) for r in reports]
    if cfg.command == "attack-pru":
        res = ex.run_alg1(p.get("n", 5), p.get("kappa", 3), _as_tuple(p.get("lengths", [2, 3])), p.get("tau", 3),
                          p.get("r", 12), p.get("lam", 4), p.get("trials", 50), seed, w)
        return res["trials"], res["summary"], _trial_rows(res["trials"])
    if cfg.command == "attack-prsg":
        res = ex.run_alg2(p.get("kappa", 3), p.get("t", 2), p.get("lam", 2), p.get("r", 4), p.get("trials", 50), seed,
                          p.get("learning", "argmax"), w)
        return res["trials"], res["summary"], _trial_rows(res["trials"])
    if cfg.command == "prfsg-game":
        res = ex.run_prfsg_game(p.get("kappa", 8), p.get("m", 4), p.get("q", 16), p.get("trials", 400), seed, w)
        summary = dict(res["summary"])
        ek = p.get("exact_kappa", 3)
        if ek:
            exact = ex.prfsg_exact_check(kappa=ek, m=ek, seed=seed)
            summary["exact_check"] = exact
            res["exact_check"] = exact
        rows = [{"adversary": d["label"], "advantage": d["advantage"], "rate_real": d["rate_real"],
                 "rate_ideal": d["rate_ideal"], "se": d["standard_error"]} for d in res["suite"]["details"]]
        return res, summary, rows
    raise UsageError(f"command: {cfg.command!r} does not produce a record")


def _report_row(r) -> dict:
    return {"lemma": r.lemma_id, "claim": r.claimed_value, "estimate": r.estimate, "se": r.standard_error,
            "samples": r.samples, "verdict": r.verdict.value, "kind": r.kind}


def _verdict_summary(reports) -> dict:
    counts = {v.value: sum(r.verdict is v for r in reports) for v in Verdict}
    return {"reports": len(reports), **counts, "estimates": [r.estimate for r in reports],
            "max_abs_z": max((abs(r.z) for r in reports if r.standard_error > 0), default=0.0)}


def _trial_rows(trials: dict) -> list[dict]:
    return [{"arm": arm, "trial": i, **t} for arm, ts in trials.items() for i, t in enumerate(ts)]


def _stem(cfg: RunConfig) -> str:
    tag = cfg.params.get("id", "") if cfg.command == "lemma" else cfg.params.get("case", "")
    return "_".join(x for x in (cfg.command, str(tag), str(cfg.seed)) if x)


def run(cfg: RunConfig) -> ExperimentRecord:
    """Execute ``cfg`` and write JSON, Markdown and CSV outputs to its output_dir."""
    validate(cfg)
    t0 = time.perf_counter()
    outcomes, summary, rows = execute(cfg)
    rec = ExperimentRecord(cfg.to_dict(), version_string(), time.perf_counter() - t0, outcomes, plain(summary))
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = _stem(cfg)
    rec.save(out / f"{stem}.json")
    write_markdown(out / f"{stem}.md", stem, rec.summary, rows[:200])
    write_csv(out / f"{stem}.csv", rows)
    return rec


def replay(path: str | Path, workers: int | None = None) -> tuple[bool, ExperimentRecord, dict]:
    rec = ExperimentRecord.load(path)
    cfg = RunConfig.from_dict(rec.config)
    if workers:
        cfg.workers = workers
    current = version_string()
    if current != rec.version:
        log.warning("record was written by %s, replaying with %s", rec.version, current)
    validate(cfg)
    _, summary, _ = execute(cfg)
    return summary_bytes(summary) == summary_bytes(rec.summary), rec, plain(summary)


def report(directory: str | Path) -> list[dict]:
    """Summarize every record in ``directory`` into summary.md and summary.csv."""
    d = Path(directory)
    if not d.is_dir():
        raise UsageError(f"dir: {str(d)!r} is not a directory")
    rows = []
    for f in sorted(d.glob("*.json")):
        try:
            rec = ExperimentRecord.load(f)
        except (ValueError, KeyError, json.JSONDecodeError):
            continue
        row = {"file": f.name, "command": rec.config["command"], "seed": rec.config["seed"],
               "wall_clock_seconds": rec.wall_clock_seconds}
        row.update({k: v for k, v in rec.summary.items() if not isinstance(v, (dict, list))})
        rows.append(row)
    write_markdown(d / "summary.md", f"Summary of {len(rows)} records", {"records": len(rows)}, rows)
    write_csv(d / "summary.csv", rows)
    return rows


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "replay":
            ok, rec, summary = replay(args.record, args.workers)
            print(json.dumps({"match": ok, "summary": summary}, indent=2, sort_keys=True))
            if not ok:
                print("replay mismatch: summaries differ", file=sys.stderr)
            return EXIT_OK if ok else EXIT_VIOLATED
        cfg = resolve_config(args)
        if args.save_config:
            cfg.save(args.save_config)
        if cfg.command == "report":
            validate(cfg)
            rows = report(cfg.params.get("dir", cfg.output_dir))
            print(f"{len(rows)} records summarized")
            return EXIT_OK
        rec = run(cfg)
        print(json.dumps(rec.summary, indent=2, sort_keys=True))
        return EXIT_VIOLATED if rec.summary.get("Violated", 0) else EXIT_OK
    except (UsageError, ValueError, FileNotFoundError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:  # noqa: BLE001
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
