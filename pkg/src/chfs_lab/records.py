"""Run configuration files and JSON experiment records."""

from __future__ import annotations

import csv
import json
import math
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import tomli

SCHEMA_VERSION = 1
COMMANDS = ("lemma", "attack-pru", "attack-prsg", "conjecture", "prfsg-game", "report")

__all__ = [
    "SCHEMA_VERSION",
    "COMMANDS",
    "RunConfig",
    "ExperimentRecord",
    "plain",
    "summary_bytes",
    "dump_toml",
    "version_string",
    "write_markdown",
    "write_csv",
]


def plain(obj: Any) -> Any:
    """Recursively convert numpy scalars, tuples and enums into JSON types."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def summary_bytes(summary: dict) -> bytes:
    return json.dumps(plain(summary), sort_keys=True, allow_nan=True).encode()


def _toml_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        r = repr(v)
        return r if any(c in r for c in ".en") else r + ".0"
    if isinstance(v, str):
        # JSON escapes are valid TOML basic-string escapes once non-ASCII is kept literal
        return json.dumps(v, ensure_ascii=False).replace("\x7f", "\\u007f")
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot write {type(v).__name__} to a config file")


def dump_toml(top: dict, tables: dict[str, dict]) -> str:
    lines = [f"{k} = {_toml_value(v)}" for k, v in top.items() if v is not None]
    for name, table in tables.items():
        lines += ["", f"[{name}]"]
        lines += [f"{k} = {_toml_value(v)}" for k, v in table.items() if v is not None]
    return "\n".join(lines) + "\n"


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    params: dict[str, Any] = field(default_factory=dict)
    output_dir: str = "out"
    workers: int = 1

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"command: unknown command {self.command!r}")
        self.seed = int(self.seed)
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed: must be a 64-bit unsigned integer")
        # None means "use the default"; dropping it keeps files round-trippable
        self.params = {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.params.items() if v is not None}

    def to_dict(self) -> dict:
        return {"command": self.command, "seed": self.seed, "output_dir": self.output_dir,
                "workers": self.workers, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(d["command"], d.get("seed", 0), dict(d.get("params", {})), d.get("output_dir", "out"), d.get("workers", 1))

    def to_toml(self) -> str:
        top = {k: v for k, v in self.to_dict().items() if k != "params"}
        return dump_toml(top, {"params": self.params})

    @classmethod
    def from_toml(cls, text: str) -> "RunConfig":
        return cls.from_dict(tomli.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_toml(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        return cls.from_toml(Path(path).read_text(encoding="utf-8"))


def version_string() -> str:
    from . import __version__

    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).parent, capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


@dataclass
class ExperimentRecord:
    config: dict
    version: str
    wall_clock_seconds: float
    outcomes: Any
    summary: dict
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return plain({
            "schema_version": self.schema_version,
            "version": self.version,
            "config": self.config,
            "wall_clock_seconds": self.wall_clock_seconds,
            "summary": self.summary,
            "outcomes": self.outcomes,
        })

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentRecord":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported record schema_version {d.get('schema_version')!r}")
        return cls(d["config"], d["version"], d["wall_clock_seconds"], d["outcomes"], d["summary"], d["schema_version"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentRecord":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _columns(rows: list[dict]) -> list[str]:
    cols: list[str] = []
    for r in rows:
        cols += [c for c in r if c not in cols]
    return cols


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def write_markdown(path: str | Path, title: str, summary: dict, rows: list[dict] | None = None) -> None:
    lines = [f"# {title}", "", "| key | value |", "| --- | --- |"]
    lines += [f"| {k} | {_fmt(v)} |" for k, v in plain(summary).items() if not isinstance(v, (dict, list))]
    if rows:
        cols = _columns(rows)
        lines += ["", "| " + " | ".join(cols) + " |", "|" + " --- |" * len(cols)]
        lines += ["| " + " | ".join(_fmt(r.get(c, "")) for c in cols) + " |" for r in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def write_csv(path: str | Path, rows: list[dict]) -> None:
    if not rows:
        Path(path).write_text("")
        return
    cols = _columns(rows)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for r in rows:
            w.writerow({c: _fmt(v) if not isinstance(v, (dict, list)) else json.dumps(plain(v)) for c, v in r.items()})
