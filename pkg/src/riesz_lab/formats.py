"""Plain-text point files ("riesz-config v1"), JSON reports and run configurations."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict, fields
from pathlib import Path

import numpy as np

from .manifold import PointConfiguration, locate_charts, parse_manifold

__all__ = ["MAGIC", "write_config_file", "read_config_file", "format_config", "parse_config",
           "to_json", "RunConfig"]

MAGIC = "riesz-config v1"


def _g17(v: float) -> str:
    return format(float(v), ".17g")


def format_config(config: PointConfiguration) -> str:
    s = math.nan if config.s is None else config.s
    seed = -1 if config.seed is None else int(config.seed)
    manifold = config.manifold or "unknown"
    if any(ch.isspace() for ch in manifold):
        raise ValueError("manifold string must not contain whitespace")
    lines = [MAGIC, f"d'={config.ambient_dim} N={config.N} s={_g17(s)} manifold={manifold} seed={seed}"]
    lines += [" ".join(_g17(v) for v in row) for row in config.points]
    return "\n".join(lines) + "\n"


def write_config_file(path, config: PointConfiguration) -> None:
    """Write ``config`` with 17 significant digits, which round-trips every double exactly."""
    Path(path).write_text(format_config(config))


def _header(line: str) -> dict:
    out = {}
    for token in line.split():
        key, sep, value = token.partition("=")
        if not sep:
            raise ValueError(f"line 2: malformed header field {token!r}")
        out[key] = value
    missing = [k for k in ("d'", "N", "s", "manifold", "seed") if k not in out]
    if missing:
        raise ValueError(f"line 2: header lacks {', '.join(missing)}")
    try:
        return {"dim": int(out["d'"]), "N": int(out["N"]), "s": float(out["s"]),
                "manifold": out["manifold"], "seed": int(out["seed"])}
    except ValueError as exc:
        raise ValueError(f"line 2: {exc}") from None


def parse_config(text: str) -> PointConfiguration:
    lines = text.splitlines()
    if not lines or lines[0].strip() != MAGIC:
        got = lines[0].strip() if lines else ""
        raise ValueError(f"line 1: expected {MAGIC!r}, got {got!r}")
    if len(lines) < 2:
        raise ValueError("line 2: missing header")
    head = _header(lines[1])
    rows = [ln for ln in lines[2:] if ln.strip()]
    if len(rows) != head["N"]:
        raise ValueError(f"header says N={head['N']} but the file has {len(rows)} rows")
    pts = np.empty((head["N"], head["dim"]))
    for i, ln in enumerate(rows):
        vals = ln.split()
        if len(vals) != head["dim"]:
            raise ValueError(f"row {i + 1}: expected {head['dim']} values")
        try:
            pts[i] = [float(v) for v in vals]
        except ValueError:
            raise ValueError(f"row {i + 1}: not a number") from None
    config = PointConfiguration(pts, manifold=head["manifold"],
                                s=None if math.isnan(head["s"]) else head["s"],
                                seed=None if head["seed"] < 0 else head["seed"], generator="file")
    if config.manifold.startswith("atlas:") and config.N:
        index, params = locate_charts(pts, parse_manifold(config.manifold))
        config = config.replace(chart_index=index, chart_params=params)
    return config


def read_config_file(path) -> PointConfiguration:
    """Read a "riesz-config v1" file; atlas configurations get their chart parameters recovered."""
    return parse_config(Path(path).read_text())


def _encode(obj) -> str:
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(bool(obj) if obj is not None else None)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _g17(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    if hasattr(obj, "to_dict"):
        return _encode(obj.to_dict())
    raise TypeError(f"cannot encode {type(obj).__name__} as JSON")


def to_json(obj) -> str:
    """JSON text with every float written to 17 significant digits (non-finite floats become null)."""
    return _encode(obj) + "\n"


@dataclass
class RunConfig:
    """Everything needed to repeat a CLI run."""

    command: str
    manifold: str = ""
    s: float | None = None
    N: int | None = None
    N_list: list | None = None
    init: str = "lattice"
    options: dict = field(default_factory=dict)
    seed: int = 0
    outputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return to_json(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        data = json.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown run-config fields: {sorted(unknown)}")
        return cls(**data)
