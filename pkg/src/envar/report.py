"""Run configuration and deterministic report rendering (JSON / CSV / pretty)."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import __version__
from .config import Caps, Tolerances
from .errors import InputError

FORMATS = ("json", "csv", "pretty")
ENV_PREFIX = "ENVAR_"

# config key -> (section, field, parser)
_KEYS = {
    "tol_norm": ("tol", "norm", float),
    "tol_unitary": ("tol", "unitary", float),
    "tol_state": ("tol", "state", float),
    "max_dimension": ("caps", "max_dimension", int),
    "max_branches": ("caps", "max_branches", int),
    "max_copies": ("caps", "max_copies", int),
    "format": (None, "format", str),
    "seed": (None, "seed", int),
}


@dataclass(frozen=True)
class RunConfig:
    tol: Tolerances = field(default_factory=Tolerances)
    caps: Caps = field(default_factory=Caps)
    format: str = "json"
    seed: int = 0

    def __post_init__(self):
        if self.format not in FORMATS:
            raise InputError(f"unknown format {self.format!r}")
        if not 0 <= self.seed < 2**64:
            raise InputError("seed must fit in 64 bits")

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_values(self, values: dict) -> "RunConfig":
        tol, caps, top = {}, {}, {}
        for key, raw in values.items():
            if key != "tol" and key not in _KEYS:
                raise InputError(f"unknown config key {key!r}")
            parse = float if key == "tol" else _KEYS[key][2]
            try:
                value = parse(raw)
            except ValueError as exc:
                raise InputError(f"bad value for {key}: {raw!r}") from exc
            if key == "tol":
                tol.update(norm=value, unitary=value, state=value)
            else:
                section, name, _ = _KEYS[key]
                {"tol": tol, "caps": caps, None: top}[section][name] = value
        try:
            return replace(
                self, tol=replace(self.tol, **tol), caps=replace(self.caps, **caps), **top
            )
        except ValueError as exc:
            raise InputError(str(exc)) from exc


def parse_config_file(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment; quotes around values are dropped."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"config line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.lower()] = value.strip("\"'")
    return values


def resolve_config(flags: dict, environ=None, config_path: str | None = None) -> RunConfig:
    """Defaults < config file < environment (``ENVAR_*``) < flags."""
    environ = os.environ if environ is None else environ
    config = RunConfig()
    path = config_path or environ.get(ENV_PREFIX + "CONFIG")
    if path:
        try:
            with open(path) as fh:
                config = config.with_values(parse_config_file(fh.read()))
        except OSError as exc:
            raise InputError(f"cannot read config {path}: {exc}") from exc
    env_values = {
        key: environ[ENV_PREFIX + key.upper()]
        for key in list(_KEYS) + ["tol"]
        if ENV_PREFIX + key.upper() in environ
    }
    config = config.with_values(env_values)
    return config.with_values({k: v for k, v in flags.items() if v is not None})


# -- serialisation ------------------------------------------------------------


def plain(value):
    """Convert library values into JSON-ready primitives."""
    if isinstance(value, Fraction):
        return {"num": str(value.numerator), "den": str(value.denominator)}
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.ndarray):
        return [plain(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    raise TypeError(f"cannot serialise {type(value).__name__}")


def build_report(command: str, inputs: dict, outputs: dict, config: RunConfig) -> dict:
    return {
        "command": command,
        "inputs": plain(inputs),
        "outputs": plain(outputs),
        "provenance": {"library": "envar", "version": __version__, "config_hash": config.digest()},
    }


def _cell(value) -> str:
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)) and not any(
        isinstance(v, (list, tuple, dict)) for v in value
    ):
        return "[" + ", ".join(_cell(v) for v in value) + "]"
    if isinstance(value, (list, tuple, dict)):
        return json.dumps(plain(value))
    return str(value)


def _flatten(prefix: str, value, rows: list) -> None:
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, rows)
    else:
        rows.append((prefix, _cell(value)))


def render(report: dict, fmt: str, raw: dict | None = None, table: list | None = None) -> str:
    """Render a report.

    ``raw`` holds the unconverted outputs so CSV and pretty can print
    rationals as ``num/den``; ``table`` (list of dicts) is what CSV emits
    when given.
    """
    raw = report["outputs"] if raw is None else raw
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    buf = io.StringIO()
    if fmt == "csv":
        writer = csv.writer(buf, lineterminator="\n")
        if table:
            writer.writerow(list(table[0]))
            for row in table:
                writer.writerow([_cell(v) for v in row.values()])
        else:
            rows: list = []
            _flatten("", raw, rows)
            writer.writerow(["key", "value"])
            writer.writerows(rows)
        return buf.getvalue()
    rows = []
    _flatten("", {"command": report["command"], **raw}, rows)
    width = max(len(k) for k, _ in rows)
    return "".join(f"{k.ljust(width)}  {v}\n" for k, v in rows)
