"""Experiment configuration files and deterministic CSV/JSON writers.

Configs are INI-style: flat ``key = value`` lines grouped in sections.
Phase values accept arithmetic in ``pi`` (``pi/2``, ``-0.25*pi``).
"""

from __future__ import annotations

import ast
import configparser
import csv
import hashlib
import io
import json
import operator
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .gate import ChipConfig, GateMode
from .source import SourceConfig

__all__ = [
    "ConfigError",
    "FringeSettings",
    "SweepSettings",
    "CalibrationSettings",
    "ExperimentConfig",
    "parse_ini",
    "line_of",
    "parse_number",
    "load_config",
    "fmt",
    "write_csv",
    "dump_json",
]

PREP_GATES = {
    "I": (0.0, 0.0, 0.0),
    "H": (np.pi, np.pi / 2, 0.0),
    "X": (np.pi, np.pi, 0.0),
    "Z": (np.pi, 0.0, 0.0),
}


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Pow: operator.pow}


def parse_number(text: str) -> float:
    """Float literal or arithmetic expression over numbers and ``pi``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return float(np.pi)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        raise ValueError(f"unsupported expression {text!r}")

    try:
        return float(ev(ast.parse(text.strip(), mode="eval")))
    except (SyntaxError, ZeroDivisionError) as e:
        raise ValueError(f"cannot parse number {text!r}: {e}") from None


def parse_ini(text: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.ParsingError as e:
        ln = e.errors[0][0] if getattr(e, "errors", None) else "?"
        raise ConfigError(f"line {ln}: cannot parse config line") from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as e:
        raise ConfigError(f"line {e.lineno}: {e.message if hasattr(e, 'message') else e}") from None
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError(f"line {e.lineno}: key outside any [section]") from None
    return cp


def line_of(text: str, section: str, key: str | None = None) -> int | str:
    """1-based line number of ``key`` inside ``[section]`` (or of the header)."""
    cur = None
    for i, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if s.startswith("[") and s.endswith("]"):
            cur = s[1:-1].strip()
            if key is None and cur == section:
                return i
            continue
        if cur == section and key is not None:
            k = s.split("=", 1)[0].split(":", 1)[0].strip()
            if k == key:
                return i
    return "?"


@dataclass(frozen=True)
class FringeSettings:
    which: str = "T"
    start: float = 0.0
    stop: float = float(np.pi)
    points: int = 41
    counts: float = 0.0  # mean counts at the fringe maximum; 0 means noiseless rates


@dataclass(frozen=True)
class SweepSettings:
    start: float = 0.0
    stop: float = float(np.pi)
    points: int = 33
    tomography: bool = False


@dataclass(frozen=True)
class CalibrationSettings:
    hidden_chip: str | None = None
    noise: float = 0.0
    drift: float = 0.0
    max_power: float = 60.0
    points: int = 41
    skip_tomography_z: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    chip: ChipConfig = field(default_factory=ChipConfig)
    gate: GateMode = GateMode.BYPASS
    flux: float = 1000.0  # post-selected pairs / s
    integration_time: float = 5.0  # s per setting
    accidental_rate: float = 0.0  # counts / s
    seed: int | None = None
    monte_carlo_n: int = 200
    fringe: FringeSettings = field(default_factory=FringeSettings)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    calibration: CalibrationSettings = field(default_factory=CalibrationSettings)
    path: Path | None = None
    sha256: str = ""


_SOURCE_KEYS = {f.name for f in fields(SourceConfig)}
_CHIP_KEYS = {f.name for f in fields(ChipConfig)} - {"source", "crosstalk"}


def _typed(kind, raw: str, where: str):
    if kind is bool:
        v = raw.strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{where}: expected a boolean, got {raw!r}")
    if kind is int:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{where}: expected an integer, got {raw!r}") from None
    if kind is str:
        return raw.strip()
    try:
        return parse_number(raw)
    except ValueError as e:
        raise ConfigError(f"{where}: {e}") from None


def _section(cp, text, name, cls):
    if not cp.has_section(name):
        return cls()
    kinds = {f.name: f.type for f in fields(cls)}
    conv = {"int": int, "bool": bool, "str": str, "float": float, "str | None": str}
    vals = {}
    for k, v in cp[name].items():
        where = f"line {line_of(text, name, k)}"
        if k not in kinds:
            raise ConfigError(f"{where}: unknown key '{k}' in [{name}]")
        vals[k] = _typed(conv.get(kinds[k], float), v, where)
    return cls(**vals)


def load_config(path: str | Path) -> ExperimentConfig:
    """Read and validate an experiment config file."""
    path = Path(path)
    data = path.read_bytes()
    text = data.decode("utf-8")
    cp = parse_ini(text)
    known = {"experiment", "source", "chip", "fringe", "state_sweep", "calibrate"}
    for s in cp.sections():
        if s not in known:
            raise ConfigError(f"line {line_of(text, s)}: unknown section [{s}]")

    src = {}
    if cp.has_section("source"):
        for k, v in cp["source"].items():
            where = f"line {line_of(text, 'source', k)}"
            if k not in _SOURCE_KEYS:
                raise ConfigError(f"{where}: unknown key '{k}' in [source]")
            src[k] = _typed(float, v, where)
    try:
        source = SourceConfig(**src)
    except ValueError as e:
        raise ConfigError(f"[source]: {e}") from None

    chip_vals, preps = {}, {}
    if cp.has_section("chip"):
        for k, v in cp["chip"].items():
            where = f"line {line_of(text, 'chip', k)}"
            if k in ("prep_t", "prep_b"):
                g = v.strip().upper()
                if g not in PREP_GATES:
                    raise ConfigError(f"{where}: prep gate must be one of {sorted(PREP_GATES)}, got {v!r}")
                preps[k[-1]] = PREP_GATES[g]
            elif k in _CHIP_KEYS:
                chip_vals[k] = _typed(float, v, where)
            else:
                raise ConfigError(f"{where}: unknown key '{k}' in [chip]")
    chip = ChipConfig(source=source, **chip_vals)
    for q, (za, y, zb) in preps.items():
        chip = chip.with_prep(q, za, y, zb)

    exp = {}
    gate = GateMode.BYPASS
    if cp.has_section("experiment"):
        kinds = {"flux": float, "integration_time": float, "accidental_rate": float, "seed": int, "monte_carlo_n": int}
        for k, v in cp["experiment"].items():
            where = f"line {line_of(text, 'experiment', k)}"
            if k == "gate":
                try:
                    gate = GateMode.parse(v)
                except ValueError:
                    raise ConfigError(f"{where}: unknown gate mode {v!r}") from None
            elif k in kinds:
                exp[k] = _typed(kinds[k], v, where)
            else:
                raise ConfigError(f"{where}: unknown key '{k}' in [experiment]")
    if gate is not GateMode.BYPASS:
        chip = chip.with_gate(gate)

    cfg = ExperimentConfig(
        chip=chip,
        gate=gate,
        fringe=_section(cp, text, "fringe", FringeSettings),
        sweep=_section(cp, text, "state_sweep", SweepSettings),
        calibration=_section(cp, text, "calibrate", CalibrationSettings),
        path=path,
        sha256=hashlib.sha256(data).hexdigest(),
        **exp,
    )
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.flux <= 0 or cfg.integration_time <= 0:
        raise ConfigError("flux and integration_time must be positive")
    if cfg.accidental_rate < 0:
        raise ConfigError("accidental_rate must be non-negative")
    if cfg.monte_carlo_n < 2:
        raise ConfigError("monte_carlo_n must be at least 2")
    f = cfg.fringe
    if f.which.upper() not in ("T", "B"):
        raise ConfigError("[fringe] which must be T or B")
    if f.points < 6 or f.counts < 0:
        raise ConfigError("[fringe] needs at least 6 points and non-negative counts")
    if cfg.sweep.points < 1:
        raise ConfigError("[state_sweep] grid must be non-empty")
    c = cfg.calibration
    if c.noise < 0 or c.points < 8 or c.max_power <= 0:
        raise ConfigError("[calibrate] needs noise >= 0, points >= 8, max_power > 0")


# --- writers ---------------------------------------------------------------------------


def fmt(x) -> str:
    """Full-precision, platform-stable number formatting."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: Path, columns, rows, header: dict, footer: dict | None = None) -> None:
    """CSV with ``# key = value`` header and footer lines around the table."""
    buf = io.StringIO()
    for k, v in header.items():
        buf.write(f"# {k} = {fmt(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    for k, v in (footer or {}).items():
        buf.write(f"# {k} = {fmt(v)}\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def dump_json(path: Path, obj) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
