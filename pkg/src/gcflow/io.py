"""Configuration parsing and file formats (CSV series, JSON snapshots).

Floats are written with 17 significant digits so every value reads back
bit-identically; files use LF line endings and contain no timestamps, so
identical inputs give byte-identical outputs.
"""
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .grid import build_grid
from .support import SupportField

SNAPSHOT_VERSION = "gcf-snapshot-1"

SERIES_HEADER = ("step", "t", "volume", "K_min", "K_max", "lambda_ratio", "Lambda_max",
                 "residual_max", "f_max", "w_max", "umbilicity_at_fmax", "gradF2_at_fmax")

SNAPSHOT_SCHEMA = {
    "type": "object",
    "required": ["version", "n", "grid", "h"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": SNAPSHOT_VERSION},
        "n": {"enum": [1, 2]},
        "grid": {
            "type": "object",
            "required": ["shape", "offsets"],
            "additionalProperties": False,
            "properties": {
                "shape": {"type": "array", "items": {"type": "integer", "minimum": 16},
                          "minItems": 1, "maxItems": 2},
                "offsets": {"type": "array", "items": {"type": "number"},
                            "minItems": 1, "maxItems": 2},
            },
        },
        "h": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "alpha": {"type": "number", "exclusiveMinimum": 0},
        "time": {"type": "number"},
    },
}


class ConfigError(ValueError):
    """Malformed, unknown or out-of-range configuration value."""


# -- number formatting ---------------------------------------------------------

def fmt(x):
    """17-significant-digit decimal for floats, plain digits for integers."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def dumps(obj, indent=None, _level=0):
    """JSON text with floats at 17 significant digits; non-finite floats become null."""
    pad = "" if indent is None else "\n" + " " * (indent * (_level + 1))
    end = "" if indent is None else "\n" + " " * (indent * _level)
    sep = "," if indent is None else ","
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}"
                 for k, v in sorted(obj.items())]
        return "{" + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (float, int, np.floating, np.integer)) and not isinstance(v, bool)
               for v in seq):
            return "[" + ", ".join(dumps(v) for v in seq) + "]"
        return "[" + sep.join(f"{pad}{dumps(v, indent, _level + 1)}" for v in seq) + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    return json.dumps(str(obj))


def write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)
    return path


def write_csv(path, header, rows):
    lines = [",".join(header)] + [",".join(fmt(v) for v in row) for row in rows]
    return write_text(path, "\n".join(lines) + "\n")


# "-0" is a float (negative zero), not an integer
_INT = re.compile(r"-?[1-9][0-9]*|0")


def read_csv(path):
    """Header and rows of a numeric CSV written by ``write_csv``."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    header = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        row = []
        for tok in line.split(","):
            if _INT.fullmatch(tok):
                row.append(int(tok))
                continue
            try:
                row.append(float(tok))
            except ValueError:
                row.append(tok)
        rows.append(row)
    return header, rows


# -- diagnostics series --------------------------------------------------------

def emit_series(records, path):
    if not records:
        raise ValueError("no records to write")
    return write_csv(path, SERIES_HEADER, [r.values() for r in records])


# -- snapshots -----------------------------------------------------------------

def snapshot_document(body, alpha=None, time=None):
    g = body.grid
    doc = {
        "version": SNAPSHOT_VERSION,
        "n": g.dim,
        "grid": {"shape": list(g.shape), "offsets": [float(o) for o in g.offsets]},
        "h": [float(v) for v in body.h.ravel()],
    }
    if alpha is not None:
        doc["alpha"] = float(alpha)
    if time is not None:
        doc["time"] = float(time)
    return doc


def emit_snapshot(body, path, alpha=None, time=None):
    doc = snapshot_document(body, alpha, time)
    if not np.all(np.isfinite(body.h)):
        raise ValueError("snapshot values must be finite")
    jsonschema.validate(doc, SNAPSHOT_SCHEMA)
    return write_text(path, dumps(doc, indent=1) + "\n")


def load_snapshot(path):
    """Return (SupportField, alpha or None, time or None)."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    jsonschema.validate(doc, SNAPSHOT_SCHEMA)
    shape = tuple(doc["grid"]["shape"])
    if len(shape) != doc["n"]:
        raise ValueError(f"grid shape {shape} does not match n={doc['n']}")
    grid = build_grid(doc["n"], shape)
    if tuple(doc["grid"]["offsets"]) != tuple(grid.offsets):
        raise ValueError(f"unsupported grid offsets {doc['grid']['offsets']}")
    h = np.array(doc["h"], dtype=float)
    if h.size != grid.size:
        raise ValueError(f"expected {grid.size} values, got {h.size}")
    return SupportField(grid, h.reshape(shape)), doc.get("alpha"), doc.get("time")


# -- configuration -------------------------------------------------------------

def _positive_int(v):
    v = int(v)
    if v < 1:
        raise ValueError("must be a positive integer")
    return v


def _nonneg_int(v):
    v = int(v)
    if v < 0:
        raise ValueError("must be a non-negative integer")
    return v


def _positive(v):
    v = float(v)
    if not v > 0 or not math.isfinite(v):
        raise ValueError("must be a positive number")
    return v


def _nonneg(v):
    v = float(v)
    if not v >= 0 or not math.isfinite(v):
        raise ValueError("must be a non-negative number")
    return v


def _dimension(v):
    v = int(v)
    if v not in (1, 2):
        raise ValueError("unsupported dimension (expected 1 or 2)")
    return v


def _cfl(v):
    v = float(v)
    if not 0 < v <= 1:
        raise ValueError("must lie in (0, 1]")
    return v


def _resolution(v):
    parts = [int(p) for p in str(v).lower().replace("x", ",").split(",") if p.strip()]
    if not parts or len(parts) > 2 or min(parts) < 16:
        raise ValueError("expected N or NxM with at least 16 nodes per axis")
    return parts[0] if len(parts) == 1 else tuple(parts)


def _floats(v):
    vals = tuple(float(p) for p in str(v).split(",") if p.strip())
    if not vals or any(not (x > 0) for x in vals):
        raise ValueError("expected comma-separated positive numbers")
    return vals


def _choice(*options):
    def parse(v):
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return v
    return parse


def _coeffs(v):
    out = []
    for item in str(v).split(","):
        if not item.strip():
            continue
        k, c = item.split(":")
        out.append((int(k), float(c)))
    if not out:
        raise ValueError("expected k:c pairs such as 2:0.3,3:0.1")
    return tuple(out)


COMMON_KEYS = {"n": _dimension, "alpha": _positive, "resolution": _resolution,
               "seed": _nonneg_int}

KEYS = {
    "flow": {"c_cfl": _cfl, "normalization": _choice("none", "fixed-volume"),
             "ratio_tol": _positive, "lambda_tol": _nonneg, "max_steps": _nonneg_int,
             "min_volume": _nonneg, "cadence": _positive_int, "snapshot_every": _nonneg_int,
             "init": _choice("sphere", "ellipsoid", "perturbed", "random"),
             "axes": _floats, "radius": _positive, "cos_coeffs": _coeffs, "dt_max": _positive},
    "shrinker": {"h0": _positive, "h0_min": _positive, "h0_max": _positive,
                 "samples": _positive_int, "steps": _positive_int},
    "verify": {"case": _choice("sphere", "ellipse", "random", "ode-shrinker"),
               "count": _positive_int},
    "ineq": {"n_max": _positive_int, "alpha_samples": _positive_int,
             "theta_samples": _positive_int, "theta_max": _positive},
}


@dataclass
class RunConfig:
    subcommand: str
    options: dict = field(default_factory=dict)
    out_dir: str = "out"
    seed: int = 0


def _parse_value(subcommand, key, raw, where):
    parsers = {**COMMON_KEYS, **KEYS[subcommand]}
    if key not in parsers:
        raise ConfigError(f"{where}: unknown key '{key}' for '{subcommand}'")
    try:
        return parsers[key](raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: invalid value for '{key}': {raw!r} ({exc})") from None


def parse_config_text(subcommand, text, source="<config>"):
    """Parse key=value lines ('#' starts a comment)."""
    if subcommand not in KEYS:
        raise ConfigError(f"unknown subcommand '{subcommand}'")
    opts = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: malformed line (expected key=value)")
        key, raw = (s.strip() for s in line.split("=", 1))
        opts[key] = _parse_value(subcommand, key, raw, f"{source}:{lineno}")
    return opts


def parse_config(subcommand, path=None, text=None, overrides=None, out_dir="out"):
    """Build a RunConfig from a file or text, then apply flag overrides.

    ``overrides`` maps keys to raw flag strings (None entries are skipped);
    flags always win over file values.
    """
    opts = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        opts.update(parse_config_text(subcommand, text, str(path)))
    elif text is not None:
        opts.update(parse_config_text(subcommand, text))
    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        opts[key] = _parse_value(subcommand, key, str(raw), f"--{key.replace('_', '-')}")
    seed = opts.pop("seed", 0)
    return RunConfig(subcommand, opts, str(out_dir), seed)
