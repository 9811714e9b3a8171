"""Experiment configuration: flat ``key = value`` files with dotted keys, or JSON.

Values are parsed as JSON when possible (numbers, lists, null, booleans) and
kept as bare strings otherwise. Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path


class ConfigError(ValueError):
    pass


# key -> (default, type check)
_NUM = (int, float)
SCHEMA: dict[str, tuple[object, tuple]] = {
    "group.kind": ("octagon", (str,)),
    "group.rank": (2, (int,)),
    "group.translation_length": (4.0, _NUM),
    "group.axis_angles": (None, (list, type(None))),
    "potential.kind": ("constant", (str,)),
    "potential.level": (0.0, _NUM),
    "potential.amplitude": (1.0, _NUM),
    "potential.radius": (None, _NUM + (type(None),)),
    "potential.center": ([0.2, 0.1], (list,)),
    "orbit.radius": (13.0, _NUM),
    "orbit.prune_margin": (0.0, _NUM),
    "orbit.base": ([0.0, 0.0], (list,)),
    "orbit.target": ([0.0, 0.0], (list,)),
    "quadrature.step": (0.01, _NUM),
    "delta.window": ([6, 13], (list,)),
    "delta.shift_levels": ([], (list,)),
    "delta.shift_tolerance": (0.02, _NUM),
    "measure.epsilon": (0.05, _NUM),
    "measure.epsilon_sensitivity": ([0.02, 0.05, 0.1], (list,)),
    "measure.shell": (4.0, _NUM + (type(None),)),
    "decay.samples": (12, (int,)),
    "decay.t_grid": ([2, 3, 4, 5, 6, 7, 8], (list,)),
    "decay.max_empty_fraction": (0.2, _NUM),
    "decay.median_tolerance": (0.1, _NUM),
    "decay.sample_tolerance": (0.2, _NUM),
    "birkhoff.horizon": (200.0, _NUM),
    "birkhoff.samples": (10, (int,)),
    "birkhoff.max_spread": (0.05, _NUM),
    "lambda.grid_step": (0.05, _NUM),
    "lambda.agreement": (0.05, _NUM),
    "lambda.corollary_slack": (0.02, _NUM),
    "cocycle.T": (30.0, _NUM),
    "cocycle.busemann_tolerance": (1e-3, _NUM),
    "cocycle.samples": (10, (int,)),
    "equivariance.radius": (8.0, _NUM),
    "equivariance.tolerance": (1e-9, _NUM),
    "rn.arcs": (20, (int,)),
    "rn.half_width": (0.1, _NUM),
    "rn.max_base_distance": (1.0, _NUM),
    "rn.min_atoms": (50, (int,)),
    "rn.log_tolerance": (0.15, _NUM),
    "rn.pass_fraction": (0.8, _NUM),
    "lemma.radius": (9.0, _NUM),
    "lemma.samples": (100, (int,)),
    "lemma.floor": (0.01, _NUM),
    "lemma.k_max": (5, (int,)),
    "lemma.k_samples": (1000, (int,)),
    "lemma.northsouth_half_width": (0.3, _NUM),
    "lemma.northsouth_max": (50, (int,)),
    "bounded.t_grid": ([2, 3, 4, 5, 6, 7], (list,)),
    "bounded.samples": (10, (int,)),
    "bounded.trend_tolerance": (0.05, _NUM),
    "seed": (0, (int,)),
    "output.dir": ("runs", (str,)),
}


def defaults() -> dict:
    return {k: copy.deepcopy(v[0]) for k, v in SCHEMA.items()}


def _flatten(obj: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in obj.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _parse_value(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text.strip("\"'")


def parse_text(text: str) -> dict:
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            return _flatten(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from exc
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = _parse_value(value)
    return out


def validate(values: dict) -> dict:
    """Merge over the defaults, rejecting unknown keys and wrongly typed values."""
    cfg = defaults()
    for key, value in values.items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        default, types = SCHEMA[key]
        if isinstance(value, bool) or not isinstance(value, types):
            # integers are acceptable where reals are expected
            raise ConfigError(f"config key {key!r} has the wrong type ({type(value).__name__})")
        cfg[key] = value
    if cfg["group.kind"] not in ("octagon", "schottky"):
        raise ConfigError(f"unknown group kind {cfg['group.kind']!r}")
    if cfg["potential.kind"] not in ("constant", "bump-sum"):
        raise ConfigError(f"unknown potential kind {cfg['potential.kind']!r}")
    if len(cfg["delta.window"]) != 2:
        raise ConfigError("delta.window must be [n0, n1]")
    return cfg


def load(path: str | Path | None) -> dict:
    if path is None:
        return validate({})
    text = Path(path).read_text()
    return validate(parse_text(text))


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:12]


def dump(cfg: dict) -> str:
    return json.dumps(cfg, indent=2, sort_keys=True) + "\n"


def potential_block(cfg: dict) -> dict:
    return {
        "kind": cfg["potential.kind"],
        "level": cfg["potential.level"],
        "amplitude": cfg["potential.amplitude"],
        "radius": cfg["potential.radius"],
        "center": cfg["potential.center"],
    }
