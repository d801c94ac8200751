"""Experiment configuration: an INI document checked against a fixed schema.

Example::

    [experiment]
    command = simulate
    version = 1.0.0
    preset = line-soliton

    [physics]
    k = 1
    c = 1.0

    [time]
    t_end = 1.0

Every key has a type and a default; unknown sections or keys are rejected
with a ConfigError naming the offending key.
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field

from .errors import ConfigError

COMMANDS = ("simulate", "groundstate", "thresholds", "gn-verify", "probe-strichartz", "soliton-test")
SCHEMA_VERSION = "1.0.0"


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.replace(",", " ").split()]


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# section -> key -> (parser, default)
SCHEMA = {
    "experiment": {
        "command": (str, None),
        "version": (str, SCHEMA_VERSION),
        "seed": (int, 0),
        "preset": (str, "gaussian"),
        "output": (str, "gzk-out"),
    },
    "grid": {
        "half_length_x": (float, 32.0),
        "points_x": (int, 256),
        "points_y": (int, 64),
    },
    "physics": {
        "k": (int, 2),
        "sign": (int, 1),
        "c": (float, 1.0),
        "eps": (float, 0.05),
        "amplitude": (float, 1.0),
        "sigma": (float, 4.0),
        # L2 norm of the datum as a fraction of ||Q_k||_2 (overrides amplitude)
        "norm_fraction": (float, math.nan),
        "c_kt": (float, math.nan),
    },
    "time": {
        "dt": (float, 1e-3),
        "t_end": (float, 1.0),
        "diagnostics_stride": (int, 10),
        "snapshot_stride": (int, 0),
    },
    "groundstate": {
        "half_length": (float, 20.0),
        "points": (int, 512),
        "tol": (float, 1e-11),
        "max_iter": (int, 500),
        "write_profile": (_bool, False),
    },
    "gn": {
        "trials": (int, 100),
        "partition": (str, "cosine_bump"),
        "partition_points": (int, 512),
        "degenerate_lambdas": (_floats, [1.0, 0.5, 0.25, 0.125]),
        "concentration_lambdas": (_floats, [4.0, 8.0, 16.0]),
    },
    "probe": {
        "scales": (_ints, [1, 2, 4, 8, 16, 32, 64]),
        "trials": (int, 20),
        "window": (float, 4.0),
        "nt": (int, 512),
    },
}


@dataclass
class ExperimentConfig:
    command: str
    params: dict = field(default_factory=dict)
    version: str = SCHEMA_VERSION

    def get(self, section: str, key: str):
        return self.params[section][key]


def defaults() -> dict:
    return {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}


def parse_value(section: str, key: str, text: str):
    if section not in SCHEMA:
        raise ConfigError(f"[{section}]: unknown section")
    if key not in SCHEMA[section]:
        raise ConfigError(f"{section}.{key}: unknown key")
    parser = SCHEMA[section][key][0]
    try:
        return parser(text)
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: {exc}") from None


# Named experiments, one per acceptance check; ``gzk run <name>`` resolves these.
EXPERIMENTS = {
    "groundstate-k1": "[experiment]\ncommand = groundstate\n[physics]\nk = 1\n",
    "groundstate-k2": "[experiment]\ncommand = groundstate\n[physics]\nk = 2\n",
    "groundstate-k3": "[experiment]\ncommand = groundstate\n[physics]\nk = 3\n",
    "groundstate-k4": "[experiment]\ncommand = groundstate\n[physics]\nk = 4\n",
    "conservation": (
        "[experiment]\ncommand = simulate\npreset = gaussian\n"
        "[grid]\nhalf_length_x = 32\npoints_x = 256\npoints_y = 64\n"
        "[physics]\nk = 2\namplitude = 1.0\nsigma = 4.0\n"
        "[time]\ndt = 0.001\nt_end = 1.0\n"
    ),
    "line-soliton": (
        "[experiment]\ncommand = soliton-test\n"
        "[grid]\nhalf_length_x = 32\npoints_x = 512\npoints_y = 16\n"
        "[physics]\nk = 1\nc = 1.0\n"
        "[time]\ndt = 0.001\nt_end = 1.0\n"
    ),
    "gn-verify-k2": "[experiment]\ncommand = gn-verify\n[physics]\nk = 2\n[gn]\nconcentration_lambdas = 4 8 16\n",
    "gn-verify-k3": "[experiment]\ncommand = gn-verify\n[physics]\nk = 3\n[gn]\nconcentration_lambdas = 4 8 16\n",
    "threshold-k2": (
        "[experiment]\ncommand = thresholds\npreset = gaussian\n"
        "[grid]\nhalf_length_x = 32\npoints_x = 256\npoints_y = 64\n"
        "[physics]\nk = 2\nnorm_fraction = 0.9\nsigma = 4.0\n"
        "[time]\ndt = 0.001\nt_end = 1.0\n"
    ),
    "threshold-k3": (
        "[experiment]\ncommand = thresholds\npreset = gaussian\n"
        "[grid]\nhalf_length_x = 32\npoints_x = 256\npoints_y = 64\n"
        "[physics]\nk = 3\nnorm_fraction = 0.1\nsigma = 4.0\n"
        "[time]\ndt = 0.001\nt_end = 1.0\n"
    ),
    "probe-strichartz": "[experiment]\ncommand = probe-strichartz\n[probe]\ntrials = 20\n",
}


def load_config(path, output: str | None = None) -> ExperimentConfig:
    """Read an INI file, or a named entry of EXPERIMENTS when ``path`` is not a file."""
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str
    try:
        if str(path) in EXPERIMENTS and not os.path.exists(path):
            cp.read_string(EXPERIMENTS[str(path)])
        else:
            with open(path) as fh:
                cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"config: malformed document: {exc}".splitlines()[0]) from None
    params = defaults()
    for sec in cp.sections():
        for key, text in cp.items(sec):
            params.setdefault(sec, {})[key] = parse_value(sec, key, text)
    if output is not None:
        params["experiment"]["output"] = output
    command = params["experiment"]["command"]
    return build(command, params)


def build(command, params: dict) -> ExperimentConfig:
    if command not in COMMANDS:
        raise ConfigError(f"experiment.command: must be one of {', '.join(COMMANDS)}, got {command!r}")
    cfg = ExperimentConfig(command, params, params["experiment"]["version"])
    validate(cfg)
    return cfg


def _require(cond: bool, key: str, message: str):
    if not cond:
        raise ConfigError(f"{key}: {message}")


def validate(cfg: ExperimentConfig) -> None:
    """Check parameters against the module preconditions before any work starts."""
    p = cfg.params
    major = cfg.version.split(".")[0]
    _require(major == SCHEMA_VERSION.split(".")[0], "experiment.version", f"unsupported version {cfg.version}")
    g, ph, t = p["grid"], p["physics"], p["time"]
    _require(g["half_length_x"] > 0, "grid.half_length_x", "must be positive")
    for key in ("points_x", "points_y"):
        _require(g[key] > 0 and g[key] % 2 == 0, f"grid.{key}", "must be a positive even integer")
    _require(1 <= ph["k"] <= 7, "physics.k", "must lie in 1..7")
    _require(ph["sign"] in (1, -1), "physics.sign", "must be +1 or -1")
    _require(ph["c"] > 0, "physics.c", "must be positive")
    _require(math.isnan(ph["c_kt"]) or ph["c_kt"] >= 0, "physics.c_kt", "must be nonnegative")
    _require(math.isnan(ph["norm_fraction"]) or ph["norm_fraction"] > 0, "physics.norm_fraction", "must be positive")
    _require(t["dt"] > 0, "time.dt", "must be positive")
    _require(t["t_end"] > 0, "time.t_end", "must be positive")
    _require(t["diagnostics_stride"] >= 1, "time.diagnostics_stride", "must be >= 1")
    _require(t["snapshot_stride"] >= 0, "time.snapshot_stride", "must be >= 0")
    gs = p["groundstate"]
    _require(gs["half_length"] > 0, "groundstate.half_length", "must be positive")
    _require(gs["points"] > 0 and gs["points"] % 2 == 0, "groundstate.points", "must be a positive even integer")
    _require(gs["tol"] > 0, "groundstate.tol", "must be positive")
    _require(gs["max_iter"] >= 1, "groundstate.max_iter", "must be >= 1")
    _require(p["gn"]["trials"] >= 1, "gn.trials", "must be >= 1")
    _require(p["gn"]["partition"] in ("cosine_bump", "polynomial_bump"), "gn.partition", "unknown profile")
    pr = p["probe"]
    _require(pr["trials"] >= 1, "probe.trials", "must be >= 1")
    _require(
        len(pr["scales"]) >= 2 and all(n >= 1 and n & (n - 1) == 0 for n in pr["scales"]),
        "probe.scales",
        "need at least two dyadic integers",
    )
    _require(pr["nt"] >= 16 and pr["nt"] % 2 == 0, "probe.nt", "must be an even integer >= 16")
    _require(pr["window"] > 2 * 8 / 5, "probe.window", "must exceed the cutoff support 16/5")
    if cfg.command in ("simulate", "thresholds"):
        _require(p["experiment"]["preset"] in ("gaussian", "line-soliton", "perturbed-soliton"),
                 "experiment.preset", "unknown preset")
    if cfg.command == "thresholds":
        _require(ph["k"] >= 2, "physics.k", "thresholds need k >= 2")
