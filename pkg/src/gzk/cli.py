"""Command-line front end: ``gzk <command> [flags]`` or ``gzk run CONFIG``.

Exit codes: 0 success, 2 configuration, 3 numerical failure, 4 I/O.
Errors print a single line ``E:<class>:<message>`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .errors import ConfigError, GZKError, MissingArtifact
from .spectral import _atomic_write_bytes

# flag -> (section, key); values go through the schema parsers
FLAGS = {
    "--seed": ("experiment", "seed"),
    "--preset": ("experiment", "preset"),
    "--out": ("experiment", "output"),
    "--lx": ("grid", "half_length_x"),
    "--nx": ("grid", "points_x"),
    "--ny": ("grid", "points_y"),
    "--k": ("physics", "k"),
    "--sign": ("physics", "sign"),
    "--c": ("physics", "c"),
    "--eps": ("physics", "eps"),
    "--amplitude": ("physics", "amplitude"),
    "--sigma": ("physics", "sigma"),
    "--norm-fraction": ("physics", "norm_fraction"),
    "--c-kt": ("physics", "c_kt"),
    "--dt": ("time", "dt"),
    "--t-end": ("time", "t_end"),
    "--diagnostics-stride": ("time", "diagnostics_stride"),
    "--snapshot-stride": ("time", "snapshot_stride"),
    "--gs-half-length": ("groundstate", "half_length"),
    "--gs-points": ("groundstate", "points"),
    "--gs-tol": ("groundstate", "tol"),
    "--write-profile": ("groundstate", "write_profile"),
    "--trials": (None, "trials"),  # gn.trials or probe.trials depending on command
    "--partition": ("gn", "partition"),
    "--scales": ("probe", "scales"),
    "--nt": ("probe", "nt"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"arguments: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gzk", description="gZK simulation and variational-analysis toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="run a config file or a named experiment")
    run.add_argument("config", help="INI path or one of: " + ", ".join(cfgmod.EXPERIMENTS))
    run.add_argument("--out", help="output directory (overrides experiment.output)")
    plot = sub.add_parser("plotdata", help="emit plain-text column files for a run directory")
    plot.add_argument("run_dir")
    for name in cfgmod.COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="config file supplying defaults for this command")
        for flag in FLAGS:
            p.add_argument(flag, dest=flag[2:].replace("-", "_"))
    return parser


def config_from_args(args) -> cfgmod.ExperimentConfig:
    if getattr(args, "config", None):
        base = cfgmod.load_config(args.config)
        params = base.params
        if base.command != args.command:
            raise ConfigError(f"experiment.command: config says {base.command!r}, command line says {args.command!r}")
    else:
        params = cfgmod.defaults()
        params["experiment"]["command"] = args.command
    for flag, (section, key) in FLAGS.items():
        text = getattr(args, flag[2:].replace("-", "_"))
        if text is None:
            continue
        if section is None:
            section = "probe" if args.command == "probe-strichartz" else "gn"
        params[section][key] = cfgmod.parse_value(section, key, text)
    return cfgmod.build(args.command, params)


# ---------------------------------------------------------------------------
# commands


def _write_text(path: Path, text: str) -> None:
    _atomic_write_bytes(path, text.encode())


def _write_json(path: Path, obj) -> None:
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _nan_to_none(x):
    return None if isinstance(x, float) and math.isnan(x) else x


def _ground_state(cfg, k=None):
    from .groundstate import petviashvili_solve

    gs = cfg.params["groundstate"]
    return petviashvili_solve(
        k or cfg.get("physics", "k"), gs["half_length"], gs["points"], gs["tol"], gs["max_iter"]
    )


def _sim_config(cfg):
    from .dynamics import SimConfig

    g, ph, t = cfg.params["grid"], cfg.params["physics"], cfg.params["time"]
    return SimConfig(
        k=ph["k"], dt=t["dt"], t_end=t["t_end"], half_length_x=g["half_length_x"], points_x=g["points_x"],
        points_y=g["points_y"], sign=ph["sign"], snapshot_stride=t["snapshot_stride"],
        diagnostics_stride=t["diagnostics_stride"], c_kt=_nan_to_none(ph["c_kt"]),
    )


def _initial(cfg, sim, gs=None):
    from . import functionals as fn
    from .initial import make_initial

    ph = cfg.params["physics"]
    preset = cfg.get("experiment", "preset")
    u0 = make_initial(preset, sim.grid, ph["k"], c=ph["c"], eps=ph["eps"], amplitude=ph["amplitude"], sigma=ph["sigma"])
    if not math.isnan(ph["norm_fraction"]):
        if gs is None:
            gs = _ground_state(cfg)
        u0 = u0 * (ph["norm_fraction"] * gs.l2_norm / math.sqrt(fn.mass(u0)))
    return u0


def _evolve_and_record(cfg, sim, u0, out: Path):
    from .dynamics import BlowUp, evolve, write_diagnostics

    snap_dir = out / "snapshots" if sim.snapshot_stride else None
    try:
        result = evolve(u0, sim, out_dir=snap_dir)
    except BlowUp as exc:
        write_diagnostics(out / "diagnostics.csv", exc.result.diagnostics)
        raise
    write_diagnostics(out / "diagnostics.csv", result.diagnostics)
    return result


def cmd_simulate(cfg, out: Path) -> dict:
    sim = _sim_config(cfg)
    u0 = _initial(cfg, sim)
    result = _evolve_and_record(cfg, sim, u0, out)
    d = result.diagnostics
    summary = {
        "command": "simulate",
        "preset": cfg.get("experiment", "preset"),
        "k": sim.k,
        "sign": sim.sign,
        "C_kT": sim.C_kT,
        "t_final": result.t_final,
        "mass_drift": abs(d[-1].mass - d[0].mass) / d[0].mass if d[0].mass > 0 else 0.0,
        "energy_drift": abs(d[-1].energy - d[0].energy) / (abs(d[0].energy) + 1),
        "max_y_variation": float(np.max(np.ptp(result.final.values, axis=1))),
    }
    _write_json(out / "run.json", summary)
    return summary


def cmd_groundstate(cfg, out: Path) -> dict:
    from .groundstate import report_dict
    from .spectral import write_snapshot

    gs = _ground_state(cfg)
    rep = report_dict(gs)
    _write_json(out / "groundstate.json", rep)
    if cfg.get("groundstate", "write_profile"):
        write_snapshot(out / f"groundstate_k{gs.k}.gzkf", gs.profile)
    return rep


def cmd_thresholds(cfg, out: Path) -> dict:
    from . import functionals as fn

    k = cfg.get("physics", "k")
    gs = _ground_state(cfg)
    sim = _sim_config(cfg)
    u0 = _initial(cfg, sim, gs)
    rep = fn.threshold_report(u0, k, gs, sim.C_kT)
    payload = json.loads(rep.to_json())
    result = _evolve_and_record(cfg, sim, u0, out)
    rows = result.diagnostics
    if k == 2:
        bound = fn.k2_gradient_bound(rep.mass, rep.energy, gs.mass_sq, sim.C_kT) if rep.gr0_holds else None
        margin = None if bound is None else min(bound - r.grad_norm_sq for r in rows)
        payload["monitor"] = {"kind": "k2_gradient_bound", "bound": bound, "min_margin": margin,
                              "holds": None if bound is None else margin >= 0}
    else:
        worst = max(r.X_t for r in rows)
        payload["monitor"] = {"kind": "X_below_x0", "max_X_t": worst,
                              "holds": None if rep.x0 is None else worst < rep.x0}
    _write_json(out / "threshold.json", payload)
    return payload


def cmd_gn_verify(cfg, out: Path) -> dict:
    from . import functionals as fn
    from .groundstate import radial_profile

    k = cfg.get("physics", "k")
    gn = cfg.params["gn"]
    part = fn.build_partition(gn["partition"], gn["partition_points"])
    C_kT = part.c_bound
    gs = _ground_state(cfg)
    suite = fn.verify_sgn_suite(k, gs.sharp_constant, C_kT, gn["trials"], cfg.get("experiment", "seed"),
                                raise_on_violation=False)
    _write_text(out / "sgn_suite.csv", suite.to_csv())
    degenerate = fn.degenerate_scan(k, gs.sharp_constant, gn["degenerate_lambdas"])
    _write_text(out / "degenerate_scan.csv", "lambda,ratio\n" + "".join(f"{l!r},{r!r}\n" for l, r in degenerate))
    conc = fn.concentration_scan(k, radial_profile(gs), gn["concentration_lambdas"])
    _write_text(out / "concentration_scan.csv",
                "lambda,ratio\n" + "".join(f"{l!r},{r / gs.sharp_constant!r}\n" for l, r in conc))
    ratios = [r for _, r in degenerate]
    summary = {
        "k": k,
        "C_kR": gs.sharp_constant,
        "C_kT": C_kT,
        "partition": gn["partition"],
        "trials": gn["trials"],
        "violations": suite.violations,
        "max_ratio": suite.max_ratio,
        "degenerate_monotone": all(b > a for a, b in zip(ratios, ratios[1:])),
        "concentration_final_rel_gap": abs(conc[-1][1] / gs.sharp_constant - 1),
    }
    _write_json(out / "gn_summary.json", summary)
    if suite.violations:
        from .errors import ViolationFound

        raise ViolationFound(f"{suite.violations} violations of the cylinder inequality")
    return summary


def cmd_probe(cfg, out: Path) -> dict:
    from .analysis import strichartz_ratio_scan

    pr = cfg.params["probe"]
    main, counter = strichartz_ratio_scan(
        seed=cfg.get("experiment", "seed"), scales=tuple(pr["scales"]), trials=pr["trials"],
        exponents=((1 / 6, 3 / 8), (0.0, 3 / 8)), window=pr["window"], nt=pr["nt"],
    )
    _write_text(out / "probe.json", main.to_json() + "\n")
    _write_text(out / "probe_s0.json", counter.to_json() + "\n")
    return {"slope": main.slope, "slope_s0": counter.slope}


def cmd_soliton_test(cfg, out: Path) -> dict:
    from .analysis import line_soliton, soliton_residual

    sim = _sim_config(cfg)
    c, k = cfg.get("physics", "c"), sim.k
    u0 = line_soliton(c, k, sim.grid)
    result = _evolve_and_record(cfg, sim, u0, out)
    g = sim.grid
    exact = line_soliton(c, k, g, x0=c * result.t_final)
    err = math.sqrt(float(np.sum((result.final.values - exact.values) ** 2)) * g.dx * g.dy)
    summary = {
        "k": k,
        "c": c,
        "residual": soliton_residual(u0, c, k),
        "t_final": result.t_final,
        "shape_error": err,
        "max_y_variation": float(np.max(np.ptp(result.final.values, axis=1))),
    }
    _write_json(out / "soliton.json", summary)
    return summary


COMMAND_TABLE = {
    "simulate": cmd_simulate,
    "groundstate": cmd_groundstate,
    "thresholds": cmd_thresholds,
    "gn-verify": cmd_gn_verify,
    "probe-strichartz": cmd_probe,
    "soliton-test": cmd_soliton_test,
}


def run(cfg: cfgmod.ExperimentConfig) -> dict:
    out = Path(cfg.get("experiment", "output"))
    return COMMAND_TABLE[cfg.command](cfg, out)


# ---------------------------------------------------------------------------
# plot data


def emit_plotdata(run_dir) -> list[Path]:
    """Project run artifacts onto plain ``plot_*.csv`` column files."""
    from .dynamics import read_diagnostics_csv

    run_dir = Path(run_dir)
    written = []
    diag = run_dir / "diagnostics.csv"
    if diag.exists():
        rows = read_diagnostics_csv(diag)
        p = run_dir / "plot_mass.csv"
        _write_text(p, "t,mass\n" + "".join(f"{r.t!r},{r.mass!r}\n" for r in rows))
        written.append(p)
        thr = run_dir / "threshold.json"
        if thr.exists():
            x0 = json.loads(thr.read_text()).get("x0")
            x0s = "nan" if x0 is None else repr(x0)
            p = run_dir / "plot_X.csv"
            _write_text(p, "t,X_t,x0\n" + "".join(f"{r.t!r},{r.X_t!r},{x0s}\n" for r in rows))
            written.append(p)
    for name in ("degenerate_scan.csv", "concentration_scan.csv"):
        src = run_dir / name
        if src.exists():
            p = run_dir / f"plot_{name}"
            _write_text(p, src.read_text())
            written.append(p)
    for name in ("probe.json", "probe_s0.json"):
        src = run_dir / name
        if src.exists():
            rep = json.loads(src.read_text())
            p = run_dir / f"plot_{name[:-5]}.csv"
            _write_text(p, "N,max_ratio\n" + "".join(f"{e['N']},{e['max_ratio']!r}\n" for e in rep["per_scale"]))
            written.append(p)
    if not written:
        raise MissingArtifact(f"{run_dir}: no diagnostics, scans or probe reports found")
    return written


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = build_parser().parse_args(argv)
        if args.command == "plotdata":
            for p in emit_plotdata(args.run_dir):
                print(p)
            return 0
        cfg = cfgmod.load_config(args.config, args.out) if args.command == "run" else config_from_args(args)
        result = run(cfg)
        print(json.dumps(result, indent=2, sort_keys=True))
        return 0
    except GZKError as exc:
        msg = str(exc).replace("\n", " ")
        print(f"E:{type(exc).__name__}:{msg}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
