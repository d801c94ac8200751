"""Run every named experiment into <out>/<name>/ and emit plot data for each."""

import argparse
import json
import time
from pathlib import Path

from gzk import cli
from gzk import config as cfgmod
from gzk.errors import MissingArtifact


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs")
    ap.add_argument("--only", nargs="*", choices=sorted(cfgmod.EXPERIMENTS))
    args = ap.parse_args()
    for name in args.only or cfgmod.EXPERIMENTS:
        out = Path(args.out) / name
        cfg = cfgmod.load_config(name, str(out))
        t0 = time.perf_counter()
        summary = cli.run(cfg)
        try:
            cli.emit_plotdata(out)
        except MissingArtifact:
            pass  # ground-state runs have no series to plot
        print(f"{name:20s} {time.perf_counter() - t0:7.1f}s  {json.dumps(summary, sort_keys=True)[:160]}")


if __name__ == "__main__":
    main()
