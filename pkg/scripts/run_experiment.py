"""Run a bundled scenario (or a scenario file) with both methods and print
the result table; a thin wrapper over the command-line entry point.

    python3 scripts/run_experiment.py exp1_test1 --runs 25 --seed 7
"""
import argparse
import sys

from uwbtbd.cli import main


def parse():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("scenario", nargs="?", default="exp1_test1")
    ap.add_argument("--runs", type=int, default=25)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out-dir", default=None)
    return ap.parse_args()


if __name__ == "__main__":
    a = parse()
    argv = ["--scenario", a.scenario, "--runs", str(a.runs), "--seed", str(a.seed), "--method", "both",
            "--out-dir", a.out_dir or f"results/{a.scenario}"]
    if a.workers:
        argv += ["--workers", str(a.workers)]
    sys.exit(main(argv))
