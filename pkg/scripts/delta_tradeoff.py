"""Cell-size trade-off: run one scenario at several cell sizes on identical
seeds and tabulate mean OSPA against mean per-run processing time.

    python3 scripts/delta_tradeoff.py --scenario exp1_test1 --runs 10 --deltas 0.1 0.2
"""
import argparse
import json

from uwbtbd.evaluation import monte_carlo
from uwbtbd.scenario import load_scenario_file, with_cell_size


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default="exp1_test1")
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--deltas", type=float, nargs="+", default=[0.1, 0.2])
    ap.add_argument("--json", default=None, help="optional path for the table as JSON")
    a = ap.parse_args()
    spec = load_scenario_file(a.scenario)
    rows = []
    print(f"{'delta [m]':>9} {'grid':>9} {'OSPA [m]':>9} {'SE':>7} {'N_FA':>7} {'time [s]':>9}")
    for d in a.deltas:
        s = with_cell_size(spec, d)
        # one worker so the timings are not distorted by contention
        agg = monte_carlo(s, a.runs, a.seed, workers=1).summary("proposed")
        rows.append({"delta_m": d, "grid": list(s.grid.shape), **agg.as_dict()})
        print(f"{d:>9.3f} {s.grid.n_x:>4}x{s.grid.n_y:<4} {agg.ospa:>9.3f} {agg.ospa_se:>7.3f} "
              f"{agg.false_per_scan:>7.4f} {agg.time:>9.2f}")
    if a.json:
        with open(a.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
