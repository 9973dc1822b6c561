"""Sweep the timer constants (cr, cb) against the holding criterion.

For each setting, runs 100 holding trials from a safe snapshot at n=64 over
1e4 parallel time for tau=1 and tau=2, plus 20 long (2e5) trials at tau=1,
and prints the disruption rates.

    python benchmarks/calibrate.py
"""
import argparse

from poplead.experiments import holding_experiment
from poplead.protocols import POptParams


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--settings", default="2:4,3:6,4:8,6:12,8:16,10:20")
    args = ap.parse_args()
    print("cr,cb,disruption_tau1,disruption_tau2,long_disruption_tau1,long_median")
    for item in args.settings.split(","):
        cr, cb = map(int, item.split(":"))
        rates = []
        for tau in (1, 2):
            p = POptParams.for_population(args.n, tau=tau, cr=cr, cb=cb)
            rates.append(holding_experiment(p, 100, 1e4).info["disruption_rate"])
        p = POptParams.for_population(args.n, tau=1, cr=cr, cb=cb)
        long = holding_experiment(p, 20, 2e5)
        print(f"{cr},{cb},{rates[0]},{rates[1]},{long.info['disruption_rate']},"
              f"{long.stats.median:.6g}", flush=True)


if __name__ == "__main__":
    main()
