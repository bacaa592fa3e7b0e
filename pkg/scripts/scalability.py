#!/usr/bin/env python3
"""Time discovery plus annotation over growing synthetic logs and fit a
linear model of runtime against event count.

Usage: python3 scripts/scalability.py [--sizes 1000,2000,5000,10000,20000]
"""

import argparse
import time

import numpy as np

from ocmine.examples import scaled_order_item_package_log
from ocmine.ocpn import DiscoveryParams, discover_ocpn
from ocmine.replay import annotate


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="1000,2000,5000,10000,20000")
    parser.add_argument("--repeats", type=int, default=1)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    xs, ys = [], []
    print(f"{'events':>8}  {'seconds':>8}")
    for target in sizes:
        log = scaled_order_item_package_log(target)
        best = min(_run_once(log) for _ in range(args.repeats))
        xs.append(len(log))
        ys.append(best)
        print(f"{len(log):>8}  {best:>8.3f}")

    x, y = np.asarray(xs, float), np.asarray(ys, float)
    (slope, intercept), residuals, *_ = np.polyfit(x, y, 1, full=True)
    ss_res = float(residuals[0]) if len(residuals) else 0.0
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot else 1.0
    print(f"\nlinear fit: t = {slope:.3g} * events + {intercept:.3g}  (R^2 = {r2:.4f})")


def _run_once(log) -> float:
    start = time.perf_counter()
    annotate(log, discover_ocpn(log, DiscoveryParams()))
    return time.perf_counter() - start


if __name__ == "__main__":
    main()
