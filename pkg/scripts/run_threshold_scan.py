#!/usr/bin/env python3
"""Scan the dimension thresholds for equal-dimension planar products.

For alpha on a grid, report which route certifies a positive-measure
distance set: the mixed two-factor margin 3*alpha - 2, the product-sum
margin 2*alpha - 4/3, and the regular-set route alpha > 2/3 - delta with
delta derived from the energy-improvement exponent at the given C_nu, K.
"""
import argparse

import numpy as np

import fractalab as fl


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c-nu", type=float, default=2.0)
    ap.add_argument("--dz-k", type=float, default=1.0)
    ap.add_argument("--alpha-min", type=float, default=0.55)
    ap.add_argument("--alpha-max", type=float, default=0.75)
    ap.add_argument("--steps", type=int, default=9)
    args = ap.parse_args()

    print(f"C_nu = {args.c_nu}, K = {args.dz_k}")
    print(f"{'alpha':>8} {'mixed':>9} {'prod-sum':>9} {'delta':>11} {'routes':>32}")
    for alpha in np.linspace(args.alpha_min, args.alpha_max, args.steps):
        report = fl.threshold_report(
            [float(alpha), float(alpha)], alpha=float(alpha), c_nu=args.c_nu, k=args.dz_k
        )
        routes = ",".join(report.applicable) if report.applicable else "-"
        print(
            f"{alpha:>8.4f} {float(report.mixed_margin):>+9.4f} "
            f"{float(report.product_sum_margin):>+9.4f} "
            f"{report.regular_delta:>11.3e} {routes:>32}"
        )


if __name__ == "__main__":
    main()
