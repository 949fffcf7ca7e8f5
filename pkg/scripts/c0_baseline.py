#!/usr/bin/env python3
"""Record empirical clearance baselines for the unit-scale hole search.

The clearance constant is existence-only in theory; this sweep pins down
what the grid search actually attains for a few (n, k, ell) settings so
tests can assert a recorded positive floor instead of a guessed one.
"""

from __future__ import annotations

import argparse
import time

from gmtkit.sparsify import estimate_c0, min_sparsity_parameter


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=300)
    ap.add_argument("--grid", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    configs = [
        (2, 1, None),
        (2, 1, 6),  # above-threshold margin
        (3, 1, None),
        (3, 2, None),
    ]
    print(f"trials={args.trials} grid={args.grid} seed={args.seed}")
    print(f"{'n':>2} {'k':>2} {'ell':>4} {'c0 estimate':>22} {'flagged':>8} {'secs':>7}")
    for n, k, ell in configs:
        if ell is None:
            ell = min_sparsity_parameter(n, k, "ball-bound")
        t0 = time.time()
        est = estimate_c0(ell, n, k, trials=args.trials, grid=args.grid, seed=args.seed)
        dt = time.time() - t0
        print(f"{n:>2} {k:>2} {ell:>4} {est.value:>22.16f} {str(est.below_threshold):>8} {dt:>7.2f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
