#!/usr/bin/env python3
"""Per-iteration cost versus problem size.

Times the ADMM iteration on square strips at a range of element counts
and fits the power-law exponent. The iteration is one sparse backsolve
plus single-pass vector work, so on machines with ordinary memory
bandwidth the exponent lands near 1; a memory-throttled host inflates it
once the triangular factor no longer fits in cache.
"""

import argparse
import gc

import numpy as np

from cohadm.admm import AdmmConfig
from cohadm.cohesive import CohesiveParams
from cohadm.driver import ExtrapolationPolicy, LoadSchedule, run_quasistatic
from cohadm.elasticity import Material
from cohadm.meshgen import rect_strip


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--grids", type=int, nargs="+", default=[32, 63, 122],
                        help="cells per side; elements = 2 * n * n")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    material = Material(youngs_modulus=3000.0, poisson_ratio=0.2,
                        mode="plane_stress", thickness=1.0)
    cohesive = CohesiveParams(sigma_c=3.0, delta_c=0.02287, beta=1.0)
    config = AdmmConfig(alpha=100.0, c_primal=5e-4, c_dual=5e-4)

    sizes = []
    per_iter = []
    for nx in args.grids:
        mesh = rect_strip(10.0, 10.0, nx, nx)
        schedule = LoadSchedule(
            bc_set="right", direction="x", u_start=0.0, u_end=0.005,
            n_steps=5, fixed_sets=(("left", "x"), ("pin", "y")),
        )
        best = np.inf
        iters = 0
        for _ in range(args.repeats):
            gc.collect()
            record = run_quasistatic(
                mesh, material, cohesive, schedule, config,
                policy=ExtrapolationPolicy(enabled=False),
            )
            iters = record.total_iterations
            best = min(best, sum(r.wall_ms for r in record.rows) / iters)
        sizes.append(2 * nx * nx)
        per_iter.append(best)
        print(f"{2 * nx * nx:6d} elements: {best:7.2f} ms/iteration "
              f"({iters} iterations)")

    exponent = np.polyfit(np.log(sizes), np.log(per_iter), 1)[0]
    print(f"fitted power-law exponent: {exponent:.3f}")


if __name__ == "__main__":
    main()
