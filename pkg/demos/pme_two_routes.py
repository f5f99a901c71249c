"""
Two ways to solve the stochastic porous medium equation.

The direct route time-steps du = A(u) dt + beta u d omega with left-point
Young sums.  The transformed route solves the random PDE for
v = exp(-beta omega) u, which has no noise term, and maps back.  Both
converge to the same pathwise solution, so their gap shrinks under
refinement.  We also print the energy of the transformed solution,
which the coercivity identity forces to be nonincreasing.

Run:  python3 demos/pme_two_routes.py
"""

from __future__ import annotations

import numpy as np

from fracrds.models import PorousMediumModel
from fracrds.noise import build_two_sided_path, subsample_path
from fracrds.plots import loglog_fit
from fracrds.solver import SolveConfig, equivalence_gap, solve_transformed

BETA = 0.5


def main():
    model = PorousMediumModel(16, 3.0)
    u = model.random_state(np.random.default_rng(1))
    u0 = 0.3 * u / np.abs(u).max()
    fine = build_two_sided_path(0.75, 2.0**-14, 0, 2**14, seed=7)

    dts, gaps = [], []
    print(f"{'dt':>10} {'sup |u_direct - u_transform|_H':>32}")
    for k in range(9, 15):
        p = subsample_path(fine, 2 ** (14 - k))
        gap = equivalence_gap(model, p, BETA, u0, (0.0, 1.0), SolveConfig(p.step, "transform-implicit"))
        dts.append(p.step)
        gaps.append(gap)
        print(f"{p.step:10.2e} {gap:32.3e}")
    print(f"fitted order: {loglog_fit(dts, gaps)[0]:.3f}")

    p = subsample_path(fine, 4)
    traj = solve_transformed(model, p, BETA, u0, (0.0, 1.0),
                             SolveConfig(p.step, "transform-implicit"))
    # diagnostics are kept at every step; print every 512th
    energy = (traj.z * traj.norm_h)[::512]
    print("energy exp(-beta omega_t) |u_t|_H at t = 0, 1/8, ..., 1:")
    print("  " + " ".join(f"{e:.4f}" for e in energy))


if __name__ == "__main__":
    main()
