"""Measured busy fractions vs the LP optimum on a two-queue network with
fixed routing from queue 1 to queue 2.

    python scripts/busy_fractions.py --seeds 5 --horizon 2e5
"""

import argparse

import numpy as np

from jsqstab import lp
from jsqstab.network_sim import NetworkConfig, measure_internal_rates, simulate_network
from jsqstab.point_process import derive_seed, exponential
from jsqstab.stability import ModelParams


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--horizon", type=float, default=2e5)
    ap.add_argument("--p12", type=float, default=0.3)
    args = ap.parse_args()

    routing = [[0.0, args.p12], [0.0, 0.0]]
    params = ModelParams(2, 0.6, 0.2, 1.0, p=(0.5, 0.5), routing=routing)
    sol = lp.solve_oracle(lp.build_stability_lp(params))
    print(f"LP objective {sol.objective:.5f}, rho {np.round(sol.x[:2], 5)}")

    for k in range(args.seeds):
        cfg = NetworkConfig(
            m=2, service=exponential(1.0), horizon=args.horizon, seed=derive_seed(1, f"busy:{k}"),
            arrival=exponential(0.6), split=(0.5, 0.5), opportunistic=exponential(0.2),
            routing=routing,
        )
        traj = simulate_network(cfg)
        fixed, _ = measure_internal_rates(traj)
        busy = traj.busy_fraction
        n_opp = np.array([len(e) for e in traj.opportunistic], dtype=float)
        # the LP optimum needs about 85% of opportunistic traffic at queue 1
        print(f"seed {k}: busy {busy[0]:.4f} {busy[1]:.4f}  E(1,2) {fixed[0, 1]:.4f}  "
              f"opportunistic share to queue 1 {n_opp[0] / n_opp.sum():.3f}")


if __name__ == "__main__":
    main()
