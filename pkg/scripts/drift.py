"""Late-window drift slope and occupancy below K for the symmetric model,
one line per replica and queue.

    python scripts/drift.py --lam 1.8 --lam-prime 0.6
"""

import argparse

from jsqstab.network_sim import NetworkConfig, simulate_network
from jsqstab.point_process import derive_seed, exponential
from jsqstab.stability import ModelParams, check_sigma, empirical_diagnostics


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--lam", type=float, default=1.2)
    ap.add_argument("--lam-prime", type=float, default=0.4)
    ap.add_argument("--horizon", type=float, default=2e5)
    ap.add_argument("--replicas", type=int, default=5)
    ap.add_argument("--K", type=int, default=100)
    args = ap.parse_args()

    verdict = check_sigma(ModelParams(2, args.lam, args.lam_prime, 1.0, p=(0.5, 0.5)))
    # unstable drift per queue is (lam + lam') / 2 - mu
    print(f"verdict {verdict.status}, expected slope {max(0.0, (args.lam + args.lam_prime) / 2 - 1):.3f}")
    for r in range(args.replicas):
        cfg = NetworkConfig(
            m=2, service=exponential(1.0), horizon=args.horizon, seed=derive_seed(2, f"drift:{r}"),
            arrival=exponential(args.lam), split=(0.5, 0.5), opportunistic=exponential(args.lam_prime),
        )
        for j, d in enumerate(empirical_diagnostics(simulate_network(cfg), K=args.K)):
            print(f"replica {r} queue {j}: slope {d['slope']:+.4f} occupancy {d['occupancy']:.4f}")


if __name__ == "__main__":
    main()
