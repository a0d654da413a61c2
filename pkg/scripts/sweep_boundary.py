"""Verdict, LP objective and drift slope across the dedicated arrival rate
of the symmetric two-queue model.  The analytic boundary is lam = 1.6.

    python scripts/sweep_boundary.py --horizon 2e4 --replicas 3
"""

import argparse
from pathlib import Path

from jsqstab.cli import sweep_csv, sweep_rows
from jsqstab.config import ExperimentConfig, SweepSpec, read_json

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "sweep_lambda.json"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--horizon", type=float, default=2e4)
    ap.add_argument("--replicas", type=int, default=1)
    ap.add_argument("--start", type=float, default=0.5)
    ap.add_argument("--stop", type=float, default=2.5)
    ap.add_argument("--steps", type=int, default=21)
    args = ap.parse_args()

    data = read_json(CONFIG)
    data["horizon"] = args.horizon
    cfg = ExperimentConfig.from_dict(data)
    spec = SweepSpec("dedicated.arrival.rate", args.start, args.stop, args.steps, args.replicas)
    print(sweep_csv(sweep_rows(cfg, spec)), end="")


if __name__ == "__main__":
    main()
