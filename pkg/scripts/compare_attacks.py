#!/usr/bin/env python3
"""Run the no-attack / graph-attack / fake-model scenarios side by side.

Runs three federations on the same data, seed, and schedule, then prints the
accuracy, stealth, and detectability comparison table.

    python scripts/make_synthetic_idx.py --out data/synth
    python scripts/compare_attacks.py --data data/synth --out runs/compare
"""

import argparse
import json
from pathlib import Path

from fedpoison.cli import run_scenario
from fedpoison.config import parse_config


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", required=True, help="directory with the IDX files")
    parser.add_argument("--out", default="runs/compare")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--rounds", type=int, default=50)
    args = parser.parse_args()

    results = {}
    for attack in ("none", "gae", "mp"):
        out_dir = Path(args.out) / attack
        config = parse_config(None, {
            "data_root": args.data,
            "attack": attack,
            "seed": str(args.seed),
            "T_FL": str(args.rounds),
            "output_dir": str(out_dir),
        })
        run_scenario(config, quiet=True)
        results[attack] = json.loads((out_dir / "summary.json").read_text())

    print(f"{'scenario':<10} {'final acc':>10} {'stealth':>8} {'flag rate':>10}")
    for attack, summary in results.items():
        stealth = summary["attacker_stealth_rate"]
        flags = summary["attacker_flag_rate"]
        print(
            f"{attack:<10} {summary['final_global_accuracy']:>10.4f} "
            f"{'-' if stealth is None else f'{stealth:8.2f}'} "
            f"{'-' if flags is None else f'{flags:10.2f}'}"
        )
    drop = results["none"]["final_global_accuracy"] - results["gae"]["final_global_accuracy"]
    print(f"\ngraph-attack accuracy drop vs clean run: {drop * 100:.1f} percentage points")


if __name__ == "__main__":
    main()
