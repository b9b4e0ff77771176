"""Controller comparison benchmark: LQR vs backstepping on one plant.

Runs the shipped case2 configs (identical plant, weights, initial data,
and pinned time grid; only the controller differs), writes both artifact
sets plus the aligned comparison table, and prints the ranking by final
tracking error and by total cost.

Usage: python scripts/run_case2.py [out_dir]
"""

import sys
from pathlib import Path

from hyperlqr import compare_controllers, load_config

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "runs" / "case2"
    lqr = load_config(ROOT / "configs" / "case2_lqr.json")
    backstepping = load_config(ROOT / "configs" / "case2_backstepping.json")
    comparison = compare_controllers(lqr, backstepping, out)
    for line in comparison.ranking_lines():
        print(line)
    print(f"artifacts -> {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
