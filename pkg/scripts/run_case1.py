"""Finite-horizon LQR benchmark: regulated vs uncontrolled plant.

Runs the shipped case1 configs (LQR and controller=none on identical
plant and initial data), writes both artifact sets plus an aligned
comparison table, and prints the cost/tracking-error ranking.

Usage: python scripts/run_case1.py [out_dir]
"""

import sys
from pathlib import Path

from hyperlqr import compare_controllers, load_config, with_overrides
from hyperlqr.runner import resolve_time_grid

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "runs" / "case1"
    lqr = load_config(ROOT / "configs" / "case1.json")
    unc = load_config(ROOT / "configs" / "case1_uncontrolled.json")
    # the comparison needs one shared time grid; the LQR run's kernel CFL
    # rule lands on 223 steps for the canonical grid, so pin both there
    n_steps = resolve_time_grid(lqr).n_steps
    comparison = compare_controllers(
        with_overrides(lqr, n_steps=n_steps),
        with_overrides(unc, n_steps=n_steps),
        out,
    )
    for line in comparison.ranking_lines():
        print(line)
    print(f"artifacts -> {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
