#!/usr/bin/env python3
"""Run every bundled reproduction analysis and collect the outputs.

Drives the CLI end to end: gate simulation and tomography summary for both
protocol variants, Wigner map of the target state, interleaved benchmarking
against the simulated gate, both injected-noise sweeps, the transition-graph
checks, and the analytic error budget.  Outputs land in --out (default
./reproduction_out), each file embedding its resolved configuration.
"""

import argparse
import sys
from pathlib import Path

from snapgate.cli import main as cli_main

STEPS = [
    ("simulate-gate", "bundled:reproduction_c.json", "gate_c"),
    ("simulate-gate", "bundled:reproduction_nc.json", "gate_nc"),
    ("budget", "bundled:reproduction_c.json", "budget"),
    ("wigner", "bundled:reproduction_c.json", "wigner"),
    ("check", "bundled:reproduction_c.json", "check_base"),
    ("check", "bundled:check_second_order.json", "check_second_order"),
    ("sweep", "bundled:sweep_relaxation.json", "sweep_relaxation"),
    ("sweep", "bundled:sweep_dephasing.json", "sweep_dephasing"),
    ("rb", "bundled:reproduction_c.json", "rb_c"),
]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="reproduction_out")
    ap.add_argument("--skip-rb", action="store_true",
                    help="skip the interleaved-benchmarking step (slowest)")
    args = ap.parse_args(argv)
    root = Path(args.out)
    for command, config, subdir in STEPS:
        if args.skip_rb and command == "rb":
            continue
        print(f"== {command} {config}")
        code = cli_main([command, "--config", config, "--out", str(root / subdir)])
        if code != 0:
            print(f"step failed with exit code {code}", file=sys.stderr)
            return code
    print(f"all outputs under {root}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
