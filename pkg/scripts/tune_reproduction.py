#!/usr/bin/env python3
"""Scan reproduction-config candidates against the reference-scale targets.

Prints, for a candidate protocol configuration: both variants' channel
errors, native and maximal-injection ancilla populations, sweep slope
ratios, and the analytic budget, next to their acceptance windows.
"""

import argparse
import math
import sys
import time

import numpy as np

from snapgate import device as dv
from snapgate import protocol as pr
from snapgate.analysis import build_error_budget, sweep_injected_noise


def candidate_config(snap=1.0e-6, meas=0.6e-6, leak=0.012, xkerr=0.005,
                     hmix=0.01, assign=0.005):
    conf = np.full((3, 3), assign / 2) + np.eye(3) * (1 - assign * 1.5)
    return pr.ProtocolConfig(
        variant="C", theta=math.pi / 2, et_drive_on=True,
        snap_duration=snap, swap_duration=100e-9, measurement_duration=meas,
        measurement_fidelity=conf, max_repeats=5, drive_model="rwa",
        raman_leakage_prob=leak, readout_dephasing_prob=xkerr,
        h_mixing_prob=hmix, cavity_dim=8,
    )


def evaluate(config, params, *, sweep_points=5, skip_sweeps=False):
    t0 = time.time()
    cfg_nc = config.replace(variant="NC", et_drive_on=False)
    err_c = pr.gate_error(config, params)
    err_nc = pr.gate_error(cfg_nc, params)
    print(f"S_C error  = {err_c * 100:6.2f}%   window [1.5, 3.5] (ref 2.4)")
    print(f"S_NC error = {err_nc * 100:6.2f}%   window [3.5, 6.0] (ref 4.6)")

    rho_in = pr.initial_state(config, params, [1, 0, 0])
    cond = pr.run_gate_conditioned(config, params, rho_in)
    print(f"native populations: P_g={cond['g'][0]*100:.2f}% P_e={cond['e'][0]*100:.2f}% "
          f"P_f={cond['f'][0]*100:.2f}%   (ref: P_e 3.4, P_f <1)")

    report = build_error_budget(params, config, backaction_fraction=0.09)
    print(f"budget total = {report.total_dephased*100:5.2f}%  window [1.6, 2.6] (ref 2.1)")
    print(f"budget NC fidelity = {report.nc_fidelity*100:5.2f}%  window [96, 97.5] (ref 96.7)")

    if skip_sweeps:
        return
    max_rate = 1.0 / 2e-6
    for axis, native in (("relaxation", 1 / params.t1_ef), ("dephasing", 1 / params.tphi_gf)):
        rates = np.linspace(native, max_rate, sweep_points)
        res = sweep_injected_noise(axis, rates, params, config, cfg_nc)
        top = res.points[-1]
        window = "[4, 8] (ref 5.8)" if axis == "relaxation" else "[3, 6] (ref 4.2)"
        pop = top.p_e if axis == "relaxation" else top.p_f
        pop_target = "25 +- 5" if axis == "relaxation" else "14 +- 5"
        print(f"{axis}: ratio = {res.slope_ratio:5.2f} +- {res.slope_ratio_stderr:.2f} "
              f"window {window}; max-injection pop = {pop*100:5.2f}% ({pop_target})")
        print(f"    slopes: NC {res.slope_nc:.3f} +- {res.slope_nc_stderr:.3f} | "
              f"C {res.slope_c:.4f} +- {res.slope_c_stderr:.4f}")
        print("    errors NC:", " ".join(f"{p.error_nc*100:.2f}" for p in res.points))
        print("    errors C: ", " ".join(f"{p.error_c*100:.2f}" for p in res.points))
        print("    P_e:      ", " ".join(f"{p.p_e*100:.2f}" for p in res.points))
        print("    P_f:      ", " ".join(f"{p.p_f*100:.2f}" for p in res.points))
    print(f"[{time.time() - t0:.0f}s]")


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--snap", type=float, default=1.0)
    ap.add_argument("--meas", type=float, default=0.6)
    ap.add_argument("--leak", type=float, default=0.012)
    ap.add_argument("--xkerr", type=float, default=0.005)
    ap.add_argument("--hmix", type=float, default=0.01)
    ap.add_argument("--assign", type=float, default=0.005)
    ap.add_argument("--fc", type=float, default=0.07,
                    help="cavity fraction of injected readout-photon dephasing")
    ap.add_argument("--points", type=int, default=5)
    ap.add_argument("--skip-sweeps", action="store_true")
    args = ap.parse_args(argv)
    config = candidate_config(args.snap * 1e-6, args.meas * 1e-6, args.leak,
                              args.xkerr, args.hmix, args.assign)
    params = dv.DeviceParams(injected_dephasing_cavity_fraction=args.fc)
    print(f"snap={args.snap}us meas={args.meas}us leak={args.leak} xkerr={args.xkerr} "
          f"hmix={args.hmix} assign={args.assign} fc={args.fc}")
    evaluate(config, params, sweep_points=args.points, skip_sweeps=args.skip_sweeps)
    return 0


if __name__ == "__main__":
    sys.exit(main())
