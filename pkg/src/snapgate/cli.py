"""Batch front end: one subcommand per analysis, driven by a config file.

Every command reads a single JSON run file, resolves it against the schema,
and emits self-describing output files (resolved config, package version and
seed embedded) so identical inputs reproduce identical bytes.

Exit codes: 0 success, 2 configuration/validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import codes
from . import hilbert as hl
from . import protocol as pr
from .analysis import (build_error_budget, check_error_transparency,
                       check_path_independence, run_irb_comparison, run_rb,
                       sweep_injected_noise)
from .analysis.graph import TransitionGraph
from .config import (ConfigError, RunConfig, load_run_config, parse_quantity,
                     resolve_config_path)
from .device import build_h0, build_jump_ops
from .dynamics import IntegrationError


def _meta(run: RunConfig, seed: int) -> dict:
    return {"tool": "snapgate", "version": __version__, "seed": seed, "config": run.raw}


def _write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, meta: dict, header: str, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# snapgate {meta['version']}",
             f"# seed: {meta['seed']}",
             f"# config: {json.dumps(meta['config'], sort_keys=True)}"]
    lines.append(header)
    for row in rows:
        lines.append(",".join(f"{v:.12g}" if isinstance(v, float) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _target_channel(config: pr.ProtocolConfig) -> codes.LogicalChannel:
    return codes.LogicalChannel.from_unitary(codes.s_theta_logical_unitary(config.theta))


def cmd_simulate_gate(run: RunConfig, out: Path, seed: int, fmt: str) -> int:
    section = dict(run.section("simulate_gate"))
    bloch = section.pop("input_bloch", [1.0, 0.0, 0.0])
    if section:
        raise ConfigError(f"unknown keys in [simulate_gate]: {sorted(section)}")
    config, params = run.protocol, run.device
    if config is None:
        raise ConfigError("simulate-gate needs a [protocol] section")
    rho_in = pr.initial_state(config, params, bloch)
    outcome = pr.run_gate(config, params, rho_in)
    cav = hl.partial_trace_ancilla(config.space, outcome.final_rho.matrix)
    target = codes.s_theta_cavity(config.cavity_dim, config.theta) @ codes.encode(config.cavity_dim, bloch)
    fidelity = float(np.real(np.vdot(target, cav @ target)))
    chan = pr.logical_gate_channel(config, params)
    error = chan.channel_error(_target_channel(config))

    cond = pr.run_gate_conditioned(config, params, rho_in)
    cond_table = {}
    for level, (prob, rho_cav) in sorted(cond.items()):
        b, leak = codes.decode(rho_cav)
        cond_table[level] = {"probability": prob, "bloch": list(b), "leakage": leak}

    payload = {
        "meta": _meta(run, seed),
        "outcome": json.loads(outcome.to_json()),
        "logical_fidelity": fidelity,
        "channel_error": error,
        "conditioned": cond_table,
    }
    _write_json(out / "gate_outcome.json", payload)
    print(f"logical fidelity {fidelity:.6f}; channel error {error * 100:.3f}%")
    print("conditioned on record: " + "; ".join(
        f"{lvl}: p={t['probability']:.4f} bloch=({t['bloch'][0]:+.3f},{t['bloch'][1]:+.3f},{t['bloch'][2]:+.3f})"
        for lvl, t in cond_table.items()))
    return 0


def cmd_wigner(run: RunConfig, out: Path, seed: int, fmt: str) -> int:
    section = dict(run.section("wigner"))
    bloch = section.pop("input_bloch", [1.0, 0.0, 0.0])
    theta = section.pop("apply_gate_theta", None)
    dim = section.pop("cavity_dim", 20)
    extent = section.pop("extent", 3.0)
    points = section.pop("points", 61)
    if section:
        raise ConfigError(f"unknown keys in [wigner]: {sorted(section)}")
    psi = codes.encode(dim, bloch)
    if theta is not None:
        psi = codes.s_theta_cavity(dim, parse_quantity(theta, "angle", "wigner.apply_gate_theta")) @ psi
    grid = np.linspace(-extent, extent, points)
    w = codes.wigner_grid(psi, grid, grid)
    rows = codes.wigner_csv_rows(grid, grid, w)
    meta = _meta(run, seed)
    if fmt == "json":
        _write_json(out / "wigner.json", {"meta": meta, "rows": rows})
    else:
        _write_csv(out / "wigner.csv", meta, "alpha_re,alpha_im,wigner", rows)
    print(f"wigner grid {points}x{points}, W(0) = {w[points // 2, points // 2]:.4f}, max = {w.max():.4f}")
    return 0


def cmd_rb(run: RunConfig, out: Path, seed: int, fmt: str) -> int:
    section = dict(run.section("rb"))
    lengths = section.pop("lengths")
    n_seq = section.pop("n_sequences")
    shots = section.pop("shots", 300)
    bg = section.pop("background_error", 0.0)
    interleave = section.pop("interleave", "none")
    p_dep = section.pop("depolarizing_p", 0.0)
    if section:
        raise ConfigError(f"unknown keys in [rb]: {sorted(section)}")

    if interleave == "none":
        chan = None
    elif interleave == "depolarizing":
        chan = codes.LogicalChannel.depolarizing(p_dep)
    elif interleave == "simulated":
        if run.protocol is None:
            raise ConfigError("rb.interleave = simulated needs a [protocol] section")
        raw = pr.logical_gate_channel(run.protocol, run.device)
        # benchmark the target-referred channel so the sequence inverse stays
        # a plain Clifford (the hardware equivalent compiles the interleaved
        # rotation into the recovery pulse)
        chan = codes.LogicalChannel(np.linalg.solve(_target_channel(run.protocol).ptm, raw.ptm))
    else:
        raise ConfigError(f"unknown rb.interleave mode {interleave!r}")

    meta = _meta(run, seed)
    if chan is None:
        res = run_rb(None, lengths, n_seq, seed, shots=shots, background_error=bg)
        rows = [(n, m, s, "rb") for n, m, s in res.csv_rows()]
        summary = {"gamma_rb": res.fit_gamma, "gamma_rb_stderr": res.gamma_stderr}
        print(f"gamma_RB = {res.fit_gamma:.5f} +- {res.gamma_stderr:.5f}")
    else:
        rb, irb, diff, err = run_irb_comparison(chan, lengths, n_seq, seed,
                                                shots=shots, background_error=bg)
        rows = [(n, m, s, "rb") for n, m, s in rb.csv_rows()]
        rows += [(n, m, s, "irb") for n, m, s in irb.csv_rows()]
        summary = {"gamma_rb": rb.fit_gamma, "gamma_rb_stderr": rb.gamma_stderr,
                   "gamma_irb": irb.fit_gamma, "gamma_irb_stderr": irb.gamma_stderr,
                   "gamma_diff": diff, "gamma_diff_stderr": err}
        print(f"gamma_RB = {rb.fit_gamma:.5f} +- {rb.gamma_stderr:.5f}; "
              f"gamma_IRB - gamma_RB = {diff:.5f} +- {err:.5f}")
    meta["fit"] = summary
    if fmt == "json":
        _write_json(out / "rb.json", {"meta": meta, "rows": rows})
    else:
        _write_csv(out / "rb.csv", meta, "sequence_length,survival,stderr,curve", rows)
    return 0


def cmd_sweep(run: RunConfig, out: Path, seed: int, fmt: str) -> int:
    section = dict(run.section("sweep"))
    axis = section.pop("axis")
    points = section.pop("points", 5)
    max_rate = section.pop("max_total_rate", None)
    explicit = section.pop("rates", None)
    if section:
        raise ConfigError(f"unknown keys in [sweep]: {sorted(section)}")
    if run.protocol is None:
        raise ConfigError("sweep needs a [protocol] section")
    params = run.device
    native = 1.0 / params.tphi_gf if axis == "dephasing" else 1.0 / params.t1_ef
    if explicit is not None:
        rates = [parse_quantity(r, "rate", "sweep.rates") for r in explicit]
    else:
        if max_rate is None:
            raise ConfigError("sweep needs either rates or max_total_rate")
        top = parse_quantity(max_rate, "rate", "sweep.max_total_rate")
        rates = list(np.linspace(native, top, points))
    result = sweep_injected_noise(axis, rates, params, run.protocol)
    meta = _meta(run, seed)
    meta["error_metric"] = "depolarizing-equivalent channel error (IRB proxy)"
    meta["fit"] = {
        "slope_nc": result.slope_nc, "slope_c": result.slope_c,
        "slope_nc_stderr": result.slope_nc_stderr, "slope_c_stderr": result.slope_c_stderr,
        "slope_ratio": result.slope_ratio, "slope_ratio_stderr": result.slope_ratio_stderr,
    }
    rows = result.csv_rows()
    if fmt == "json":
        _write_json(out / f"sweep_{axis}.json", {"meta": meta, "rows": rows})
    else:
        _write_csv(out / f"sweep_{axis}.csv", meta,
                   "total_rate,p_g,p_e,p_f,error_nc,error_c", rows)
    print(f"{axis} sweep: slope ratio NC/C = {result.slope_ratio:.2f} "
          f"+- {result.slope_ratio_stderr:.2f}")
    return 0


def cmd_check(run: RunConfig, out: Path, seed: int, fmt: str) -> int:
    section = dict(run.section("check"))
    graph_file = section.pop("graph_file")
    if section:
        raise ConfigError(f"unknown keys in [check]: {sorted(section)}")
    path = resolve_config_path(graph_file)
    if not path.is_file():
        raise ConfigError(f"graph file not found: {path}")
    graph = TransitionGraph.from_json(path.read_text())
    report = check_path_independence(graph)

    space = hl.TensorSpace(cavity_dim=run.protocol.cavity_dim if run.protocol else 8,
                           ancilla_dim=3)
    h0 = build_h0(run.device, space, include_kerr=False)
    jumps = build_jump_ops(run.device, space)
    transparency = check_error_transparency(h0, jumps)

    payload = {
        "meta": _meta(run, seed),
        "path_independence": {
            "passed": report.passed,
            "violations": [
                {"loop": list(loop),
                 "net_action_re": action.real.tolist(),
                 "net_action_im": action.imag.tolist()}
                for loop, action in report.violations
            ],
        },
        "error_transparency": [
            {"label": r.label, "classification": r.classification, "residual": r.residual}
            for r in transparency
        ],
    }
    _write_json(out / "check_report.json", payload)
    print(report.describe())
    for r in transparency:
        print(r.describe())
    return 0


def cmd_budget(run: RunConfig, out: Path, seed: int, fmt: str) -> int:
    section = dict(run.section("budget")) if "budget" in run.sections else {}
    ba = section.pop("backaction_fraction", 0.0)
    if section:
        raise ConfigError(f"unknown keys in [budget]: {sorted(section)}")
    if run.protocol is None:
        raise ConfigError("budget needs a [protocol] section")
    report = build_error_budget(run.device, run.protocol, backaction_fraction=ba)
    payload = {"meta": _meta(run, seed)}
    payload.update(json.loads(report.to_json()))
    _write_json(out / "budget.json", payload)
    print(f"total dephased probability {report.total_dephased * 100:.2f}%; "
          f"uncorrected-protocol fidelity {report.nc_fidelity * 100:.2f}%")
    return 0


_COMMANDS = {
    "simulate-gate": cmd_simulate_gate,
    "wigner": cmd_wigner,
    "rb": cmd_rb,
    "sweep": cmd_sweep,
    "check": cmd_check,
    "budget": cmd_budget,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="snapgate",
                                     description="error-corrected cavity gate simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="run configuration file (JSON)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
    args = parser.parse_args(argv)

    try:
        path = resolve_config_path(args.config)
        if not path.is_file():
            print(f"config file not found: {path}", file=sys.stderr)
            return 2
        run = load_run_config(path)
        seed = args.seed if args.seed is not None else run.seed
        return _COMMANDS[args.command](run, Path(args.out), seed, args.format)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
