"""Injected-noise sweep behaviour that is cheap enough for the unit suite."""

import numpy as np
import pytest

from snapgate import config as cf
from snapgate import protocol as pr
from snapgate.analysis import sweep_injected_noise


@pytest.fixture(scope="module")
def repro():
    return cf.load_run_config(cf.bundled_config_path("reproduction_c.json"))


def test_dephasing_model_equivalence_on_slope_ratio(repro):
    # number-operator and projector dephasing must tell the same
    # protocol-level story
    params, config = repro.device, repro.protocol
    native = 1.0 / params.tphi_gf
    rates = np.linspace(native, 1.0 / 2e-6, 3)
    results = {}
    for model in ("number", "projector"):
        cfg = config.replace(dephasing_model=model)
        results[model] = sweep_injected_noise("dephasing", rates, params, cfg)
    a, b = results["number"], results["projector"]
    combined = np.hypot(a.slope_ratio_stderr, b.slope_ratio_stderr)
    assert abs(a.slope_ratio - b.slope_ratio) < 2 * combined + 0.5
    # populations agree as well
    assert a.points[-1].p_f == pytest.approx(b.points[-1].p_f, abs=0.02)


def test_native_point_reproduces_populations(repro):
    params, config = repro.device, repro.protocol
    rho_in = pr.initial_state(config, params, [1, 0, 0])
    cond = pr.run_gate_conditioned(config, params, rho_in)
    assert 0.02 < cond["e"][0] < 0.05
    assert cond["f"][0] < 0.02


def test_sampled_benchmarking_agrees_with_channel_error(repro):
    # interleave the simulated corrected gate into a sampled benchmarking run:
    # the decay-rate difference must reproduce the direct channel error
    import math

    from snapgate import codes
    from snapgate.analysis import run_irb_comparison

    params, config = repro.device, repro.protocol
    chan = pr.logical_gate_channel(config, params)
    target = codes.LogicalChannel.from_unitary(codes.s_theta_logical_unitary(config.theta))
    direct = chan.channel_error(target)

    # benchmark the target-referred channel so sequence inverses stay Clifford
    relative = codes.LogicalChannel(np.linalg.solve(target.ptm, chan.ptm))
    _, _, diff, err = run_irb_comparison(relative, (1, 3, 7, 13, 21, 31, 43), 50,
                                         seed=11, shots=400, background_error=0.0247)
    q_hat = 1 - math.exp(-diff)
    assert 0.015 <= q_hat <= 0.035
    assert abs(q_hat - direct) < 3 * err + 0.004
