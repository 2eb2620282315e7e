"""Injected-noise sweeps: ancilla populations and gate errors vs noise rate.

For each swept total rate the corrected and uncorrected protocols are run
to their logical channels; gate errors are the depolarizing-equivalent
channel errors (the interleaved-benchmarking proxy, flagged in the output),
and the suppression factor is the ratio of the fitted error-vs-population
slopes of the two variants.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional, Sequence

import numpy as np

from .. import codes
from .. import device as dv
from .. import protocol as pr

AXES = ("dephasing", "relaxation")

ERROR_METRIC = "channel-error proxy (depolarizing-equivalent, not sampled IRB)"


@dataclasses.dataclass(frozen=True)
class SweepPoint:
    total_rate: float
    p_g: float
    p_e: float
    p_f: float
    error_nc: float
    error_c: float


@dataclasses.dataclass(frozen=True)
class SweepResult:
    axis: str
    points: tuple
    slope_nc: float
    slope_c: float
    slope_nc_stderr: float
    slope_c_stderr: float

    @property
    def slope_ratio(self) -> float:
        return self.slope_nc / self.slope_c

    @property
    def slope_ratio_stderr(self) -> float:
        r = self.slope_ratio
        return abs(r) * math.hypot(self.slope_nc_stderr / self.slope_nc,
                                   self.slope_c_stderr / self.slope_c)

    def csv_rows(self) -> list:
        return [(p.total_rate, p.p_g, p.p_e, p.p_f, p.error_nc, p.error_c)
                for p in self.points]


def _linear_fit(x: np.ndarray, y: np.ndarray):
    coeffs, cov = np.polyfit(x, y, 1, cov=True)
    return float(coeffs[0]), float(np.sqrt(cov[0, 0]))


def sweep_injected_noise(axis: str, rates: Sequence[float], params: dv.DeviceParams,
                         config: pr.ProtocolConfig,
                         config_nc: Optional[pr.ProtocolConfig] = None) -> SweepResult:
    """Scan the total dephasing or relaxation rate and fit both error slopes.

    rates are total (native plus injected) rates in 1/s, ascending, starting
    at or above the native value.  Populations come from the single-attempt
    conditioned protocol; errors from the protocol channels of both variants.
    """
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}")
    rates = list(rates)
    if any(b <= a for a, b in zip(rates, rates[1:])):
        raise ValueError("rates must be strictly ascending")
    native = (1.0 / params.tphi_gf) if axis == "dephasing" else (1.0 / params.t1_ef)
    if rates[0] < native - 1e-9:
        raise ValueError("rates start below the native rate")
    if config_nc is None:
        config_nc = config.replace(variant="NC", et_drive_on=False)

    target = codes.LogicalChannel.from_unitary(codes.s_theta_logical_unitary(config.theta))
    points = []
    for rate in rates:
        injected = max(rate - native, 0.0)
        if axis == "dephasing":
            p_i = params.replace(injected_dephasing_rate=injected)
        else:
            p_i = params.replace(injected_ef_noise_rate=injected)
        rho_in = pr.initial_state(config, p_i, [1, 0, 0])
        cond = pr.run_gate_conditioned(config, p_i, rho_in)
        err_c = pr.logical_gate_channel(config, p_i).channel_error(target)
        err_nc = pr.logical_gate_channel(config_nc, p_i).channel_error(target)
        points.append(SweepPoint(
            total_rate=rate,
            p_g=cond["g"][0], p_e=cond["e"][0], p_f=cond["f"][0],
            error_nc=err_nc, error_c=err_c,
        ))

    x = np.array([p.p_f if axis == "dephasing" else p.p_e for p in points])
    s_nc, e_nc = _linear_fit(x, np.array([p.error_nc for p in points]))
    s_c, e_c = _linear_fit(x, np.array([p.error_c for p in points]))
    return SweepResult(axis=axis, points=tuple(points),
                       slope_nc=s_nc, slope_c=s_c,
                       slope_nc_stderr=e_nc, slope_c_stderr=e_c)
