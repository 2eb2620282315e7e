"""Randomized benchmarking of the logical qubit with ideal Cliffords.

Sequences of single-qubit Cliffords (as Pauli transfer matrices) act on the
encoded qubit, optionally interleaved with the channel under test; the net
inverse is appended and survival is the probability of decoding the initial
state.  Survival estimates carry binomial shot noise, and the decays are fit
to A exp(-gamma n) + 1/2.
"""

from __future__ import annotations

import dataclasses
import functools
import math
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import curve_fit

from ..codes import LogicalChannel


def _rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    n = axis / np.linalg.norm(axis)
    gen = n[0] * sx + n[1] * sy + n[2] * sz
    return math.cos(angle / 2) * np.eye(2) - 1j * math.sin(angle / 2) * gen


def _ptm_key(ptm: np.ndarray) -> bytes:
    rounded = np.round(ptm, 9) + 0.0  # normalizes -0.0 to +0.0
    return rounded.tobytes()


@functools.lru_cache(maxsize=1)
def clifford_ptms() -> tuple:
    """The 24 single-qubit Cliffords as PTMs, generated by closure."""
    gens = [
        np.eye(2, dtype=complex),
        _rotation(np.array([1.0, 0, 0]), math.pi / 2),
        _rotation(np.array([0, 1.0, 0]), math.pi / 2),
    ]
    seeds = [LogicalChannel.from_unitary(u).ptm for u in gens]
    group = {_ptm_key(p): p for p in seeds}
    frontier = list(group.values())
    while frontier:
        nxt = []
        for a in frontier:
            for b in seeds:
                c = b @ a
                key = _ptm_key(c)
                if key not in group:
                    group[key] = c
                    nxt.append(c)
        frontier = nxt
    ptms = tuple(np.asarray(p) for p in group.values())
    if len(ptms) != 24:
        raise RuntimeError(f"Clifford closure produced {len(ptms)} elements")
    return ptms


@functools.lru_cache(maxsize=1)
def _inverse_lookup() -> dict:
    return {_ptm_key(p.T): i for i, p in enumerate(clifford_ptms())}


@dataclasses.dataclass(frozen=True)
class RBResult:
    lengths: tuple
    survival_mean: tuple
    survival_stderr: tuple
    fit_a: float
    fit_gamma: float
    gamma_stderr: float
    residual_rms: float

    def csv_rows(self) -> list:
        return [(n, m, s) for n, m, s in zip(self.lengths, self.survival_mean, self.survival_stderr)]


def fit_rb_decay(lengths: Sequence[int], survival: Sequence[float],
                 stderr: Optional[Sequence[float]] = None):
    """Fit A exp(-gamma n) + 1/2; returns (a, gamma, gamma_stderr, residual_rms)."""
    lengths = np.asarray(lengths, dtype=float)
    survival = np.asarray(survival, dtype=float)

    def model(n, a, gamma):
        return a * np.exp(-gamma * n) + 0.5

    sigma = None
    if stderr is not None:
        sigma = np.maximum(np.asarray(stderr, dtype=float), 1e-6)
    s0 = max(survival[0] - 0.5, 1e-3)
    s1 = max(survival[-1] - 0.5, 1e-4)
    gamma0 = max(math.log(s0 / s1) / max(lengths[-1] - lengths[0], 1.0), 1e-6)
    try:
        popt, pcov = curve_fit(model, lengths, survival, p0=(0.5, gamma0), sigma=sigma,
                               absolute_sigma=sigma is not None, maxfev=20000)
    except RuntimeError as exc:
        raise RuntimeError(f"RB fit did not converge: {exc}") from exc
    resid = survival - model(lengths, *popt)
    return (float(popt[0]), float(popt[1]), float(np.sqrt(pcov[1, 1])),
            float(np.sqrt(np.mean(resid**2))))


def run_rb(gate_channel: Optional[LogicalChannel], n_values: Sequence[int],
           n_sequences: int, seed: int, *, shots: int = 300,
           background_error: float = 0.0, assignment_error: float = 0.0) -> RBResult:
    """Randomized benchmarking, interleaving gate_channel when given.

    background_error is a depolarizing probability applied after every
    Clifford, standing in for the compiled-pulse error floor.  Survival is
    sampled with binomial shot noise so the fit uncertainties are meaningful.
    """
    if n_sequences < 20:
        raise ValueError("use at least 20 sequences per length")
    cliffords = clifford_ptms()
    inverse_of = _inverse_lookup()
    rng = np.random.default_rng(seed)
    bg = LogicalChannel.depolarizing(background_error).ptm if background_error > 0 else None
    inter = gate_channel.ptm if gate_channel is not None else None
    v0 = np.array([1.0, 0.0, 0.0, 1.0])  # Bloch 4-vector of |0>

    means, errs = [], []
    for n in n_values:
        samples = np.empty(n_sequences)
        for s in range(n_sequences):
            picks = rng.integers(0, 24, size=n)
            v = v0.copy()
            net = np.eye(4)
            for idx in picks:
                c = cliffords[idx]
                v = c @ v
                net = c @ net
                if bg is not None:
                    v = bg @ v
                if inter is not None:
                    v = inter @ v
            inv_idx = inverse_of[_ptm_key(net)]
            v = cliffords[inv_idx] @ v
            if bg is not None:
                v = bg @ v
            p = 0.5 * (1.0 + v[3])
            if assignment_error > 0:
                p = (1 - assignment_error) * p + assignment_error * (1 - p)
            p = min(max(p, 0.0), 1.0)
            samples[s] = rng.binomial(shots, p) / shots
        means.append(float(samples.mean()))
        errs.append(float(samples.std(ddof=1) / math.sqrt(n_sequences)))
    a, gamma, gamma_err, resid = fit_rb_decay(n_values, means, errs)
    return RBResult(lengths=tuple(int(n) for n in n_values),
                    survival_mean=tuple(means), survival_stderr=tuple(errs),
                    fit_a=a, fit_gamma=gamma, gamma_stderr=gamma_err,
                    residual_rms=resid)


def run_irb_comparison(gate_channel: LogicalChannel, n_values: Sequence[int],
                       n_sequences: int, seed: int, **kwargs):
    """Reference and interleaved decays; returns (rb, irb, diff, diff_stderr)."""
    rb = run_rb(None, n_values, n_sequences, seed, **kwargs)
    irb = run_rb(gate_channel, n_values, n_sequences, seed + 1, **kwargs)
    diff = irb.fit_gamma - rb.fit_gamma
    err = math.hypot(irb.gamma_stderr, rb.gamma_stderr)
    return rb, irb, diff, err
