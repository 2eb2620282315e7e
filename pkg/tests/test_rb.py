"""Clifford group generation and randomized-benchmarking statistics."""

import math

import numpy as np
import pytest

from snapgate import codes
from snapgate.analysis import clifford_ptms, fit_rb_decay, run_irb_comparison, run_rb

LENGTHS = (1, 2, 4, 8, 14, 22, 32)


def test_clifford_group_has_24_elements():
    group = clifford_ptms()
    assert len(group) == 24
    for ptm in group:
        assert np.allclose(ptm @ ptm.T, np.eye(4), atol=1e-9)  # unitary channels
        assert np.allclose(ptm[0], [1, 0, 0, 0], atol=1e-12)


def test_clifford_group_closed_under_composition():
    group = clifford_ptms()
    rng = np.random.default_rng(0)
    for _ in range(50):
        a, b = rng.integers(0, 24, size=2)
        prod = group[a] @ group[b]
        assert any(np.allclose(prod, g, atol=1e-8) for g in group)


def test_fit_recovers_exact_exponential():
    gamma = 0.0321
    lengths = np.arange(1, 40, 3)
    survival = 0.5 * np.exp(-gamma * lengths) + 0.5
    a, got, err, resid = fit_rb_decay(lengths, survival)
    assert abs(got - gamma) < 1e-6
    assert resid < 1e-9


def test_ideal_cliffords_show_no_decay():
    res = run_rb(None, LENGTHS, n_sequences=30, seed=7, shots=400)
    assert abs(res.fit_gamma) < max(3 * res.gamma_stderr, 2e-3)


def test_interleaved_depolarizing_recovered():
    p = 0.05
    chan = codes.LogicalChannel.depolarizing(p)
    rb, irb, diff, err = run_irb_comparison(chan, LENGTHS, n_sequences=50, seed=11, shots=300)
    assert abs(diff - p) < 2 * err + 5e-3


def test_rb_seed_determinism():
    res1 = run_rb(None, LENGTHS, n_sequences=25, seed=3, shots=100,
                  background_error=0.02)
    res2 = run_rb(None, LENGTHS, n_sequences=25, seed=3, shots=100,
                  background_error=0.02)
    assert res1 == res2
    res3 = run_rb(None, LENGTHS, n_sequences=25, seed=4, shots=100,
                  background_error=0.02)
    assert res3.survival_mean != res1.survival_mean


def test_background_error_sets_reference_decay():
    q = 0.025
    res = run_rb(None, (1, 3, 6, 10, 16, 24), n_sequences=60, seed=5, shots=500,
                 background_error=q)
    want = -math.log(1 - q)
    assert abs(res.fit_gamma - want) < 4 * res.gamma_stderr + 2e-3


def test_sequence_count_floor():
    with pytest.raises(ValueError):
        run_rb(None, LENGTHS, n_sequences=5, seed=0)
