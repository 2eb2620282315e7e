"""Kitten-code encode/decode, phase gate, Wigner maps, logical channels."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snapgate import codes
from snapgate import hilbert as hl

DIM = 12


def test_code_words_orthonormal_even_parity():
    basis = codes.kitten_basis(DIM)
    assert np.vdot(basis.zero, basis.zero).real == pytest.approx(1.0, abs=1e-12)
    assert np.vdot(basis.one, basis.one).real == pytest.approx(1.0, abs=1e-12)
    assert abs(np.vdot(basis.zero, basis.one)) < 1e-12
    par = hl.cavity_parity_matrix(DIM)
    for w in (basis.zero, basis.one):
        assert np.vdot(w, par @ w).real == pytest.approx(1.0)


def test_encode_plus_x():
    basis = codes.kitten_basis(DIM)
    plus = codes.encode(DIM, [1, 0, 0])
    want = (basis.zero + basis.one) / math.sqrt(2)
    assert abs(np.vdot(want, plus)) ** 2 == pytest.approx(1.0)


def test_decode_fock1_is_pure_leakage():
    v = np.zeros(DIM, dtype=complex)
    v[1] = 1.0
    bloch, leak = codes.decode(v)
    assert leak == pytest.approx(1.0)
    assert np.allclose(bloch, 0.0)


def test_s_gate_rotates_plus_x_to_plus_y():
    plus = codes.encode(DIM, [1, 0, 0])
    rotated = codes.s_theta_cavity(DIM, math.pi / 2) @ plus
    bloch, leak = codes.decode(rotated)
    assert leak == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(bloch, [0, 1, 0], atol=1e-10)


@settings(max_examples=25)
@given(
    z=st.floats(min_value=-1, max_value=1),
    phi=st.floats(min_value=-math.pi, max_value=math.pi),
)
def test_decode_inverts_encode(z, phi):
    r = math.sqrt(max(0.0, 1 - z * z))
    bloch = np.array([r * math.cos(phi), r * math.sin(phi), z])
    bloch /= np.linalg.norm(bloch)
    got, leak = codes.decode(codes.encode(DIM, bloch))
    assert leak == pytest.approx(0.0, abs=1e-10)
    assert np.allclose(got, bloch, atol=1e-10)


def test_s_theta_unitary_properties():
    space = hl.TensorSpace(cavity_dim=DIM, ancilla_dim=3)
    ident = codes.logical_s_theta(space, 0.0)
    assert np.allclose(ident.matrix, np.eye(space.dim))
    theta = math.pi / 4  # the T gate
    s = codes.logical_s_theta(space, theta)
    sm = codes.logical_s_theta(space, -theta)
    assert np.allclose((s @ sm).matrix, np.eye(space.dim), atol=1e-12)
    # restricted to the code words the eigenvalues are {1, e^{i theta}}
    block = codes.logical_block(codes.s_theta_cavity(DIM, theta))
    eig = np.linalg.eigvals(block)
    assert sorted(np.angle(eig)) == pytest.approx(sorted([0.0, theta]), abs=1e-10)


def test_wigner_parity_peaks():
    vac = np.zeros(DIM, dtype=complex)
    vac[0] = 1.0
    assert codes.wigner(vac, np.array([0.0j]))[0] == pytest.approx(2 / math.pi)
    one = np.zeros(DIM, dtype=complex)
    one[1] = 1.0
    assert codes.wigner(one, np.array([0.0j]))[0] == pytest.approx(-2 / math.pi)


def test_wigner_normalization_quadrature():
    # integral of W over phase space is Tr rho = 1; midpoint rule on a 61x61
    # grid over |Re|, |Im| <= 3 at cavity_dim = 20
    plus = codes.encode(20, [1, 0, 0])
    xs = np.linspace(-3, 3, 61)
    w = codes.wigner_grid(plus, xs, xs)
    h = xs[1] - xs[0]
    assert np.sum(w) * h * h == pytest.approx(1.0, abs=2e-3)


def test_wigner_real_for_random_mixed_state():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(DIM, DIM)) + 1j * rng.normal(size=(DIM, DIM))
    rho = a @ a.conj().T
    rho /= np.trace(rho).real
    vals = codes.wigner(rho, np.array([0.3 + 0.2j, -0.7j, 1.0 + 0.0j]))
    assert vals.dtype == float
    assert np.all(np.abs(vals) <= 2 / math.pi + 1e-10)


def test_channel_from_ideal_gate():
    u = codes.s_theta_logical_unitary(math.pi / 2)
    chan = codes.LogicalChannel.from_unitary(u)
    target = codes.LogicalChannel.from_unitary(u)
    assert chan.average_gate_fidelity(target) == pytest.approx(1.0, abs=1e-9)
    assert chan.is_trace_preserving()
    assert chan.min_choi_eigenvalue() > -1e-12


def test_depolarizing_channel_error_convention():
    q = 0.06
    dep = codes.LogicalChannel.depolarizing(q)
    ident = codes.LogicalChannel.identity()
    assert dep.channel_error(ident) == pytest.approx(q, abs=1e-12)
    assert dep.average_gate_fidelity(ident) == pytest.approx(1 - q / 2, abs=1e-12)


def test_tomography_recovers_known_channels():
    u = codes.s_theta_logical_unitary(0.9)
    exact = codes.LogicalChannel.from_unitary(u)
    got = codes.channel_tomography(lambda rho: u @ rho @ u.conj().T)
    assert np.allclose(got.ptm, exact.ptm, atol=1e-12)

    q = 0.3
    got = codes.channel_tomography(lambda rho: (1 - q) * rho + q * np.trace(rho) * np.eye(2) / 2)
    assert np.allclose(got.ptm, codes.LogicalChannel.depolarizing(q).ptm, atol=1e-12)


def test_tomography_rejects_nonphysical_runner():
    with pytest.raises(ValueError):
        codes.channel_tomography(lambda rho: 1.7 * rho - 0.7 * np.trace(rho) * np.eye(2) / 2)


def test_channel_apply_and_compose():
    u = codes.s_theta_logical_unitary(math.pi / 2)
    chan = codes.LogicalChannel.from_unitary(u)
    rho_plus = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
    out = chan.apply(rho_plus)
    want = u @ rho_plus @ u.conj().T
    assert np.allclose(out, want, atol=1e-12)
    twice = chan.compose(chan)
    z_flip = codes.LogicalChannel.from_unitary(codes.s_theta_logical_unitary(math.pi))
    assert np.allclose(twice.ptm, z_flip.ptm, atol=1e-12)
