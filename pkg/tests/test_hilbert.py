"""Operator-construction unit tests for the tensor-space layer."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snapgate import hilbert as hl


SPACE = hl.TensorSpace(cavity_dim=8, ancilla_dim=3)


def test_space_validation():
    with pytest.raises(ValueError):
        hl.TensorSpace(cavity_dim=4, ancilla_dim=3)
    with pytest.raises(ValueError):
        hl.TensorSpace(cavity_dim=8, ancilla_dim=5)
    assert SPACE.dim == 24
    assert SPACE.index(2, "f") == 2 * 3 + 2


def test_annihilation_on_fock_states():
    a = hl.annihilation(SPACE)
    one_g = hl.basis_state(SPACE, 1, "g")
    zero_g = hl.basis_state(SPACE, 0, "g")
    assert np.allclose(hl.apply(a, one_g).amplitudes, zero_g.amplitudes)
    assert hl.apply(a, zero_g).norm() == 0.0

    n = hl.number(SPACE)
    two_g = hl.basis_state(SPACE, 2, "g")
    assert hl.expectation(two_g, n) == pytest.approx(2.0)


def test_ancilla_transition_examples():
    ef = hl.ancilla_transition(SPACE, "f", "e")  # |e><f|
    zero_f = hl.basis_state(SPACE, 0, "f")
    zero_e = hl.basis_state(SPACE, 0, "e")
    zero_g = hl.basis_state(SPACE, 0, "g")
    assert np.allclose(hl.apply(ef, zero_f).amplitudes, zero_e.amplitudes)
    assert hl.apply(ef, zero_g).norm() == 0.0

    pf = hl.ancilla_projector(SPACE, "f")
    assert np.allclose((pf @ pf).matrix, pf.matrix)


def test_transition_level_out_of_range():
    with pytest.raises(ValueError):
        hl.ancilla_transition(SPACE, "h", "g")  # h outside a 3-level ancilla
    with pytest.raises(ValueError):
        hl.ancilla_transition(SPACE, 0, 3)


def test_plumbing_contracts():
    a = hl.annihilation(SPACE)
    n = hl.number(SPACE)
    assert np.allclose(hl.commutator(n, n).matrix, 0.0)
    two_g = hl.basis_state(SPACE, 2, "g")
    assert hl.expectation(two_g, n) == pytest.approx(2.0)
    one_g = hl.basis_state(SPACE, 1, "g")
    zero_g = hl.basis_state(SPACE, 0, "g")
    assert np.allclose(hl.apply(hl.dagger(a), zero_g).amplitudes, one_g.amplitudes)


def test_space_mismatch_rejected():
    other = hl.TensorSpace(cavity_dim=9, ancilla_dim=3)
    with pytest.raises(hl.SpaceMismatchError):
        hl.commutator(hl.number(SPACE), hl.number(other))
    with pytest.raises(hl.SpaceMismatchError):
        hl.apply(hl.number(SPACE), hl.basis_state(other, 0, "g"))


def test_dagger_involution_exact():
    a = hl.annihilation(SPACE)
    d = hl.displacement(SPACE, 0.3 + 0.2j)
    for op in (a, d):
        twice = op.dagger().dagger()
        assert twice.matrix.tobytes() == op.matrix.tobytes()


def test_displacement_zero_is_identity():
    d0 = hl.displacement(SPACE, 0.0)
    assert np.allclose(d0.matrix, np.eye(SPACE.dim), atol=1e-14)


def test_parity_eigenvalues():
    p = hl.parity(SPACE)
    two = hl.basis_state(SPACE, 2, "g")
    one = hl.basis_state(SPACE, 1, "g")
    assert hl.expectation(two, p) == pytest.approx(1.0)
    assert hl.expectation(one, p) == pytest.approx(-1.0)


def test_coherent_vacuum_overlap_against_series():
    # Oracle: power series of the coherent overlap sum_n (-|alpha|^2/2)^n / n!
    alpha = 0.5
    x = -abs(alpha) ** 2 / 2
    term, series = 1.0, 1.0
    for k in range(1, 60):
        term *= x / k
        series += term
    space = hl.TensorSpace(cavity_dim=20, ancilla_dim=2)
    d = hl.displacement(space, alpha)
    vac = hl.basis_state(space, 0, "g")
    got = hl.expectation(vac, d)  # <0|D(alpha)|0>
    assert got.real == pytest.approx(series, abs=1e-12)
    assert got.imag == pytest.approx(0.0, abs=1e-12)


def test_displacement_truncation_warning():
    with pytest.warns(hl.TruncationWarning):
        hl.displacement(SPACE, 2.5)  # |alpha|^2 = 6.25 > 8/4


@given(k=st.integers(min_value=0, max_value=6))
def test_canonical_commutator_below_truncation_edge(k):
    a = hl.annihilation(SPACE)
    comm = hl.commutator(a, a.dagger())
    ket = hl.basis_state(SPACE, k, "g")
    out = comm.matrix @ ket.amplitudes
    assert np.allclose(out, ket.amplitudes, atol=1e-12)


@settings(deadline=None, max_examples=20)
@given(
    r=st.floats(min_value=0.0, max_value=2.0),
    phi=st.floats(min_value=-np.pi, max_value=np.pi),
)
def test_displacement_inverse(r, phi):
    alpha = r * np.exp(1j * phi)
    space = hl.TensorSpace(cavity_dim=24, ancilla_dim=2)
    d = hl.cavity_displacement_matrix(space.cavity_dim, alpha, warn=False)
    dm = hl.cavity_displacement_matrix(space.cavity_dim, -alpha, warn=False)
    assert np.max(np.abs(d @ dm - np.eye(space.cavity_dim))) < 1e-9


def test_operator_construction_reproducible():
    for build in (lambda: hl.annihilation(SPACE),
                  lambda: hl.displacement(SPACE, 0.4 - 0.1j),
                  lambda: hl.ancilla_transition(SPACE, "f", "e")):
        assert build().matrix.tobytes() == build().matrix.tobytes()


def test_partial_traces():
    psi = hl.basis_state(SPACE, 2, "f").to_density()
    cav = hl.partial_trace_ancilla(SPACE, psi.matrix)
    anc = hl.partial_trace_cavity(SPACE, psi.matrix)
    assert cav[2, 2] == pytest.approx(1.0)
    assert anc[2, 2] == pytest.approx(1.0)
    blk = hl.ancilla_block(SPACE, psi.matrix, "f")
    assert blk[2, 2] == pytest.approx(1.0)
    assert np.trace(hl.ancilla_block(SPACE, psi.matrix, "g")) == pytest.approx(0.0)


def test_density_matrix_validation():
    bad = np.zeros((SPACE.dim, SPACE.dim), dtype=complex)
    bad[0, 1] = 1.0  # not Hermitian
    bad[0, 0] = 1.0
    with pytest.raises(ValueError):
        hl.DensityMatrix(SPACE, bad)
    ok = hl.basis_state(SPACE, 0, "g").to_density()
    assert ok.purity() == pytest.approx(1.0)
    assert ok.min_eigenvalue() >= -1e-12
