"""Binomial kitten code, logical metrics, and Wigner tomography.

The logical qubit lives in the cavity: |0>_L = (|0> + |4>)/sqrt(2),
|1>_L = |2>.  Cavity-only states and operators are plain complex arrays of
dimension cavity_dim; logical states are 2x2 density matrices in the
(|0>_L, |1>_L) basis.  Logical channels are stored as 4x4 Pauli transfer
matrices; channel comparisons use average gate fidelity, which ignores
global phase.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from typing import Callable, Sequence

import numpy as np

from . import hilbert as hl
from .device import snap_phase_matrix
from .hilbert import Op, StateVector, TensorSpace, TruncationWarning

LOGICAL_FOCK = (0, 2, 4)

_PAULIS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclasses.dataclass(frozen=True)
class LogicalBasis:
    """Code words of the kitten code on a truncated cavity."""

    cavity_dim: int
    zero: np.ndarray
    one: np.ndarray


def kitten_basis(cavity_dim: int) -> LogicalBasis:
    if cavity_dim < 5:
        raise ValueError("kitten code needs Fock states up to |4>")
    zero = np.zeros(cavity_dim, dtype=complex)
    zero[0] = zero[4] = 1 / math.sqrt(2)
    one = np.zeros(cavity_dim, dtype=complex)
    one[2] = 1.0
    return LogicalBasis(cavity_dim, hl._readonly(zero), hl._readonly(one))


def encode(cavity_dim: int, bloch: Sequence[float]) -> np.ndarray:
    """Cavity amplitudes of the pure state at the given Bloch vector."""
    b = np.asarray(bloch, dtype=float)
    if abs(np.linalg.norm(b) - 1.0) > 1e-9:
        raise ValueError("bloch vector must have unit norm")
    basis = kitten_basis(cavity_dim)
    theta = math.acos(np.clip(b[2], -1.0, 1.0))
    phi = math.atan2(b[1], b[0])
    return math.cos(theta / 2) * basis.zero + math.sin(theta / 2) * np.exp(1j * phi) * basis.one


def encode_state(space: TensorSpace, bloch: Sequence[float]) -> StateVector:
    """Full-space pure state: encoded cavity joined with the ancilla ground state."""
    cav = encode(space.cavity_dim, bloch)
    anc = np.zeros(space.ancilla_dim, dtype=complex)
    anc[0] = 1.0
    return StateVector(space, np.kron(cav, anc))


def logical_block(rho_cavity: np.ndarray) -> np.ndarray:
    """Unnormalized 2x2 code-space block of a cavity density matrix."""
    rho = np.asarray(rho_cavity, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    basis = kitten_basis(rho.shape[0])
    vecs = np.stack([basis.zero, basis.one])
    return vecs.conj() @ rho @ vecs.T


def decode(rho_or_vec: np.ndarray) -> tuple[np.ndarray, float]:
    """Bloch vector of the code-space component and the leaked population."""
    rho = np.asarray(rho_or_vec, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    block = logical_block(rho)
    weight = np.trace(block).real
    leakage = float(np.trace(rho).real - weight)
    if weight < 1e-12:
        return np.zeros(3), leakage
    block = block / weight
    bloch = np.array([np.trace(p @ block).real for p in _PAULIS[1:]])
    return bloch, leakage


def logical_s_theta(space: TensorSpace, theta: float) -> Op:
    """Z_L rotation by theta: phase e^{i theta} on |2>, identity elsewhere."""
    s = snap_phase_matrix(space.cavity_dim, {0: 0.0, 2: theta, 4: 0.0}, fill=1.0)
    return hl.tensor_embed(space, s, np.eye(space.ancilla_dim), f"S({theta:.3g})")


def s_theta_cavity(cavity_dim: int, theta: float) -> np.ndarray:
    return snap_phase_matrix(cavity_dim, {0: 0.0, 2: theta, 4: 0.0}, fill=1.0)


def s_theta_logical_unitary(theta: float) -> np.ndarray:
    """The gate written in the logical basis: diag(1, e^{i theta})."""
    return np.diag([1.0, np.exp(1j * theta)])


# ---------------------------------------------------------------------------
# Wigner tomography

def _displacement_element_grid(m: int, n: int, betas: np.ndarray) -> np.ndarray:
    """<m|D(beta)|n> over an array of beta, from the closed Laguerre form.

    These are the infinite-dimensional matrix elements, so no truncation
    error enters as long as the state itself lives below the Fock cutoff.
    """
    from scipy.special import eval_genlaguerre

    x = np.abs(betas) ** 2
    if m >= n:
        pref = math.exp(0.5 * (math.lgamma(n + 1) - math.lgamma(m + 1)))
        poly = eval_genlaguerre(n, m - n, x)
        return pref * betas ** (m - n) * np.exp(-x / 2) * poly
    pref = math.exp(0.5 * (math.lgamma(m + 1) - math.lgamma(n + 1)))
    poly = eval_genlaguerre(m, n - m, x)
    return pref * (-np.conj(betas)) ** (n - m) * np.exp(-x / 2) * poly


def wigner(rho_cavity: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """Displaced-parity Wigner function W(alpha) = (2/pi) Tr[D(a) P D(-a) rho].

    rho_cavity may be a vector or a density matrix; alphas is a complex array
    of any shape and the result matches its shape.  Uses the identity
    D(a) P D(-a) = D(2a) P with analytic displacement matrix elements, so the
    values are free of truncation error in the displacement itself.
    """
    rho = np.asarray(rho_cavity, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    dim = rho.shape[0]
    flat = np.asarray(alphas, dtype=complex).reshape(-1)
    edge = np.sum(np.abs(np.diag(rho))[int(0.8 * dim):]).real
    if edge > 1e-6:
        warnings.warn(TruncationWarning(
            f"state carries {edge:.2e} population in the top Fock rows; "
            "Wigner values are unreliable", cavity_dim=dim))
    if flat.size and np.max(np.abs(flat)) ** 2 > dim:
        warnings.warn(TruncationWarning(
            "Wigner grid reaches far beyond the representable phase space",
            alpha=complex(flat[np.argmax(np.abs(flat))]), cavity_dim=dim))
    a_mn = hl.cavity_parity_matrix(dim) @ rho  # W = (2/pi) sum_mn A_nm <m|D(2a)|n>
    betas = 2 * flat
    out = np.zeros(flat.shape, dtype=complex)
    for n in range(dim):
        for m in range(dim):
            c = a_mn[n, m]
            if abs(c) < 1e-18:
                continue
            out += c * _displacement_element_grid(m, n, betas)
    return (2 / math.pi) * out.real.reshape(np.asarray(alphas).shape)


def wigner_grid(rho_cavity: np.ndarray, re_vals: np.ndarray, im_vals: np.ndarray) -> np.ndarray:
    """W on the grid alpha = re + i*im, indexed [i_re, i_im]."""
    alphas = np.asarray(re_vals, dtype=float)[:, None] + 1j * np.asarray(im_vals, dtype=float)[None, :]
    return wigner(rho_cavity, alphas)


def wigner_csv_rows(re_vals, im_vals, w) -> list[tuple[float, float, float]]:
    rows = []
    for i, x in enumerate(re_vals):
        for j, y in enumerate(im_vals):
            rows.append((float(x), float(y), float(w[i, j])))
    return rows


# ---------------------------------------------------------------------------
# logical channels

def _ptm_from_map(apply_map: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    ptm = np.empty((4, 4))
    images = [apply_map(p) for p in _PAULIS]
    for i, pi in enumerate(_PAULIS):
        for j in range(4):
            ptm[i, j] = 0.5 * np.trace(pi @ images[j]).real
    return ptm


@dataclasses.dataclass(frozen=True)
class LogicalChannel:
    """Completely positive map on the logical qubit as a Pauli transfer matrix."""

    ptm: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.ptm, dtype=float)
        if mat.shape != (4, 4):
            raise ValueError("PTM must be 4x4")
        object.__setattr__(self, "ptm", hl._readonly(mat.astype(np.complex128)).real)

    @staticmethod
    def from_unitary(u: np.ndarray) -> "LogicalChannel":
        u = np.asarray(u, dtype=complex)
        return LogicalChannel(_ptm_from_map(lambda p: u @ p @ u.conj().T))

    @staticmethod
    def from_map(apply_map: Callable[[np.ndarray], np.ndarray]) -> "LogicalChannel":
        return LogicalChannel(_ptm_from_map(apply_map))

    @staticmethod
    def depolarizing(p: float) -> "LogicalChannel":
        return LogicalChannel(np.diag([1.0, 1 - p, 1 - p, 1 - p]))

    @staticmethod
    def identity() -> "LogicalChannel":
        return LogicalChannel(np.eye(4))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        coeffs = np.array([0.5 * np.trace(p @ rho) for p in _PAULIS])
        out_coeffs = self.ptm @ coeffs.real
        return sum(c * p for c, p in zip(out_coeffs, _PAULIS))

    def compose(self, other: "LogicalChannel") -> "LogicalChannel":
        """self after other."""
        return LogicalChannel(self.ptm @ other.ptm)

    def choi(self) -> np.ndarray:
        choi = np.zeros((4, 4), dtype=complex)
        for i, pi in enumerate(_PAULIS):
            for j, pj in enumerate(_PAULIS):
                choi += 0.5 * self.ptm[i, j] * np.kron(pj.T, pi)
        return choi / 2

    def min_choi_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.choi())[0])

    def is_trace_preserving(self, tol: float = 1e-8) -> bool:
        return bool(np.max(np.abs(self.ptm[0] - np.array([1, 0, 0, 0]))) < tol)

    def average_gate_fidelity(self, target: "LogicalChannel") -> float:
        """F_avg of target^-1 ∘ self against the identity (phase-blind)."""
        rel = np.linalg.solve(target.ptm, self.ptm)
        return float((np.trace(rel).real / 2 + 1) / 3)

    def channel_error(self, target: "LogicalChannel") -> float:
        """Depolarizing-equivalent error probability, the quantity an
        interleaved-benchmarking decay-rate difference estimates."""
        return 2.0 * (1.0 - self.average_gate_fidelity(target))


_TOMO_INPUTS = (
    np.array([[1, 0], [0, 0]], dtype=complex),            # |0>
    np.array([[0, 0], [0, 1]], dtype=complex),            # |1>
    np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex),    # |+>
    np.array([[0.5, -0.5j], [0.5j, 0.5]], dtype=complex),  # |+i>
)


def tomography_inputs() -> tuple[np.ndarray, ...]:
    """The four logical preparation states |0>, |1>, |+>, |+i>."""
    return _TOMO_INPUTS


def channel_from_outputs(outs: Sequence[np.ndarray], cp_floor: float = -1e-7) -> LogicalChannel:
    """Assemble the PTM from the channel images of the four tomography inputs."""
    e0, e1, ep, epi = (np.asarray(o, dtype=complex) for o in outs)
    e_of = {
        0: e0 + e1,                 # E(I)
        1: 2 * ep - (e0 + e1),      # E(X)
        2: 2 * epi - (e0 + e1),     # E(Y)
        3: e0 - e1,                 # E(Z)
    }
    ptm = np.empty((4, 4))
    for i, pi in enumerate(_PAULIS):
        for j in range(4):
            ptm[i, j] = 0.5 * np.trace(pi @ e_of[j]).real
    chan = LogicalChannel(ptm)
    floor = chan.min_choi_eigenvalue()
    if floor < cp_floor:
        raise ValueError(f"reconstructed channel violates positivity (min Choi eig {floor:.2e})")
    return chan


def channel_tomography(runner: Callable[[np.ndarray], np.ndarray],
                       cp_floor: float = -1e-7) -> LogicalChannel:
    """Reconstruct the logical process matrix from four basis inputs.

    runner maps a 2x2 logical density matrix to the output density matrix.
    Raises if the reconstruction is non-physical beyond the eigenvalue floor.
    """
    return channel_from_outputs([runner(rho) for rho in _TOMO_INPUTS], cp_floor=cp_floor)
