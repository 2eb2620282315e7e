"""Dense complex linear algebra on a truncated cavity (x) multilevel-ancilla space.

Everything is built on plain ``numpy`` complex128 arrays.  The tensor-product
ordering is fixed once and for all: a joint basis state ``|fock, level>`` sits
at flat index ``fock * ancilla_dim + level`` (cavity factor first, i.e.
``kron(cavity_op, ancilla_op)``).  Ancilla levels are labelled
g=0, e=1, f=2, h=3 everywhere in the package.
"""

from __future__ import annotations

import dataclasses
import warnings
from typing import Union

import numpy as np
from scipy.linalg import expm as _expm_pade

ANCILLA_LEVELS = ("g", "e", "f", "h")

LevelLike = Union[int, str]


class SpaceMismatchError(ValueError):
    """Operands are defined on different tensor spaces."""


class ZeroNormError(ValueError):
    """An operation produced a state of (numerically) zero norm."""


class TruncationWarning(UserWarning):
    """A phase-space operation pushes population close to the Fock cutoff.

    Structured diagnostic, not a failure: carries the offending amplitude and
    the truncation so callers can log or escalate.
    """

    def __init__(self, message: str, alpha: complex = 0j, cavity_dim: int = 0):
        super().__init__(message)
        self.alpha = alpha
        self.cavity_dim = cavity_dim


def level_index(level: LevelLike) -> int:
    if isinstance(level, str):
        try:
            return ANCILLA_LEVELS.index(level)
        except ValueError:
            raise ValueError(f"unknown ancilla level {level!r}") from None
    return int(level)


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.complex128)
    out.setflags(write=False)
    return out


@dataclasses.dataclass(frozen=True)
class TensorSpace:
    """Truncated cavity Fock space (0..cavity_dim-1) times a d-level ancilla."""

    cavity_dim: int
    ancilla_dim: int

    def __post_init__(self):
        if self.cavity_dim < 5:
            raise ValueError("cavity_dim must be >= 5 (logical code spans Fock 0..4)")
        if self.ancilla_dim not in (2, 3, 4):
            raise ValueError("ancilla_dim must be 2, 3 or 4")

    @property
    def dim(self) -> int:
        return self.cavity_dim * self.ancilla_dim

    def index(self, fock: int, level: LevelLike) -> int:
        lvl = level_index(level)
        if not 0 <= fock < self.cavity_dim:
            raise ValueError(f"Fock index {fock} outside 0..{self.cavity_dim - 1}")
        if not 0 <= lvl < self.ancilla_dim:
            raise ValueError(f"ancilla level {level!r} outside this space")
        return fock * self.ancilla_dim + lvl

    def fock_of_index(self) -> np.ndarray:
        """Photon number of each flat basis index."""
        return np.repeat(np.arange(self.cavity_dim), self.ancilla_dim)

    def level_of_index(self) -> np.ndarray:
        return np.tile(np.arange(self.ancilla_dim), self.cavity_dim)


def _check_same_space(a, b):
    if a.space != b.space:
        raise SpaceMismatchError(f"space mismatch: {a.space} vs {b.space}")


@dataclasses.dataclass(frozen=True)
class StateVector:
    """Pure state on a TensorSpace.  Immutable; amplitudes are read-only."""

    space: TensorSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _readonly(np.asarray(self.amplitudes).reshape(-1))
        if amps.shape != (self.space.dim,):
            raise ValueError(f"amplitude vector has length {amps.shape[0]}, expected {self.space.dim}")
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n < 1e-14:
            raise ZeroNormError("cannot normalize a zero-norm state")
        return StateVector(self.space, self.amplitudes / n)

    def overlap(self, other: "StateVector") -> complex:
        _check_same_space(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "StateVector") -> float:
        """|<self|other>|^2, insensitive to global phase."""
        return abs(self.overlap(other)) ** 2

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(self.space, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclasses.dataclass(frozen=True)
class DensityMatrix:
    """Mixed state on a TensorSpace.

    Construction checks hermiticity and unit trace; positivity is exposed via
    :meth:`min_eigenvalue` so integrators can assert it at their own floor.
    """

    space: TensorSpace
    matrix: np.ndarray

    def __post_init__(self):
        mat = _readonly(np.asarray(self.matrix))
        d = self.space.dim
        if mat.shape != (d, d):
            raise ValueError(f"matrix has shape {mat.shape}, expected ({d}, {d})")
        herm_err = float(np.max(np.abs(mat - mat.conj().T)))
        if herm_err > 1e-8:
            raise ValueError(f"density matrix not Hermitian (max asymmetry {herm_err:.2e})")
        tr_err = abs(np.trace(mat) - 1.0)
        if tr_err > 1e-6:
            raise ValueError(f"density matrix trace deviates from 1 by {tr_err:.2e}")
        object.__setattr__(self, "matrix", mat)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def expectation(self, op: "Op") -> complex:
        _check_same_space(self, op)
        return complex(np.trace(op.matrix @ self.matrix))

    def fidelity_pure(self, psi: StateVector) -> float:
        """<psi|rho|psi>."""
        _check_same_space(self, psi)
        v = psi.amplitudes
        return float(np.real(np.vdot(v, self.matrix @ v)))


@dataclasses.dataclass(frozen=True)
class Op:
    """Labelled dense operator on a TensorSpace."""

    space: TensorSpace
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        mat = _readonly(np.asarray(self.matrix))
        d = self.space.dim
        if mat.shape != (d, d):
            raise ValueError(f"operator has shape {mat.shape}, expected ({d}, {d})")
        object.__setattr__(self, "matrix", mat)

    def dagger(self) -> "Op":
        return Op(self.space, self.matrix.conj().T, self.label + "^dag")

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tol)

    def __matmul__(self, other: "Op") -> "Op":
        _check_same_space(self, other)
        return Op(self.space, self.matrix @ other.matrix, f"({self.label} @ {other.label})")

    def __add__(self, other: "Op") -> "Op":
        _check_same_space(self, other)
        return Op(self.space, self.matrix + other.matrix, f"({self.label} + {other.label})")

    def __sub__(self, other: "Op") -> "Op":
        _check_same_space(self, other)
        return Op(self.space, self.matrix - other.matrix, f"({self.label} - {other.label})")

    def __mul__(self, scalar: complex) -> "Op":
        return Op(self.space, scalar * self.matrix, self.label)

    __rmul__ = __mul__


# ---------------------------------------------------------------------------
# constructors

def basis_state(space: TensorSpace, fock: int, level: LevelLike) -> StateVector:
    v = np.zeros(space.dim, dtype=np.complex128)
    v[space.index(fock, level)] = 1.0
    return StateVector(space, v)


def identity(space: TensorSpace) -> Op:
    return Op(space, np.eye(space.dim, dtype=np.complex128), "I")


def cavity_annihilation_matrix(cavity_dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cavity_dim, dtype=np.float64)), k=1).astype(np.complex128)


def tensor_embed(space: TensorSpace, cavity_mat: np.ndarray, ancilla_mat: np.ndarray, label: str = "") -> Op:
    """kron(cavity, ancilla) with shape validation against the space."""
    cav = np.asarray(cavity_mat, dtype=np.complex128)
    anc = np.asarray(ancilla_mat, dtype=np.complex128)
    if cav.shape != (space.cavity_dim, space.cavity_dim):
        raise SpaceMismatchError(f"cavity factor has shape {cav.shape}, expected {(space.cavity_dim,) * 2}")
    if anc.shape != (space.ancilla_dim, space.ancilla_dim):
        raise SpaceMismatchError(f"ancilla factor has shape {anc.shape}, expected {(space.ancilla_dim,) * 2}")
    return Op(space, np.kron(cav, anc), label)


def annihilation(space: TensorSpace) -> Op:
    """Cavity lowering operator a (x) identity; top Fock row truncated."""
    return tensor_embed(space, cavity_annihilation_matrix(space.cavity_dim),
                        np.eye(space.ancilla_dim), "a")


def creation(space: TensorSpace) -> Op:
    return Op(space, annihilation(space).matrix.conj().T, "a^dag")


def number(space: TensorSpace) -> Op:
    """Photon number operator a^dag a (x) identity."""
    n = np.diag(np.arange(space.cavity_dim, dtype=np.float64)).astype(np.complex128)
    return tensor_embed(space, n, np.eye(space.ancilla_dim), "n")


def ancilla_transition(space: TensorSpace, frm: LevelLike, to: LevelLike) -> Op:
    """identity (x) |to><frm| on the ancilla factor."""
    i, j = level_index(to), level_index(frm)
    if i >= space.ancilla_dim or j >= space.ancilla_dim:
        raise ValueError(f"ancilla levels ({frm!r} -> {to!r}) outside a {space.ancilla_dim}-level ancilla")
    t = np.zeros((space.ancilla_dim, space.ancilla_dim), dtype=np.complex128)
    t[i, j] = 1.0
    return tensor_embed(space, np.eye(space.cavity_dim), t,
                        f"|{ANCILLA_LEVELS[i]}><{ANCILLA_LEVELS[j]}|")


def ancilla_projector(space: TensorSpace, level: LevelLike) -> Op:
    return ancilla_transition(space, level, level)


def ancilla_number(space: TensorSpace) -> Op:
    """Ancilla excitation-number operator b^dag b = sum_n n |n><n|."""
    n = np.diag(np.arange(space.ancilla_dim, dtype=np.float64)).astype(np.complex128)
    return tensor_embed(space, np.eye(space.cavity_dim), n, "b^dag b")


def dagger(op: Op) -> Op:
    return op.dagger()


def commutator(a: Op, b: Op) -> Op:
    _check_same_space(a, b)
    return Op(a.space, a.matrix @ b.matrix - b.matrix @ a.matrix, f"[{a.label}, {b.label}]")


def expectation(state: Union[StateVector, DensityMatrix], op: Op) -> complex:
    if isinstance(state, StateVector):
        _check_same_space(state, op)
        return complex(np.vdot(state.amplitudes, op.matrix @ state.amplitudes))
    return state.expectation(op)


def apply(op: Op, state: StateVector) -> StateVector:
    _check_same_space(op, state)
    return StateVector(state.space, op.matrix @ state.amplitudes)


def matrix_exp(mat: np.ndarray) -> np.ndarray:
    """Matrix exponential via scaling-and-squaring with Pade approximants."""
    return _expm_pade(np.asarray(mat, dtype=np.complex128))


def displacement(space: TensorSpace, alpha: complex) -> Op:
    """D(alpha) = exp(alpha a^dag - alpha* a) on the cavity factor."""
    if abs(alpha) ** 2 > space.cavity_dim / 4:
        warnings.warn(
            TruncationWarning(
                f"displacement |alpha|^2 = {abs(alpha) ** 2:.3g} exceeds cavity_dim/4 = "
                f"{space.cavity_dim / 4:.3g}; truncation artifacts likely",
                alpha=alpha, cavity_dim=space.cavity_dim,
            )
        )
    a = cavity_annihilation_matrix(space.cavity_dim)
    d = matrix_exp(alpha * a.conj().T - np.conj(alpha) * a)
    return tensor_embed(space, d, np.eye(space.ancilla_dim), f"D({alpha:.3g})")


def cavity_displacement_matrix(cavity_dim: int, alpha: complex, warn: bool = True) -> np.ndarray:
    """Cavity-only D(alpha) matrix (no ancilla factor)."""
    if warn and abs(alpha) ** 2 > cavity_dim / 4:
        warnings.warn(
            TruncationWarning(
                f"displacement |alpha|^2 = {abs(alpha) ** 2:.3g} exceeds cavity_dim/4",
                alpha=alpha, cavity_dim=cavity_dim,
            )
        )
    a = cavity_annihilation_matrix(cavity_dim)
    return matrix_exp(alpha * a.conj().T - np.conj(alpha) * a)


def parity(space: TensorSpace) -> Op:
    """Photon-number parity exp(i pi a^dag a), evaluated exactly as (-1)^n."""
    p = np.diag((-1.0) ** np.arange(space.cavity_dim)).astype(np.complex128)
    return tensor_embed(space, p, np.eye(space.ancilla_dim), "parity")


def cavity_parity_matrix(cavity_dim: int) -> np.ndarray:
    return np.diag((-1.0) ** np.arange(cavity_dim)).astype(np.complex128)


def partial_trace_ancilla(space: TensorSpace, rho: np.ndarray) -> np.ndarray:
    """Reduce a joint density matrix to the cavity factor."""
    r = np.asarray(rho).reshape(space.cavity_dim, space.ancilla_dim, space.cavity_dim, space.ancilla_dim)
    return np.einsum("iaja->ij", r)


def partial_trace_cavity(space: TensorSpace, rho: np.ndarray) -> np.ndarray:
    """Reduce a joint density matrix to the ancilla factor."""
    r = np.asarray(rho).reshape(space.cavity_dim, space.ancilla_dim, space.cavity_dim, space.ancilla_dim)
    return np.einsum("iaib->ab", r)


def ancilla_block(space: TensorSpace, rho: np.ndarray, level: LevelLike) -> np.ndarray:
    """Unnormalized cavity block <level| rho |level> of a joint density matrix."""
    lvl = level_index(level)
    r = np.asarray(rho).reshape(space.cavity_dim, space.ancilla_dim, space.cavity_dim, space.ancilla_dim)
    return np.ascontiguousarray(r[:, lvl, :, lvl])
