"""Time-evolution engines for the cavity-ancilla system.

Three complementary routes through the same master equation: direct dense
Lindblad integration (adaptive embedded Runge-Kutta 4/5 on the density
matrix), Monte-Carlo wavefunction unraveling with recorded jumps, and
deterministic single-jump injection for fault-propagation analysis.
"""

from __future__ import annotations

import dataclasses
import json
import math
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import hilbert as hl
from .device import JumpOp
from .hilbert import DensityMatrix, Op, StateVector, TensorSpace, ZeroNormError


class IntegrationError(RuntimeError):
    """The adaptive integrator could not meet its tolerance (step underflow)."""


HamiltonianLike = Union[Op, Callable[[float], Union[Op, np.ndarray]]]
JumpLike = Union[str, Op, np.ndarray, Callable[[float], Union[Op, np.ndarray]]]


@dataclasses.dataclass(frozen=True)
class EvolutionSpec:
    """One evolution problem: Hamiltonian, dissipators, horizon, accuracy."""

    hamiltonian: HamiltonianLike
    jumps: Sequence[JumpOp] = ()
    t_final: float = 0.0
    tolerance: float = 1e-8
    max_step: Optional[float] = None

    def __post_init__(self):
        if self.t_final <= 0:
            raise ValueError("t_final must be positive")
        if not 1e-12 < self.tolerance < 1e-4:
            raise ValueError("tolerance must lie in (1e-12, 1e-4)")
        if self.max_step is not None and self.max_step <= 0:
            raise ValueError("max_step must be positive")


@dataclasses.dataclass(frozen=True)
class TrajectoryRecord:
    """Outcome of one Monte-Carlo wavefunction run."""

    final_state: StateVector
    jumps: tuple
    seed: int

    def __post_init__(self):
        times = [t for t, _ in self.jumps]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ValueError("jump times must be strictly increasing")
        object.__setattr__(self, "jumps", tuple((float(t), str(lbl)) for t, lbl in self.jumps))

    def to_json_line(self) -> str:
        amps = self.final_state.amplitudes
        payload = {
            "seed": self.seed,
            "space": [self.final_state.space.cavity_dim, self.final_state.space.ancilla_dim],
            "jumps": [[t, lbl] for t, lbl in self.jumps],
            "amplitudes": [[float(a.real), float(a.imag)] for a in amps],
        }
        return json.dumps(payload, sort_keys=True)

    @staticmethod
    def from_json_line(line: str) -> "TrajectoryRecord":
        payload = json.loads(line)
        space = TensorSpace(*payload["space"])
        amps = np.array([complex(re, im) for re, im in payload["amplitudes"]])
        return TrajectoryRecord(
            final_state=StateVector(space, amps),
            jumps=tuple((t, lbl) for t, lbl in payload["jumps"]),
            seed=int(payload["seed"]),
        )


def _h_matrix(h: HamiltonianLike, t: float) -> np.ndarray:
    if isinstance(h, Op):
        return h.matrix
    out = h(t)
    return out.matrix if isinstance(out, Op) else out


# ---------------------------------------------------------------------------
# Embedded Dormand-Prince 4(5) with PI step control.

_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100])
# difference picks up the seventh stage (FSAL) with weight 1/40
_DP_E7 = 1 / 40


def _dopri_step(rhs, t, y, h):
    k = [rhs(t, y)]
    for i in range(1, 6):
        yi = y + h * sum(a * kk for a, kk in zip(_DP_A[i], k))
        k.append(rhs(t + _DP_C[i] * h, yi))
    y5 = y + h * sum(b * kk for b, kk in zip(_DP_B5, k))
    y4 = y + h * sum(b * kk for b, kk in zip(_DP_B4, k))
    k7 = rhs(t + h, y5)
    err = (y5 - y4) - (h * _DP_E7) * k7
    return y5, err


_MAX_STEPS = 2_000_000


def _integrate(rhs, y0: np.ndarray, t0: float, t1: float, rtol: float,
               max_step: Optional[float]) -> np.ndarray:
    """Adaptive integration of dy/dt = rhs(t, y) from t0 to t1."""
    span = t1 - t0
    if span <= 0:
        return y0
    atol = rtol * 1e-2
    h = span / 64.0
    if max_step is not None:
        h = min(h, max_step)
    t, y = t0, y0
    min_h = max(span, abs(t1)) * 1e-14
    steps = 0
    while t < t1 - 1e-18 * max(1.0, abs(t1)):
        steps += 1
        if steps > _MAX_STEPS:
            raise IntegrationError(f"step budget exhausted at t = {t:.3e} (h = {h:.3e})")
        h = min(h, t1 - t)
        y_new, err = _dopri_step(rhs, t, y, h)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))
        if np.isfinite(err_norm) and err_norm <= 1.0:
            t += h
            y = y_new
            factor = 5.0 if err_norm == 0 else min(5.0, 0.9 * err_norm ** -0.2)
        else:
            factor = 0.2 if not np.isfinite(err_norm) else max(0.2, 0.9 * err_norm ** -0.2)
        h *= factor
        if max_step is not None:
            h = min(h, max_step)
        if h < min_h:
            raise IntegrationError(f"step size underflow at t = {t:.3e} (h = {h:.3e})")
    return y


# ---------------------------------------------------------------------------
# Lindblad propagation

def _lindblad_rhs_factory(spec: EvolutionSpec):
    scaled = [j.scaled_matrix() for j in spec.jumps if j.rate > 0]
    daggers = [m.conj().T for m in scaled]
    if scaled:
        k_total = sum(d @ m for m, d in zip(scaled, daggers))
    else:
        k_total = None
    h = spec.hamiltonian
    static_h = h.matrix if isinstance(h, Op) else None

    def rhs(t, rho):
        hm = static_h if static_h is not None else _h_matrix(h, t)
        out = -1j * (hm @ rho - rho @ hm)
        if k_total is not None:
            for m, d in zip(scaled, daggers):
                out += m @ rho @ d
            out -= 0.5 * (k_total @ rho + rho @ k_total)
        return out

    return rhs


def evolve_lindblad_array(spec: EvolutionSpec, rho0: np.ndarray) -> np.ndarray:
    """Master-equation propagation of one or a stack of density matrices.

    rho0 may have shape (d, d) or (..., d, d); trace is preserved per entry.
    """
    rho0 = np.asarray(rho0, dtype=np.complex128)
    rhs = _lindblad_rhs_factory(spec)
    return _integrate(rhs, rho0, 0.0, spec.t_final, spec.tolerance, spec.max_step)


def evolve_lindblad(spec: EvolutionSpec, rho0: DensityMatrix) -> DensityMatrix:
    """Propagate rho0 to t_final under H and the jump dissipators.

    Postconditions are enforced: trace preserved to 1e-8 scale and spectrum
    positive down to a -1e-7 floor, else the run is flagged as a failure.
    """
    out = evolve_lindblad_array(spec, rho0.matrix)
    drift = abs(np.trace(out).real - 1.0)
    if drift > 1e-7:
        raise IntegrationError(f"trace drifted by {drift:.2e}; tighten tolerance")
    out = 0.5 * (out + out.conj().T)
    floor = float(np.linalg.eigvalsh(out)[0])
    if floor < -1e-7:
        raise IntegrationError(f"state lost positivity (min eigenvalue {floor:.2e})")
    return DensityMatrix(rho0.space, out / np.trace(out).real)


# ---------------------------------------------------------------------------
# Monte-Carlo wavefunction unraveling

_JUMP_TIME_TOL = 1e-10  # seconds


def evolve_trajectory(spec: EvolutionSpec, psi0: StateVector, seed: int) -> TrajectoryRecord:
    """One quantum trajectory with the waiting-time algorithm.

    Non-Hermitian drift between jumps; the squared norm is compared against a
    uniform draw and the jump time is located by bisection to 1e-10 s.
    """
    if abs(psi0.norm() - 1.0) > 1e-9:
        raise ValueError("psi0 must be normalized")
    rng = np.random.default_rng(seed)
    scaled = [j.scaled_matrix() for j in spec.jumps if j.rate > 0]
    labels = [j.label for j in spec.jumps if j.rate > 0]
    h = spec.hamiltonian
    static_h = h.matrix if isinstance(h, Op) else None
    if scaled:
        k_total = sum(m.conj().T @ m for m in scaled)
    else:
        k_total = None

    if static_h is not None:
        heff = static_h if k_total is None else static_h - 0.5j * k_total
        prop_cache: dict = {}

        def norm2_after(psi, t_from, dt):
            if dt <= 0:
                return float(np.vdot(psi, psi).real), psi
            prop = prop_cache.get(dt)
            if prop is None:
                prop = hl.matrix_exp(-1j * heff * dt)
                prop_cache[dt] = prop
            out = prop @ psi
            return float(np.vdot(out, out).real), out
    else:
        def rhs(t, psi):
            hm = _h_matrix(h, t)
            out = -1j * (hm @ psi)
            if k_total is not None:
                out -= 0.5 * (k_total @ psi)
            return out

        def norm2_after(psi, t_from, dt):
            if dt <= 0:
                return float(np.vdot(psi, psi).real), psi
            out = _integrate(rhs, psi, t_from, t_from + dt, spec.tolerance, spec.max_step)
            return float(np.vdot(out, out).real), out

    t = 0.0
    psi = psi0.amplitudes.astype(np.complex128)
    jumps = []
    threshold = float(rng.random())
    step = spec.max_step or spec.t_final / 64.0

    while t < spec.t_final - 1e-18:
        dt = min(step, spec.t_final - t)
        n2, psi_trial = norm2_after(psi, t, dt)
        if k_total is None or n2 > threshold:
            psi, t = psi_trial, t + dt
            continue
        # jump inside (t, t + dt]: bisect on the crossing time
        lo, hi = 0.0, dt
        while hi - lo > _JUMP_TIME_TOL:
            mid = 0.5 * (lo + hi)
            n2_mid, _ = norm2_after(psi, t, mid)
            if n2_mid > threshold:
                lo = mid
            else:
                hi = mid
        t_jump = t + hi
        _, psi_at = norm2_after(psi, t, hi)
        weights = np.array([np.linalg.norm(m @ psi_at) ** 2 for m in scaled])
        total = weights.sum()
        if total <= 0:
            psi, t = psi_trial, t + dt
            continue
        pick = int(rng.choice(len(scaled), p=weights / total))
        psi = scaled[pick] @ psi_at
        psi = psi / np.linalg.norm(psi)
        jumps.append((t_jump, labels[pick]))
        t = t_jump
        threshold = float(rng.random())

    norm = np.linalg.norm(psi)
    if norm < 1e-12:
        raise ZeroNormError("trajectory collapsed to zero norm")
    return TrajectoryRecord(StateVector(psi0.space, psi / norm), tuple(jumps), seed)


def average_trajectories(spec: EvolutionSpec, psi0: StateVector, n_traj: int,
                         seed: int) -> np.ndarray:
    """Mean projector over n_traj independent trajectories (root-seed derived)."""
    seeds = np.random.SeedSequence(seed).generate_state(n_traj)
    d = psi0.space.dim
    acc = np.zeros((d, d), dtype=np.complex128)
    for s in seeds:
        rec = evolve_trajectory(spec, psi0, int(s))
        v = rec.final_state.amplitudes
        acc += np.outer(v, v.conj())
    return acc / n_traj


# ---------------------------------------------------------------------------
# Deterministic jump injection

def _resolve_jump(spec: EvolutionSpec, jump: JumpLike, t_jump: float) -> np.ndarray:
    if isinstance(jump, str):
        for j in spec.jumps:
            if j.label == jump:
                return j.op.matrix
        raise ValueError(f"no jump labelled {jump!r} in the evolution spec")
    if isinstance(jump, Op):
        return jump.matrix
    if callable(jump):
        out = jump(t_jump)
        return out.matrix if isinstance(out, Op) else np.asarray(out)
    return np.asarray(jump)


def _unitary_evolve(h: HamiltonianLike, psi: np.ndarray, t0: float, t1: float,
                    tolerance: float, max_step: Optional[float]) -> np.ndarray:
    if t1 <= t0:
        return psi
    if isinstance(h, Op):
        u = hl.matrix_exp(-1j * h.matrix * (t1 - t0))
        return u @ psi

    def rhs(t, y):
        return -1j * (_h_matrix(h, t) @ y)

    return _integrate(rhs, psi, t0, t1, tolerance, max_step)


def inject_jump(spec: EvolutionSpec, psi0: StateVector, jump: JumpLike,
                t_jump: float) -> StateVector:
    """Hamiltonian evolution to t_jump, one jump, evolution to t_final.

    The jump operator may be a label into spec.jumps, an operator, or a
    callable of the jump time (for frame-transformed operators).  The state is
    renormalized after the jump; a jump that annihilates the state raises
    ZeroNormError.
    """
    if not 0 <= t_jump <= spec.t_final:
        raise ValueError("t_jump must lie in [0, t_final]")
    psi = psi0.amplitudes
    psi = _unitary_evolve(spec.hamiltonian, psi, 0.0, t_jump, spec.tolerance, spec.max_step)
    jmat = _resolve_jump(spec, jump, t_jump)
    psi = jmat @ psi
    norm = np.linalg.norm(psi)
    if norm < 1e-12:
        raise ZeroNormError("injected jump annihilates the evolved state")
    psi = psi / norm
    psi = _unitary_evolve(spec.hamiltonian, psi, t_jump, spec.t_final, spec.tolerance, spec.max_step)
    return StateVector(psi0.space, psi).normalized()


# ---------------------------------------------------------------------------
# Closed-form propagator of the number-selective interaction

def analytic_propagator(space: TensorSpace, theta_phases, area: float) -> Op:
    """exp(-i H_int t) for the effective gf drive, with area = Omega * t.

    (I - P) + cos(area) P - i sin(area) (S(theta) (x) |f><g| + S(-theta) (x) |g><f|)
    where P projects on the driven even-Fock, {g, f} subspace.
    """
    from .device import snap_phase_matrix  # local import to avoid a cycle

    phases = dict(theta_phases)
    for k in phases:
        if k % 2 != 0:
            raise ValueError("driven Fock states must be even")
    s_plus = snap_phase_matrix(space.cavity_dim, phases, fill=0.0)
    s_minus = snap_phase_matrix(space.cavity_dim, {k: -th for k, th in phases.items()}, fill=0.0)
    fg = np.zeros((space.ancilla_dim, space.ancilla_dim), dtype=np.complex128)
    fg[hl.level_index("f"), hl.level_index("g")] = 1.0
    flip = np.kron(s_plus, fg) + np.kron(s_minus, fg.T)

    proj = np.zeros(space.dim)
    for k in phases:
        proj[space.index(k, "g")] = 1.0
        proj[space.index(k, "f")] = 1.0
    p = np.diag(proj).astype(np.complex128)
    eye = np.eye(space.dim, dtype=np.complex128)
    u = (eye - p) + math.cos(area) * p - 1j * math.sin(area) * flip
    return Op(space, u, f"U_snap(area={area:.3g})")
