"""Device parameters and Hamiltonian / collapse-operator builders.

All frequencies are angular (rad/s); all times are seconds.  Quantities quoted
in data sheets as ``f`` correspond to ``2*pi*f`` here.

Frame convention used throughout the package: states evolve as exp(-i H t).
The number-selective drive comb is written in the dispersive frame (static
dispersive shifts kept in the Hamiltonian), and the interaction picture is
reached with U(t) = exp(+i H0 t), so a lab-frame jump operator J appears in
the interaction picture as U(t) J U(t)^dag.  Under this convention an
ancilla relaxation |e><f| acquires the phase factor exp(i (chi_e - chi_f) t n)
on Fock state |n>.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from typing import Callable, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import hilbert as hl
from .hilbert import Op, TensorSpace

TWO_PI = 2.0 * math.pi

LOGICAL_FOCK_SUPPORT = (0, 2, 4)

JUMP_LABELS = (
    "cavity_loss",
    "ancilla_relax_ef",
    "ancilla_relax_ge",
    "dephasing",
    "thermal_excite",
    "injected_dephasing",
    "injected_ef_up",
    "injected_ef_down",
)

DEPHASING_MODELS = ("number", "projector")


class DriveRegimeWarning(UserWarning):
    """A perturbative drive formula is being used outside its safe regime."""


@dataclasses.dataclass(frozen=True)
class DeviceParams:
    """Static rates and couplings of the cavity-transmon system.

    Defaults are the measured values of the reference device; the pure
    dephasing times are the quoted lower bounds.
    """

    chi_e: float = TWO_PI * -0.9e6
    chi_f: float = TWO_PI * -1.2e6
    kerr_K: float = TWO_PI * -2.2e3
    anharmonicity_alpha: float = TWO_PI * -137e6
    t1_ge: float = 50e-6
    t1_ef: float = 47e-6
    tphi_ge: float = 200e-6
    tphi_gf: float = 40e-6
    t1_cavity: float = 1.0e-3
    nbar_thermal: float = 0.004
    injected_dephasing_rate: float = 0.0
    injected_ef_noise_rate: float = 0.0
    # Fraction of the injected ancilla dephasing rate that also dephases the
    # cavity (readout photons couple to both via their dispersive/cross-Kerr
    # shifts).  0 disables the channel.
    injected_dephasing_cavity_fraction: float = 0.0

    def __post_init__(self):
        for name in ("t1_ge", "t1_ef", "tphi_ge", "tphi_gf", "t1_cavity"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("nbar_thermal", "injected_dephasing_rate",
                     "injected_ef_noise_rate", "injected_dephasing_cavity_fraction"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def replace(self, **changes) -> "DeviceParams":
        return dataclasses.replace(self, **changes)


@dataclasses.dataclass(frozen=True)
class PulseEnvelope:
    """Drive amplitude profile with a fixed integrated Rabi area (radians)."""

    shape: str
    duration: float
    area: float
    sigma: Optional[float] = None

    def __post_init__(self):
        if self.shape not in ("constant", "gaussian"):
            raise ValueError(f"unknown envelope shape {self.shape!r}")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.shape == "gaussian":
            if self.sigma is None or self.sigma <= 0:
                raise ValueError("gaussian envelope needs sigma > 0")
            if self.duration < 4 * self.sigma:
                raise ValueError("gaussian envelope requires duration >= 4 sigma")

    def _gauss_norm(self) -> float:
        # integral of exp(-(t - T/2)^2 / 2 sigma^2) over [0, T]
        s, half = self.sigma, self.duration / 2.0
        return s * math.sqrt(2 * math.pi) * math.erf(half / (s * math.sqrt(2.0)))

    def amplitude(self, t):
        """Instantaneous Rabi rate (rad/s); integrates to `area` over the pulse."""
        t = np.asarray(t, dtype=float)
        if self.shape == "constant":
            val = self.area / self.duration
            return np.where((t >= 0) & (t <= self.duration), val, 0.0)
        peak = self.area / self._gauss_norm()
        prof = peak * np.exp(-((t - self.duration / 2.0) ** 2) / (2 * self.sigma**2))
        return np.where((t >= 0) & (t <= self.duration), prof, 0.0)

    def peak(self) -> float:
        if self.shape == "constant":
            return self.area / self.duration
        return self.area / self._gauss_norm()


@dataclasses.dataclass(frozen=True)
class DriveParams:
    """Number-selective gf drive: peak rate, per-Fock phases and comb scheme."""

    omega: float
    theta_phases: Tuple[Tuple[int, float], ...]
    detuning_delta_raman: float = TWO_PI * 45e6
    sideband_g: float = TWO_PI * 3e6
    # Signed detuning of the error-transparency sideband.  The matched value
    # g^2/delta = chi_f - chi_e is negative for this device; see
    # matched_sideband_delta().
    sideband_delta: float = TWO_PI * -30e6
    envelope: Optional[PulseEnvelope] = None

    def __post_init__(self):
        object.__setattr__(self, "theta_phases", tuple((int(k), float(th)) for k, th in self.theta_phases))
        for k, _ in self.theta_phases:
            if k % 2 != 0 or k not in LOGICAL_FOCK_SUPPORT:
                raise ValueError(f"drive phase on Fock {k}: only even k in {LOGICAL_FOCK_SUPPORT} are addressable")
        if len({k for k, _ in self.theta_phases}) != len(self.theta_phases):
            raise ValueError("duplicate Fock index in theta_phases")
        if self.omega < 0:
            raise ValueError("omega must be non-negative")

    @property
    def phase_map(self) -> dict:
        return dict(self.theta_phases)

    def rwa_ratio(self, params: DeviceParams) -> float:
        """Quality ratio Omega / |2 chi_f| of the number-selective approximation."""
        return self.omega / abs(2 * params.chi_f)


def constant_drive(omega: float, duration: float, thetas: Mapping[int, float]) -> DriveParams:
    env = PulseEnvelope("constant", duration, area=omega * duration)
    return DriveParams(omega=omega, theta_phases=tuple(thetas.items()), envelope=env)


def gaussian_drive(area: float, duration: float, sigma: float, thetas: Mapping[int, float]) -> DriveParams:
    env = PulseEnvelope("gaussian", duration, area=area, sigma=sigma)
    return DriveParams(omega=env.peak(), theta_phases=tuple(thetas.items()), envelope=env)


@dataclasses.dataclass(frozen=True)
class JumpOp:
    """Labelled collapse operator; the Liouvillian term is rate * D[op]."""

    op: Op
    rate: float
    label: str

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("jump rate must be non-negative")
        if self.label not in JUMP_LABELS:
            raise ValueError(f"unknown jump label {self.label!r}")

    def scaled_matrix(self) -> np.ndarray:
        """sqrt(rate) * op, the operator that enters the master equation."""
        return math.sqrt(self.rate) * self.op.matrix


# ---------------------------------------------------------------------------
# Hamiltonians

def snap_phase_matrix(cavity_dim: int, phases: Mapping[int, float], fill: float = 0.0) -> np.ndarray:
    """Diagonal sum_k e^{i theta_k} |k><k| over the listed Fock states.

    fill=0 gives the drive operator (zero off the addressed states); fill=1
    gives the unitary phase gate (identity elsewhere).
    """
    diag = np.full(cavity_dim, fill, dtype=np.complex128)
    for k, th in phases.items():
        if k >= cavity_dim:
            raise ValueError(f"Fock {k} outside truncation {cavity_dim}")
        diag[k] = np.exp(1j * th)
    return np.diag(diag)


def dispersive_diagonal(params: DeviceParams, space: TensorSpace, *, et_on: bool = False) -> np.ndarray:
    """Diagonal of the dispersive interaction n*(chi_e Pe + chi_f Pf), rad/s."""
    chi_by_level = np.zeros(space.ancilla_dim)
    chi_by_level[1] = params.chi_f if et_on else params.chi_e
    if space.ancilla_dim >= 3:
        chi_by_level[2] = params.chi_f
    return space.fock_of_index() * chi_by_level[space.level_of_index()]


def build_h0(params: DeviceParams, space: TensorSpace, *, et_on: bool = False,
             include_kerr: bool = True) -> Op:
    """Static interaction a^dag a (chi_e |e><e| + chi_f |f><f|), plus Kerr.

    With et_on the error-transparency drive is folded in as its adiabatic
    limit chi_e -> chi_f.
    """
    if space.ancilla_dim < 3:
        raise ValueError("dispersive model needs at least the three levels g, e, f")
    diag = dispersive_diagonal(params, space, et_on=et_on).astype(np.complex128)
    if include_kerr:
        k = space.fock_of_index().astype(float)
        diag = diag + (params.kerr_K / 2.0) * k * (k - 1)
    return Op(space, np.diag(diag), "H0")


def build_h_int_effective(drive: DriveParams, space: TensorSpace) -> Op:
    """Time-independent number-selective interaction in the rotating frame.

    Omega (S(theta) (x) |f><g| + S(-theta) (x) |g><f|), with S(theta) supported
    only on the driven even-Fock states.  Hermitian by construction.
    """
    s = snap_phase_matrix(space.cavity_dim, drive.phase_map, fill=0.0)
    fg = np.zeros((space.ancilla_dim, space.ancilla_dim), dtype=np.complex128)
    fg[hl.level_index("f"), hl.level_index("g")] = 1.0
    half = drive.omega * np.kron(s, fg)
    return Op(space, half + half.conj().T, "H_int")


def driven_subspace_projector(drive: DriveParams, space: TensorSpace) -> Op:
    """Projector on span{|k,g>, |k,f>} over the driven Fock states."""
    diag = np.zeros(space.dim)
    for k in drive.phase_map:
        diag[space.index(k, "g")] = 1.0
        diag[space.index(k, "f")] = 1.0
    return Op(space, np.diag(diag).astype(np.complex128), "P_driven")


def build_snap_drive(params: DeviceParams, drive: DriveParams, space: TensorSpace,
                     *, cross_terms: bool = True) -> Callable[[float], np.ndarray]:
    """Dispersive-frame drive comb for the number-selective gf transition.

    One tone per addressed Fock state k, detuned by k*chi_f.  With
    cross_terms=True every tone drives every Fock state (the physical comb);
    with cross_terms=False each tone addresses only its own Fock state, which
    reproduces the rotating-wave effective model exactly.
    """
    chi_f = params.chi_f
    ks = np.array(sorted(drive.phase_map), dtype=float)
    ths = np.array([drive.phase_map[int(k)] for k in ks])
    env = drive.envelope

    def amplitude(t: float) -> float:
        if env is None:
            return drive.omega
        return float(env.amplitude(t))

    fg = np.zeros((space.ancilla_dim, space.ancilla_dim), dtype=np.complex128)
    fg[hl.level_index("f"), hl.level_index("g")] = 1.0

    if cross_terms:
        comb_op = np.kron(np.eye(space.cavity_dim, dtype=np.complex128), fg)

        def h_drive(t: float) -> np.ndarray:
            c = amplitude(t) * np.sum(np.exp(1j * (ths - chi_f * ks * t)))
            half = c * comb_op
            return half + half.conj().T

        return h_drive

    fock_idx = {int(k): i for i, k in enumerate(ks)}
    selective_ops = []
    for k in sorted(drive.phase_map):
        sel = np.zeros((space.cavity_dim, space.cavity_dim), dtype=np.complex128)
        sel[k, k] = 1.0
        selective_ops.append(np.kron(sel, fg))
    selective_ops = np.array(selective_ops)

    def h_drive_rwa(t: float) -> np.ndarray:
        coeffs = amplitude(t) * np.exp(1j * (ths - chi_f * ks * t))
        half = np.tensordot(coeffs, selective_ops, axes=1)
        return half + half.conj().T

    return h_drive_rwa


def build_h_snap_timedependent(params: DeviceParams, drive: DriveParams, space: TensorSpace,
                               *, cross_terms: bool = True, et_on: bool = False,
                               include_kerr: bool = False) -> Callable[[float], Op]:
    """Full dispersive-frame Hamiltonian H0 + comb(t) as a callable of time."""
    h0 = build_h0(params, space, et_on=et_on, include_kerr=include_kerr).matrix
    comb = build_snap_drive(params, drive, space, cross_terms=cross_terms)

    def h_of_t(t: float) -> Op:
        return Op(space, h0 + comb(t), "H_snap(t)")

    return h_of_t


# ---------------------------------------------------------------------------
# Drive-scheme algebra

@dataclasses.dataclass(frozen=True)
class RamanDrive:
    """Effective two-photon gf drive from detuned ge and ef tones."""

    omega: float
    e_leakage: float


def build_raman_params(omega_ge_rate: float, omega_ef_rate: float, delta: float) -> RamanDrive:
    """Effective gf Rabi rate Omega_ge*Omega_ef/Delta and e-population estimate."""
    if delta == 0:
        raise ValueError("Raman detuning must be nonzero")
    strongest = max(abs(omega_ge_rate), abs(omega_ef_rate))
    if strongest > 0 and abs(delta) / strongest < 5:
        warnings.warn(DriveRegimeWarning(
            f"Raman detuning only {abs(delta) / strongest:.1f}x the drive rate; "
            "adiabatic elimination is marginal"))
    omega = omega_ge_rate * omega_ef_rate / delta
    return RamanDrive(omega=omega, e_leakage=omega_ge_rate * omega_ef_rate / delta**2)


@dataclasses.dataclass(frozen=True)
class ETDrive:
    """Adiabatic model of the detuned e-h sideband drive."""

    chi_shift: float
    leakage: float


def build_error_transparency_shift(g: float, delta: float) -> ETDrive:
    """Dispersive-shift correction g^2/delta on |e> and hybridization leakage g^2/delta^2."""
    if g == 0:
        return ETDrive(chi_shift=0.0, leakage=0.0)
    if delta == 0:
        raise ValueError("sideband detuning must be nonzero")
    if abs(g / delta) > 0.5:
        warnings.warn(DriveRegimeWarning(
            f"sideband g/delta = {g / delta:.2f}; adiabatic elimination unreliable"))
    return ETDrive(chi_shift=g**2 / delta, leakage=g**2 / delta**2)


def matched_sideband_delta(g: float, chi_e: float, chi_f: float) -> float:
    """Signed detuning that makes the shifted chi_e equal chi_f: g^2/delta = chi_f - chi_e."""
    diff = chi_f - chi_e
    if diff == 0:
        raise ValueError("chi_e already equals chi_f")
    return g**2 / diff


# ---------------------------------------------------------------------------
# Collapse operators

def _dephasing_rates_number_model(params: DeviceParams) -> Tuple[float, float]:
    # One D[b^dag b] term per dephasing-time entry.  A coherence n<->m decays
    # at (kappa/2)(n-m)^2, so the pair is calibrated so the simulated g-f
    # Ramsey time equals tphi_gf exactly, with the ge entry keeping the share
    # it would need in isolation.
    kappa_ge = 2.0 / params.tphi_ge
    kappa_total = 1.0 / (2.0 * params.tphi_gf)
    kappa_gf = kappa_total - kappa_ge
    if kappa_gf < 0:
        warnings.warn(DriveRegimeWarning(
            "tphi_ge entry alone exceeds the g-f dephasing budget; "
            "clamping the gf-entry rate to zero"))
        return kappa_total, 0.0
    return kappa_ge, kappa_gf


def build_jump_ops(params: DeviceParams, space: TensorSpace, *, et_on: bool = False,
                   dephasing_model: str = "number") -> list[JumpOp]:
    """Collapse operators for the Lindblad master equation.

    The error-transparency drive reshapes the coherent part only, so et_on
    does not change the operator set; it is accepted so call sites can carry
    one flag for both builders.  dephasing_model selects between number
    dephasing D[b^dag b] and level-projector dephasing; both are calibrated so
    the g-f Ramsey decay time equals tphi_gf.
    """
    if dephasing_model not in DEPHASING_MODELS:
        raise ValueError(f"dephasing_model must be one of {DEPHASING_MODELS}")
    del et_on
    ops: list[JumpOp] = []

    def add(op: Op, rate: float, label: str):
        if rate > 0:
            ops.append(JumpOp(op=op, rate=rate, label=label))

    add(hl.annihilation(space), 1.0 / params.t1_cavity, "cavity_loss")
    add(hl.ancilla_transition(space, "e", "g"), 1.0 / params.t1_ge, "ancilla_relax_ge")
    add(hl.ancilla_transition(space, "f", "e"), 1.0 / params.t1_ef, "ancilla_relax_ef")

    if dephasing_model == "number":
        kappa_ge, kappa_gf = _dephasing_rates_number_model(params)
        bdb = hl.ancilla_number(space)
        add(bdb, kappa_ge, "dephasing")
        add(bdb, kappa_gf, "dephasing")
    else:
        add(hl.ancilla_projector(space, "e"), 2.0 / params.tphi_ge, "dephasing")
        add(hl.ancilla_projector(space, "f"), 2.0 / params.tphi_gf, "dephasing")

    add(hl.ancilla_transition(space, "g", "e"), params.nbar_thermal / params.t1_ge, "thermal_excite")

    if params.injected_dephasing_rate > 0:
        if dephasing_model == "number":
            add(hl.ancilla_number(space), params.injected_dephasing_rate / 2.0, "injected_dephasing")
        else:
            add(hl.ancilla_projector(space, "f"), 2.0 * params.injected_dephasing_rate, "injected_dephasing")
        frac = params.injected_dephasing_cavity_fraction
        if frac > 0:
            add(hl.number(space), frac * params.injected_dephasing_rate / 2.0, "injected_dephasing")

    r = params.injected_ef_noise_rate
    add(hl.ancilla_transition(space, "e", "f"), r, "injected_ef_up")
    add(hl.ancilla_transition(space, "f", "e"), r, "injected_ef_down")

    return ops


def frame_transformed_jump(params: DeviceParams, space: TensorSpace, jump: JumpOp,
                           *, et_on: bool = False) -> Callable[[float], np.ndarray]:
    """Interaction-picture collapse operator U(t) J U(t)^dag, U = exp(+i H0 t).

    Includes sqrt(rate).  Under this convention |e><f| maps to
    exp(i (chi_e - chi_f) t n) |e><f|, the jump-time-dependent cavity rotation
    left behind by ancilla relaxation when the shifts are unmatched.
    """
    diag = dispersive_diagonal(params, space, et_on=et_on)
    base = jump.scaled_matrix()

    def at(t: float) -> np.ndarray:
        u = np.exp(1j * diag * t)
        return (u[:, None] * base) * u.conj()[None, :]

    return at


def gaussian_drive_at_peak_ratio(params: DeviceParams, ratio: float,
                                 thetas: Mapping[int, float],
                                 sigma_frac: float = 1 / 6) -> DriveParams:
    """Gaussian pi/2-area drive whose peak rate is ratio * |2 chi_f|."""
    peak = ratio * abs(2 * params.chi_f)
    norm_over_t = sigma_frac * math.sqrt(2 * math.pi) * math.erf((0.5 / sigma_frac) / math.sqrt(2))
    duration = (math.pi / 2) / (norm_over_t * peak)
    return gaussian_drive(math.pi / 2, duration, sigma_frac * duration, thetas)


def _snap_rotating_propagator(params: DeviceParams, drive: DriveParams,
                              space: TensorSpace) -> np.ndarray:
    from . import dynamics as dyn

    h0 = build_h0(params, space, include_kerr=False).matrix
    comb = build_snap_drive(params, drive, space, cross_terms=True)

    def rhs(t, u):
        return -1j * ((h0 + comb(t)) @ u)

    duration = drive.envelope.duration
    max_step = 2 * math.pi / (50 * 4 * abs(params.chi_f))
    u = dyn._integrate(rhs, np.eye(space.dim, dtype=complex), 0.0, duration, 1e-11, max_step)
    return np.diag(np.exp(1j * np.diag(h0) * duration)) @ u


def rwa_convergence_deficits(params: DeviceParams, space: TensorSpace,
                             ratios: Sequence[float], theta: float = math.pi / 2) -> list[float]:
    """Gate-fidelity deficit of the physical comb against the effective model.

    For each peak-rate ratio Omega/|2 chi_f| the full comb propagator is
    compared on the driven subspace with the closed-form rotating-frame
    propagator; the deficit scales as the square of the ratio.
    """
    from . import dynamics as dyn

    thetas = {0: 0.0, 2: theta, 4: 0.0}
    deficits = []
    for ratio in ratios:
        drive = gaussian_drive_at_peak_ratio(params, ratio, thetas)
        u_int = _snap_rotating_propagator(params, drive, space)
        u_eff = dyn.analytic_propagator(space, thetas.items(), math.pi / 2).matrix
        proj = driven_subspace_projector(drive, space).matrix
        d_sub = int(round(np.trace(proj).real))
        m = proj @ u_eff.conj().T @ u_int @ proj
        fid = (abs(np.trace(m)) ** 2 + np.trace(m.conj().T @ m).real) / (d_sub * (d_sub + 1))
        deficits.append(1.0 - float(fid))
    return deficits


def f_population_fock_spread(params: DeviceParams, space: TensorSpace,
                             ratio: float, theta: float = math.pi / 2,
                             n_samples: int = 600) -> float:
    """Largest Fock dependence of the cycle-averaged f population.

    Drives |0,g>, |2,g>, |4,g> with the full comb and returns the maximal
    spread between the three secular population trajectories (micromotion at
    the comb spacing is averaged over one comb period).  The residual spread
    is the path-independence violation of the finite-rate drive.
    """
    from . import dynamics as dyn

    thetas = {0: 0.0, 2: theta, 4: 0.0}
    drive = gaussian_drive_at_peak_ratio(params, ratio, thetas)
    duration = drive.envelope.duration
    h0 = build_h0(params, space, include_kerr=False).matrix
    comb = build_snap_drive(params, drive, space, cross_terms=True)

    def rhs(t, psi):
        return -1j * ((h0 + comb(t)) @ psi)

    cols = np.zeros((space.dim, 3), dtype=complex)
    for i, k in enumerate((0, 2, 4)):
        cols[space.index(k, "g"), i] = 1.0
    is_f = space.level_of_index() == 2
    max_step = 2 * math.pi / (50 * 4 * abs(params.chi_f))
    dt = duration / n_samples
    traj = np.empty((n_samples, 3))
    t = 0.0
    for i in range(n_samples):
        cols = dyn._integrate(rhs, cols, t, t + dt, 1e-9, max_step)
        t += dt
        traj[i] = np.sum(np.abs(cols[is_f, :]) ** 2, axis=0)
    period = math.pi / abs(params.chi_f)
    window = max(1, int(round(period / dt)))
    kernel = np.ones(window) / window
    smooth = np.vstack([np.convolve(traj[:, j], kernel, mode="valid") for j in range(3)]).T
    return float(np.max(smooth.max(axis=1) - smooth.min(axis=1)))


def total_gf_dephasing_rate(params: DeviceParams) -> float:
    """Native plus injected g-f coherence decay rate (the swept quantity)."""
    return 1.0 / params.tphi_gf + params.injected_dephasing_rate


def total_ef_relaxation_rate(params: DeviceParams) -> float:
    """Native plus injected f->e transition rate (the swept quantity)."""
    return 1.0 / params.t1_ef + params.injected_ef_noise_rate
