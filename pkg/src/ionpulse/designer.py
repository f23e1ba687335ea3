"""Segment-amplitude solvers for trajectory-closing entangling pulses.

Closing every mode trajectory at the gate end is linear in the segment
amplitudes: with ``I[m, s]`` the unit-amplitude trajectory integral of
mode m over segment s, the real system

    Re(I) @ amps = 0,  Im(I) @ amps = 0          (2 N rows, S columns)

has a guaranteed null vector once S >= 2N + 1, at any detuning off the
mode frequencies.  The two-spin phase is quadratic in the amplitudes, so
a null vector is rescaled to |chi| = pi/4 afterwards -- the sign of chi
is whatever the null vector gives, and the Bell-state target tracks it.

With fewer segments the system is overconstrained and the solver instead
minimizes the influence-weighted closure cost

    sum_{i in {a,b}} sum_m  w[i, m] |I[m] @ amps|^2,
    w[i, m] = eta[i, m]^2 (2 nbar_m + 1)  (x optional per-mode factors)

over unit-norm amplitude vectors, i.e. the smallest-eigenvector problem
of a positive semidefinite S x S matrix.  The weight of a mode is exactly
the leading-order infidelity its unclosed trajectory would cause.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from .chain import ModeStructure, TrapConfig
from .errors import (
    ConfigError,
    DegenerateDetuningError,
    NullSpaceEmptyError,
    ZeroChiError,
)
from .fidelity import ThermalSpec, bell_fidelity_analytic
from .kernels import (
    CouplingResult,
    PulseShape,
    TrajectorySet,
    alpha_final,
    chi,
    chi_segment_matrices,
    mode_integrals,
    quadrature_alpha,
    quadrature_chi,
)

TARGET_PHASE = np.pi / 4.0

# design_exact refuses detunings closer than this to a mode (rad/s); the
# closure rows of that mode degenerate into a single direction there.
DEGENERATE_GUARD = 2.0 * np.pi * 10.0

# |chi| floor for the scaling step, evaluated on the candidate normalized
# to a pulse-area of order one (rms amplitude 1/gate_time); below this no
# finite amplitude reaches pi/4.
_CHI_FLOOR = 1e-15


@dataclass(frozen=True)
class DesignSpec:
    """Everything a solver needs to design one two-ion gate."""

    trap: TrapConfig
    modes: ModeStructure
    target_ions: tuple
    detuning_mu: float
    gate_time: float
    n_segments: int
    mode_weights: tuple | None = None
    thermal_nbar: tuple | None = None

    def __post_init__(self):
        errors = []
        n = self.modes.n_ions
        a, b = self.target_ions
        if not (1 <= a <= n and 1 <= b <= n):
            errors.append(f"target ions {self.target_ions} outside 1..{n}")
        if a == b and n > 1:
            errors.append("target ions must be distinct")
        if self.n_segments < 1:
            errors.append("n_segments must be >= 1")
        if not self.gate_time > 0:
            errors.append("gate_time must be positive")
        if self.mode_weights is not None:
            object.__setattr__(self, "mode_weights", tuple(float(w) for w in self.mode_weights))
            if len(self.mode_weights) != self.modes.n_modes:
                errors.append("mode_weights must have one entry per mode")
            elif any(w <= 0 for w in self.mode_weights):
                errors.append("mode_weights must be positive")
        nbar = self.thermal_nbar
        if nbar is None:
            nbar = (0.0,) * self.modes.n_modes
        object.__setattr__(self, "thermal_nbar", tuple(float(x) for x in nbar))
        if len(self.thermal_nbar) != self.modes.n_modes:
            errors.append("thermal_nbar must have one entry per mode")
        if errors:
            raise ConfigError(errors)

    @property
    def thermal(self) -> ThermalSpec:
        return ThermalSpec(self.thermal_nbar)


@dataclass(frozen=True)
class GateSolution:
    """A designed pulse together with its quality report."""

    spec: DesignSpec
    pulse: PulseShape
    chi: float
    chi_sign: int
    per_mode_chi: np.ndarray
    residual_alphas: TrajectorySet
    predicted_fidelity: float
    peak_rabi: float
    condition_number: float
    solver: str

    def max_residual(self) -> float:
        return self.residual_alphas.max_abs()

    def as_dict(self) -> dict:
        return {
            "solver": self.solver,
            "target_ions": list(self.pulse.target_ions),
            "detuning_mu_hz": self.pulse.detuning_mu / (2.0 * np.pi),
            "gate_time_s": self.pulse.gate_time,
            "segments_rad_per_s": list(self.pulse.segments),
            "chi": self.chi,
            "chi_sign": self.chi_sign,
            "per_mode_chi": [float(x) for x in self.per_mode_chi],
            "max_residual_alpha": self.max_residual(),
            "predicted_fidelity": self.predicted_fidelity,
            "peak_rabi_hz": self.peak_rabi / (2.0 * np.pi),
            "condition_number": self.condition_number,
            "thermal_nbar": list(self.spec.thermal_nbar),
        }


def _pulse(spec: DesignSpec, amps) -> PulseShape:
    return PulseShape(
        detuning_mu=spec.detuning_mu,
        gate_time=spec.gate_time,
        segments=tuple(float(x) for x in amps),
        target_ions=tuple(spec.target_ions),
    )


def _chi_form(spec: DesignSpec) -> np.ndarray:
    """S x S quadratic form C with chi(amps) = amps @ C @ amps."""
    probe = _pulse(spec, np.zeros(spec.n_segments))
    mats = chi_segment_matrices(probe, spec.modes)
    a, b = spec.target_ions
    eta_ab = spec.modes.lamb_dicke[a - 1, :] * spec.modes.lamb_dicke[b - 1, :]
    return 2.0 * np.einsum("m,mst->st", eta_ab, mats)


def _finish(spec: DesignSpec, direction: np.ndarray, cond: float, solver: str) -> GateSolution:
    """Scale a candidate direction to |chi| = pi/4 and assemble the report."""
    direction = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(direction)
    if norm == 0.0:
        raise ZeroChiError("candidate amplitude vector is zero")
    # sign convention: first appreciable segment is non-negative
    lead = direction[np.argmax(np.abs(direction) > 1e-12 * np.max(np.abs(direction)))]
    if lead < 0:
        direction = -direction
    form = _chi_form(spec)
    ref = direction / (norm * spec.gate_time)
    chi_ref = float(ref @ form @ ref)
    if abs(chi_ref) < _CHI_FLOOR:
        raise ZeroChiError(
            "pulse accumulates (numerically) no two-spin phase at this detuning; "
            "try a different detuning"
        )
    scale = np.sqrt(TARGET_PHASE / abs(chi_ref)) / (norm * spec.gate_time)
    pulse = _pulse(spec, scale * direction)
    coupling = chi(pulse, spec.modes)
    residual = alpha_final(pulse, spec.modes)
    fid = bell_fidelity_analytic(residual, coupling.chi, spec.thermal)
    return GateSolution(
        spec=spec,
        pulse=pulse,
        chi=coupling.chi,
        chi_sign=1 if coupling.chi >= 0 else -1,
        per_mode_chi=coupling.per_mode_chi,
        residual_alphas=residual,
        predicted_fidelity=fid,
        peak_rabi=float(np.max(np.abs(pulse.segments))),
        condition_number=cond,
        solver=solver,
    )


def closure_matrix(spec: DesignSpec) -> np.ndarray:
    """Real 2N x S trajectory-closure constraint matrix."""
    probe = _pulse(spec, np.zeros(spec.n_segments))
    integrals = mode_integrals(probe, spec.modes)
    return np.vstack([integrals.real, integrals.imag])


def _condition_number(a: np.ndarray) -> float:
    s = scipy.linalg.svdvals(a)
    positive = s[s > 0]
    if positive.size == 0:
        return np.inf
    return float(positive[0] / positive[-1])


def _guard_degenerate(spec: DesignSpec):
    gaps = np.abs(spec.modes.mode_freqs - spec.detuning_mu)
    if np.any(gaps < DEGENERATE_GUARD):
        m = int(np.argmin(gaps))
        raise DegenerateDetuningError(
            f"detuning within {DEGENERATE_GUARD / (2 * np.pi):.0f} Hz of mode "
            f"{m + 1} ({spec.modes.mode_freqs[m] / (2 * np.pi):.3f} Hz); "
            "closure constraints degenerate there"
        )


def _min_peak_null_vector(basis: np.ndarray, form: np.ndarray) -> np.ndarray:
    """Pick the null-space member minimizing peak power after phase scaling.

    After rescaling to |chi| = pi/4 the peak amplitude of direction v is
    proportional to ||v||_inf / sqrt(|chi(v)|), a scale-invariant
    objective minimized over the (small) null-space sphere from a fixed
    set of starts; single-dimensional null spaces shortcut.
    """
    k = basis.shape[1]
    if k == 1:
        return basis[:, 0]

    def cost(c):
        v = basis @ c
        quad = abs(float(v @ form @ v))
        if quad == 0.0:
            return np.inf
        return float(np.max(np.abs(v)) ** 2 / quad)

    starts = [np.eye(k)[i] for i in range(k)]
    starts.append(np.ones(k) / np.sqrt(k))
    best_c, best_val = None, np.inf
    for c0 in starts:
        res = scipy.optimize.minimize(
            lambda c: cost(c / np.linalg.norm(c)),
            c0,
            method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000},
        )
        val = cost(res.x / np.linalg.norm(res.x))
        if val < best_val - 1e-15:
            best_val, best_c = val, res.x / np.linalg.norm(res.x)
    return basis @ best_c


def design_exact(spec: DesignSpec) -> GateSolution:
    """Close all 2N trajectory constraints exactly (needs S >= 2N + 1).

    Finds a null vector of the closure matrix, picks the lowest-peak one
    when the null space has extra dimensions, and scales it to
    |chi| = pi/4.  Works at any detuning outside the 10 Hz guard bands
    around the mode frequencies.
    """
    n = spec.modes.n_modes
    if spec.n_segments < 2 * n + 1:
        raise ConfigError(
            f"exact closure needs at least {2 * n + 1} segments for {n} modes; "
            f"got {spec.n_segments} (use design_weighted instead)"
        )
    _guard_degenerate(spec)
    a = closure_matrix(spec)
    basis = scipy.linalg.null_space(a)
    if basis.shape[1] == 0:
        raise NullSpaceEmptyError(
            "closure constraints have full column rank; no non-trivial pulse"
        )
    direction = _min_peak_null_vector(basis, _chi_form(spec))
    return _finish(spec, direction, _condition_number(a), "exact")


def design_weighted(spec: DesignSpec) -> GateSolution:
    """Minimize the influence-weighted closure cost (any segment count).

    The cost matrix is P = sum_{i,m} w[i, m] (Re I_m Re I_m^T +
    Im I_m Im I_m^T); its smallest eigenvector is the best unit-norm
    amplitude pattern, which is then scaled to |chi| = pi/4.
    """
    probe = _pulse(spec, np.zeros(spec.n_segments))
    integrals = mode_integrals(probe, spec.modes)
    eta = spec.modes.lamb_dicke
    nbar = np.asarray(spec.thermal_nbar)
    factors = np.ones(spec.modes.n_modes) if spec.mode_weights is None else np.asarray(spec.mode_weights)
    p = np.zeros((spec.n_segments, spec.n_segments))
    for ion in spec.target_ions:
        w = factors * eta[ion - 1, :] ** 2 * (2.0 * nbar + 1.0)
        for m in range(spec.modes.n_modes):
            r = integrals[m].real
            q = integrals[m].imag
            p += w[m] * (np.outer(r, r) + np.outer(q, q))
    evals, evecs = scipy.linalg.eigh(p)
    direction = evecs[:, 0]
    cond = _condition_number(np.vstack([integrals.real, integrals.imag]))
    return _finish(spec, direction, cond, "weighted")


def design_constant(spec: DesignSpec) -> GateSolution:
    """Single constant amplitude scaled to |chi| = pi/4; residuals honest."""
    if spec.n_segments != 1:
        raise ConfigError("design_constant requires n_segments == 1")
    probe = _pulse(spec, np.zeros(1))
    integrals = mode_integrals(probe, spec.modes)
    cond = _condition_number(np.vstack([integrals.real, integrals.imag]))
    return _finish(spec, np.ones(1), cond, "constant")


def reevaluate(solution: GateSolution, use_oracle: bool = False) -> dict:
    """Recompute residuals, chi and fidelity for an existing pulse.

    With ``use_oracle`` the quadrature integrators replace the closed
    forms, providing an end-to-end cross-check of a solution document.
    """
    spec = solution.spec
    if use_oracle:
        residual = quadrature_alpha(solution.pulse, spec.modes)
        coupling = quadrature_chi(solution.pulse, spec.modes)
    else:
        residual = alpha_final(solution.pulse, spec.modes)
        coupling = chi(solution.pulse, spec.modes)
    fid = bell_fidelity_analytic(residual, coupling.chi, spec.thermal)
    return {
        "max_residual_alpha": residual.max_abs(),
        "chi": coupling.chi,
        "predicted_fidelity": fid,
    }


def _modes_with_offset(modes: ModeStructure, delta: float) -> ModeStructure:
    """Common-mode shift of every mode frequency, couplings re-derived."""
    freqs = modes.mode_freqs + delta
    if np.any(freqs <= 0):
        raise ConfigError("mode-frequency offset drives a frequency non-positive")
    from .constants import HBAR

    eta = modes.mode_matrix * modes.trap.delta_k * np.sqrt(
        HBAR / (2.0 * modes.trap.ion_mass * freqs)
    )[None, :]
    for arr in (freqs, eta):
        arr.setflags(write=False)
    return dataclasses.replace(modes, mode_freqs=freqs, lamb_dicke=eta)


def robustness_scan(solution: GateSolution, offsets, axis: str = "detuning") -> list:
    """Fidelity of a frozen pulse under static frequency errors.

    The segment amplitudes stay fixed; each offset (rad/s) shifts either
    the drive detuning (axis="detuning") or every mode frequency
    (axis="trap"), and the trajectory residuals, phase and fidelity are
    re-evaluated.  Returns rows of (offset, fidelity, chi, max residual).
    """
    if axis not in ("detuning", "trap"):
        raise ConfigError("axis must be 'detuning' or 'trap'")
    spec = solution.spec
    rows = []
    for off in offsets:
        off = float(off)
        if axis == "detuning":
            pulse = dataclasses.replace(solution.pulse, detuning_mu=solution.pulse.detuning_mu + off)
            modes = spec.modes
        else:
            pulse = solution.pulse
            modes = _modes_with_offset(spec.modes, off)
        residual = alpha_final(pulse, modes)
        coupling = chi(pulse, modes)
        fid = bell_fidelity_analytic(residual, coupling.chi, spec.thermal)
        rows.append(
            {
                "offset_rad_per_s": off,
                "fidelity": fid,
                "chi": coupling.chi,
                "max_residual_alpha": residual.max_abs(),
            }
        )
    return rows
