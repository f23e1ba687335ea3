"""Phase-space trajectories and entangling phase of a segmented drive.

A bichromatic beat note detuned by ``mu`` from the qubit splitting drives
ion i with a real, piecewise-constant Rabi envelope ``Omega(t)``.  Mode m
of the chain then traces the coherent-state path

    alpha[i, m](tau) = i eta[i, m] * integral_0^tau Omega(t) sin(mu t) e^{i w_m t} dt,

and two ions a, b driven by the same envelope accumulate the geometric
two-spin phase

    chi(tau) = 2 * sum_m eta[a, m] eta[b, m] *
               double-integral_{0 <= t <= t' <= tau}
               Omega(t) Omega(t') sin(mu t) sin(mu t') sin[w_m (t' - t)] dt dt'.

Both are evaluated here in closed form for equal-duration segments.  Each
segment contributes elementary oscillatory integrals; products of sines
are expanded into the four frequency combinations ``w_m +- mu`` and the
triangular (same-segment) part reduces to the entire function

    G(a, b; T) = integral_0^T dy e^{i a y} integral_0^y dx e^{i b x},

implemented without catastrophic cancellation for any real a, b --
including the exact resonance ``mu = w_m``.  An adaptive-quadrature
oracle for both quantities lives at the bottom of the module; tests and
the CLI ``--oracle`` flag use it to cross-check the closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
import scipy.integrate

from .chain import ModeStructure
from .errors import ConfigError

# Switch G(a, b; T) to its Taylor-in-b form once |b T| drops below this;
# keeps the relative error of the difference quotient below ~1e-11.
_SMALL_PHASE = 1e-4
_TAYLOR_TERMS = 6


@dataclass(frozen=True)
class PulseShape:
    """Piecewise-constant drive on two target ions.

    detuning_mu   beat-note detuning from the qubit splitting (rad/s)
    gate_time     total duration tau_g (s); segments share it equally
    segments      real Rabi amplitudes per segment (rad/s)
    target_ions   1-based pair (a, b) receiving the identical drive
    """

    detuning_mu: float
    gate_time: float
    segments: tuple
    target_ions: tuple

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(float(s) for s in self.segments))
        object.__setattr__(self, "target_ions", tuple(int(i) for i in self.target_ions))
        errors = []
        if not self.gate_time > 0:
            errors.append("gate_time must be positive")
        if len(self.segments) < 1:
            errors.append("at least one segment is required")
        if np.any(~np.isfinite(self.segments)):
            errors.append("segment amplitudes must be finite reals")
        if len(self.target_ions) != 2:
            errors.append("target_ions must be a pair")
        elif self.target_ions[0] == self.target_ions[1] and self.target_ions[0] != 1:
            # a degenerate pair is tolerated only for the single-ion chain
            errors.append("target_ions must be distinct")
        if any(i < 1 for i in self.target_ions):
            errors.append("target_ions are 1-based and must be >= 1")
        if errors:
            raise ConfigError(errors)

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    @property
    def segment_edges(self) -> np.ndarray:
        return np.linspace(0.0, self.gate_time, self.n_segments + 1)

    def amplitude_at(self, t: float) -> float:
        """Drive amplitude at time t (0 outside [0, gate_time])."""
        if t < 0.0 or t > self.gate_time:
            return 0.0
        s = min(int(t / self.gate_time * self.n_segments), self.n_segments - 1)
        return self.segments[s]

    def check_against(self, modes: ModeStructure):
        if max(self.target_ions) > modes.n_ions:
            raise ConfigError(
                f"target ions {self.target_ions} outside 1..{modes.n_ions}"
            )


@dataclass(frozen=True)
class TrajectorySet:
    """Final (and optionally sampled) mode displacements for both ions.

    alpha_final    complex array (2, N): rows are target ions (a, b)
    times          sample instants, or None
    paths          complex array (2, N, len(times)), or None
    """

    target_ions: tuple
    alpha_final: np.ndarray
    times: np.ndarray | None = None
    paths: np.ndarray | None = None

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.alpha_final)))


@dataclass(frozen=True)
class CouplingResult:
    """Entangling phase and its per-mode decomposition."""

    chi: float
    per_mode_chi: np.ndarray


@dataclass(frozen=True)
class ScalingCheck:
    """Residuals of the amplitude-scaling identities (see ``scaling_check``)."""

    scale: float
    alpha_residual: float
    chi_residual: float


def _sinc(x):
    """sin(x)/x, exact at 0."""
    return np.sinc(x / np.pi)


def _phi(x):
    """(e^{ix} - 1)/(ix) as the stable product e^{ix/2} sinc(x/2)."""
    return np.exp(0.5j * x) * _sinc(0.5 * x)


def _phi_derivs(z: float, kmax: int) -> np.ndarray:
    """Derivatives phi^(0..kmax) of _phi at real z.

    Small |z| uses the Taylor series phi^(k)(z) = i^k sum_m (iz)^m / (m! (m+k+1));
    otherwise the recurrence phi^(k) = (i^{k-1} e^{iz} - k phi^(k-1)) / z.
    """
    out = np.empty(kmax + 1, dtype=complex)
    if abs(z) < 4.0:
        iz = 1j * z
        for k in range(kmax + 1):
            term = 1.0 + 0.0j
            total = term / (k + 1)
            for m in range(1, 40):
                term *= iz / m
                total += term / (m + k + 1)
                if abs(term) < 1e-18:
                    break
            out[k] = 1j**k * total
    else:
        eiz = np.exp(1j * z)
        out[0] = _phi(z)
        for k in range(1, kmax + 1):
            out[k] = (1j ** (k - 1) * eiz - k * out[k - 1]) / z
    return out


def _G(a: float, b: float, duration: float) -> complex:
    """Nested oscillatory integral over the triangle 0 <= x <= y <= duration.

    G = int_0^T dy e^{iay} int_0^y dx e^{ibx}
      = (T / ib) [phi((a+b)T) - phi(aT)]        for bT away from 0,

    with a Taylor expansion of the difference quotient in bT otherwise.
    """
    z = a * duration
    h = b * duration
    if abs(h) >= _SMALL_PHASE:
        return duration / (1j * b) * (_phi(z + h) - _phi(z))
    derivs = _phi_derivs(z, _TAYLOR_TERMS)
    total = 0.0 + 0.0j
    hk = 1.0
    for k in range(1, _TAYLOR_TERMS + 1):
        total += derivs[k] * hk / factorial(k)
        hk *= h
    return -1j * duration**2 * total


def _triangle_sin(p: float, q: float, t1: float, t2: float) -> float:
    """Integral of sin(p t' - q t) over t1 <= t <= t' <= t2."""
    g = _G(p, -q, t2 - t1)
    return float(np.imag(np.exp(1j * (p - q) * t1) * g))


def _int_sin(a, t1, t2):
    """Integral of sin(a t) over [t1, t2]; stable for any a including 0."""
    mid = 0.5 * (t1 + t2)
    dt = t2 - t1
    return dt * np.sin(a * mid) * _sinc(0.5 * a * dt)


def _int_cos(a, t1, t2):
    """Integral of cos(a t) over [t1, t2]."""
    mid = 0.5 * (t1 + t2)
    dt = t2 - t1
    return dt * np.cos(a * mid) * _sinc(0.5 * a * dt)


def mode_integrals(pulse: PulseShape, modes: ModeStructure) -> np.ndarray:
    """Per-segment, unit-amplitude trajectory integrals.

    Returns the complex (n_modes, n_segments) matrix

        I[m, s] = integral_{segment s} sin(mu t) e^{i w_m t} dt,

    so that the eta-free trajectory of mode m is ``I[m] @ segments`` and
    ``alpha[i, m] = i eta[i, m] (I[m] @ segments)``.  This matrix is the
    building block of both the trajectory evaluation and the linear
    closure constraints used by the pulse solvers.
    """
    edges = pulse.segment_edges
    mids = 0.5 * (edges[:-1] + edges[1:])
    dt = edges[1] - edges[0]
    w = modes.mode_freqs[:, None]
    mu = pulse.detuning_mu
    sigma = w + mu
    delta = w - mu
    # sin(mu t) e^{iwt} = (e^{i sigma t} - e^{i delta t}) / 2i per segment
    term = lambda a: dt * np.exp(1j * a * mids[None, :]) * _sinc(0.5 * a * dt)
    return (term(sigma) - term(delta)) / 2.0j


def alpha_final(pulse: PulseShape, modes: ModeStructure) -> TrajectorySet:
    """Mode displacements at the end of the pulse, per target ion."""
    pulse.check_against(modes)
    shared = mode_integrals(pulse, modes) @ np.asarray(pulse.segments)
    a, b = pulse.target_ions
    eta = modes.lamb_dicke[[a - 1, b - 1], :]
    return TrajectorySet(
        target_ions=pulse.target_ions,
        alpha_final=1j * eta * shared[None, :],
    )


def alpha_path(pulse: PulseShape, modes: ModeStructure, n_samples: int) -> TrajectorySet:
    """Trajectories sampled on a uniform grid including both endpoints."""
    pulse.check_against(modes)
    if n_samples < 2:
        raise ConfigError("n_samples must be >= 2")
    times = np.linspace(0.0, pulse.gate_time, n_samples)
    edges = pulse.segment_edges
    dt = edges[1] - edges[0]
    w = modes.mode_freqs[:, None]
    mu = pulse.detuning_mu
    sigma = w + mu
    delta = w - mu
    amps = np.asarray(pulse.segments)

    def partial(a, lo, hi):
        mid = 0.5 * (lo + hi)
        return (hi - lo) * np.exp(1j * a * mid) * _sinc(0.5 * a * (hi - lo))

    full = mode_integrals(pulse, modes)
    prefix = np.concatenate(
        [np.zeros((modes.n_modes, 1), complex), np.cumsum(full * amps[None, :], axis=1)],
        axis=1,
    )
    shared = np.empty((modes.n_modes, n_samples), dtype=complex)
    for k, t in enumerate(times):
        s = min(int(t / pulse.gate_time * pulse.n_segments), pulse.n_segments - 1)
        seg_part = (partial(sigma[:, 0], edges[s], t) - partial(delta[:, 0], edges[s], t)) / 2.0j
        shared[:, k] = prefix[:, s] + amps[s] * seg_part
    a, b = pulse.target_ions
    eta = modes.lamb_dicke[[a - 1, b - 1], :]
    paths = 1j * eta[:, :, None] * shared[None, :, :]
    return TrajectorySet(
        target_ions=pulse.target_ions,
        alpha_final=paths[:, :, -1].copy(),
        times=times,
        paths=paths,
    )


def chi_segment_matrices(pulse: PulseShape, modes: ModeStructure) -> np.ndarray:
    """Per-mode quadratic forms for the entangling phase.

    Returns real symmetric matrices M[m] (n_modes, S, S) such that

        chi = 2 * sum_m eta[a, m] eta[b, m] * (segments @ M[m] @ segments).

    Distinct-segment pairs factorize into products of single-segment sine
    integrals; the same-segment block needs the triangular closed form.
    Expanding sin(mu t) sin(mu t') sin[w (t'-t)] gives, with
    delta = w - mu and sigma = w + mu,

        1/4 [ sin(delta(t'-t)) + sin(sigma(t'-t))
              - sin(sigma t' - delta t) - sin(delta t' - sigma t) ].
    """
    edges = pulse.segment_edges
    n_seg = pulse.n_segments
    w = modes.mode_freqs
    mu = pulse.detuning_mu
    out = np.zeros((modes.n_modes, n_seg, n_seg))
    for m in range(modes.n_modes):
        sigma = w[m] + mu
        delta = w[m] - mu
        # single-segment sine/cosine moments for the factorized cross terms
        csc = np.array(
            [0.5 * (_int_sin(sigma, edges[s], edges[s + 1]) - _int_sin(delta, edges[s], edges[s + 1]))
             for s in range(n_seg)]
        )
        css = np.array(
            [0.5 * (_int_cos(delta, edges[s], edges[s + 1]) - _int_cos(sigma, edges[s], edges[s + 1]))
             for s in range(n_seg)]
        )
        mat = out[m]
        for s in range(n_seg):
            t1, t2 = edges[s], edges[s + 1]
            mat[s, s] = 0.25 * (
                _triangle_sin(delta, delta, t1, t2)
                + _triangle_sin(sigma, sigma, t1, t2)
                - _triangle_sin(sigma, delta, t1, t2)
                - _triangle_sin(delta, sigma, t1, t2)
            )
        for s in range(n_seg):          # t in segment s (earlier)
            for sp in range(s + 1, n_seg):  # t' in segment sp (later)
                cross = css[sp] * csc[s] - csc[sp] * css[s]
                mat[s, sp] = mat[sp, s] = 0.5 * cross
    return out


def chi(pulse: PulseShape, modes: ModeStructure) -> CouplingResult:
    """Entangling phase between the two target ions at the end of the pulse."""
    pulse.check_against(modes)
    a, b = pulse.target_ions
    eta_ab = modes.lamb_dicke[a - 1, :] * modes.lamb_dicke[b - 1, :]
    amps = np.asarray(pulse.segments)
    mats = chi_segment_matrices(pulse, modes)
    per_mode = 2.0 * eta_ab * np.einsum("s,mst,t->m", amps, mats, amps)
    return CouplingResult(chi=float(np.sum(per_mode)), per_mode_chi=per_mode)


def scaling_check(pulse: PulseShape, modes: ModeStructure, scale: float) -> ScalingCheck:
    """Verify trajectory linearity and phase quadraticity in the amplitudes.

    Scaling every segment by ``scale`` must scale alpha by ``scale`` and
    chi by ``scale**2``; returns the relative residuals of both identities
    (absolute residuals when the reference value is zero).
    """
    if scale < 0:
        raise ConfigError("scale must be non-negative")
    scaled = PulseShape(
        detuning_mu=pulse.detuning_mu,
        gate_time=pulse.gate_time,
        segments=tuple(scale * s for s in pulse.segments),
        target_ions=pulse.target_ions,
    )
    base_alpha = alpha_final(pulse, modes).alpha_final
    base_chi = chi(pulse, modes).chi
    new_alpha = alpha_final(scaled, modes).alpha_final
    new_chi = chi(scaled, modes).chi
    ref_a = np.max(np.abs(base_alpha)) * scale
    res_a = np.max(np.abs(new_alpha - scale * base_alpha))
    ref_c = abs(base_chi) * scale**2
    res_c = abs(new_chi - scale**2 * base_chi)
    return ScalingCheck(
        scale=scale,
        alpha_residual=float(res_a / ref_a) if ref_a > 0 else float(res_a),
        chi_residual=float(res_c / ref_c) if ref_c > 0 else float(res_c),
    )


# ----------------------------------------------------------------------
# Quadrature oracle (ground truth for tests and --oracle runs)
# ----------------------------------------------------------------------
#
# The integrands oscillate at up to w_m + mu (thousands of radians across
# a gate), which defeats global adaptive Gauss-Kronrod at tight
# tolerances.  Instead each smooth cell is split into panels holding at
# most _PANEL_PHASE radians of the fastest oscillation and integrated
# with fixed-order Gauss-Legendre; the truncation error of a 48-point
# rule on a 60-radian panel is below 1e-19 relative, so the result is
# limited only by rounding.  The panel count adapts to the oscillation
# rate; ``panel_scale`` refines it further for convergence checks.

_GL_ORDER = 48
_PANEL_PHASE = 60.0


def _gl_panels(lo: float, hi: float, rate: float, panel_scale: float = 1.0):
    """Gauss-Legendre nodes/weights on [lo, hi], panelized for phase rate."""
    x, w = np.polynomial.legendre.leggauss(_GL_ORDER)
    n_panels = max(1, int(np.ceil(rate * (hi - lo) * panel_scale / _PANEL_PHASE)))
    edges = np.linspace(lo, hi, n_panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def quadrature_alpha(
    pulse: PulseShape, modes: ModeStructure, panel_scale: float = 1.0
) -> TrajectorySet:
    """Trajectory endpoints by direct numerical quadrature.

    Evaluates Omega(t) sin(mu t) e^{i w t} on panelized Gauss-Legendre
    nodes segment by segment, never reusing the closed forms above.
    """
    pulse.check_against(modes)
    mu = pulse.detuning_mu
    edges = pulse.segment_edges
    shared = np.zeros(modes.n_modes, dtype=complex)
    for m, w in enumerate(modes.mode_freqs):
        rate = abs(w) + abs(mu)
        total = 0.0 + 0.0j
        for s, amp in enumerate(pulse.segments):
            if amp == 0.0:
                continue
            t, wq = _gl_panels(edges[s], edges[s + 1], rate, panel_scale)
            total += amp * np.sum(wq * np.sin(mu * t) * np.exp(1j * w * t))
        shared[m] = total
    a, b = pulse.target_ions
    eta = modes.lamb_dicke[[a - 1, b - 1], :]
    return TrajectorySet(target_ions=pulse.target_ions, alpha_final=1j * eta * shared[None, :])


def quadrature_chi(
    pulse: PulseShape, modes: ModeStructure, panel_scale: float = 1.0
) -> CouplingResult:
    """Entangling phase by brute-force 2-D quadrature of the raw integrand.

    The time-ordered region 0 <= t <= t' <= tau splits at segment
    boundaries into rectangles (t in an earlier segment than t') and
    same-segment triangles.  Rectangles use a tensor Gauss-Legendre grid;
    triangles are mapped to a square via t = t1 + v (t' - t1).
    """
    pulse.check_against(modes)
    mu = pulse.detuning_mu
    edges = pulse.segment_edges
    amps = pulse.segments
    a, b = pulse.target_ions
    per_mode = np.zeros(modes.n_modes)
    for m, w in enumerate(modes.mode_freqs):
        eta_ab = modes.lamb_dicke[a - 1, m] * modes.lamb_dicke[b - 1, m]
        rate = abs(w) + abs(mu)
        total = 0.0
        for sp in range(pulse.n_segments):
            if amps[sp] == 0.0:
                continue
            t1, t2 = edges[sp], edges[sp + 1]
            tp, wp = _gl_panels(t1, t2, rate, panel_scale)
            # same-segment triangle via t = t1 + v (t' - t1)
            v, wv = _gl_panels(0.0, 1.0, rate * (t2 - t1), panel_scale)
            tt = t1 + np.outer(tp - t1, v)
            f = np.sin(mu * tt) * np.sin(mu * tp)[:, None] * np.sin(w * (tp[:, None] - tt))
            inner = f @ wv
            total += amps[sp] ** 2 * np.sum(wp * (tp - t1) * inner)
            for s in range(sp):
                if amps[s] == 0.0:
                    continue
                t, wt = _gl_panels(edges[s], edges[s + 1], rate, panel_scale)
                f = np.sin(mu * t)[None, :] * np.sin(mu * tp)[:, None] * np.sin(
                    w * (tp[:, None] - t[None, :])
                )
                total += amps[s] * amps[sp] * float(wp @ f @ wt)
        per_mode[m] = 2.0 * eta_ab * total
    return CouplingResult(chi=float(np.sum(per_mode)), per_mode_chi=per_mode)


def trajectory_csv(traj: TrajectorySet) -> str:
    """Sampled trajectories as CSV: (ion, mode, t_seconds, re_alpha, im_alpha)."""
    if traj.times is None or traj.paths is None:
        raise ConfigError("trajectory has no sampled path; use alpha_path")
    lines = ["ion,mode,t_seconds,re_alpha,im_alpha"]
    for i, ion in enumerate(traj.target_ions):
        for m in range(traj.paths.shape[1]):
            for k, t in enumerate(traj.times):
                z = traj.paths[i, m, k]
                lines.append(f"{ion},{m + 1},{t!r},{z.real!r},{z.imag!r}")
    return "\n".join(lines) + "\n"
