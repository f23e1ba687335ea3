"""Equilibrium structure and normal modes of a linear ion chain.

A chain of identical ions in a harmonic trap arranges itself along the
weak (axial, z) direction.  Working in units of the natural length scale

    l = (e^2 / (4 pi eps0 M omega_z^2))**(1/3),

the scaled equilibrium positions ``u_i`` satisfy the force balance

    u_i - sum_{j != i} sign(u_i - u_j) / (u_i - u_j)^2 = 0.

Small oscillations about equilibrium separate into an axial and a
transverse branch.  In units of ``omega_z**2`` their stiffness matrices
are

    axial:       A_nn = 1 + 2 sum_{p != n} 1/|u_n - u_p|^3,
                 A_nm = -2 / |u_n - u_m|^3,
    transverse:  B_nn = (omega_x/omega_z)^2 - sum_{p != n} 1/|u_n - u_p|^3,
                 B_nm = +1 / |u_n - u_m|^3,

whose eigenpairs give the collective mode frequencies ``omega_m`` and the
orthonormal mode matrix ``b[i, m]``.  The Lamb-Dicke parameter of ion i on
mode m for a drive with wavevector difference ``delta_k`` is

    eta[i, m] = b[i, m] * delta_k * sqrt(hbar / (2 M omega_m)).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .constants import COULOMB_COEFF, DEFAULT_DELTA_K, HBAR, YB171_MASS
from .errors import ConfigError, ConvergenceError, ZigzagInstabilityError

_EQUILIBRIUM_TOL = 1e-12
_MAX_NEWTON_STEPS = 200


@dataclass(frozen=True)
class TrapConfig:
    """Trap and laser parameters defining a physical scenario.

    Frequencies are angular (rad/s).  ``omega_x`` is the transverse
    center-of-mass frequency and must exceed ``omega_z`` (axial) for the
    chain to be linear.
    """

    n_ions: int
    omega_x: float
    omega_z: float
    ion_mass: float = YB171_MASS
    delta_k: float = DEFAULT_DELTA_K
    label: str = ""

    def __post_init__(self):
        errors = []
        if int(self.n_ions) != self.n_ions or self.n_ions < 1:
            errors.append(f"n_ions must be a positive integer, got {self.n_ions}")
        if not (self.omega_x > 0 and self.omega_z > 0):
            errors.append("omega_x and omega_z must be positive")
        elif not self.omega_x > self.omega_z:
            errors.append(
                "linear-chain regime violated: requires omega_x > omega_z "
                f"(got omega_x={self.omega_x:.6g}, omega_z={self.omega_z:.6g} rad/s)"
            )
        if not self.ion_mass > 0:
            errors.append("ion_mass must be positive")
        if not self.delta_k > 0:
            errors.append("delta_k must be positive")
        if errors:
            raise ConfigError(errors)

    @property
    def length_scale(self) -> float:
        """Coulomb length l = (e^2/(4 pi eps0 M omega_z^2))**(1/3) in meters."""
        return (COULOMB_COEFF / (self.ion_mass * self.omega_z**2)) ** (1.0 / 3.0)


@dataclass(frozen=True)
class ModeStructure:
    """Normal-mode data for one branch of a linear chain.

    positions     scaled equilibrium coordinates (units of ``length_scale``)
    mode_freqs    angular mode frequencies, CM mode first
    mode_matrix   orthonormal ``b[i, m]`` (ion i, mode m)
    lamb_dicke    ``eta[i, m]`` for the configured ``delta_k``
    branch        "transverse" or "axial"
    """

    positions: np.ndarray
    length_scale: float
    mode_freqs: np.ndarray
    mode_matrix: np.ndarray
    lamb_dicke: np.ndarray
    branch: str
    trap: TrapConfig = field(repr=False)

    @property
    def n_ions(self) -> int:
        return len(self.positions)

    @property
    def n_modes(self) -> int:
        return len(self.mode_freqs)


def scaled_potential(u: np.ndarray) -> float:
    """Dimensionless axial potential: harmonic confinement + Coulomb repulsion."""
    u = np.asarray(u, dtype=float)
    harm = 0.5 * np.sum(u**2)
    diff = np.abs(u[:, None] - u[None, :])
    iu = np.triu_indices(len(u), k=1)
    return harm + np.sum(1.0 / diff[iu])


def _scaled_force(u: np.ndarray) -> np.ndarray:
    # gradient of scaled_potential; zero at equilibrium
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    return u - np.sum(np.sign(d) / d**2, axis=1)


def _axial_stiffness(u: np.ndarray) -> np.ndarray:
    d3 = np.abs(u[:, None] - u[None, :]) ** 3
    np.fill_diagonal(d3, np.inf)
    a = -2.0 / d3
    np.fill_diagonal(a, 1.0 + 2.0 * np.sum(1.0 / d3, axis=1))
    return a


def _transverse_stiffness(u: np.ndarray, anisotropy_sq: float) -> np.ndarray:
    d3 = np.abs(u[:, None] - u[None, :]) ** 3
    np.fill_diagonal(d3, np.inf)
    b = 1.0 / d3
    np.fill_diagonal(b, anisotropy_sq - np.sum(1.0 / d3, axis=1))
    return b


def solve_equilibrium(config: TrapConfig) -> np.ndarray:
    """Scaled equilibrium positions, strictly increasing and centered.

    Damped Newton iteration on the force equations; the Jacobian of the
    force is the axial stiffness matrix.  The uniform-grid starting guess
    spans ``2 * N**0.56``, which tracks the actual chain extent closely
    enough to converge for every chain length of practical interest.
    """
    n = config.n_ions
    if n == 1:
        return np.zeros(1)
    span = 2.0 * n**0.56
    u = np.linspace(-span / 2.0, span / 2.0, n)
    force = _scaled_force(u)
    for _ in range(_MAX_NEWTON_STEPS):
        norm = np.max(np.abs(force))
        if norm < _EQUILIBRIUM_TOL:
            break
        step = np.linalg.solve(_axial_stiffness(u), -force)
        lam = 1.0
        while lam > 1e-6:
            trial = u + lam * step
            # reject steps that reorder ions or fail to reduce the residual
            if np.all(np.diff(trial) > 0):
                trial_force = _scaled_force(trial)
                if np.max(np.abs(trial_force)) < norm:
                    u, force = trial, trial_force
                    break
            lam *= 0.5
        else:
            raise ConvergenceError(
                f"equilibrium line search stalled at residual {norm:.3e}",
                residual=norm,
            )
    else:
        raise ConvergenceError(
            f"equilibrium Newton iteration did not reach {_EQUILIBRIUM_TOL:g} "
            f"within {_MAX_NEWTON_STEPS} steps (residual {np.max(np.abs(force)):.3e})",
            residual=float(np.max(np.abs(force))),
        )
    return u


def _sign_fix(vectors: np.ndarray) -> np.ndarray:
    # Deterministic orientation: largest-magnitude entry of each mode
    # vector is positive; np.argmax picks the lowest ion index on ties.
    out = vectors.copy()
    for m in range(out.shape[1]):
        col = out[:, m]
        if col[np.argmax(np.abs(col))] < 0:
            out[:, m] = -col
    return out


def mode_structure(config: TrapConfig, branch: str = "transverse") -> ModeStructure:
    """Eigenmodes of one motional branch, with Lamb-Dicke couplings.

    Transverse modes are ordered by descending frequency so the
    center-of-mass mode (at exactly ``omega_x``) comes first; axial modes
    ascend, again putting the CM mode (at ``omega_z``) first.

    Raises ``ZigzagInstabilityError`` if the transverse confinement cannot
    hold the chain linear, reporting the critical ``omega_x/omega_z``.
    """
    if branch not in ("transverse", "axial"):
        raise ConfigError(f"unknown branch {branch!r}; use 'transverse' or 'axial'")
    u = solve_equilibrium(config)
    anisotropy_sq = (config.omega_x / config.omega_z) ** 2
    if branch == "axial":
        stiffness = _axial_stiffness(u)
    else:
        stiffness = _transverse_stiffness(u, anisotropy_sq)
    evals, evecs = scipy.linalg.eigh(stiffness)
    if branch == "transverse" and evals[0] <= 0.0:
        # B = (wx/wz)^2 I - K, so lambda_min(B) <= 0 once (wx/wz)^2 <= max eig of K
        critical = float(np.sqrt(anisotropy_sq - evals[0]))
        raise ZigzagInstabilityError(
            "chain is not linear at this anisotropy: zigzag mode unstable; "
            f"requires omega_x/omega_z > {critical:.6f} "
            f"(got {np.sqrt(anisotropy_sq):.6f})",
            critical_anisotropy=critical,
        )
    if np.any(evals <= 0.0):
        raise ConfigError(
            f"{branch} stiffness matrix has a non-positive eigenvalue; chain unstable"
        )
    freqs = config.omega_z * np.sqrt(evals)
    order = np.argsort(freqs)
    if branch == "transverse":
        order = order[::-1]
    freqs = freqs[order]
    vectors = _sign_fix(evecs[:, order])
    eta = vectors * config.delta_k * np.sqrt(HBAR / (2.0 * config.ion_mass * freqs))[None, :]
    for arr in (u, freqs, vectors, eta):
        arr.setflags(write=False)
    return ModeStructure(
        positions=u,
        length_scale=config.length_scale,
        mode_freqs=freqs,
        mode_matrix=vectors,
        lamb_dicke=eta,
        branch=branch,
        trap=config,
    )


@dataclass(frozen=True)
class GateTimeAdvisory:
    """Informative lower bounds on entangling-gate durations.

    Single-mode gates must run slow compared to the inverse spectral
    splitting of the motional branch they use.  The splitting itself
    shrinks with chain length because the chain must stay linear, which is
    captured by the crowding floors (the ``N**0.86`` / ``N**1.72`` growth).
    Purely advisory: nothing in the design pipeline branches on it.
    """

    axial_splitting_floor_s: float
    axial_crowding_floor_s: float
    transverse_splitting_floor_s: float
    transverse_crowding_floor_s: float

    def as_dict(self) -> dict:
        return {
            "axial_splitting_floor_s": self.axial_splitting_floor_s,
            "axial_crowding_floor_s": self.axial_crowding_floor_s,
            "transverse_splitting_floor_s": self.transverse_splitting_floor_s,
            "transverse_crowding_floor_s": self.transverse_crowding_floor_s,
        }


def scaling_advisory(config: TrapConfig) -> GateTimeAdvisory:
    """Gate-time floors for single-mode operation on each branch."""
    n = config.n_ions
    return GateTimeAdvisory(
        axial_splitting_floor_s=1.0 / config.omega_z,
        axial_crowding_floor_s=n**0.86 / config.omega_x,
        transverse_splitting_floor_s=config.omega_x / config.omega_z**2,
        transverse_crowding_floor_s=n**1.72 / config.omega_x,
    )


def mode_table_csv(modes: ModeStructure) -> str:
    """Render the mode structure as CSV.

    Columns: mode_index, freq_hz, b_1..b_N, eta_1..eta_N.
    """
    n = modes.n_ions
    buf = io.StringIO()
    cols = ["mode_index", "freq_hz"]
    cols += [f"b_{i}" for i in range(1, n + 1)]
    cols += [f"eta_{i}" for i in range(1, n + 1)]
    buf.write(",".join(cols) + "\n")
    for m in range(modes.n_modes):
        row = [str(m + 1), repr(float(modes.mode_freqs[m]) / (2.0 * np.pi))]
        row += [repr(float(x)) for x in modes.mode_matrix[:, m]]
        row += [repr(float(x)) for x in modes.lamb_dicke[:, m]]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()
