"""Spin-register circuits built from XX gates and single-qubit rotations.

Gate conventions (shared with the rest of the library through ``gates``):

    XX(pair, angle) = exp[i angle sigma_x (x) sigma_x]   (maximal at pi/4)
    R(theta, phi)   = exp[-i (theta/2) (sigma_x cos phi + sigma_y sin phi)]
    Rz(angle)       = exp[-i (angle/2) sigma_z]

Circuits are lists of ops applied in list order, so a written sequence
[A, B, C] means C @ B @ A as a matrix.  Motion is assumed disentangled
after each ideal gate; the ``apply_noisy`` variant instead threads every
XX through the motional-trace channel of an imperfect designed pulse.

Two entangling gates on overlapping pairs turn |000> into the tripartite
state (|000> + i|110> + i|011> - |101>)/2, whose three conditioned pair
coherences live in the even (witness |0>) and odd (witness |1>) two-qubit
sectors.  A shared analysis phase on both pair qubits reveals the even
coherence (parity period pi); the odd coherence only shows up when one
analysis phase is scanned against the other (period 2 pi) --
``conditioned_parity`` picks the protocol from the witness value,
mirroring how the two kinds of curve are measured.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .gates import HADAMARD, apply_to_qubits, rotation_matrix, rz_matrix, xx_matrix


@dataclass(frozen=True)
class CircuitOp:
    """One circuit element: kind 'xx', 'r' or 'rz'.

    targets are 0-based qubit indices; angles in radians.  For 'xx' the
    theta field holds the two-spin phase; 'rz' uses theta as its angle.
    """

    kind: str
    targets: tuple
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.kind not in ("xx", "r", "rz"):
            raise ConfigError(f"unknown op kind {self.kind!r}")
        if self.kind == "xx":
            if len(self.targets) != 2 or self.targets[0] == self.targets[1]:
                raise ConfigError("xx needs two distinct targets")
        elif len(self.targets) < 1:
            raise ConfigError(f"{self.kind} needs at least one target")
        if len(set(self.targets)) != len(self.targets):
            raise ConfigError("duplicate targets in one op")


def xx(q1: int, q2: int, angle: float) -> CircuitOp:
    return CircuitOp("xx", (q1, q2), theta=angle)


def r(theta: float, phi: float, *targets: int) -> CircuitOp:
    return CircuitOp("r", tuple(targets), theta=theta, phi=phi)


def rz(angle: float, *targets: int) -> CircuitOp:
    return CircuitOp("rz", tuple(targets), theta=angle)


class RegisterState:
    """Pure state of n qubits (no motional factor)."""

    def __init__(self, vector, n_qubits: int | None = None):
        vector = np.asarray(vector, dtype=complex).ravel()
        if n_qubits is None:
            n_qubits = int(round(np.log2(vector.size)))
        if 2**n_qubits != vector.size:
            raise ConfigError("state length is not a power of two")
        norm = float(np.linalg.norm(vector))
        if abs(norm - 1.0) > 1e-12:
            raise ConfigError(f"register state norm {norm!r} != 1")
        self.n_qubits = n_qubits
        self.vector = vector

    @classmethod
    def computational(cls, bits: str) -> "RegisterState":
        n = len(bits)
        v = np.zeros(2**n, dtype=complex)
        v[int(bits, 2)] = 1.0
        return cls(v, n)

    def density(self) -> np.ndarray:
        return np.outer(self.vector, self.vector.conj())

    def probabilities(self) -> np.ndarray:
        return np.abs(self.vector) ** 2

    def fidelity_with(self, other) -> float:
        """Squared overlap (insensitive to global phase)."""
        o = other.vector if isinstance(other, RegisterState) else np.asarray(other)
        return float(np.abs(np.vdot(o, self.vector)) ** 2)


def _op_matrix(op: CircuitOp) -> np.ndarray:
    if op.kind == "xx":
        return xx_matrix(op.theta)
    if op.kind == "r":
        return rotation_matrix(op.theta, op.phi)
    return rz_matrix(op.theta)


def apply(circuit, initial: RegisterState) -> RegisterState:
    """Run a circuit (ideal gates) on a pure register state."""
    vec = initial.vector
    n = initial.n_qubits
    for op in circuit:
        if max(op.targets) >= n:
            raise ConfigError(f"op targets {op.targets} outside register of {n}")
        mat = _op_matrix(op)
        if op.kind == "xx":
            vec = apply_to_qubits(mat, op.targets, n, vec)
        else:
            for q in op.targets:
                vec = apply_to_qubits(mat, (q,), n, vec)
    return RegisterState(vec, n)


def tripartite_circuit(q1: int = 0, q2: int = 1, q3: int = 2, sign: int = 1):
    """Two chained XX(pi/4) gates on neighbouring pairs."""
    angle = sign * np.pi / 4.0
    return [xx(q1, q2, angle), xx(q2, q3, angle)]


def tripartite_target(n_qubits: int = 3, order=(0, 1, 2)) -> np.ndarray:
    """(|000> + i|110> + i|011> - |101>)/2 on the given qubits."""
    amps = {"000": 0.5, "110": 0.5j, "011": 0.5j, "101": -0.5}
    v = np.zeros(2**n_qubits, dtype=complex)
    for bits, amp in amps.items():
        idx = 0
        for q, b in zip(order, bits):
            idx |= int(b) << (n_qubits - 1 - q)
        v[idx] = amp
    return v


def ghz_target(n_qubits: int = 3) -> np.ndarray:
    """(|0..0> + i|1..1>)/sqrt(2)."""
    v = np.zeros(2**n_qubits, dtype=complex)
    v[0] = 1.0 / np.sqrt(2.0)
    v[-1] = 1.0j / np.sqrt(2.0)
    return v


def ghz_transform(state: RegisterState, middle: int = 1) -> RegisterState:
    """Rotate the tripartite state into the cat state (|000> + i|111>)/sqrt(2).

    A quarter-turn z rotation on the middle qubit -- realized exactly by
    the pulse sequence R(-pi/2, 0), R(pi/2, pi/2), R(pi/2, 0) -- followed
    by R(pi/2, 0) on all qubits.
    """
    if state.n_qubits < 3:
        raise ConfigError("ghz_transform needs a 3-qubit register")
    seq = [
        r(-np.pi / 2.0, 0.0, middle),
        r(np.pi / 2.0, np.pi / 2.0, middle),
        r(np.pi / 2.0, 0.0, middle),
        r(np.pi / 2.0, 0.0, *range(state.n_qubits)),
    ]
    return apply(seq, state)


# -- noisy XX gates ------------------------------------------------------


def apply_noisy(circuit, initial: RegisterState, gate_noise) -> np.ndarray:
    """Run a circuit with each XX replaced by an imperfect-gate channel.

    ``gate_noise`` maps a target pair (ordered tuple of 0-based indices)
    to ``(residual_alphas, chi_value, nbar)``: the motional displacements
    the pulse leaves behind, its accumulated two-spin phase, and the mode
    occupations.  Tracing out the motion turns the gate into elementwise
    damping/rotation of the pair's sigma_x-basis coherences (each gate
    sees fresh thermal motion).  Returns a density matrix.
    """
    from .fidelity import _BRANCH_SIGNS, _branch_overlap_matrix

    n = initial.n_qubits
    rho = initial.density()
    w2 = np.kron(HADAMARD, HADAMARD)
    prods = np.array([sa * sb for sa, sb in _BRANCH_SIGNS], dtype=float)

    def conjugate(mat, targets, rho):
        # M rho M^dag via M (M rho)^dag, exploiting hermiticity of rho
        rho = apply_to_qubits(mat, targets, n, rho)
        rho = apply_to_qubits(mat, targets, n, rho.conj().T)
        return rho.conj().T

    def schur_on_pair(weight, pair, rho):
        t = rho.reshape((2,) * (2 * n))
        src = (pair[0], pair[1], n + pair[0], n + pair[1])
        t = np.moveaxis(t, src, (0, 1, 2, 3))
        w4 = weight.reshape(2, 2, 2, 2)
        t = t * w4.reshape((2, 2, 2, 2) + (1,) * (2 * n - 4))
        t = np.moveaxis(t, (0, 1, 2, 3), src)
        return t.reshape(2**n, 2**n)

    for op in circuit:
        if max(op.targets) >= n:
            raise ConfigError(f"op targets {op.targets} outside register of {n}")
        if op.kind != "xx":
            mat = _op_matrix(op)
            for q in op.targets:
                rho = conjugate(mat, (q,), rho)
            continue
        noise = None
        if gate_noise is not None:
            noise = gate_noise.get(tuple(op.targets)) or gate_noise.get(tuple(op.targets[::-1]))
        if noise is None:
            rho = conjugate(xx_matrix(op.theta), op.targets, rho)
            continue
        alphas, chi_value, nbar = noise
        weight = np.exp(1j * chi_value * (prods[:, None] - prods[None, :]))
        weight = weight * _branch_overlap_matrix(np.asarray(alphas, complex), np.asarray(nbar))
        rho = conjugate(w2, op.targets, rho)  # H (x) H is its own inverse
        rho = schur_on_pair(weight, op.targets, rho)
        rho = conjugate(w2, op.targets, rho)
    return rho


# -- analysis ------------------------------------------------------------


@dataclass(frozen=True)
class ParityCurve:
    """Conditioned parity oscillation with its fitted period and contrast."""

    phis: np.ndarray
    parities: np.ndarray
    period: float
    contrast: float
    post_selection_probability: float
    pair: tuple
    witness: int
    witness_value: int


def fit_period(phis, values):
    """Dominant oscillation period and amplitude on a uniform 2pi grid.

    Discrete Fourier analysis; the strongest non-DC bin k gives period
    2 pi / k and contrast 2 |c_k| / n, ties broken toward lower k.  A flat
    curve reports period = inf and contrast 0.
    """
    phis = np.asarray(phis, dtype=float)
    values = np.asarray(values, dtype=float)
    n = len(phis)
    if n < 4:
        raise ConfigError("need at least 4 grid points to fit a period")
    step = phis[1] - phis[0]
    if not (np.allclose(np.diff(phis), step, rtol=0, atol=1e-9 * abs(step))
            and abs(n * step - 2.0 * np.pi) < 1e-9):
        raise ConfigError("period fitting expects a uniform grid spanning 2 pi")
    spectrum = np.fft.rfft(values)
    mags = np.abs(spectrum)
    mags[0] = 0.0
    k = int(np.argmax(mags > mags.max() * (1.0 - 1e-12))) if mags.max() > 0 else 0
    contrast = 2.0 * mags[k] / n if k > 0 else 0.0
    if k == 0 or contrast < 1e-12:
        return np.inf, float(contrast)
    return 2.0 * np.pi / k, float(contrast)


def _as_density(state) -> tuple:
    if isinstance(state, RegisterState):
        return state.density(), state.n_qubits
    rho = np.asarray(state, dtype=complex)
    n = int(round(np.log2(rho.shape[0])))
    return rho, n


def populations(state, qubits=None) -> np.ndarray:
    """Computational-basis probabilities of the chosen qubits (others traced)."""
    rho, n = _as_density(state)
    p = np.diag(rho).real.reshape((2,) * n)
    if qubits is None:
        qubits = range(n)
    keep = [int(q) for q in qubits]
    drop = tuple(q for q in range(n) if q not in keep)
    p = p.sum(axis=drop) if drop else p
    order = np.argsort(np.argsort(keep))  # p axes are in sorted(keep) order
    p = np.moveaxis(p, range(len(keep)), order)
    return p.reshape(-1)


def conditioned_parity(state, pair, witness: int, witness_value: int, phi_grid) -> ParityCurve:
    """Pair parity vs analysis phase, post-selected on a witness qubit.

    The witness qubit is projected onto |witness_value> (renormalizing;
    the post-selection probability is reported).  Analysis pulses
    R(pi/2, .) then hit the pair: for witness 0 both share the scanned
    phase phi; for witness 1 the second pair qubit's phase is held at 0
    so the scan probes the odd-sector coherence.  Parity is the
    sigma_z (x) sigma_z expectation of the pair.
    """
    rho, n = _as_density(state)
    pair = tuple(int(q) for q in pair)
    witness = int(witness)
    if len(set(pair + (witness,))) != 3:
        raise ConfigError("pair and witness must be three distinct qubits")
    if max(pair + (witness,)) >= n:
        raise ConfigError("analyzed qubits outside the register")
    if witness_value not in (0, 1):
        raise ConfigError("witness_value must be 0 or 1")
    # project the witness
    proj = np.zeros((2, 2))
    proj[witness_value, witness_value] = 1.0
    projected = apply_to_qubits(proj, (witness,), n, rho)
    projected = apply_to_qubits(proj, (witness,), n, projected.conj().T).conj().T
    prob = float(np.trace(projected).real)
    if prob < 1e-12:
        raise ConfigError(
            f"post-selection probability {prob:.3e} too small on witness "
            f"{witness}={witness_value}"
        )
    projected /= prob

    phis = np.asarray(phi_grid, dtype=float)
    idx = np.indices((2,) * n)
    signs = ((-1.0) ** (idx[pair[0]] + idx[pair[1]])).reshape(-1)
    parities = np.empty(len(phis))
    for k, phi in enumerate(phis):
        r1 = rotation_matrix(np.pi / 2.0, phi)
        r2 = r1 if witness_value == 0 else rotation_matrix(np.pi / 2.0, 0.0)
        rot = apply_to_qubits(r1, (pair[0],), n, projected)
        rot = apply_to_qubits(r2, (pair[1],), n, rot)
        rot = rot.conj().T
        rot = apply_to_qubits(r1, (pair[0],), n, rot)
        rot = apply_to_qubits(r2, (pair[1],), n, rot)
        rot = rot.conj().T
        parities[k] = float(np.real(np.sum(signs * np.diag(rot).real)))
    period, contrast = fit_period(phis, parities)
    return ParityCurve(
        phis=phis,
        parities=parities,
        period=period,
        contrast=contrast,
        post_selection_probability=prob,
        pair=pair,
        witness=witness,
        witness_value=witness_value,
    )


@dataclass(frozen=True)
class CoherenceReport:
    """Populations, six conditioned contrasts and the rebuilt fidelity."""

    populations: np.ndarray
    curves: tuple
    coherences: tuple
    fidelity: float


def coherence_report(state, triple=(0, 1, 2), n_phis: int = 96) -> CoherenceReport:
    """Full tripartite analysis against the two-gate target state.

    Runs conditioned parity for every pair of the triple and both witness
    values; each contrast, scaled by half the post-selection probability,
    estimates one coherence magnitude of the target state's density
    matrix.  Fidelity combines the four target populations with the six
    coherences (their phases taken at the target's values, as in the
    standard population-plus-contrast estimator).
    """
    triple = tuple(int(q) for q in triple)
    if len(set(triple)) != 3:
        raise ConfigError("triple must contain three distinct qubits")
    phis = np.linspace(0.0, 2.0 * np.pi, n_phis, endpoint=False)
    curves = []
    coherences = []
    for witness_pos in (2, 1, 0):
        witness = triple[witness_pos]
        pair = tuple(q for i, q in enumerate(triple) if i != witness_pos)
        for value in (0, 1):
            curve = conditioned_parity(state, pair, witness, value, phis)
            curves.append(curve)
            coherences.append(0.5 * curve.contrast * curve.post_selection_probability)
    pops = populations(state, triple)
    # target support: |000>, |110>, |011>, |101> each with weight 1/4
    support = [0b000, 0b110, 0b011, 0b101]
    pop_term = 0.25 * float(np.sum(pops[support]))
    fid = pop_term + 0.5 * float(np.sum(coherences))
    return CoherenceReport(
        populations=pops,
        curves=tuple(curves),
        coherences=tuple(coherences),
        fidelity=min(max(fid, 0.0), 1.0),
    )
