"""Shared qubit operator conventions.

Every module that touches spins imports its Pauli matrices and rotation
conventions from here, so basis choices are fixed in exactly one place:

* computational basis ``|0>``, ``|1>`` with ``sigma_z |0> = +|0>``;
* ``R(theta, phi) = exp[-i (theta/2) (sigma_x cos phi + sigma_y sin phi)]``;
* ``Rz(angle)   = exp[-i (angle/2) sigma_z]``;
* multi-qubit kets are qubit-major, qubit 1 most significant.
"""

import numpy as np

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

# |+x>, |-x> expressed in the computational basis, as columns.
HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)


def rotation_matrix(theta: float, phi: float) -> np.ndarray:
    """Resonant-drive rotation about the equatorial axis at azimuth ``phi``."""
    axis = np.cos(phi) * SIGMA_X + np.sin(phi) * SIGMA_Y
    return np.cos(theta / 2.0) * IDENTITY - 1.0j * np.sin(theta / 2.0) * axis


def rz_matrix(angle: float) -> np.ndarray:
    """Rotation about the z axis, ``exp[-i (angle/2) sigma_z]``."""
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def xx_matrix(angle: float) -> np.ndarray:
    """Two-qubit Ising interaction ``exp[i angle sigma_x (x) sigma_x]``."""
    xx = np.kron(SIGMA_X, SIGMA_X)
    return np.cos(angle) * np.eye(4, dtype=complex) + 1.0j * np.sin(angle) * xx


def apply_to_qubits(op: np.ndarray, targets, n_qubits: int, state: np.ndarray) -> np.ndarray:
    """Apply ``op`` (acting on ``len(targets)`` qubits) to a state vector.

    ``state`` has length ``2**n_qubits * rest`` where any trailing factor
    (e.g. motional levels) is untouched. ``targets`` are 0-based qubit
    indices ordered to match the operator's tensor factors.
    """
    targets = list(targets)
    k = len(targets)
    rest = state.size // 2**n_qubits
    psi = state.reshape((2,) * n_qubits + (rest,))
    psi = np.moveaxis(psi, targets, range(k))
    shape = psi.shape
    psi = op @ psi.reshape(2**k, -1)
    psi = np.moveaxis(psi.reshape(shape), range(k), targets)
    return psi.reshape(state.shape)
