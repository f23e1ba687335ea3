"""Segmented-pulse design for multimode entangling gates in trapped-ion chains.

The package splits into:

* ``chain``     - equilibrium positions, normal modes, Lamb-Dicke couplings
* ``kernels``   - phase-space trajectories and entangling phase of a
                  piecewise-constant bichromatic drive (closed form +
                  quadrature oracle)
* ``designer``  - segment-amplitude solvers (exact, weighted, constant)
                  and robustness scans
* ``fidelity``  - analytic Bell fidelity and exact truncated-Fock
                  simulation of the gate evolution
* ``circuits``  - spin-only circuit composition and entanglement analysis
* ``config``    - configuration documents
* ``presets``   - canned end-to-end scenarios
* ``cli``       - command-line entry point
"""

from .chain import GateTimeAdvisory, ModeStructure, TrapConfig, mode_structure, scaling_advisory, solve_equilibrium
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateDetuningError,
    InfeasibleDesignError,
    IonpulseError,
    NullSpaceEmptyError,
    ZeroChiError,
    ZigzagInstabilityError,
)

__version__ = "0.1.0"

__all__ = [
    "TrapConfig",
    "ModeStructure",
    "GateTimeAdvisory",
    "solve_equilibrium",
    "mode_structure",
    "scaling_advisory",
    "IonpulseError",
    "ConfigError",
    "ZigzagInstabilityError",
    "InfeasibleDesignError",
    "NullSpaceEmptyError",
    "ZeroChiError",
    "DegenerateDetuningError",
    "ConvergenceError",
    "__version__",
]
