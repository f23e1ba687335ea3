"""Physical constants and default laser geometry (SI units)."""

import math

HBAR = 1.054571817e-34  # J s
ELEMENTARY_CHARGE = 1.602176634e-19  # C
EPSILON_0 = 8.8541878128e-12  # F/m

# e^2 / (4 pi eps0), the Coulomb coupling constant in J m
COULOMB_COEFF = ELEMENTARY_CHARGE**2 / (4.0 * math.pi * EPSILON_0)

ATOMIC_MASS_UNIT = 1.66053906660e-27  # kg
YB171_MASS = 170.936323 * ATOMIC_MASS_UNIT  # kg, 171Yb+

# Counter-propagating Raman beams at right angles from a 355 nm source:
# |k1 - k2| = sqrt(2) * (2 pi / lambda).
RAMAN_WAVELENGTH = 355e-9  # m
DEFAULT_DELTA_K = math.sqrt(2.0) * 2.0 * math.pi / RAMAN_WAVELENGTH  # 1/m
