"""Physical constants shared by every module.

All quantities are SI.  Keep this file as the single source of truth:
emitted data files stamp ``CONSTANTS_VERSION`` in their headers so a
result can be traced back to the constant set that produced it.
"""

# Version tag written into output-file headers.  Bump when any value below
# changes, never otherwise.
CONSTANTS_VERSION = "2022-SI-1"

# Boltzmann constant, J/K (exact by the 2019 SI redefinition).
K_B = 1.380649e-23

# Reduced Planck constant, J*s.
HBAR = 1.054572e-34

# Speed of light in vacuum, m/s (exact).
C_LIGHT = 2.99792458e8

# Newtonian gravitational constant, m^3 kg^-1 s^-2.
G_NEWTON = 6.674e-11

# 1 eV expressed as an angular frequency, rad/s  (e / hbar).
EV_TO_RAD_S = 1.519267e15
