"""Physical constants used throughout the package.

All numeric examples in the docs and tests are reproducible against this
single table.  Values are CODATA 2018 (SI exact where applicable).
"""

SPEED_OF_LIGHT = 299_792_458.0  # m/s (exact)
HBAR = 1.054_571_817e-34  # J s
K_B = 1.380_649e-23  # J/K (exact)
