"""Default numerical tolerances and sampling sizes, collected in one place."""

# coefficient magnitude below which a polynomial term is dropped
EPS_COEFF = 1e-12

# |Re nu| threshold separating saddle from center eigenvalues
EPS_SPEC = 1e-9

# small-divisor threshold for resonance decisions (float mode)
EPS_RES = 1e-9

# residual threshold for non-resonant coefficients after normalization
EPS_NF = 1e-10

# step for the 4th-order centered finite-difference stencils
FD_STEP = 1e-4

# default quadrature tolerance for the cohomological solvers
QUAD_TOL = 1e-8

# default sampling grid: [-GRID_RADIUS, GRID_RADIUS], GRID_POINTS per saddle axis
GRID_RADIUS = 0.05
GRID_POINTS = 9

# default number of quasi-random sample points for the NHIM rate constants
NHIM_SAMPLES = 10_000
