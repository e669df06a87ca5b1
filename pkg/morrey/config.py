# Built-in defaults for the Morrey toolkit.
# configs/main_config.json and RunConfig files override these at run time.

# Binary grid file layout (little-endian): magic, u32 dim, u32 cells, f64 L
GRID_FILE_MAGIC = b"MRY1"
GRID_FILE_HEADER = "<4sIId"

SUPPORTED_DIMS = (1, 2, 3)
MIN_CELLS_PER_AXIS = 4

# Ball sums switch to Fourier convolution above this many cells
FAST_PATH_THRESHOLD = 2 ** 15

# Direct-summation oracle refuses grids above this many cells unless overridden
ORACLE_SIZE_GUARD = 2 ** 16

# Radius ladder ratio (2^(1/4)), so four rungs make one octave
DEFAULT_LADDER_RATIO = 2.0 ** 0.25

# Riesz self-cell rule: "ball" integrates the kernel over the equal-volume ball,
# "drop" leaves the cell out
RIESZ_SELF_CELL = "ball"

# Slack on quadrature-limited dominance checks and the exact-check tolerance
DOMINANCE_DELTA = 0.05
DOMINANCE_TOLERANCE = 1e-12

# Vanishing diagnostics
VANISHING_THRESHOLDS = {
    "vanishing_ratio": 0.1,
    "nonvanishing_ratio": 0.5,
    "min_slope": 0.1,
    "extrapolation_factor": 1024.0,
    "v0_min_cells": 16,
    "slope_span": 4,
    # far-field grading needs the grid much wider than the support of f
    "vinf_domain_ratio": 32.0,
}

# Settings file searched when MORREY_SETTINGS is not set
DEFAULT_SETTINGS_PATH = "configs/main_config.json"

# Centre and cell chunk size for brute-force loops (elements per block)
CHUNK_ELEMENTS = 2 ** 22
