# Copyright 2026 The HEDGE Authors.
# See LICENSE file for licensing details.

"""File containing constants to be used across the HEDGE modules."""

VERSION = "0.1.0"

# Numerical tolerances.
SYMMETRY_TOLERANCE = 1e-12
ZERO_EIGENVALUE_TOLERANCE = 1e-9
SPECTRAL_GAP_TOLERANCE = 1e-9
VAR_FLOOR = 1e-12
S_MIN_FRACTION = 1e-3

# Forward-process defaults.
DEFAULT_HORIZON = 1.0
DEFAULT_GAMMA = 12.0
DEFAULT_QUAD_POINTS = 512
MIN_QUAD_POINTS = 64
TAU_DENSITY_FLOOR = 1e-4

# Drift network defaults.
DEFAULT_CHANNELS = [1, 16, 16, 16, 1]
TIME_EMBED_DIM = 16
TIME_HIDDEN_DIM = 32
CHECKPOINT_MAGIC = b"HEDGEv2"

# Sampler defaults.
DEFAULT_STEPS = 256
DEFAULT_THRESHOLD = 0.5
SATURATION_MARGIN = 0.1

# Metrics.
MAX_SPECTRAL_K = 32
FEATURE_NAMES = [
    "density",
    "degree_mean",
    "degree_std",
    "size_mean",
    "size_std",
    "tail_mass",
    "intersection_mean",
    "intersection_max",
    "node_spectrum_mean",
    "edge_spectrum_mean",
    "node_spectrum_max",
    "edge_spectrum_max",
]

# Baselines and datasets.
ER_HG_COLUMN_ATTEMPTS = 100
DEFAULT_SWAPS_PER_INCIDENCE = 10
DEFAULT_SUBSAMPLE_RETRIES = 200
REGIME_ATTEMPTS = 200
REGIME_KINDS = ["configuration", "overlapping_blocks", "committee", "sparse_tail_overlap"]

# Files and environment.
MANIFEST_FILE = "manifest.json"
INCIDENCE_FILE_FORMAT = "{index:05d}.txt"
CHECKPOINT_FILE = "drift_net.bin"
DIFFUSION_FILE = "diffusion.json"
TRAIN_LOG_FILE = "train_log.jsonl"
TRAIN_REPORT_FILE = "train_report.json"
THREADS_ENV = "HEDGE_THREADS"

ABLATION_VARIANTS = ["two_sided", "pure_ou", "node_only", "edge_only"]
