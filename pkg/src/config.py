"""
Configuration and constants for the nonlocality frontier toolkit.
"""

import os

# =============================================================================
# NUMERICAL TOLERANCES
# =============================================================================
# Constructed states are exact to rounding; sampled states accumulate O(1e-14)
# error, so every check below sits well above double rounding.
TOLERANCES = {
    "hermitian": 1e-10,   # max |m - m^dagger| entrywise
    "psd": 1e-10,         # smallest eigenvalue allowed is -psd
    "trace": 1e-10,       # |Tr(rho) - 1|
    "imaginary": 1e-10,   # residue allowed on real-valued expectations
    "bloch": 1e-12,       # imaginary part of Pauli coefficients
}

# Largest matrix dimension the kernel will build (eight qubits)
MAX_DIM = 2 ** 8

# =============================================================================
# OPTIMIZER - multi-start Nelder-Mead over measurement angles
# =============================================================================
OPTIMIZER = {
    "starts": 64,
    "max_iter": 2000,
    "xatol": 1e-10,
    "fatol": 1e-10,
    "seed": 0,
    "converged_gap": 1e-9,   # polish run may move the best value by at most this
}

# Bisection on the white-noise visibility
VISIBILITY = {
    "iterations": 60,
}

# =============================================================================
# GAMES
# =============================================================================
ENUMERATION = {
    "max_parties": 4,
    "max_strategies": 1 << 20,   # per grouping
}

SIMULATION = {
    "block_size": 1 << 16,   # rounds per RNG shard
}

# =============================================================================
# FRONTIER SCANS
# =============================================================================
SCAN = {
    "starts": 8,              # optimizer starts per three-qubit sample
    "audit_fraction": 0.01,   # top share of three-qubit points re-run in Bloch mode
    "rank": None,             # Ginibre columns; None means full rank
}

OUTPUT = {
    "significant_digits": 17,
    "csv_columns": ["e_l", "s", "source", "parameter"],
}

# Sizes used by `verify all`
ACCEPTANCE = {
    "horodecki_states": 100,
    "oracle_starts": 16,      # Bloch-mode optimizer starts per oracle state
    "grid_points": 50,
    "identity_pairs": 20,
    "scan_samples_2q": 10_000,
    "scan_samples_3q": 1_000,
    "visibility_states": 1_000,
    "visibility_rank": 2,
    "bit_flip_points": 10,
    "mc_rounds": 100_000,
}


def thread_count() -> int:
    """Worker cap from NONLOCAL_THREADS (defaults to the CPU count)."""
    raw = os.getenv("NONLOCAL_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)
