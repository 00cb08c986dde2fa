"""Central registry of numerical tolerances.

All fixed tolerance constants used across the package live here so they can
be inspected or overridden in one place (e.g. from a run config).
"""

TOL = {
    # tensor algebra
    "center_idempotent": 1e-12,
    "kron_match": 1e-12,
    "intercept_annihilation": 1e-10,
    # factor solver
    "orthonormality": 1e-8,
    "gram_offdiag": 1e-8,
    "product_preservation": 1e-10,
    "loglik_rel": 1e-8,
    # column selection
    "projector_rank_rel": 1e-8,
    "selection_tie": 1e-10,
    # inference
    "eig_floor_rel": 1e-12,
}


def get(name: str) -> float:
    return TOL[name]


def override(name: str, value: float) -> None:
    if name not in TOL:
        raise KeyError(f"unknown tolerance {name!r}")
    TOL[name] = float(value)
