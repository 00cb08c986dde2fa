"""End-to-end estimation: fit both unfoldings, center, select, fuse.

The estimator fits the two unfolding modes independently, two-sided centers
each fitted product to strip the intercept subspaces, picks the latent
columns of each left factor by projection norm onto the centered column
space, and fuses the layer connection matrices from the mode-1 right factor
and the mode-2 latent columns.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import families as fam
from .errors import RankDeficiencyError, SelectionTieWarning
from .factor import FactorPair, FitConfig, fit_mode
from .tensor import CenteringOps, Tensor3, kron_rightmul, refold, two_sided_center, unfold
from .tolerances import TOL


@dataclass(frozen=True)
class FitResult:
    """Everything the inferential layer needs from one estimation run."""

    Theta_hat: np.ndarray
    Phi_hat: np.ndarray
    core: Tensor3                 # (k1, k2, T) stack of connection matrices
    V1c: np.ndarray
    V2c: np.ndarray
    S1_hat: tuple
    S2_hat: tuple
    pairs: tuple                  # (mode-1 FactorPair, mode-2 FactorPair)
    family: fam.FamilySpec
    config: FitConfig
    y: Tensor3 = field(repr=False)
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.Theta_hat.shape[0]

    @property
    def T(self) -> int:
        return self.core.dims[2]

    @property
    def k1(self) -> int:
        return self.Theta_hat.shape[1]

    @property
    def k2(self) -> int:
        return self.Phi_hat.shape[1]

    def lambda_t(self, t: int) -> np.ndarray:
        """Connection matrix of layer t (0-based)."""
        return self.core.values[:, :, t]


def select_columns(U_hat: np.ndarray, Zc: np.ndarray, k: int, V_hat: np.ndarray) -> tuple[int, ...]:
    """Pick the k columns of U_hat aligned with the centered column space.

    Projects each column onto the k leading singular directions of ``Zc``,
    keeps the k largest projection norms, and orders the survivors so the
    corresponding Gram diagonals of ``V_hat`` are decreasing.
    """
    n, d = U_hat.shape
    if k > d:
        raise RankDeficiencyError(f"k={k} exceeds d={d}")
    P, s, _ = np.linalg.svd(Zc, full_matrices=False)
    if s[0] <= 0 or s[k - 1] <= TOL["projector_rank_rel"] * s[0]:
        raise RankDeficiencyError(f"centered product has numerical rank < k={k}")
    # the centered product carries rank-(d-k) leakage from imperfectly
    # annihilated intercept columns; restrict the projector to the k strong
    # directions so only the latent subspace discriminates
    B = P[:, :k]
    proj_norms = np.linalg.norm(B.T @ U_hat, axis=0)
    order = np.argsort(-proj_norms, kind="stable")  # ties -> smaller original index first
    chosen = order[:k]
    if k < d:
        gap = proj_norms[order[k - 1]] - proj_norms[order[k]]
        if gap <= TOL["selection_tie"] * max(1.0, proj_norms[order[0]]):
            warnings.warn(
                f"projection-norm tie at the selection boundary (gap={gap:.3e})",
                SelectionTieWarning,
            )
    gram = np.einsum("ij,ij->j", V_hat[:, chosen], V_hat[:, chosen])
    chosen = chosen[np.argsort(-gram, kind="stable")]
    return tuple(int(c) for c in chosen)


def fuse_core(V1c: np.ndarray, Phi_hat: np.ndarray, n: int, T: int) -> Tensor3:
    """Connection-matrix stack from the mode-1 fusion formula."""
    k1 = V1c.shape[1]
    k2 = Phi_hat.shape[1]
    M1S = kron_rightmul(V1c, Phi_hat) / n
    return refold(M1S, 1, (k1, k2, T))


def estimate(Y: Tensor3, f: fam.FamilySpec, cfg: FitConfig) -> FitResult:
    """Run the full unfolding-and-fusion estimation on an observation tensor."""
    n, n2, T = Y.dims
    if n != n2:
        raise RankDeficiencyError(f"expected square layers, got dims {Y.dims}")
    ops = CenteringOps(n=n, T=T)

    pairs: list[FactorPair] = []
    S_sets: list[tuple] = []
    for mode, d, k in ((1, cfg.d1, cfg.k1), (2, cfg.d2, cfg.k2)):
        Yunf = unfold(Y, mode)
        pair = fit_mode(Yunf, f, d, cfg, mode=mode)
        Zc = two_sided_center(pair.product(), ops)
        S_sets.append(select_columns(pair.U, Zc, k, pair.V))
        pairs.append(pair)

    pair1, pair2 = pairs
    S1, S2 = S_sets
    Theta_hat = pair1.U[:, list(S1)]
    Phi_hat = pair2.U[:, list(S2)]
    V1c = pair1.V[:, list(S1)]
    V2c = pair2.V[:, list(S2)]

    core = fuse_core(V1c, Phi_hat, n, T)
    # symmetric mode-2 fusion, kept as a consistency diagnostic only
    core_alt = refold(kron_rightmul(V2c, Theta_hat) / n, 2, (cfg.k1, cfg.k2, T))
    fusion_gap = float(np.max(np.abs(core.values - core_alt.values)))

    diagnostics = {
        "mode1": {"converged": pair1.converged, "n_iters": pair1.n_iters,
                  "loglik": pair1.loglik_trace[-1], "boundary_hit": pair1.boundary_hit},
        "mode2": {"converged": pair2.converged, "n_iters": pair2.n_iters,
                  "loglik": pair2.loglik_trace[-1], "boundary_hit": pair2.boundary_hit},
        "fusion_gap": fusion_gap,
    }
    return FitResult(
        Theta_hat=Theta_hat, Phi_hat=Phi_hat, core=core, V1c=V1c, V2c=V2c,
        S1_hat=S1, S2_hat=S2, pairs=(pair1, pair2), family=f, config=cfg,
        y=Y, diagnostics=diagnostics,
    )


def scree_singular_values(Y: Tensor3) -> dict[int, np.ndarray]:
    """Singular values of the two-sided-centered unfoldings, for rank diagnosis."""
    n, _, T = Y.dims
    ops = CenteringOps(n=n, T=T)
    out = {}
    for mode in (1, 2):
        Zc = two_sided_center(unfold(Y, mode), ops)
        out[mode] = np.linalg.svd(Zc, compute_uv=False)
    return out
