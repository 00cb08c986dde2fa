"""Constrained low-rank maximum likelihood for one unfolding mode.

Fits U (n x d) and V (nT x d) maximizing the entrywise log-likelihood of
Y approx link(U V') subject to U'U = n I, V'V diagonal with decreasing
entries, and a row-norm cap on both factors.  The solver alternates damped
row-wise Newton updates (each row is an independent concave d-dimensional
GLM), projects rows onto the norm ball, and re-normalizes to the identified
representative after every sweep; re-normalization preserves U V' exactly,
so the likelihood trace is monotone across sweeps.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import families as fam
from .errors import BoundaryWarning, ConvergenceError, DimensionError, RankDeficiencyError
from .tolerances import TOL


@dataclass(frozen=True)
class FitConfig:
    """Ranks and solver knobs for one full pipeline run.

    The unfolding ranks are tied to the latent/intercept ranks by
    d1 = k1 + k_beta + 1 and d2 = k2 + k_alpha + 1; leave d1/d2 as None to
    have them derived.
    """

    k1: int = 2
    k2: int = 2
    k_alpha: int = 1
    k_beta: int = 1
    d1: int | None = None
    d2: int | None = None
    C: float | None = None  # row-norm cap; None = 3x the spectral initializer's max row norm
    max_iters: int = 500
    tol_loglik: float = 1e-8
    newton_damping: float = 1.0
    seed: int = 0
    sign_flip: bool = False  # flip the column-sign convention (for invariance checks)

    def __post_init__(self):
        if self.d1 is None:
            object.__setattr__(self, "d1", self.k1 + self.k_beta + 1)
        if self.d2 is None:
            object.__setattr__(self, "d2", self.k2 + self.k_alpha + 1)
        if self.d1 != self.k1 + self.k_beta + 1:
            raise DimensionError(f"d1={self.d1} inconsistent with k1 + k_beta + 1 = {self.k1 + self.k_beta + 1}")
        if self.d2 != self.k2 + self.k_alpha + 1:
            raise DimensionError(f"d2={self.d2} inconsistent with k2 + k_alpha + 1 = {self.k2 + self.k_alpha + 1}")
        if not (0.0 < self.newton_damping <= 1.0):
            raise ValueError("newton_damping must be in (0, 1]")

    def to_dict(self) -> dict:
        return {
            "k1": self.k1, "k2": self.k2, "k_alpha": self.k_alpha, "k_beta": self.k_beta,
            "d1": self.d1, "d2": self.d2, "C": self.C, "max_iters": self.max_iters,
            "tol_loglik": self.tol_loglik, "newton_damping": self.newton_damping,
            "seed": self.seed, "sign_flip": self.sign_flip,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitConfig":
        known = {f_.name for f_ in cls.__dataclass_fields__.values()}
        return cls(**{k: v for k, v in d.items() if k in known})


@dataclass(frozen=True)
class FactorPair:
    """One mode's factors in the identified representative form."""

    mode: int
    U: np.ndarray
    V: np.ndarray
    converged: bool = True
    n_iters: int = 0
    loglik_trace: tuple = field(default_factory=tuple)
    boundary_hit: bool = False

    @property
    def d(self) -> int:
        return self.U.shape[1]

    def product(self) -> np.ndarray:
        return self.U @ self.V.T


def total_loglik(Yunf: np.ndarray, Z: np.ndarray, f: fam.FamilySpec) -> float:
    """Sum of per-entry log-likelihoods over the unfolded data."""
    val = float(np.sum(fam.loglik(Yunf, Z, f)))
    return val


def normalize_pair(U: np.ndarray, V: np.ndarray, sign_flip: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Rotate (U, V) to the representative with U'U = n I and V'V diagonal decreasing.

    Preserves the product U V' exactly (up to roundoff).  The remaining
    column-sign ambiguity is pinned by making the largest-magnitude entry of
    each column of the new U positive (negative when ``sign_flip``).
    """
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    n, d = U.shape
    Q, R = np.linalg.qr(U)
    if np.min(np.abs(np.diag(R))) <= 1e-12 * max(1.0, np.max(np.abs(np.diag(R)))):
        raise RankDeficiencyError("U is numerically rank deficient; cannot normalize")
    W = V @ R.T  # U V' = Q W'
    P, s, Q2t = np.linalg.svd(W, full_matrices=False)
    # U V' = Q (P diag(s) Q2t)' = (Q Q2t') diag(s) P'
    Unew = np.sqrt(n) * (Q @ Q2t.T)
    Vnew = P * (s / np.sqrt(n))
    return _sign_fix(Unew, Vnew, sign_flip)


def _transform_for_init(Yunf: np.ndarray, f: fam.FamilySpec) -> np.ndarray:
    if f.kind == "gaussian":
        return Yunf
    if f.kind == "poisson":
        return np.log(Yunf + 0.5)
    # bernoulli: +-1 coding, then scale by the local inverse link slope at 0
    return 2.0 * (2.0 * Yunf - 1.0)


def spectral_init(Yunf: np.ndarray, f: fam.FamilySpec, d: int) -> FactorPair:
    """Rank-d truncated SVD of a variance-stabilizing transform, normalized."""
    Yunf = np.asarray(Yunf, dtype=float)
    n, nT = Yunf.shape
    if d > min(n, nT):
        raise RankDeficiencyError(f"rank d={d} exceeds matrix dims {Yunf.shape}")
    M = _transform_for_init(Yunf, f)
    P, s, Qt = np.linalg.svd(M, full_matrices=False)
    if s[d - 1] <= 1e-12 * max(1.0, s[0]):
        raise RankDeficiencyError(f"transformed data has numerical rank < {d}")
    U = np.sqrt(n) * P[:, :d]
    V = Qt[:d].T * (s[:d] / np.sqrt(n))
    U, V = _sign_fix(U, V)
    return FactorPair(mode=0, U=U, V=V)


def _sign_fix(U: np.ndarray, V: np.ndarray, sign_flip: bool = False) -> tuple[np.ndarray, np.ndarray]:
    d = U.shape[1]
    signs = np.sign(U[np.argmax(np.abs(U), axis=0), np.arange(d)])
    signs[signs == 0] = 1.0
    if sign_flip:
        signs = -signs
    return U * signs, V * signs


def _rowwise_newton(Yrows: np.ndarray, Fixed: np.ndarray, Moving: np.ndarray,
                    f: fam.FamilySpec) -> np.ndarray:
    """One undamped Newton step for every row of ``Moving`` given ``Fixed``.

    ``Yrows`` is (m x s), ``Fixed`` is (s x d), ``Moving`` is (m x d); row i
    of the result maximizes (to second order) sum_s loglik(Y[i,s], m_i' fixed_s).
    """
    X = Moving @ Fixed.T
    G = fam.score(Yrows, X, f)                # m x s
    W = fam.neg_hess(Yrows, X, f)             # m x s
    grad = G @ Fixed                          # m x d
    H = np.einsum("ms,sa,sb->mab", W, Fixed, Fixed, optimize=True)
    try:
        step = np.linalg.solve(H, grad[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError:
        # near-singular curvature on some row: fall back to least squares
        step = np.stack([np.linalg.lstsq(H[i], grad[i], rcond=None)[0] for i in range(H.shape[0])])
    return step


def _project_rows(M: np.ndarray, C: float) -> tuple[np.ndarray, bool]:
    norms = np.linalg.norm(M, axis=1)
    over = norms > C
    if not np.any(over):
        return M, False
    M = M.copy()
    M[over] *= (C / norms[over])[:, None]
    return M, True


def fit_mode(Yunf: np.ndarray, f: fam.FamilySpec, d: int, cfg: FitConfig, mode: int = 1) -> FactorPair:
    """Solve the constrained mode-m maximum likelihood problem."""
    Yunf = np.asarray(Yunf, dtype=float)
    init = spectral_init(Yunf, f, d)
    U, V = init.U, init.V
    C = cfg.C
    if C is None:
        C = 3.0 * max(np.linalg.norm(U, axis=1).max(), np.linalg.norm(V, axis=1).max())
    boundary_hit = False

    ll = total_loglik(Yunf, U @ V.T, f)
    if not np.isfinite(ll):
        raise ConvergenceError("non-finite likelihood at initialization", iteration=0)
    trace = [ll]
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        ll_prev = ll
        for which in ("U", "V"):
            if which == "U":
                step = _rowwise_newton(Yunf, V, U, f)
            else:
                step = _rowwise_newton(Yunf.T, U, V, f)
            damping = cfg.newton_damping
            base = U if which == "U" else V
            ll_cur = total_loglik(Yunf, U @ V.T, f)
            for _ in range(30):
                cand = base + damping * step
                cand, hit = _project_rows(cand, C)
                Z = (cand @ V.T) if which == "U" else (U @ cand.T)
                ll_new = total_loglik(Yunf, Z, f)
                if np.isfinite(ll_new) and ll_new >= ll_cur - 1e-10 * max(1.0, abs(ll_cur)):
                    break
                damping *= 0.5
            else:
                cand, hit = base, False  # no acceptable step for this half-sweep
                ll_new = ll_cur
            if which == "U":
                U = cand
            else:
                V = cand
            boundary_hit = boundary_hit or hit
        ll = total_loglik(Yunf, U @ V.T, f)
        if not np.isfinite(ll):
            raise ConvergenceError("likelihood diverged", iteration=it)
        trace.append(ll)
        U, V = normalize_pair(U, V, sign_flip=cfg.sign_flip)
        if abs(ll - ll_prev) <= cfg.tol_loglik * max(1.0, abs(ll_prev)):
            converged = True
            break
    U, V = normalize_pair(U, V, sign_flip=cfg.sign_flip)
    if boundary_hit:
        warnings.warn("row norms hit the constraint boundary during fitting", BoundaryWarning)
    if f.kind != "gaussian" and np.max(np.abs(U @ V.T)) >= f.clamp - 1e-9:
        warnings.warn("fitted linear predictor reached the clamp boundary", BoundaryWarning)
        boundary_hit = True
    return FactorPair(mode=mode, U=U, V=V, converged=converged, n_iters=it,
                      loglik_trace=tuple(trace), boundary_hit=boundary_hit)
