"""Synthetic multilayer networks with known ground truth, plus evaluation.

Parameters are generated in the identified form: orthonormal centered latent
positions (scaled by sqrt(n)), degree-factor loadings orthogonal to them,
and diagonal layer connection matrices with decreasing entries.  Alignment
against truth searches the residual column-sign ambiguity exhaustively.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from . import families as fam
from .errors import DimensionError
from .factor import FitConfig
from .pipeline import FitResult, estimate
from .tensor import Tensor3, tucker_linpred


@dataclass(frozen=True)
class ModelParams:
    """Ground-truth parameters of one synthetic instance."""

    Theta: np.ndarray
    Phi: np.ndarray
    core: Tensor3
    U_alpha: np.ndarray
    V_alpha: np.ndarray
    U_beta: np.ndarray
    V_beta: np.ndarray

    @property
    def n(self) -> int:
        return self.Theta.shape[0]

    @property
    def T(self) -> int:
        return self.core.dims[2]

    @property
    def alpha(self) -> np.ndarray:
        return self.U_alpha @ self.V_alpha.T

    @property
    def beta(self) -> np.ndarray:
        return self.U_beta @ self.V_beta.T

    def linear_predictor(self) -> Tensor3:
        return tucker_linpred(self.core, self.Theta, self.Phi, self.alpha, self.beta)


@dataclass(frozen=True)
class AlignmentResult:
    """Best column-sign match between an estimate and the truth."""

    R1: np.ndarray
    R2: np.ndarray
    delta_theta: float
    delta_phi: float
    delta_lambda: float


def _orthonormal_complement_cols(A: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Project columns of A off span(basis) and orthonormalize."""
    Q, _ = np.linalg.qr(basis)
    A = A - Q @ (Q.T @ A)
    Qa, _ = np.linalg.qr(A)
    return Qa


def gen_params(n: int, T: int, k1: int, k2: int, k_alpha: int, k_beta: int,
               rng: np.random.Generator, signal: float = 4.0,
               degree_scale: float = 1.0, diagonal_core: bool = True,
               constant_core: bool = False) -> ModelParams:
    """Draw identified parameters for one synthetic instance.

    ``signal`` scales the connection-matrix diagonals.  ``constant_core``
    repeats a single connection matrix across all layers (null instances for
    size experiments).  ``diagonal_core=False`` draws dense rectangular
    connection matrices instead (k1 may differ from k2 then).
    """
    if k1 + k_beta + 1 > n or k2 + k_alpha + 1 > n:
        raise DimensionError("ranks too large for n")
    if diagonal_core and k1 != k2:
        raise DimensionError("diagonal connection matrices require k1 == k2")
    ones = np.ones((n, 1))

    for _ in range(50):
        A = rng.standard_normal((n, k1 + k_beta))
        B = rng.standard_normal((n, k2 + k_alpha))
        A -= A.mean(axis=0, keepdims=True)
        B -= B.mean(axis=0, keepdims=True)
        Qa, _ = np.linalg.qr(A[:, :k1])
        Qb, _ = np.linalg.qr(B[:, :k2])
        Theta = np.sqrt(n) * Qa
        Phi = np.sqrt(n) * Qb
        if k_beta:
            U_beta = np.sqrt(n) * _orthonormal_complement_cols(A[:, k1:], np.hstack([ones, Theta]))
        else:
            U_beta = np.zeros((n, 0))
        if k_alpha:
            U_alpha = np.sqrt(n) * _orthonormal_complement_cols(B[:, k2:], np.hstack([ones, Phi]))
        else:
            U_alpha = np.zeros((n, 0))
        # orthogonal columns with distinct norms (left singular vectors kept
        # with their singular values, so no Gram ties among degree columns)
        def _svd_factor(k: int) -> np.ndarray:
            if not k:
                return np.zeros((T, 0))
            P, s, _ = np.linalg.svd(rng.standard_normal((T, k)), full_matrices=False)
            return degree_scale * (P * s)
        V_alpha = _svd_factor(k_alpha)
        V_beta = _svd_factor(k_beta)

        if diagonal_core:
            k = k1
            if constant_core:
                diag = np.sort(signal * np.abs(rng.standard_normal(k)))[::-1]
                lam = np.tile(diag[:, None], (1, T))
            else:
                lam = np.sort(signal * np.abs(rng.standard_normal((k, T))), axis=0)[::-1]
            core_vals = np.zeros((k1, k2, T))
            core_vals[np.arange(k), np.arange(k), :] = lam
        else:
            core_vals = signal * rng.standard_normal((k1, k2, T))
            if constant_core:
                core_vals = np.tile(core_vals[:, :, :1], (1, 1, T))
        core = Tensor3(core_vals)

        # non-degeneracy: per-column signal strengths positive, distinct, decreasing
        ok = True
        if diagonal_core:
            g1 = np.diag(np.einsum("abt,cbt->ac", core_vals, core_vals)) / T
            g2 = np.diag(np.einsum("abt,act->bc", core_vals, core_vals)) / T
            for g in (g1, g2):
                gaps = -np.diff(g)
                if g.min() <= 0 or (len(gaps) and gaps.min() <= 1e-6 * g.max()):
                    ok = False
        if ok:
            return ModelParams(Theta=Theta, Phi=Phi, core=core, U_alpha=U_alpha,
                               V_alpha=V_alpha, U_beta=U_beta, V_beta=V_beta)
    raise RuntimeError("failed to generate non-degenerate parameters after 50 attempts")


def gen_network(p: ModelParams, f: fam.FamilySpec, rng: np.random.Generator) -> Tensor3:
    """Sample an observation tensor entrywise from the edge family."""
    X = p.linear_predictor()
    return Tensor3(fam.sample(X.values, f, rng))


def row_norm_error(A: np.ndarray, B: np.ndarray) -> float:
    """Max row 2-norm of A - B (the uniform per-node metric)."""
    return float(np.max(np.linalg.norm(A - B, axis=1)))


def align_signs(fit: FitResult, truth: ModelParams) -> AlignmentResult:
    """Exhaustive sign search minimizing the joint estimation error."""
    k1 = truth.Theta.shape[1]
    k2 = truth.Phi.shape[1]
    if fit.Theta_hat.shape[1] != k1 or fit.Phi_hat.shape[1] != k2:
        raise DimensionError("rank mismatch between fit and truth")
    best = None
    for s1 in itertools.product((1.0, -1.0), repeat=k1):
        r1 = np.array(s1)
        dth = row_norm_error(fit.Theta_hat, truth.Theta * r1)
        for s2 in itertools.product((1.0, -1.0), repeat=k2):
            r2 = np.array(s2)
            dph = row_norm_error(fit.Phi_hat, truth.Phi * r2)
            aligned_core = truth.core.values * r1[:, None, None] * r2[None, :, None]
            dlam = float(np.max(np.abs(fit.core.values - aligned_core)))
            total = dth + dph + dlam
            if best is None or total < best[0]:
                best = (total, r1, r2, dth, dph, dlam)
    _, r1, r2, dth, dph, dlam = best
    return AlignmentResult(R1=r1, R2=r2, delta_theta=dth, delta_phi=dph, delta_lambda=dlam)


def coverage_experiment(scenario: str, n: int, T: int, reps: int, level: float,
                        seed: int = 0, k1: int = 2, k2: int = 2,
                        k_alpha: int = 1, k_beta: int = 1,
                        signal: float = 4.0, sigma0: float = 1.0,
                        progress: bool = False) -> dict:
    """Monte Carlo coverage of CIs for the (1,1) entries of Theta, Phi, Lambda_1.

    Each replication uses seed + rep as its stream so runs are reproducible
    and individually re-runnable.  Failed replications are recorded, not fatal.
    """
    from . import inference

    f = fam.FamilySpec(scenario, dispersion=sigma0 if scenario == "gaussian" else 1.0)
    hits = {"theta": 0, "phi": 0, "lambda": 0}
    failures = 0
    done = 0
    for rep in range(reps):
        rng = np.random.default_rng(seed + rep)
        try:
            truth = gen_params(n, T, k1, k2, k_alpha, k_beta, rng, signal=signal)
            Y = gen_network(truth, f, rng)
            cfg = FitConfig(k1=k1, k2=k2, k_alpha=k_alpha, k_beta=k_beta, seed=seed + rep)
            fit = estimate(Y, f, cfg)
            al = align_signs(fit, truth)

            ci_t = inference.ci_position(fit, "theta", 0, level)
            ci_p = inference.ci_position(fit, "phi", 0, level)
            tgt_t = (truth.Theta * al.R1)[0, 0]
            tgt_p = (truth.Phi * al.R2)[0, 0]
            if ci_t["lower"][0] <= tgt_t <= ci_t["upper"][0]:
                hits["theta"] += 1
            if ci_p["lower"][0] <= tgt_p <= ci_p["upper"][0]:
                hits["phi"] += 1

            se_l = np.sqrt(inference.core_variance(fit, 0, 0, 0))
            q = norm.ppf(0.5 + level / 2.0) if level < 1.0 else np.inf
            est_l = fit.core.values[0, 0, 0]
            tgt_l = truth.core.values[0, 0, 0] * al.R1[0] * al.R2[0]
            if abs(est_l - tgt_l) <= q * se_l:
                hits["lambda"] += 1
            done += 1
        except Exception:
            failures += 1
        if progress and (rep + 1) % 10 == 0:
            print(f"  rep {rep + 1}/{reps}", flush=True)
    cov = {k: (v / done if done else float("nan")) for k, v in hits.items()}
    se = {k: (np.sqrt(c * (1 - c) / done) if done else float("nan")) for k, c in cov.items()}
    return {"scenario": scenario, "n": n, "T": T, "reps": reps, "level": level,
            "coverage": cov, "binomial_se": se, "failures": failures, "completed": done}
