"""Sandwich covariances, confidence intervals and layer-equality tests.

Row/column sandwich estimators plug the fitted factor rows and linear
predictors into curvature/score outer-product sums; the resulting
inverse-curvature sandwich sub-blocks give the covariances of latent
position rows and, through the fusion formula, of each connection-matrix
entry.  All operations are read-only over a FitResult.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2, norm

from . import families as fam
from .errors import ConditioningError, DimensionError, SupportError
from .pipeline import FitResult
from .tensor import CenteringOps, Tensor3, tucker_linpred, two_sided_center, unfold
from .tolerances import TOL


@dataclass(frozen=True)
class SandwichCov:
    """Curvature/score sandwich for one target row or column."""

    Sigma_hat: np.ndarray
    Omega_hat: np.ndarray
    sub_block: np.ndarray
    target: str
    min_eigenvalue: float


@dataclass(frozen=True)
class TestResult:
    """Outcome of one entrywise layer-difference test."""

    delta_hat: float
    se: float
    z: float
    p_value: float
    reject: bool
    alpha: float
    correction: str = "none"
    entry: tuple | None = None


@dataclass(frozen=True)
class LayerTestResult:
    """Bonferroni aggregate over all connection-matrix entries."""

    tests: tuple
    reject: bool
    rejecting_entries: tuple
    alpha: float
    t: int
    t_prime: int


def _sandwich(weights_h: np.ndarray, weights_s2: np.ndarray, rows: np.ndarray,
              sel: tuple, target: str) -> SandwichCov:
    Sigma = (rows * weights_h[:, None]).T @ rows
    Omega = (rows * weights_s2[:, None]).T @ rows
    evals, evecs = np.linalg.eigh(Sigma)
    floor = TOL["eig_floor_rel"] * max(np.trace(Sigma), 1e-300)
    if evals.min() <= floor:
        raise ConditioningError(
            f"singular curvature matrix for {target}", min_eigenvalue=float(evals.min())
        )
    Sigma_inv = (evecs / evals) @ evecs.T
    full = Sigma_inv @ Omega @ Sigma_inv
    sub = full[np.ix_(sel, sel)]
    sub = 0.5 * (sub + sub.T)
    return SandwichCov(Sigma_hat=Sigma, Omega_hat=Omega, sub_block=sub,
                       target=target, min_eigenvalue=float(evals.min()))


def _family(fit: FitResult, f: fam.FamilySpec | None) -> fam.FamilySpec:
    return fit.family if f is None else f


def sandwich_row_v(fit: FitResult, mode: int, i: int, f: fam.FamilySpec | None = None) -> SandwichCov:
    """Covariance sandwich of row i of Theta_hat (mode 1) or Phi_hat (mode 2).

    Sums over the nT fitted right-factor rows with curvature and squared-score
    weights evaluated at the fitted predictors of data row i.
    """
    f = _family(fit, f)
    pair = fit.pairs[mode - 1]
    y_row = unfold(fit.y, mode)[i]
    x_row = pair.U[i] @ pair.V.T
    w_h = fam.neg_hess(y_row, x_row, f)
    w_s2 = fam.score(y_row, x_row, f) ** 2
    sel = fit.S1_hat if mode == 1 else fit.S2_hat
    return _sandwich(w_h, w_s2, pair.V, sel, target=f"row {i} of mode-{mode} left factor")


def sandwich_col_u(fit: FitResult, mode: int, j: int, f: fam.FamilySpec | None = None) -> SandwichCov:
    """Covariance sandwich of row j of the centered right factor V_mode^c."""
    f = _family(fit, f)
    pair = fit.pairs[mode - 1]
    y_col = unfold(fit.y, mode)[:, j]
    x_col = pair.U @ pair.V[j]
    w_h = fam.neg_hess(y_col, x_col, f)
    w_s2 = fam.score(y_col, x_col, f) ** 2
    sel = fit.S1_hat if mode == 1 else fit.S2_hat
    return _sandwich(w_h, w_s2, pair.U, sel, target=f"column {j} of mode-{mode} right factor")


def ci_position(fit: FitResult, which: str, i: int, level: float,
                f: fam.FamilySpec | None = None) -> dict:
    """Marginal confidence intervals and ellipsoid radius for one latent row."""
    if not (0.0 < level <= 1.0):
        raise DimensionError(f"level must be in (0, 1], got {level}")
    mode = {"theta": 1, "phi": 2}[which]
    cov = sandwich_row_v(fit, mode, i, f)
    center = (fit.Theta_hat if mode == 1 else fit.Phi_hat)[i]
    se = np.sqrt(np.diag(cov.sub_block))
    q = norm.ppf(0.5 + level / 2.0) if level < 1.0 else np.inf
    k = len(center)
    radius = np.sqrt(chi2.ppf(level, df=k)) if level < 1.0 else np.inf
    return {
        "center": center,
        "lower": center - q * se,
        "upper": center + q * se,
        "se": se,
        "ellipsoid_radius": radius,
        "cov": cov,
        "level": level,
    }


def core_variance_matrix(fit: FitResult, t: int, f: fam.FamilySpec | None = None) -> np.ndarray:
    """All k1 x k2 plug-in variances for the layer-t connection matrix.

    Entry (i, j) is the average over nodes s of the squared mode-2 latent
    loading times the i-th diagonal of the mode-1 column sandwich at column
    s + n*t, divided by n.
    """
    f = _family(fit, f)
    cache = fit.diagnostics.setdefault("_core_var_cache", {})
    key = (t, f.kind, f.dispersion, f.clamp)
    if key in cache:
        return cache[key]
    n = fit.n
    D = np.empty((n, fit.k1))
    for s in range(n):
        cov = sandwich_col_u(fit, 1, s + n * t, f)
        D[s] = np.diag(cov.sub_block)
    sig2 = (fit.Phi_hat ** 2).T @ D / n ** 2  # (k2, k1)
    out = sig2.T
    cache[key] = out
    return out


def core_variance(fit: FitResult, i: int, j: int, t: int, f: fam.FamilySpec | None = None) -> float:
    """Plug-in asymptotic variance of the (i, j) entry of layer t's connection matrix."""
    return float(core_variance_matrix(fit, t, f)[i, j])


def diff_test(fit: FitResult, i: int, j: int, t: int, t_prime: int, alpha: float,
              f: fam.FamilySpec | None = None, correction: str = "none",
              n_comparisons: int = 1) -> TestResult:
    """Two-sided test of equality of one connection-matrix entry across two layers."""
    if t == t_prime:
        raise DimensionError("t and t_prime must differ")
    delta = float(fit.core.values[i, j, t] - fit.core.values[i, j, t_prime])
    v = core_variance(fit, i, j, t, f) + core_variance(fit, i, j, t_prime, f)
    se = float(np.sqrt(v))
    z = delta / se if se > 0 else np.inf * np.sign(delta) if delta != 0 else 0.0
    p = float(2.0 * norm.sf(abs(z)))
    alpha_eff = alpha / n_comparisons
    return TestResult(delta_hat=delta, se=se, z=float(z), p_value=p,
                      reject=bool(p < alpha_eff), alpha=alpha,
                      correction=correction, entry=(i, j, t, t_prime))


def layer_test(fit: FitResult, t: int, t_prime: int, alpha: float,
               f: fam.FamilySpec | None = None) -> LayerTestResult:
    """Bonferroni test of whole-layer equality between layers t and t_prime."""
    m = fit.k1 * fit.k2
    tests = []
    for i in range(fit.k1):
        for j in range(fit.k2):
            tests.append(diff_test(fit, i, j, t, t_prime, alpha, f,
                                   correction="bonferroni", n_comparisons=m))
    rejecting = tuple(tr.entry[:2] for tr in tests if tr.reject)
    return LayerTestResult(tests=tuple(tests), reject=bool(rejecting),
                           rejecting_entries=rejecting, alpha=alpha, t=t, t_prime=t_prime)


def changepoint_scan(fit: FitResult, alpha: float = 0.05,
                     f: fam.FamilySpec | None = None) -> list[int]:
    """Layers t (0-based) whose connection matrix differs from layer t-1."""
    if fit.T < 2:
        raise DimensionError("need at least two layers to scan")
    detected = []
    for t in range(1, fit.T):
        if layer_test(fit, t, t - 1, alpha, f).reject:
            detected.append(t)
    return detected


def gaussian_sigma0_hat(Y: Tensor3, fit: FitResult) -> float:
    """Gaussian noise variance from the centered residual tensor (mean-of-squares)."""
    if fit.family.kind != "gaussian":
        raise SupportError("noise-variance estimation applies to the gaussian family only")
    n, _, T = Y.dims
    ops = CenteringOps(n=n, T=T)
    centered = two_sided_center(unfold(Y, 1), ops)
    zero = np.zeros((n, T))
    signal = unfold(tucker_linpred(fit.core, fit.Theta_hat, fit.Phi_hat, zero, zero), 1)
    resid = centered - signal
    return float(np.mean(resid ** 2))
