"""Exponential-family edge models: Gaussian, Poisson and Bernoulli-logistic.

Each family exposes the per-entry log-likelihood in the natural parameter x,
its first derivative (score), the negated second derivative (curvature), the
mean link, and sampling.  All functions are vectorized over numpy arrays.
Derivative evaluation clamps x to [-clamp, clamp], which keeps the curvature
bounded away from zero and prevents exp overflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, gammaln

from .errors import SupportError

KINDS = ("gaussian", "poisson", "bernoulli")

DEFAULT_CLAMP = 30.0


@dataclass(frozen=True)
class FamilySpec:
    """Edge-distribution descriptor.

    ``dispersion`` is the Gaussian noise variance; it is fixed to 1 for
    Poisson and Bernoulli.
    """

    kind: str
    dispersion: float = 1.0
    clamp: float = DEFAULT_CLAMP

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.kind != "gaussian" and self.dispersion != 1.0:
            raise ValueError(f"{self.kind} dispersion must be 1")
        if self.dispersion < 0:
            raise ValueError("dispersion must be nonnegative")
        if self.clamp <= 0:
            raise ValueError("clamp must be positive")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dispersion": self.dispersion, "clamp": self.clamp}

    @classmethod
    def from_dict(cls, d: dict) -> "FamilySpec":
        return cls(
            kind=str(d["kind"]).lower(),
            dispersion=float(d.get("dispersion", 1.0)),
            clamp=float(d.get("clamp", DEFAULT_CLAMP)),
        )


def _check_support(y, f: FamilySpec):
    y = np.asarray(y, dtype=float)
    if f.kind == "poisson":
        if np.any(y < 0) or np.any(y != np.round(y)):
            raise SupportError("poisson observations must be nonnegative integers")
    elif f.kind == "bernoulli":
        if not np.all((y == 0) | (y == 1)):
            raise SupportError("bernoulli observations must be 0 or 1")
    return y


def _clamp(x, f: FamilySpec):
    if f.kind == "gaussian":
        return np.asarray(x, dtype=float)
    return np.clip(x, -f.clamp, f.clamp)


def loglik(y, x, f: FamilySpec):
    """Per-entry log-likelihood of y at natural parameter x."""
    y = _check_support(y, f)
    x = np.asarray(x, dtype=float)
    if f.kind == "gaussian":
        s2 = f.dispersion
        return -((y - x) ** 2) / (2.0 * s2) - 0.5 * np.log(2.0 * np.pi * s2)
    if f.kind == "poisson":
        return -np.exp(x) + y * x - gammaln(y + 1.0)
    # bernoulli: y*x - log(1 + e^x), stable for either sign of x
    return y * x - (np.logaddexp(0.0, x))


def score(y, x, f: FamilySpec):
    """d loglik / dx."""
    y = _check_support(y, f)
    x = _clamp(x, f)
    if f.kind == "gaussian":
        return (y - x) / f.dispersion
    if f.kind == "poisson":
        return y - np.exp(x)
    return y - expit(x)


def neg_hess(y, x, f: FamilySpec):
    """-d^2 loglik / dx^2, strictly positive on the clamped domain."""
    x = _clamp(x, f)
    if f.kind == "gaussian":
        return np.full_like(np.asarray(x, dtype=float), 1.0 / f.dispersion)
    if f.kind == "poisson":
        return np.exp(x)
    p = expit(x)
    return p * (1.0 - p)


def mean_link(x, f: FamilySpec):
    """E[y | x]."""
    x = np.asarray(x, dtype=float)
    if f.kind == "gaussian":
        return x
    if f.kind == "poisson":
        return np.exp(x)
    return expit(x)


def sample(x, f: FamilySpec, rng: np.random.Generator):
    """Draw observations from the family at natural parameter x."""
    x = np.asarray(x, dtype=float)
    if f.kind == "gaussian":
        if f.dispersion == 0.0:
            return x.copy()
        return rng.normal(x, np.sqrt(f.dispersion))
    if f.kind == "poisson":
        return rng.poisson(np.exp(np.clip(x, None, f.clamp))).astype(float)
    return rng.binomial(1, expit(x)).astype(float)


def curvature_bounds(f: FamilySpec) -> tuple[float, float]:
    """Numerical (b_L, b_U) bounds for neg_hess on the clamped domain."""
    if f.kind == "gaussian":
        c = 1.0 / f.dispersion
        return c, c
    if f.kind == "poisson":
        return float(np.exp(-f.clamp)), float(np.exp(f.clamp))
    p = expit(f.clamp)
    return float(p * (1.0 - p)), 0.25
