"""Dense order-3 tensors with fixed unfolding conventions.

The mode-1 unfolding maps entry (i1, i2, i3) to row i1, column i2 + d2*i3
(0-based), i.e. layers are stacked side by side along the columns; mode-2
swaps the roles of the first two indices.  Tensors are immutable after
construction and all operations here are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError


@dataclass(frozen=True)
class Tensor3:
    """Immutable dense order-3 real tensor.

    Values are stored so that the mode-1 unfolding is a zero-copy reshape
    (mode-1 is the hot path; mode-2 pays one permuted copy).
    """

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 3:
            raise DimensionError(f"expected a 3-way array, got ndim={arr.ndim}")
        # layout (d1, d3, d2) contiguous so transpose(0, 2, 1) reshapes freely
        arr = np.ascontiguousarray(arr.transpose(0, 2, 1)).transpose(0, 2, 1)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.values.shape

    def __getitem__(self, idx):
        return self.values[idx]

    def __eq__(self, other):
        return isinstance(other, Tensor3) and np.array_equal(self.values, other.values)


def unfold(X: Tensor3, mode: int) -> np.ndarray:
    """Mode-m unfolding of a tensor into a matrix, m in {1, 2}."""
    d1, d2, d3 = X.dims
    if mode == 1:
        return X.values.transpose(0, 2, 1).reshape(d1, d2 * d3)
    if mode == 2:
        return np.ascontiguousarray(X.values.transpose(1, 2, 0)).reshape(d2, d1 * d3)
    raise DimensionError(f"mode must be 1 or 2, got {mode}")


def refold(M: np.ndarray, mode: int, dims: tuple[int, int, int]) -> Tensor3:
    """Inverse of :func:`unfold` for the given dims."""
    M = np.asarray(M, dtype=float)
    d1, d2, d3 = dims
    if mode == 1:
        if M.shape != (d1, d2 * d3):
            raise DimensionError(f"matrix {M.shape} incompatible with mode-1 refold of {dims}")
        return Tensor3(M.reshape(d1, d3, d2).transpose(0, 2, 1))
    if mode == 2:
        if M.shape != (d2, d1 * d3):
            raise DimensionError(f"matrix {M.shape} incompatible with mode-2 refold of {dims}")
        return Tensor3(M.reshape(d2, d3, d1).transpose(2, 0, 1))
    raise DimensionError(f"mode must be 1 or 2, got {mode}")


def tucker_linpred(
    S: Tensor3,
    Theta: np.ndarray,
    Phi: np.ndarray,
    alpha: np.ndarray,
    beta: np.ndarray,
) -> Tensor3:
    """Linear-predictor tensor with entries theta_i' Lambda_t phi_j + beta_it + alpha_jt.

    ``S`` has dims (k1, k2, T); ``Theta`` is n x k1, ``Phi`` is n x k2;
    ``alpha`` and ``beta`` are n x T.
    """
    k1, k2, T = S.dims
    Theta = np.asarray(Theta, dtype=float)
    Phi = np.asarray(Phi, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    n = Theta.shape[0]
    if Theta.shape != (n, k1) or Phi.shape != (n, k2):
        raise DimensionError("loading matrices do not conform with core dims")
    if alpha.shape != (n, T) or beta.shape != (n, T):
        raise DimensionError("intercept matrices must be n x T")
    core = np.einsum("ia,abt,jb->ijt", Theta, S.values, Phi, optimize=True)
    X = core + beta[:, None, :] + alpha[None, :, :]
    return Tensor3(X)


def kron_rightmul(V: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Compute V' (I_T kron B) block-wise, never materializing the Kronecker product.

    ``V`` is (n*T) x k, ``B`` is n x p; the result is k x (p*T).
    """
    V = np.asarray(V, dtype=float)
    B = np.asarray(B, dtype=float)
    n, p = B.shape
    if V.shape[0] % n != 0:
        raise DimensionError(f"V has {V.shape[0]} rows, not a multiple of n={n}")
    T = V.shape[0] // n
    k = V.shape[1]
    # block t of the result is V_t' B with V_t the t-th n-row slab of V
    blocks = np.einsum("tnk,np->tkp", V.reshape(T, n, k), B, optimize=True)
    return blocks.transpose(1, 0, 2).reshape(k, T * p)


@dataclass(frozen=True)
class CenteringOps:
    """Row/column centering defined by J_n and I_T kron J_n, applied matrix-free."""

    n: int
    T: int

    def left_center(self, M: np.ndarray) -> np.ndarray:
        """J_n M: subtract column means."""
        return M - M.mean(axis=0, keepdims=True)

    def right_center(self, M: np.ndarray) -> np.ndarray:
        """M (I_T kron J_n)': subtract within-block row means on each n-column block."""
        if M.shape[1] != self.n * self.T:
            raise DimensionError(f"expected {self.n * self.T} columns, got {M.shape[1]}")
        blocks = M.reshape(M.shape[0], self.T, self.n)
        return (blocks - blocks.mean(axis=2, keepdims=True)).reshape(M.shape)


def two_sided_center(M: np.ndarray, ops: CenteringOps) -> np.ndarray:
    """J_n M (I_T kron J_n)': annihilates both intercept subspaces."""
    M = np.asarray(M, dtype=float)
    if M.shape[0] != ops.n:
        raise DimensionError(f"expected {ops.n} rows, got {M.shape[0]}")
    return ops.right_center(ops.left_center(M))
