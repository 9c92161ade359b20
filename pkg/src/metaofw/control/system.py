"""Linear time-varying plants, noise recovery and strong-stability witnesses."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg

__all__ = [
    "LtvSystem",
    "ltv_step",
    "recover_noise",
    "StabilityError",
    "StabilityWitness",
    "strong_stability_check",
    "stability_margins",
    "lqr_gain",
    "op_norm",
]


def op_norm(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, ord=2))


class StabilityError(ValueError):
    """Raised when no diagonalizing similarity witness exists."""


@dataclass(frozen=True, eq=False)
class LtvSystem:
    """``x_{t+1} = A_t x_t + B_t u_t + w_t`` for ``t = 0..T-1``.

    ``A`` and ``B`` hold ``T + 1`` matrices each so that a gain can be computed
    for the final step ``t = T`` as well.
    """

    A: np.ndarray
    B: np.ndarray
    kappa_A: float
    kappa_B: float
    W: float

    def __post_init__(self):
        A, B = np.asarray(self.A, float), np.asarray(self.B, float)
        if A.ndim != 3 or B.ndim != 3 or A.shape[0] != B.shape[0]:
            raise ValueError("A and B must be stacks of T + 1 matrices")
        if A.shape[1] != A.shape[2] or B.shape[1] != A.shape[1]:
            raise ValueError("A_t must be d_x x d_x and B_t d_x x d_u")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        if np.max(_stack_op_norms(A)) > self.kappa_A + 1e-9:
            raise ValueError("some ||A_t||_op exceeds kappa_A")
        if np.max(_stack_op_norms(B)) > self.kappa_B + 1e-9:
            raise ValueError("some ||B_t||_op exceeds kappa_B")
        if self.W <= 0:
            raise ValueError("noise bound W must be positive")

    @classmethod
    def time_invariant(cls, A, B, T: int, W: float, kappa_A=None, kappa_B=None) -> "LtvSystem":
        A, B = np.asarray(A, float), np.asarray(B, float)
        kA = op_norm(A) if kappa_A is None else kappa_A
        kB = op_norm(B) if kappa_B is None else kappa_B
        return cls(np.broadcast_to(A, (T + 1,) + A.shape), np.broadcast_to(B, (T + 1,) + B.shape),
                   kA, kB, W)

    @property
    def T(self) -> int:
        return self.A.shape[0] - 1

    @property
    def d_x(self) -> int:
        return self.A.shape[1]

    @property
    def d_u(self) -> int:
        return self.B.shape[2]


def _stack_op_norms(S: np.ndarray) -> np.ndarray:
    if S.strides[0] == 0:  # broadcast time-invariant stack
        return np.array([op_norm(S[0])])
    return np.linalg.norm(S, ord=2, axis=(1, 2))


def _check_time(sys: LtvSystem, t: int):
    if not 0 <= t < sys.T:
        raise IndexError(f"time {t} outside the plant horizon [0, {sys.T})")


def _vec(v, n, name):
    v = np.asarray(v, dtype=float)
    if v.shape != (n,):
        raise ValueError(f"{name} has shape {v.shape}, expected ({n},)")
    return v


def ltv_step(sys: LtvSystem, t: int, x, u, w) -> np.ndarray:
    _check_time(sys, t)
    x, u, w = _vec(x, sys.d_x, "x"), _vec(u, sys.d_u, "u"), _vec(w, sys.d_x, "w")
    return sys.A[t] @ x + sys.B[t] @ u + w


def recover_noise(sys: LtvSystem, t: int, x, u, x_next) -> np.ndarray:
    _check_time(sys, t)
    x, u = _vec(x, sys.d_x, "x"), _vec(u, sys.d_u, "u")
    x_next = _vec(x_next, sys.d_x, "x_next")
    return x_next - sys.A[t] @ x - sys.B[t] @ u


class StabilityWitness(NamedTuple):
    Q: np.ndarray
    L: np.ndarray
    norm_L: float
    norm_K: float
    norm_Q: float
    norm_Qinv: float
    reconstruction_error: float


def _witness(A, B, K) -> StabilityWitness:
    closed = np.asarray(A, float) - np.asarray(B, float) @ np.asarray(K, float)
    lam, Q = np.linalg.eig(closed)
    # Defective or nearly defective closed loops have numerically singular eigenvector bases.
    if np.linalg.cond(Q) > 1e12:
        raise StabilityError("no diagonalizing witness: A - BK is (numerically) defective")
    Qinv = np.linalg.inv(Q)
    L = np.diag(lam)
    err = float(np.linalg.norm(Q @ L @ Qinv - closed))
    if err > 1e-8:
        raise StabilityError(f"no diagonalizing witness: reconstruction error {err:.3e}")
    return StabilityWitness(Q, L, float(np.max(np.abs(lam))), op_norm(K), op_norm(Q),
                            op_norm(Qinv), err)


def strong_stability_check(A, B, K, kappa: float, gamma: float):
    """Return ``(ok, witness)`` for ``(kappa, gamma)``-strong stability of ``K``.

    The witness uses the eigenvector basis of ``A - BK`` with unit columns.
    """
    w = _witness(A, B, K)
    tol = 1e-9
    ok = (w.norm_L <= 1.0 - gamma + tol and w.norm_K <= kappa + tol
          and w.norm_Q <= kappa + tol and w.norm_Qinv <= kappa + tol)
    return bool(ok), w


def stability_margins(A, B, K) -> tuple[float, float]:
    """Smallest ``kappa`` and largest ``gamma`` certified by the eigenvector witness."""
    w = _witness(A, B, K)
    return max(w.norm_K, w.norm_Q, w.norm_Qinv), 1.0 - w.norm_L


def lqr_gain(A, B, Qc: Optional[np.ndarray] = None, Rc: Optional[np.ndarray] = None) -> np.ndarray:
    """Discrete-time infinite-horizon LQR gain ``K`` (control ``u = -K x``)."""
    A, B = np.asarray(A, float), np.asarray(B, float)
    Qc = np.eye(A.shape[0]) if Qc is None else Qc
    Rc = np.eye(B.shape[1]) if Rc is None else Rc
    P = scipy.linalg.solve_discrete_are(A, B, Qc, Rc)
    return np.linalg.solve(Rc + B.T @ P @ B, B.T @ P @ A)
