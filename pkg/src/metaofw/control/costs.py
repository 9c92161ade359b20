"""Stage costs ``c_t(x, u)``."""

from __future__ import annotations

import numpy as np

__all__ = ["QuadraticCost"]


class QuadraticCost:
    """``c_t(x, u) = q_t x'x + r_t u'u`` with weight series indexed by ``t``.

    ``beta`` and ``G_c`` are the constants with ``|c_t| <= beta D^2`` and
    ``||grad c_t|| <= G_c D`` whenever ``||x||, ||u|| <= D``.
    """

    def __init__(self, q, r):
        self.q = np.asarray(q, dtype=float)
        self.r = np.asarray(r, dtype=float)
        if self.q.shape != self.r.shape or self.q.ndim != 1:
            raise ValueError("q and r must be 1-d series of equal length")
        self.beta = float(np.max(np.abs(self.q) + np.abs(self.r)))
        self.G_c = float(2.0 * max(np.max(np.abs(self.q)), np.max(np.abs(self.r))))
        self.convex = bool(np.all(self.q >= 0) and np.all(self.r >= 0))

    @classmethod
    def constant(cls, q: float, r: float, T: int) -> "QuadraticCost":
        return cls(np.full(T + 1, q), np.full(T + 1, r))

    def value(self, t, x, u) -> float:
        return float(self.q[t] * (x @ x) + self.r[t] * (u @ u))

    def grad_x(self, t, x, u) -> np.ndarray:
        return 2.0 * self.q[t] * x

    def grad_u(self, t, x, u) -> np.ndarray:
        return 2.0 * self.r[t] * u

    def values(self, t, X, U) -> np.ndarray:
        """Row-wise values for stacked states ``X`` and inputs ``U``."""
        return self.q[t] * np.einsum("ij,ij->i", X, X) + self.r[t] * np.einsum("ij,ij->i", U, U)
