"""Disturbance-action control: actions, transfer matrices and truncated losses.

Time-indexed inputs use plain arrays: ``gains`` is ``(T + 1, d_u, d_x)``,
``Ms`` is ``(n, H, d_u, d_x)`` with ``Ms[tau]`` the policy parameter at time
``tau``, and ``noises`` is ``(n, d_x)``. Anything at a negative time is zero.
Truncated-loss windows are ``H + 2`` parameters ``M_{t-1-H}, ..., M_t``,
oldest first.
"""

from __future__ import annotations

import numpy as np

from .system import LtvSystem

__all__ = [
    "dac_action",
    "past_noises",
    "closed_loop",
    "closed_loop_product",
    "transfer_matrix_psi",
    "state_via_psi",
    "TruncatedLossMaps",
    "surrogate_state_y",
    "surrogate_action_v",
    "truncated_loss",
    "unary_truncated_value",
    "unary_truncated_gradient",
]


def dac_action(K: np.ndarray, M: np.ndarray, x: np.ndarray, past: np.ndarray) -> np.ndarray:
    """``u = -K x + sum_i M[i-1] w_{t-i}`` with ``past = (w_{t-1}, ..., w_{t-H})``."""
    K, M, x, past = (np.asarray(a, dtype=float) for a in (K, M, x, past))
    if M.ndim != 3 or past.shape != (M.shape[0], M.shape[2]) or K.shape != M.shape[1:]:
        raise ValueError("dimension mismatch between K, M and the noise history")
    if x.shape != (K.shape[1],):
        raise ValueError(f"state has shape {x.shape}, expected ({K.shape[1]},)")
    return -K @ x + np.einsum("kpq,kq->p", M, past)


def past_noises(noises: np.ndarray, t: int, count: int, d_x: int) -> np.ndarray:
    """``(w_{t-1}, ..., w_{t-count})`` with zeros before time zero."""
    out = np.zeros((count, d_x))
    for k in range(count):
        tau = t - 1 - k
        if tau >= 0:
            out[k] = noises[tau]
    return out


def _noise(noises, tau, d_x):
    if tau < 0:
        return np.zeros(d_x)
    if tau >= len(noises):
        raise IndexError(f"noise w_{tau} is not available")
    return noises[tau]


def _param(Ms, tau, k, shape):
    if tau < 0:
        return np.zeros(shape)
    return Ms[tau][k]


def closed_loop(sys: LtvSystem, gains: np.ndarray, tau: int) -> np.ndarray:
    """``A_tau - B_tau K_tau``; negative times reuse step zero (they only ever
    multiply zero noise or zero parameters)."""
    tau = max(tau, 0)
    return sys.A[tau] - sys.B[tau] @ gains[tau]


def closed_loop_product(sys: LtvSystem, gains: np.ndarray, t: int, n: int) -> np.ndarray:
    """``(A_t - B_t K_t)(A_{t-1} - B_{t-1} K_{t-1}) ... `` with ``n`` factors."""
    out = np.eye(sys.d_x)
    for j in range(n):
        out = out @ closed_loop(sys, gains, t - j)
    return out


def transfer_matrix_psi(sys: LtvSystem, gains, Ms, t: int, i: int, h: int) -> np.ndarray:
    """Coefficient of ``w_{t-i}`` in ``x_{t+1}`` when unrolling ``h`` steps back."""
    H = Ms.shape[1]
    if not 0 <= h <= t or not 0 <= i <= H + h:
        raise IndexError(f"need 0 <= h <= t and 0 <= i <= H + h (got t={t}, i={i}, h={h})")
    psi = closed_loop_product(sys, gains, t, i) if i <= h else np.zeros((sys.d_x, sys.d_x))
    shape = Ms.shape[2:]
    for j in range(h + 1):
        k = i - j - 1
        if 0 <= k < H:
            B = sys.B[max(t - j, 0)]
            psi = psi + closed_loop_product(sys, gains, t, j) @ B @ _param(Ms, t - j, k, shape)
    return psi


def state_via_psi(sys: LtvSystem, gains, Ms, noises, t: int, h: int, x_anchor=None) -> np.ndarray:
    """Closed form of ``x_{t+1}`` from the anchor ``x_{t-h}`` (zero by default)."""
    H = Ms.shape[1]
    if not 0 <= h <= t:
        raise IndexError("need 0 <= h <= t")
    x = np.zeros(sys.d_x)
    if x_anchor is not None:
        x = closed_loop_product(sys, gains, t, h + 1) @ np.asarray(x_anchor, dtype=float)
    for i in range(H + h + 1):
        w = _noise(noises, t - i, sys.d_x)
        if np.any(w):
            x = x + transfer_matrix_psi(sys, gains, Ms, t, i, h) @ w
    return x


class TruncatedLossMaps:
    """Affine maps from policy parameters to the surrogate state and action at ``t``.

    With ``s = t - 1``, ``Phi_j`` the product of the last ``j`` closed loops
    ending at ``s`` and ``P_j = Phi_j B_{s-j}``::

        y_t = sum_{i<=H} Phi_i w_{s-i} + sum_{j<=H} P_j sum_k M_{s-j}[k] w_{s-j-k-1}
        v_t = -K_t y_t + sum_k M_t[k] w_{t-1-k}
    """

    def __init__(self, sys: LtvSystem, gains, noises, t: int, H: int):
        s = t - 1
        dx = sys.d_x
        self.t, self.H = t, H
        self.K = np.asarray(gains[t], dtype=float)
        phis = [np.eye(dx)]
        for j in range(1, H + 2):
            phis.append(phis[-1] @ closed_loop(sys, gains, s - j + 1))
        self.phi_tail = phis[H + 1]
        self.P = np.array([phis[j] @ sys.B[max(s - j, 0)] for j in range(H + 1)])
        self.y0 = sum((phis[i] @ _noise(noises, s - i, dx) for i in range(H + 1)), np.zeros(dx))
        self.Wjk = np.array([[_noise(noises, s - j - k - 1, dx) for k in range(H)]
                             for j in range(H + 1)]).reshape(H + 1, H, dx)
        self.Wv = np.array([_noise(noises, t - 1 - k, dx) for k in range(H)]).reshape(H, dx)
        # d y / d M[k][p, q] for the unary (all slots equal) loss.
        self.J_y = np.einsum("jap,jkq->akpq", self.P, self.Wjk)

    def y_window(self, window) -> np.ndarray:
        window = np.asarray(window, dtype=float)
        if window.shape[0] != self.H + 2:
            raise ValueError(f"window must hold H + 2 = {self.H + 2} parameters")
        slots = window[self.H::-1][: self.H + 1]  # slot j is M_{t-1-j}
        return self.y0 + np.einsum("jap,jkpq,jkq->a", self.P, slots, self.Wjk)

    def v_from(self, M_t, y) -> np.ndarray:
        return -self.K @ y + np.einsum("kpq,kq->p", M_t, self.Wv)

    def v_window(self, window) -> np.ndarray:
        return self.v_from(np.asarray(window)[-1], self.y_window(window))

    def y_unary(self, M) -> np.ndarray:
        return self.y0 + np.einsum("akpq,kpq->a", self.J_y, M)

    def unary_value(self, cost, M) -> float:
        y = self.y_unary(M)
        return cost.value(self.t, y, self.v_from(M, y))

    def unary_values(self, cost, Ms) -> np.ndarray:
        """Unary truncated loss for a batch of parameters ``(n, H, d_u, d_x)``."""
        Ms = np.asarray(Ms, dtype=float)
        Y = self.y0 + np.einsum("akpq,nkpq->na", self.J_y, Ms)
        V = -Y @ self.K.T + np.einsum("nkpq,kq->np", Ms, self.Wv)
        return cost.values(self.t, Y, V)

    def unary_gradient(self, cost, M) -> np.ndarray:
        y = self.y_unary(M)
        v = self.v_from(M, y)
        gx, gu = cost.grad_x(self.t, y, v), cost.grad_u(self.t, y, v)
        return (np.einsum("a,akpq->kpq", gx - self.K.T @ gu, self.J_y)
                + np.einsum("p,kq->kpq", gu, self.Wv))


def surrogate_state_y(sys, gains, Ms_window, noises, t) -> np.ndarray:
    """State at ``t`` reached from a zero state at ``t - 1 - H`` under the window."""
    H = np.asarray(Ms_window).shape[1]
    return TruncatedLossMaps(sys, gains, noises, t, H).y_window(Ms_window)


def surrogate_action_v(sys, gains, Ms_window, noises, t) -> np.ndarray:
    H = np.asarray(Ms_window).shape[1]
    return TruncatedLossMaps(sys, gains, noises, t, H).v_window(Ms_window)


def truncated_loss(cost, sys, gains, Ms_window, noises, t) -> float:
    maps = TruncatedLossMaps(sys, gains, noises, t, np.asarray(Ms_window).shape[1])
    y = maps.y_window(Ms_window)
    return cost.value(t, y, maps.v_from(np.asarray(Ms_window)[-1], y))


def unary_truncated_value(cost, sys, gains, noises, t, M) -> float:
    M = np.asarray(M, dtype=float)
    return TruncatedLossMaps(sys, gains, noises, t, M.shape[0]).unary_value(cost, M)


def unary_truncated_gradient(cost, sys, gains, noises, t, M, feasible=None) -> np.ndarray:
    """Analytic gradient of the unary truncated loss, in the layout of ``M``."""
    M = np.asarray(M, dtype=float)
    if feasible is not None and not feasible.contains(M, 1e-9):
        raise ValueError("policy parameter is outside the feasible set")
    return TruncatedLossMaps(sys, gains, noises, t, M.shape[0]).unary_gradient(cost, M)
