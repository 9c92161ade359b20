"""Problem constants of the DAC reduction and the control step pool."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..meta import StepPool, geometric_pool, meta_rate

__all__ = ["ControlConstants", "control_constants", "control_step_pool", "control_meta_rate"]


@dataclass(frozen=True)
class ControlConstants:
    kappa: float
    gamma: float
    kappa_B: float
    H: int
    d_u: int
    d_x: int
    W: float
    G_c: float
    beta: float
    D_bar: float
    L_f: float
    G_f: float
    D_f: float
    zeta: float
    sigma: float
    phi: float
    theta: float

    @property
    def d(self) -> int:
        return min(self.d_u, self.d_x)

    @property
    def tau(self) -> float:
        return self.kappa_B * self.kappa**3

    def truncation_bound(self) -> float:
        """Per-step gap between the true cost and the truncated loss."""
        return 2.0 * self.G_c * self.D_bar**2 * self.kappa**3 * (1.0 - self.gamma) ** (self.H + 1)

    def sufficiency_bound(self, T: int) -> float:
        """Cumulative cost gap of the DAC comparator against a linear policy."""
        return (4.0 * T * self.G_c * self.D_bar * self.W * self.H * self.kappa_B**2
                * self.kappa**6 * (1.0 - self.gamma) ** (self.H - 1) / self.gamma)

    def slot_lipschitz(self, k: int) -> float:
        """Lipschitz constant of the truncated loss in window slot ``t - k``."""
        return (3.0 * self.G_c * self.D_bar * math.sqrt(self.H) * self.tau
                * (1.0 - self.gamma) ** (k - 1) * self.W)


def control_constants(kappa, gamma, kappa_B, H, d_u, d_x, W, G_c, beta) -> ControlConstants:
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    if kappa <= 0 or kappa_B <= 0 or W <= 0 or G_c < 0 or beta < 0:
        raise ValueError("kappa, kappa_B and W must be positive; G_c and beta nonnegative")
    if H < 1 or d_u < 1 or d_x < 1:
        raise ValueError("H, d_u and d_x must be >= 1")
    contraction = kappa**2 * (1.0 - gamma) ** (H + 1)
    if contraction >= 1.0:
        raise ValueError(f"kappa^2 (1 - gamma)^(H + 1) = {contraction:.6g} must be < 1")
    tau = kappa_B * kappa**3
    D_bar = (W * kappa**3 * (1.0 + H * kappa_B * tau) / (gamma * (1.0 - contraction))
             + W * tau / gamma)
    d = min(d_u, d_x)
    L_f = 3.0 * G_c * D_bar * math.sqrt(H) * tau * W
    G_f = 3.0 * H * d**2 * G_c * W * tau / gamma
    D_f = 2.0 * math.sqrt(d) * tau / gamma
    sigma = 4.0 * beta * D_bar**2
    return ControlConstants(
        kappa=kappa, gamma=gamma, kappa_B=kappa_B, H=H, d_u=d_u, d_x=d_x, W=W, G_c=G_c,
        beta=beta, D_bar=D_bar, L_f=L_f, G_f=G_f, D_f=D_f, zeta=(H + 2) ** 2 * L_f,
        sigma=sigma, phi=sigma + 2.0 * beta * D_bar**2, theta=8.0 * beta * D_bar**2,
    )


def control_step_pool(T: int, cc: ControlConstants) -> StepPool:
    """``N = ceil(log2((2 beta D^2 T + phi) / sigma) / 2) + 1`` steps doubling from
    ``sqrt(sigma / (zeta T D_f))``, clamped at one."""
    if T < 1 or cc.sigma <= 0 or cc.zeta <= 0 or cc.D_f <= 0:
        raise ValueError("control_step_pool needs T >= 1 and positive sigma, zeta, D_f")
    n = math.ceil(0.5 * math.log2((2.0 * cc.beta * cc.D_bar**2 * T + cc.phi) / cc.sigma)) + 1
    return geometric_pool(n, math.sqrt(cc.sigma / (cc.zeta * T * cc.D_f)))


def control_meta_rate(cc: ControlConstants, T: int) -> float:
    if cc.zeta <= 0:
        raise ValueError("zeta must be positive")
    return meta_rate(cc.zeta, cc.G_f, cc.D_f, T)
