"""Step-size and regularization schedules with their feasibility checks.

A schedule is eta_t = eta1 * t**(-theta) for t in [1, horizon_T] plus a
fixed regularization weight.  The preset constructors reproduce the
closed-form constants under which the convergence guarantees hold; the
``validate`` diagnostic re-checks the governing step-size inequality
numerically (brute-force maximization over the horizon instead of its
analytic relaxations).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ScheduleError(ValueError):
    """Raised when a preset's parameters fall outside its valid domain."""


@dataclass(frozen=True)
class Schedule:
    eta1: float
    theta: float
    horizon_T: int
    lam: float = 0.0
    provenance: str = "custom"

    def __post_init__(self):
        if self.eta1 <= 0:
            raise ScheduleError("eta1 must be positive")
        if not (0.0 <= self.theta < 1.0):
            raise ScheduleError("theta must lie in [0, 1)")
        if self.horizon_T < 1:
            raise ScheduleError("horizon_T must be a positive integer")
        if self.lam < 0:
            raise ScheduleError("lam must be non-negative")

    def step_size(self, t: int) -> float:
        if not (1 <= t <= self.horizon_T):
            raise ScheduleError(f"step index {t} outside [1, {self.horizon_T}]")
        return self.eta1 * float(t) ** (-self.theta)

    def eta_array(self, upto: int | None = None) -> np.ndarray:
        """Step sizes for steps 1..upto (default: the full horizon)."""
        n = self.horizon_T if upto is None else upto
        if not (0 <= n <= self.horizon_T):
            raise ScheduleError(f"range end {n} outside [0, {self.horizon_T}]")
        return self.eta1 * np.arange(1, n + 1, dtype=float) ** (-self.theta)

    def to_dict(self) -> dict:
        return {
            "eta1": self.eta1,
            "theta": self.theta,
            "horizon_T": self.horizon_T,
            "lambda": self.lam,
            "provenance": self.provenance,
        }

    @staticmethod
    def from_dict(data: dict) -> "Schedule":
        return Schedule(
            eta1=float(data["eta1"]),
            theta=float(data["theta"]),
            horizon_T=int(data["horizon_T"]),
            lam=float(data.get("lambda", 0.0)),
            provenance=str(data.get("provenance", "custom")),
        )


@dataclass(frozen=True)
class ScheduleDiagnostics:
    """Outcome of the step-size feasibility check (never an exception)."""

    passes: bool
    condition: str  # "constant-step" (theta == 0) or "decaying-step"
    lhs: float
    rhs: float
    slack: float
    c_theta_gamma: float | None
    horizon_T: int


def c_theta_gamma(theta: float, gamma: float, T: int) -> float:
    """max over t in [1, T] of t**(gamma - theta*(gamma+1) + (2*theta-1)_+) * ln(2t)."""
    t = np.arange(1, T + 1, dtype=float)
    expo = gamma - theta * (gamma + 1.0) + max(2.0 * theta - 1.0, 0.0)
    return float(np.max(t**expo * np.log(2.0 * t)))


def validate(s: Schedule, gamma: float, c_gamma: float, kappa_sq: float) -> ScheduleDiagnostics:
    """Check the step-size smallness condition under the given capacity pair.

    For a constant step the condition is
    ``eta1**(gamma+1) * T**gamma * ln(2T) <= 1 / (4*kappa_sq*(c_gamma + kappa_sq))``;
    for a decaying step it is
    ``eta1 <= 1 / (4*kappa_sq*(2**(2*theta)*c_gamma + kappa_sq) * c_theta_gamma)``
    with ``c_theta_gamma`` maximized brute-force over the horizon.
    """
    T = s.horizon_T
    if s.theta == 0.0:
        lhs = s.eta1 ** (gamma + 1.0) * float(T) ** gamma * np.log(2.0 * T)
        rhs = 1.0 / (4.0 * kappa_sq * (c_gamma + kappa_sq))
        return ScheduleDiagnostics(
            passes=bool(0.0 < lhs <= rhs),
            condition="constant-step",
            lhs=float(lhs),
            rhs=float(rhs),
            slack=float(rhs - lhs),
            c_theta_gamma=None,
            horizon_T=T,
        )
    ctg = c_theta_gamma(s.theta, gamma, T)
    rhs = 1.0 / (4.0 * kappa_sq * (2.0 ** (2.0 * s.theta) * c_gamma + kappa_sq) * ctg)
    return ScheduleDiagnostics(
        passes=bool(s.eta1 <= rhs),
        condition="decaying-step",
        lhs=float(s.eta1),
        rhs=float(rhs),
        slack=float(rhs - s.eta1),
        c_theta_gamma=ctg,
        horizon_T=T,
    )


def _require_valid(s: Schedule, gamma: float, c_gamma: float, kappa_sq: float) -> Schedule:
    diag = validate(s, gamma, c_gamma, kappa_sq)
    if not diag.passes:
        raise ScheduleError(
            f"{s.provenance} preset fails its step-size condition: "
            f"lhs={diag.lhs:.6g} > rhs={diag.rhs:.6g}"
        )
    if s.eta1 * (s.lam + kappa_sq) > 1.0:
        raise ScheduleError("preset violates eta1*(lam + kappa_sq) <= 1")
    return s


def make_constant_capacity(
    zeta: float, gamma: float, c_gamma: float, kappa_sq: float, T: int
) -> Schedule:
    """Constant step tuned to the capacity pair (gamma, c_gamma).

    eta = zeta / (4*kappa_sq*(c_gamma + kappa_sq)*(zeta + 1))
          * T**(-(gamma + 2*zeta) / (gamma + 2*zeta + 1)).
    """
    if zeta <= 0:
        raise ScheduleError("zeta must be positive")
    if not (0.0 <= gamma <= 1.0):
        raise ScheduleError("gamma must lie in [0, 1]")
    if c_gamma <= 0 or kappa_sq < 1 or T < 1:
        raise ScheduleError("need c_gamma > 0, kappa_sq >= 1, T >= 1")
    expo = (gamma + 2.0 * zeta) / (gamma + 2.0 * zeta + 1.0)
    eta1 = zeta / (4.0 * kappa_sq * (c_gamma + kappa_sq) * (zeta + 1.0)) * float(T) ** (-expo)
    s = Schedule(eta1=eta1, theta=0.0, horizon_T=T, lam=0.0, provenance="constant-capacity")
    return _require_valid(s, gamma, c_gamma, kappa_sq)


def make_constant_independent(zeta: float, kappa_sq: float, T: int) -> Schedule:
    """Capacity-independent constant step (gamma = 1, c_gamma = kappa_sq)."""
    s = make_constant_capacity(zeta, 1.0, kappa_sq, kappa_sq, T)
    return Schedule(s.eta1, 0.0, T, 0.0, provenance="constant-independent")


def make_constant_rkhs(kappa_sq: float, T: int) -> Schedule:
    """Constant step for a target inside the RKHS: eta = 1/(24*kappa_sq**2*T**(2/3))."""
    s = make_constant_independent(0.5, kappa_sq, T)
    return Schedule(s.eta1, 0.0, T, 0.0, provenance="constant-rkhs")


def make_decaying(
    zeta: float, gamma: float, c_gamma: float, kappa_sq: float, T: int
) -> Schedule:
    """Decaying-step preset, branching on the source/capacity balance.

    With 2*zeta < 1 - gamma: theta = (2*zeta + gamma)/(2*zeta + gamma + 1)
    and eta1 = zeta / (3*kappa_sq*(2*c_gamma + kappa_sq)); otherwise
    theta = 1/2 and eta1 = (1 - gamma) / (6*kappa_sq*(2*c_gamma + kappa_sq)).
    """
    if zeta <= 0:
        raise ScheduleError("zeta must be positive")
    if not (0.0 <= gamma < 1.0):
        raise ScheduleError("decaying preset requires gamma in [0, 1)")
    if c_gamma <= 0 or kappa_sq < 1 or T < 1:
        raise ScheduleError("need c_gamma > 0, kappa_sq >= 1, T >= 1")
    if 2.0 * zeta < 1.0 - gamma:
        theta = (2.0 * zeta + gamma) / (2.0 * zeta + gamma + 1.0)
        eta1 = zeta / (3.0 * kappa_sq * (2.0 * c_gamma + kappa_sq))
        provenance = "decaying-balanced"
    else:
        theta = 0.5
        eta1 = (1.0 - gamma) / (6.0 * kappa_sq * (2.0 * c_gamma + kappa_sq))
        provenance = "decaying-sqrt"
    s = Schedule(eta1=eta1, theta=theta, horizon_T=T, lam=0.0, provenance=provenance)
    return _require_valid(s, gamma, c_gamma, kappa_sq)


def make_regularized(
    zeta: float, gamma: float, c_gamma: float, kappa_sq: float, T: int, epsilon: float
) -> Schedule:
    """Regularized preset: decaying step plus a horizon-dependent penalty.

    theta = (2*zeta + gamma)/(2*zeta + gamma + 1),
    eta1 = zeta / (3*kappa_sq*(3*c_gamma + kappa_sq)*(1 + zeta)),
    lam = T**(-1/(2*zeta + gamma + 1) + epsilon/(2*zeta)),
    with 0 < epsilon <= 2*zeta/(2*zeta + gamma + 1) (rates saturate past
    zeta = 1, hence the zeta <= 1 restriction).
    """
    if not (0.0 < zeta <= 1.0):
        raise ScheduleError("regularized preset requires zeta in (0, 1]")
    if not (0.0 <= gamma < 1.0):
        raise ScheduleError("regularized preset requires gamma in [0, 1)")
    if c_gamma <= 0 or kappa_sq < 1 or T < 1:
        raise ScheduleError("need c_gamma > 0, kappa_sq >= 1, T >= 1")
    eps_max = 2.0 * zeta / (2.0 * zeta + gamma + 1.0)
    if not (0.0 < epsilon <= eps_max):
        raise ScheduleError(f"epsilon must lie in (0, {eps_max:.6g}]")
    theta = (2.0 * zeta + gamma) / (2.0 * zeta + gamma + 1.0)
    eta1 = zeta / (3.0 * kappa_sq * (3.0 * c_gamma + kappa_sq) * (1.0 + zeta))
    lam = float(T) ** (-1.0 / (2.0 * zeta + gamma + 1.0) + epsilon / (2.0 * zeta))
    s = Schedule(eta1=eta1, theta=theta, horizon_T=T, lam=lam, provenance="regularized")
    return _require_valid(s, gamma, c_gamma, kappa_sq)
