"""Numerical oracle pairing exact spectral quantities with closed-form bounds.

Every analytic inequality used by the convergence analysis becomes a
testable pair: an exact side computed in the eigenbasis of the diagonal
operator model (per-eigenvalue maxima, recurrences and literal sums)
and the closed-form upper bound it must stay below.  ``run_suite``
draws randomized admissible parameters and reports the tightest case
per inequality family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conventions import zpow
from .spectrum import (
    SpectralOperator,
    _check_coeffs,
    _check_window,
    contraction_product,
    contraction_trace,
)
from .synthetic import capacity_constant

# a passing report allows this much relative negative slack (rounding)
REL_TOL = 1e-10
_E = math.e


@dataclass(frozen=True)
class BoundReport:
    name: str
    exact: float
    bound: float
    slack: float
    passed: bool
    inputs: dict

    @staticmethod
    def make(name: str, exact: float, bound: float, inputs: dict) -> "BoundReport":
        slack = bound - exact
        tol = REL_TOL * abs(bound) + 1e-300
        return BoundReport(
            name=name,
            exact=float(exact),
            bound=float(bound),
            slack=float(slack),
            passed=bool(slack >= -tol),
            inputs=dict(inputs),
        )


def exp_poly_sup(c: float, zeta: float) -> float:
    """sup over x >= 0 of exp(-c*x) * x**zeta, equal to (zeta/(e*c))**zeta.

    Conventions: zeta == 0 gives 1 (0**0); c == 0 with zeta > 0 gives inf.
    """
    if c < 0 or zeta < 0:
        raise ValueError("c and zeta must be non-negative")
    if zeta == 0.0:
        return 1.0
    if c == 0.0:
        return float("inf")
    return float((zeta / (_E * c)) ** zeta)


# -- regularized accumulation operator: lam * sum_k eta_k Pi_{k+1}^t L^zeta --


def reg_accumulation_norm_exact(
    op: SpectralOperator, etas, lam: float, zeta: float, t: int
) -> float:
    """Exact norm of lam * sum_{k=1}^t eta_k Pi_{k+1}^t(L + lam I) L**zeta.

    Per-eigenvalue weighted sums A_i accumulate by the recurrence
    A <- A*(1 - eta_t*(lam + sigma)) + eta_t, so the whole computation
    is O(t * dim).
    """
    etas = np.asarray(etas, dtype=float)
    _check_window(op, etas, lam, 0, t)
    sig = op.eigenvalues
    c = lam + sig
    acc = np.zeros_like(sig)
    for j in range(t):
        acc = acc * (1.0 - etas[j] * c) + etas[j]
    return lam * float(np.max(zpow(sig, zeta) * acc))


def reg_accumulation_norm_bound(lam: float, zeta: float, kappa_sq: float) -> float:
    """Closed form lam**min(zeta,1) * kappa_sq**(zeta-1)_+ (zero when lam == 0)."""
    if lam == 0.0:
        return 0.0
    return float(lam ** min(zeta, 1.0) * kappa_sq ** max(zeta - 1.0, 0.0))


# -- contraction window times an operator power ------------------------------


def contraction_power_norm_exact(
    op: SpectralOperator, etas, lam: float, zeta: float, k: int, t: int
) -> float:
    """Exact norm of Pi_{k+1}^t(L + lam I) L**zeta (per-eigenvalue max)."""
    return float(np.max(contraction_product(op, etas, lam, k, t, zeta)))


def contraction_power_norm_bound(etas, lam: float, zeta: float, k: int, t: int) -> float:
    """exp(-lam * S) * (zeta/(e*S))**zeta with S the window step-size sum."""
    etas = np.asarray(etas, dtype=float)
    if not (0 <= k <= t - 1):
        raise ValueError("need 0 <= k <= t-1")
    S = float(etas[k:t].sum())
    return float(np.exp(-lam * S)) * exp_poly_sup(S, zeta)


# -- deterministic (initial) error path ---------------------------------------


def initial_error_exact(op: SpectralOperator, etas, lam: float, f_rho, t: int) -> float:
    """Exact norm of the deterministic error path after t steps.

    Coordinate i of the path is
    [prod_{j<=t}(1 - eta_j c_i) + lam * sum_k eta_k prod_{j>k}(1 - eta_j c_i)] * f_i
    with c_i = lam + sigma_i; both factors accumulate in one O(t*dim) pass.
    """
    etas = np.asarray(etas, dtype=float)
    _check_window(op, etas, lam, 0, t)
    f = _check_coeffs(op, f_rho)
    c = lam + op.eigenvalues
    prod = np.ones_like(c)
    acc = np.zeros_like(c)
    for j in range(t):
        factor = 1.0 - etas[j] * c
        acc = acc * factor + etas[j]
        prod *= factor
    mult = prod + lam * acc
    return float(np.linalg.norm(mult * f))


def initial_error_bound(
    eta1: float,
    theta: float,
    lam: float,
    zeta: float,
    R: float,
    kappa_sq: float,
    norm_frho: float,
    t: int,
) -> float:
    """Closed-form bound on the deterministic error path, capped at 2*||f*||.

    theta != 1 branch:
      R*kappa_sq**(zeta-1)_+ * lam**min(zeta,1)
      + (zeta/eta1)**zeta * R * exp(-lam*eta1*t**(1-theta)/2) * t**(zeta*(theta-1));
    theta == 1 swaps the trailing factor for t**(-eta1*lam) * ln(t+1)**(-zeta).
    """
    if eta1 <= 0 or not (0.0 <= theta <= 1.0):
        raise ValueError("need eta1 > 0 and theta in [0, 1]")
    term1 = R * kappa_sq ** max(zeta - 1.0, 0.0) * zpow(lam, min(zeta, 1.0))
    head = zpow(zeta / eta1, zeta) * R
    if theta != 1.0:
        tail = math.exp(-lam * eta1 * t ** (1.0 - theta) / 2.0) * t ** (zeta * (theta - 1.0))
    else:
        tail = t ** (-eta1 * lam) * zpow(math.log(t + 1.0), -zeta)
    return float(min(term1 + head * tail, 2.0 * norm_frho))


# -- contraction trace --------------------------------------------------------


def contraction_trace_bound(
    etas, lam: float, gamma: float, c_gamma: float, k: int, t: int
) -> float:
    """2*c_gamma * exp(-2*lam*S) * (2*e*S)**(gamma-1) with S the window sum."""
    etas = np.asarray(etas, dtype=float)
    if not (0 <= k <= t - 1):
        raise ValueError("need 0 <= k <= t-1")
    S = float(etas[k:t].sum())
    return float(2.0 * c_gamma * np.exp(-2.0 * lam * S) * (2.0 * _E * S) ** (gamma - 1.0))


# -- weighted step sums over decaying schedules --------------------------------


def step_weighted_sum_exact(c: float, gamma: float, theta: float, t: int) -> float:
    """Literal sum_{k=1}^{t-1} k**(-2 theta) exp(-c*S_k) S_k**(gamma-1).

    S_k = sum_{j=k+1}^t j**(-theta), evaluated via suffix sums.
    """
    if t < 2:
        raise ValueError("t must be at least 2")
    j = np.arange(1, t + 1, dtype=float)
    steps = j**-theta
    suffix = np.cumsum(steps[::-1])[::-1]  # suffix[k-1] = sum_{j >= k}
    S = suffix[1:]  # S[k-1] = sum_{j=k+1}^t, k = 1..t-1
    k = j[: t - 1]
    return float(np.sum(k ** (-2.0 * theta) * np.exp(-c * S) * S ** (gamma - 1.0)))


def step_weighted_sum_bound(c: float, gamma: float, theta: float, t: int) -> float:
    """2**(2 theta - gamma) t**(gamma - theta(gamma+1)) ln(2t)
    * (exp(-c t**(1-theta)/2) t**(2 theta - 1)_+ + min(1, (t**(1-theta) c)**(-gamma)))."""
    if t < 2:
        raise ValueError("t must be at least 2")
    lead = 2.0 ** (2.0 * theta - gamma) * t ** (gamma - theta * (gamma + 1.0)) * math.log(2.0 * t)
    expo = max(2.0 * theta - 1.0, 0.0)
    first = math.exp(-c * t ** (1.0 - theta) / 2.0) * t**expo
    second = min(1.0, zpow(t ** (1.0 - theta) * c, -gamma))
    return float(lead * (first + second))


# -- cumulative trace sum and its envelope -------------------------------------


def trace_sum_exact(op: SpectralOperator, etas, lam: float, t: int) -> float:
    """Exact sum_{k=1}^t eta_k**2 * trace(Pi_{k+1}^t(L + lam I)**2 L).

    One downward pass maintains the squared contraction diagonal, so the
    cost is O(t * dim) instead of O(t**2 * dim).
    """
    etas = np.asarray(etas, dtype=float)
    _check_window(op, etas, lam, 0, t)
    sig = op.eigenvalues
    c = lam + sig
    q = np.ones_like(sig)  # prod_{j=k+1}^t (1 - eta_j c)^2, starting at k = t
    total = 0.0
    for k in range(t, 0, -1):
        total += etas[k - 1] ** 2 * float(np.sum(sig * q))
        factor = 1.0 - etas[k - 1] * c
        q *= factor * factor
    return total


def f_envelope(eta1: float, theta: float, lam: float, gamma: float, t: int) -> float:
    """eta1**(gamma+1) t**(gamma - theta(gamma+1)) ln(2t)
    * (exp(-lam eta1 t**(1-theta)) t**(2 theta - 1)_+ + 1)."""
    expo = max(2.0 * theta - 1.0, 0.0)
    return float(
        eta1 ** (gamma + 1.0)
        * t ** (gamma - theta * (gamma + 1.0))
        * math.log(2.0 * t)
        * (math.exp(-lam * eta1 * t ** (1.0 - theta)) * t**expo + 1.0)
    )


def trace_sum_bound(
    eta1: float, theta: float, lam: float, gamma: float, c_gamma: float, kappa_sq: float, t: int
) -> float:
    """(2**(2 theta + gamma - 1) c_gamma + kappa_sq) * f_envelope(...)."""
    pref = 2.0 ** (2.0 * theta + gamma - 1.0) * c_gamma + kappa_sq
    return float(pref * f_envelope(eta1, theta, lam, gamma, t))


# -- randomized suite -----------------------------------------------------------

SUITE_FAMILIES = (
    "exp-poly-sup",
    "reg-accumulation-norm",
    "contraction-power-norm",
    "initial-error",
    "initial-error-cap",
    "contraction-trace",
    "step-weighted-sum",
    "trace-sum",
)


def _draw_case(rs: np.random.RandomState) -> dict:
    """One admissible parameter draw for the inequality families.

    Ranges: theta in [0, 0.9], lam in {0} union [1e-4, 1e-1],
    zeta in [0.1, 2], t in [2, 512], power spectra with gamma in
    [0.25, 0.9] and the matching integral capacity constant.
    """
    gamma = rs.uniform(0.25, 0.9)
    n = int(rs.randint(50, 401))
    i = np.arange(1, n + 1, dtype=float)
    op = SpectralOperator(i ** (-1.0 / gamma))
    theta = rs.uniform(0.0, 0.9)
    lam = 0.0 if rs.rand() < 0.5 else float(10.0 ** rs.uniform(-4, -1))
    zeta = rs.uniform(0.1, 2.0)
    t = int(rs.randint(2, 513))
    k = int(rs.randint(0, t))
    eta1 = rs.uniform(0.1, 1.0) / (lam + op.kappa_sq)
    etas = eta1 * np.arange(1, t + 1, dtype=float) ** (-theta)
    g = rs.randn(n)
    g /= np.linalg.norm(g)
    R = rs.uniform(0.5, 2.0)
    f_rho = R * op.eigenvalues**zeta * g
    return {
        "gamma": gamma,
        "c_gamma": capacity_constant(gamma),
        "op": op,
        "theta": theta,
        "lam": lam,
        "zeta": zeta,
        "t": t,
        "k": k,
        "eta1": eta1,
        "etas": etas,
        "R": R,
        "f_rho": f_rho,
    }


def _case_inputs(case: dict) -> dict:
    return {
        key: (round(val, 6) if isinstance(val, float) else val)
        for key, val in case.items()
        if key in ("gamma", "theta", "lam", "zeta", "t", "k", "eta1", "R")
    }


def _family_pair(family: str, case: dict, rs: np.random.RandomState):
    op, etas, lam = case["op"], case["etas"], case["lam"]
    zeta, t, k = case["zeta"], case["t"], case["k"]
    if family == "exp-poly-sup":
        c = float(10.0 ** rs.uniform(-3, 1))
        xs = np.linspace(0.0, 10.0 * zeta / c, 20001)
        exact = float(np.max(np.exp(-c * xs) * xs**zeta))
        return exact, exp_poly_sup(c, zeta), {"c": round(c, 6), "zeta": round(zeta, 6)}
    if family == "reg-accumulation-norm":
        exact = reg_accumulation_norm_exact(op, etas, lam, zeta, t)
        return exact, reg_accumulation_norm_bound(lam, zeta, op.kappa_sq), _case_inputs(case)
    if family == "contraction-power-norm":
        kk = min(k, t - 1)
        exact = contraction_power_norm_exact(op, etas, lam, zeta, kk, t)
        return exact, contraction_power_norm_bound(etas, lam, zeta, kk, t), _case_inputs(case)
    if family == "initial-error":
        exact = initial_error_exact(op, etas, lam, case["f_rho"], t)
        norm_frho = float(np.linalg.norm(case["f_rho"]))
        bound = initial_error_bound(
            case["eta1"], case["theta"], lam, zeta, case["R"], op.kappa_sq, norm_frho, t
        )
        return exact, bound, _case_inputs(case)
    if family == "initial-error-cap":
        exact = initial_error_exact(op, etas, lam, case["f_rho"], t)
        return exact, 2.0 * float(np.linalg.norm(case["f_rho"])), _case_inputs(case)
    if family == "contraction-trace":
        kk = min(k, t - 1)
        exact = contraction_trace(op, etas, lam, kk, t)
        bound = contraction_trace_bound(etas, lam, case["gamma"], case["c_gamma"], kk, t)
        return exact, bound, _case_inputs(case)
    if family == "step-weighted-sum":
        c = 0.0 if lam == 0.0 else 2.0 * case["eta1"] * lam
        exact = step_weighted_sum_exact(c, case["gamma"], case["theta"], t)
        bound = step_weighted_sum_bound(c, case["gamma"], case["theta"], t)
        return exact, bound, _case_inputs(case)
    if family == "trace-sum":
        exact = trace_sum_exact(op, etas, lam, t)
        bound = trace_sum_bound(
            case["eta1"], case["theta"], lam, case["gamma"], case["c_gamma"], op.kappa_sq, t
        )
        return exact, bound, _case_inputs(case)
    raise ValueError(f"unknown family: {family}")


def run_suite(draws: int = 200, seed: int = 20240801, families=SUITE_FAMILIES):
    """Evaluate every inequality family on randomized draws.

    Returns one :class:`BoundReport` per family, for the draw with the
    smallest slack (the binding case); a report fails if any draw in its
    family had slack below the rounding tolerance.
    """
    reports = []
    for family in families:
        rs = np.random.RandomState(seed)
        worst = None
        all_passed = True
        for _ in range(draws):
            case = _draw_case(rs)
            exact, bound, inputs = _family_pair(family, case, rs)
            inputs["draws"] = draws
            report = BoundReport.make(family, exact, bound, inputs)
            all_passed &= report.passed
            rel = report.slack / (abs(report.bound) + 1e-300)
            if worst is None or rel < worst[0]:
                worst = (rel, report)
        final = worst[1]
        if not all_passed:
            final = BoundReport(
                final.name, final.exact, final.bound, final.slack, False, final.inputs
            )
        reports.append(final)
    return reports
