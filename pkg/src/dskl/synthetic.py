"""Synthetic regression problems with exactly known spectral structure.

Eigenvalues follow the polynomial decay i**(-1/gamma), the regression
function is built as f* = R * L^zeta g with a unit-norm direction g, and
outputs are f*(x) plus gaussian noise at uniform inputs on [0, 1].  By
construction the boundedness, source and capacity assumptions all hold
with known constants, excess risk is the squared coefficient distance
to f* (Parseval), and the noise variance is the Bayes risk.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import zeta as hurwitz_zeta

from . import features as ft
from . import learner, rng
from .spectrum import SpectralOperator, verify_capacity

DEFAULT_N = 2000
DEFAULT_TAIL_TOL = 1e-8
STANDARD_LAMBDA_GRID = np.logspace(-6.0, 0.0, 61)

G_MODES = ("smooth", "single")

# point-block size for chunked basis evaluation
_CHUNK_ELEMS = 1 << 22


def capacity_constant(gamma: float) -> float:
    """Capacity constant for the pure power spectrum sigma_i = i**(-1/gamma).

    Bounding the effective-dimension sum by its integral gives
    sum_i sigma_i/(sigma_i + lam) <= (gamma*pi/sin(gamma*pi)) * lam**(-gamma)
    for every lam > 0 and any truncation, so the returned constant is a
    true capacity constant, not just a fit over a grid.
    """
    if not (0.0 < gamma < 1.0):
        raise ValueError("capacity_constant requires gamma in (0, 1)")
    return float(gamma * np.pi / np.sin(gamma * np.pi))


def source_tail_fraction(gamma: float, zeta: float, N: int, g_mode: str = "smooth") -> float:
    """Fraction of ||f*||^2 dropped by truncating the spectrum at N.

    For the smooth direction (g_i proportional to 1/i) the squared
    coefficients of the un-truncated target decay like i**(-s) with
    s = 2*zeta/gamma + 2, so the dropped fraction is a Hurwitz-zeta
    tail ratio.  The single-coordinate direction has no tail.
    """
    if g_mode == "single":
        return 0.0
    if g_mode != "smooth":
        raise ValueError(f"unknown g_mode: {g_mode!r}")
    s = 2.0 * zeta / gamma + 2.0
    return float(hurwitz_zeta(s, N + 1) / hurwitz_zeta(s, 1))


def required_truncation(
    gamma: float, zeta: float, g_mode: str = "smooth", tol: float = DEFAULT_TAIL_TOL
) -> int:
    """Smallest truncation meeting the tail tolerance (1 for 'single')."""
    if g_mode == "single":
        return 1
    s = 2.0 * zeta / gamma + 2.0
    # tail(N) ~ N**(1-s)/(s-1); invert, then refine by direct evaluation
    total = float(hurwitz_zeta(s, 1))
    n = max(1, int((total * tol * (s - 1.0)) ** (1.0 / (1.0 - s))))
    while source_tail_fraction(gamma, zeta, n, g_mode) > tol:
        n *= 2
    while n > 1 and source_tail_fraction(gamma, zeta, n - 1, g_mode) <= tol:
        n -= 1
    return n


@dataclass(frozen=True)
class SpectralProblem:
    """Regression task whose operator, source and noise are all explicit."""

    operator: SpectralOperator
    zeta: float
    R: float
    g: np.ndarray  # unit-norm source direction
    noise_std: float
    gamma_nominal: float
    c_gamma: float

    @cached_property
    def f_rho(self) -> np.ndarray:
        """Coordinates of the regression function: R * sigma**zeta * g."""
        coeffs = self.R * self.operator.eigenvalues**self.zeta * self.g
        coeffs.flags.writeable = False
        return coeffs

    @property
    def frho_norm_sq(self) -> float:
        return float(np.sum(self.f_rho**2))

    @property
    def bayes_risk(self) -> float:
        return float(self.noise_std**2)


def make_problem(
    gamma: float,
    zeta: float,
    R: float = 1.0,
    noise_std: float = 0.1,
    N: int = DEFAULT_N,
    g_mode: str = "smooth",
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> SpectralProblem:
    """Build the power-spectrum problem sigma_i = i**(-1/gamma), i <= N.

    Raises if the truncation drops more than ``tail_tol`` of the target
    mass, naming the smallest admissible N.
    """
    if not (0.0 < gamma <= 1.0):
        raise ValueError("gamma must lie in (0, 1]")
    if zeta <= 0:
        raise ValueError("zeta must be positive")
    if R <= 0:
        raise ValueError("R must be positive")
    if noise_std < 0:
        raise ValueError("noise_std must be non-negative")
    if N < 1:
        raise ValueError("N must be a positive integer")
    if g_mode not in G_MODES:
        raise ValueError(f"g_mode must be one of {G_MODES}")

    tail = source_tail_fraction(gamma, zeta, N, g_mode)
    if tail > tail_tol:
        raise ValueError(
            f"truncation N={N} drops fraction {tail:.3g} of the target mass; "
            f"need N >= {required_truncation(gamma, zeta, g_mode, tail_tol)}"
        )

    i = np.arange(1, N + 1, dtype=float)
    op = SpectralOperator(i ** (-1.0 / gamma))
    if g_mode == "single":
        g = np.zeros(N)
        g[0] = 1.0
    else:
        g = 1.0 / i
        g /= np.linalg.norm(g)
    g.flags.writeable = False
    c_gamma = op.kappa_sq if gamma == 1.0 else capacity_constant(gamma)
    problem = SpectralProblem(
        operator=op,
        zeta=zeta,
        R=R,
        g=g,
        noise_std=noise_std,
        gamma_nominal=gamma,
        c_gamma=c_gamma,
    )
    if not verify_capacity(op, gamma, c_gamma, STANDARD_LAMBDA_GRID):
        raise AssertionError("constructed problem violates its own capacity bound")
    return problem


def regression_values(problem: SpectralProblem, xs) -> np.ndarray:
    """f*(x) at the given points (chunked basis evaluation)."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    n = problem.operator.dim
    out = np.empty(xs.size)
    block = max(1, _CHUNK_ELEMS // max(1, n))
    for s in range(0, xs.size, block):
        out[s : s + block] = ft.trig_basis(xs[s : s + block], n) @ problem.f_rho
    return out


def sample(problem: SpectralProblem, n: int, seed: int):
    """n i.i.d. samples: x uniform on [0, 1], y = f*(x) + noise_std * xi.

    Stream layout: output words 1..n give the inputs, the following
    words give the gaussian noise in Box-Muller pairs.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return np.empty(0), np.empty(0)
    npairs = (n + 1) // 2
    raws = rng.raw_stream(seed, n + 2 * npairs)
    xs = rng.uniform53(raws[:n])
    z0, z1 = rng.gauss_from_raws(raws[n : n + 2 * npairs : 2], raws[n + 1 : n + 2 * npairs : 2])
    noise = np.empty(2 * npairs)
    noise[0::2] = z0
    noise[1::2] = z1
    ys = regression_values(problem, xs) + problem.noise_std * noise[:n]
    return xs, ys


def excess_risk_exact(f, problem: SpectralProblem) -> float:
    """||f - f*||^2 in the operator's basis (exact by Parseval)."""
    f = np.asarray(f, dtype=float)
    if f.shape != problem.f_rho.shape:
        raise ValueError(
            f"coefficient length {f.shape} does not match problem dimension "
            f"{problem.f_rho.shape}"
        )
    return float(np.sum((f - problem.f_rho) ** 2))


def excess_risk_mc(model: learner.Model, problem: SpectralProblem, m: int, seed: int):
    """Monte-Carlo excess risk: mean of (f(x) - f*(x))**2 over fresh inputs.

    Comparing against f* rather than noisy outputs removes the noise
    variance from the estimator.  Returns (estimate, standard error).
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    xs = rng.uniforms(seed, m)
    preds = learner.predict_many(model, xs)
    sq = (preds - regression_values(problem, xs)) ** 2
    est = float(np.mean(sq))
    se = float(np.std(sq, ddof=1) / np.sqrt(m))
    return est, se


def project_to_basis(model: learner.Model, problem: SpectralProblem) -> np.ndarray:
    """Exact basis coordinates of a spectral-feature model.

    Each feature is a scaled basis function, so coordinate i is
    scale * sqrt(trace) * sum of the coefficients whose feature drew
    basis position i.
    """
    spec = model.feature_spec
    if not isinstance(spec, ft.SpectralFeatures):
        raise ValueError("projection requires the spectral feature map (use excess_risk_mc)")
    if not np.array_equal(spec.operator.eigenvalues, problem.operator.eigenvalues):
        raise ValueError("model feature map and problem use different operators")
    n = problem.operator.dim
    if model.steps_taken == 0:
        return np.zeros(n)
    handles = ft.replay_handles(spec, model.master_seed, model.steps_taken)
    sums = np.bincount(handles.indices, weights=model.coefficients, minlength=n)
    return model.scale * spec._scale * sums
