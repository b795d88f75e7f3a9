"""Diagonal model of the kernel integral operator.

The operator is represented by a finite non-increasing eigenvalue
sequence over a fixed orthonormal basis of L2 on [0, 1] with the
uniform marginal (constant plus scaled sines/cosines).  Functions are
plain 1-D float arrays holding their basis coordinates, so norms are
plain euclidean norms and every operator quantity used by the error
analysis (powers, effective dimension, contraction products, traces)
is computable exactly up to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .conventions import zpow

TRIG_BASIS = "trig-unit-interval"

# column block size for the chunked contraction accumulators
_CHUNK_ELEMS = 1 << 22


@dataclass(frozen=True)
class SpectralOperator:
    """Diagonal positive operator: non-increasing eigenvalues over a basis.

    ``kappa_sq`` is the almost-sure bound on products of the associated
    random features.  For the trigonometric basis (sup |e_i| <= sqrt(2))
    it is ``2 * sum(eigenvalues)``, floored at 1 so that the standard
    boundedness assumption (kappa >= 1) holds for any scale.
    """

    eigenvalues: np.ndarray
    basis_id: str = TRIG_BASIS
    kappa_sq: float = field(init=False)

    def __post_init__(self):
        sig = np.asarray(self.eigenvalues, dtype=float).copy()
        if sig.ndim != 1 or sig.size == 0:
            raise ValueError("eigenvalues must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(sig)):
            raise ValueError("eigenvalues must be finite")
        if np.any(sig < 0):
            raise ValueError("eigenvalues must be non-negative")
        if np.any(np.diff(sig) > 0):
            raise ValueError("eigenvalues must be non-increasing")
        sig.flags.writeable = False
        object.__setattr__(self, "eigenvalues", sig)
        object.__setattr__(self, "kappa_sq", max(1.0, 2.0 * float(sig.sum())))

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def trace(self) -> float:
        return float(self.eigenvalues.sum())


def _check_coeffs(op: SpectralOperator, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (op.dim,):
        raise ValueError(
            f"coefficient length {f.shape} does not match operator dimension {op.dim}"
        )
    return f


def apply_power(op: SpectralOperator, zeta: float, f) -> np.ndarray:
    """Coordinates of ``L^zeta f``: multiply coordinate i by sigma_i**zeta.

    ``zeta`` must be >= 0; 0**0 is taken as 1, so zeta == 0 is the
    identity even on the kernel of the operator.
    """
    if zeta < 0:
        raise ValueError("zeta must be non-negative")
    f = _check_coeffs(op, f)
    return zpow(op.eigenvalues, zeta) * f


def rkhs_norm_sq(op: SpectralOperator, f) -> float:
    """Squared RKHS norm sum(f_i**2 / sigma_i); +inf off the range of L^(1/2)."""
    f = _check_coeffs(op, f)
    sig = op.eigenvalues
    out = np.zeros_like(f)
    pos = sig > 0
    out[pos] = f[pos] ** 2 / sig[pos]
    if np.any((~pos) & (f != 0)):
        return float("inf")
    return float(out.sum())


def effective_dimension(op: SpectralOperator, lam: float) -> float:
    """Degrees of freedom sum_i sigma_i / (sigma_i + lam) for lam > 0."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    sig = op.eigenvalues
    return float(np.sum(sig / (sig + lam)))


def verify_capacity(op: SpectralOperator, gamma: float, c_gamma: float, lambdas) -> bool:
    """Check effective_dimension(lam) <= c_gamma * lam**(-gamma) on a grid."""
    lams = np.asarray(lambdas, dtype=float)
    if lams.size == 0:
        raise ValueError("lambda grid must be non-empty")
    for lam in lams:
        rhs = c_gamma * lam ** (-gamma)
        if effective_dimension(op, float(lam)) > rhs * (1.0 + 1e-12):
            return False
    return True


def _check_window(op: SpectralOperator, etas: np.ndarray, lam: float, k: int, t: int):
    if lam < 0:
        raise ValueError("lam must be non-negative")
    if not (0 <= k <= t):
        raise ValueError(f"need 0 <= k <= t, got k={k}, t={t}")
    if etas.size < t:
        raise ValueError(f"need step sizes for steps 1..{t}, got {etas.size}")
    window = etas[k:t]
    if window.size and float(window.max()) * (lam + op.kappa_sq) > 1.0:
        raise ValueError(
            "step size violates eta*(lam + kappa_sq) <= 1 inside the window"
        )
    return window


def contraction_product(
    op: SpectralOperator, etas, lam: float, k: int, t: int, zeta: float = 0.0
) -> np.ndarray:
    """Diagonal of ``L^zeta * prod_{j=k+1}^{t} (I - eta_j (L + lam I))``.

    The empty window k == t gives sigma**zeta.  Factors are accumulated
    in log space (via log1p) when all of them are strictly positive,
    falling back to direct products when a factor hits zero, so long
    windows with factors near 1 do not underflow.
    """
    if zeta < 0:
        raise ValueError("zeta must be non-negative")
    etas = np.asarray(etas, dtype=float)
    window = _check_window(op, etas, lam, k, t)
    sig = op.eigenvalues
    head = zpow(sig, zeta)
    if window.size == 0:
        return head.copy() if isinstance(head, np.ndarray) else head

    c = lam + sig
    block = max(1, _CHUNK_ELEMS // max(1, sig.size))
    # all factors positive iff the largest eta never reaches 1/(lam+sigma_1)
    if float(window.max()) * float(c[0]) < 1.0:
        acc = np.zeros_like(sig)
        for start in range(0, window.size, block):
            w = window[start : start + block]
            acc += np.log1p(-np.outer(w, c)).sum(axis=0)
        return head * np.exp(acc)
    prod = np.ones_like(sig)
    for start in range(0, window.size, block):
        w = window[start : start + block]
        prod *= np.prod(1.0 - np.outer(w, c), axis=0)
    return head * prod


def contraction_trace(op: SpectralOperator, etas, lam: float, k: int, t: int) -> float:
    """Trace of ``prod_{j=k+1}^{t} (I - eta_j (L + lam I))**2 * L``."""
    p = contraction_product(op, etas, lam, k, t, zeta=0.0)
    return float(np.sum(op.eigenvalues * p * p))
