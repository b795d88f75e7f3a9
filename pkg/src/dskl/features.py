"""Random feature maps with deterministic seed replay.

A feature map realizes a kernel as an expectation of feature products:
K(x, x') equals the mean of phi_v(x) * phi_v(x') over random features
phi_v.  Two variants:

* ``GaussianRFF`` -- random Fourier features sqrt(2) cos(w.x + b) with
  w gaussian and b uniform on [0, 2*pi), realizing the Gaussian kernel
  exp(-|x - x'|^2 / (2 sigma^2)) on [0, 1]^d;
* ``SpectralFeatures`` -- basis functions of a :class:`SpectralOperator`
  drawn with probability proportional to their eigenvalues and scaled
  by sqrt(trace), realizing the diagonal-model kernel exactly.

Every feature is a pure function of (spec, 64-bit seed), so a model can
store seeds and regenerate its features instead of keeping them.
Bulk indices exposed by handles are 0-based array positions.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import rng
from .spectrum import TRIG_BASIS, SpectralOperator

TWO_PI = 2.0 * np.pi
_SQRT2 = float(np.sqrt(2.0))
_HALF_PI = 0.5 * np.pi

# point-block size for chunked grid evaluation
_CHUNK_ELEMS = 1 << 22


@dataclass(frozen=True)
class GaussianRFF:
    """Random Fourier feature map for the Gaussian kernel of bandwidth sigma."""

    sigma: float
    dim: int

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.dim < 1:
            raise ValueError("dim must be at least 1")

    @property
    def kappa_sq(self) -> float:
        # |sqrt(2) cos(.)| <= sqrt(2), so feature products are bounded by 2
        return 2.0


@dataclass(frozen=True)
class SpectralFeatures:
    """Feature map whose features are scaled basis functions of an operator.

    Drawing basis index i with probability sigma_i / trace and scaling
    by sqrt(trace) makes the feature-product expectation equal the
    diagonal-model kernel sum_i sigma_i e_i(x) e_i(x').
    """

    operator: SpectralOperator

    def __post_init__(self):
        if self.operator.basis_id != TRIG_BASIS:
            raise ValueError(f"unsupported basis: {self.operator.basis_id}")

    @property
    def kappa_sq(self) -> float:
        return self.operator.kappa_sq

    @cached_property
    def _cum_weights(self) -> np.ndarray:
        sig = self.operator.eigenvalues
        total = float(sig.sum())
        if total <= 0:
            raise ValueError("cannot sample features from an all-zero spectrum")
        return np.cumsum(sig) / total

    @cached_property
    def _scale(self) -> float:
        # sqrt(trace): eval amplitude making the sampled products unbiased
        return float(np.sqrt(self.operator.eigenvalues.sum()))


FeatureMapSpec = GaussianRFF | SpectralFeatures


@dataclass(frozen=True)
class RFFHandle:
    omega: np.ndarray
    b: float


@dataclass(frozen=True)
class SpectralHandle:
    index: int  # 0-based basis position


@dataclass(frozen=True)
class RFFHandles:
    """Realized Fourier features for a batch of seeds."""

    omega: np.ndarray  # (m, d)
    b: np.ndarray  # (m,)

    def __len__(self):
        return self.b.size


@dataclass(frozen=True)
class SpectralHandles:
    """Realized spectral features for a batch of seeds.

    ``freq``/``phase``/``amp`` cache the cosine form of the basis
    functions: feature value at x is amp * cos(2*pi*freq*x - phase).
    """

    indices: np.ndarray  # (m,) 0-based
    freq: np.ndarray
    phase: np.ndarray
    amp: np.ndarray

    def __len__(self):
        return self.indices.size


def _trig_params(indices: np.ndarray, amplitude: float):
    """Cosine-form parameters of basis functions at 0-based positions.

    Position 0 is the constant function; odd positions 2k-1 are
    sqrt(2) cos(2*pi*k*x); even positions 2k are sqrt(2) sin(2*pi*k*x),
    encoded as a cosine with a quarter-turn phase.
    """
    idx = np.asarray(indices)
    freq = ((idx + 1) // 2).astype(np.float64)
    is_sin = (idx != 0) & (idx % 2 == 0)
    phase = np.where(is_sin, _HALF_PI, 0.0)
    amp = np.where(idx == 0, amplitude, amplitude * _SQRT2)
    return freq, phase, amp


def trig_basis(xs, n: int) -> np.ndarray:
    """Matrix of the first ``n`` basis functions at points ``xs``: (npts, n)."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    freq, phase, amp = _trig_params(np.arange(n), 1.0)
    return amp * np.cos(TWO_PI * np.outer(xs, freq) - phase)


def trig_basis_point(x: float, n: int) -> np.ndarray:
    return trig_basis(x, n)[0]


def _rff_words(spec: GaussianRFF) -> int:
    return 2 * ((spec.dim + 1) // 2) + 1


def sample_handles(spec: FeatureMapSpec, seeds) -> RFFHandles | SpectralHandles:
    """Realize the features of a batch of seeds (deterministic)."""
    seeds = np.asarray(seeds).astype(np.uint64)
    if isinstance(spec, SpectralFeatures):
        raws = rng.raw_block(seeds, 1)
        u = rng.uniform53(raws[:, 0])
        cum = spec._cum_weights
        idx = np.searchsorted(cum, u, side="right")
        idx = np.minimum(idx, cum.size - 1).astype(np.int64)
        freq, phase, amp = _trig_params(idx, spec._scale)
        return SpectralHandles(indices=idx, freq=freq, phase=phase, amp=amp)
    raws = rng.raw_block(seeds, _rff_words(spec))
    npairs = (spec.dim + 1) // 2
    z0, z1 = rng.gauss_from_raws(raws[:, 0 : 2 * npairs : 2], raws[:, 1 : 2 * npairs : 2])
    g = np.empty((seeds.size, 2 * npairs))
    g[:, 0::2] = z0
    g[:, 1::2] = z1
    omega = g[:, : spec.dim] / spec.sigma
    b = TWO_PI * rng.uniform53(raws[:, -1])
    return RFFHandles(omega=omega, b=b)


def sample_feature(spec: FeatureMapSpec, seed: int) -> RFFHandle | SpectralHandle:
    """Realize a single feature from its seed."""
    h = sample_handles(spec, np.array([seed], dtype=np.uint64))
    if isinstance(h, SpectralHandles):
        return SpectralHandle(index=int(h.indices[0]))
    return RFFHandle(omega=h.omega[0], b=float(h.b[0]))


def replay_handles(spec: FeatureMapSpec, master_seed: int, count: int):
    """Features 1..count of a model: seeds derived from the master seed."""
    seeds = rng.derive_seeds(master_seed, np.arange(1, count + 1))
    return sample_handles(spec, seeds)


def _as_point(spec: FeatureMapSpec, x) -> np.ndarray | float:
    if isinstance(spec, SpectralFeatures):
        return float(np.asarray(x).reshape(()))
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    if xv.shape != (spec.dim,):
        raise ValueError(f"expected point of dimension {spec.dim}, got {xv.shape}")
    return xv


def eval_handles(spec: FeatureMapSpec, handles, x) -> np.ndarray:
    """Feature values phi_k(x) for every realized feature, at one point."""
    x = _as_point(spec, x)
    if isinstance(handles, SpectralHandles):
        ang = handles.freq * (TWO_PI * x)
        ang -= handles.phase
        np.cos(ang, out=ang)
        ang *= handles.amp
        return ang
    return _SQRT2 * np.cos(handles.omega @ x + handles.b)


def eval_handles_grid(spec: FeatureMapSpec, handles, xs) -> np.ndarray:
    """Feature values at many points: matrix (npts, nfeatures), chunked."""
    m = len(handles)
    if isinstance(handles, SpectralHandles):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        out = np.empty((xs.size, m))
        block = max(1, _CHUNK_ELEMS // max(1, m))
        for s in range(0, xs.size, block):
            xb = xs[s : s + block]
            out[s : s + block] = handles.amp * np.cos(
                TWO_PI * np.outer(xb, handles.freq) - handles.phase
            )
        return out
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    return _SQRT2 * np.cos(xs @ handles.omega.T + handles.b)


def eval_feature(spec: FeatureMapSpec, handle, x) -> float:
    """Value of a single realized feature at a point."""
    if isinstance(handle, SpectralHandle):
        idx = np.array([handle.index])
        freq, phase, amp = _trig_params(idx, spec._scale)
        h = SpectralHandles(idx, freq, phase, amp)
    else:
        h = RFFHandles(omega=handle.omega[None, :], b=np.array([handle.b]))
    return float(eval_handles(spec, h, x)[0])


def replay_values(spec: FeatureMapSpec, master_seed: int, count: int, x) -> np.ndarray:
    """phi_k(x) for k = 1..count, regenerating every feature from seeds."""
    if count == 0:
        return np.empty(0)
    return eval_handles(spec, replay_handles(spec, master_seed, count), x)


def kernel_exact(spec: FeatureMapSpec, x, xp) -> float:
    """Closed-form kernel value the feature map realizes in expectation."""
    if isinstance(spec, SpectralFeatures):
        x = _as_point(spec, x)
        xp = _as_point(spec, xp)
        n = spec.operator.dim
        ex = trig_basis_point(x, n)
        exp_ = trig_basis_point(xp, n)
        return float(np.sum(spec.operator.eigenvalues * ex * exp_))
    x = _as_point(spec, x)
    xp = _as_point(spec, xp)
    d2 = float(np.sum((x - xp) ** 2))
    return float(np.exp(-d2 / (2.0 * spec.sigma**2)))


def kernel_mc(spec: FeatureMapSpec, x, xp, m: int, seed: int) -> float:
    """Monte-Carlo kernel estimate: mean of phi(x)*phi(x') over m features."""
    if m < 1:
        raise ValueError("m must be at least 1")
    handles = replay_handles(spec, seed, m)
    vx = eval_handles(spec, handles, x)
    vxp = eval_handles(spec, handles, xp)
    return float(np.mean(vx * vxp))


def spec_to_dict(spec: FeatureMapSpec) -> dict:
    if isinstance(spec, GaussianRFF):
        return {"variant": "gaussian-rff", "sigma": spec.sigma, "dim": spec.dim}
    return {
        "variant": "spectral",
        "basis": spec.operator.basis_id,
        "eigenvalues": [float(s) for s in spec.operator.eigenvalues],
    }


def spec_from_dict(data: dict) -> FeatureMapSpec:
    variant = data.get("variant")
    if variant == "gaussian-rff":
        return GaussianRFF(sigma=float(data["sigma"]), dim=int(data["dim"]))
    if variant == "spectral":
        op = SpectralOperator(
            np.asarray(data["eigenvalues"], dtype=float),
            basis_id=data.get("basis", TRIG_BASIS),
        )
        return SpectralFeatures(op)
    raise ValueError(f"unknown feature map variant: {variant!r}")
