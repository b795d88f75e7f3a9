"""Doubly stochastic kernel learning and its exact-kernel baseline.

Each step consumes one fresh sample (x_t, y_t) and one fresh random
feature phi_t (regenerated from a counter-derived seed), and updates

    f_{t+1} = (1 - eta_t*lam) f_t - eta_t (f_t(x_t) - y_t) phi_t(x_t) phi_t,

starting from f_1 = 0.  A model therefore stores only the feature-map
spec, the master seed, one scalar coefficient per step and a global
scale factor: the (1 - eta*lam) decay multiplies the scale instead of
rescaling every stored coefficient, and the scale is folded back into
the coefficients when it underflows.  Storage is O(number of steps),
independent of the input dimension.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import features as ft
from . import rng
from .spectrum import SpectralOperator, _check_coeffs

FORMAT_VERSION = 1
_SCALE_FLOOR = 1e-150


class ModelFormatError(ValueError):
    """Malformed serialized model; ``offset`` is the byte position if known."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


@dataclass(frozen=True)
class Model:
    """Learned function as (feature spec, master seed, per-step weights).

    The effective weight of feature k is ``scale * coefficients[k]``;
    predictions are invariant under (scale, coefficients) ->
    (scale*c, coefficients/c).  With lam == 0 the scale stays 1.
    """

    feature_spec: ft.FeatureMapSpec
    master_seed: int
    coefficients: np.ndarray
    scale: float = 1.0
    lam: float = 0.0

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=float).copy()
        if coeffs.ndim != 1:
            raise ValueError("coefficients must be 1-D")
        coeffs.flags.writeable = False
        object.__setattr__(self, "coefficients", coeffs)
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.lam == 0 and self.scale != 1.0:
            raise ValueError("with lam == 0 the scale must be 1")

    @property
    def steps_taken(self) -> int:
        return int(self.coefficients.size)


@dataclass(frozen=True)
class TrajectoryPoint:
    t: int
    excess_risk: float | None
    wall_time: float


@dataclass
class TrajectoryRecord:
    points: list[TrajectoryPoint] = field(default_factory=list)


def geometric_checkpoints(T: int) -> list[int]:
    """Checkpoint grid ceil(2**(j/2)) <= T, plus T itself."""
    ts = set()
    j = 0
    while True:
        t = int(np.ceil(2.0 ** (j / 2.0)))
        if t > T:
            break
        ts.add(t)
        j += 1
    if T >= 1:
        ts.add(T)
    return sorted(ts)


def predict(model: Model, x) -> float:
    """f(x) = scale * sum_k b_k * phi_k(x), features replayed from seeds."""
    if model.steps_taken == 0:
        return 0.0
    phis = ft.replay_values(model.feature_spec, model.master_seed, model.steps_taken, x)
    return model.scale * float(np.dot(model.coefficients, phis))


def predict_many(model: Model, xs) -> np.ndarray:
    """Predictions at many points; features are replayed once."""
    xs_arr = np.asarray(xs, dtype=float)
    npts = xs_arr.shape[0] if xs_arr.ndim else 1
    if model.steps_taken == 0:
        return np.zeros(npts)
    handles = ft.replay_handles(model.feature_spec, model.master_seed, model.steps_taken)
    grid = ft.eval_handles_grid(model.feature_spec, handles, xs_arr)
    return model.scale * (grid @ model.coefficients)


def _check_step(spec: ft.FeatureMapSpec, eta: float, lam: float):
    if eta <= 0:
        raise ValueError("step size must be positive")
    if eta * lam >= 1.0:
        raise ValueError("eta*lam >= 1 would zero out the iterate")
    if eta * (lam + spec.kappa_sq) > 1.0:
        raise ValueError("step size violates eta*(lam + kappa_sq) <= 1")


def step(model: Model, sample, eta: float) -> Model:
    """One update; the appended coefficient absorbs the scale bookkeeping."""
    x, y = sample
    _check_step(model.feature_spec, eta, model.lam)
    t = model.steps_taken + 1
    residual = predict(model, x) - float(y)
    handle = ft.sample_feature(model.feature_spec, rng.derive_seed(model.master_seed, t))
    phi_x = ft.eval_feature(model.feature_spec, handle, x)
    new_scale = model.scale * (1.0 - eta * model.lam)
    b_t = -eta * residual * phi_x / new_scale
    coeffs = np.append(model.coefficients, b_t)
    if new_scale < _SCALE_FLOOR:
        coeffs = coeffs * new_scale
        new_scale = 1.0
    return Model(model.feature_spec, model.master_seed, coeffs, new_scale, model.lam)


class _HandleStore:
    """Incrementally grown realized-feature arrays for the cached train path."""

    def __init__(self, spec: ft.FeatureMapSpec, capacity: int = 64):
        self.spec = spec
        self.n = 0
        if isinstance(spec, ft.SpectralFeatures):
            self._idx = np.empty(capacity, dtype=np.int64)
            self._freq = np.empty(capacity)
            self._phase = np.empty(capacity)
            self._amp = np.empty(capacity)
        else:
            self._omega = np.empty((capacity, spec.dim))
            self._b = np.empty(capacity)

    def _grow(self):
        if isinstance(self.spec, ft.SpectralFeatures):
            cap = self._idx.size
            if self.n < cap:
                return
            for name in ("_idx", "_freq", "_phase", "_amp"):
                old = getattr(self, name)
                new = np.empty(2 * cap, dtype=old.dtype)
                new[:cap] = old
                setattr(self, name, new)
        else:
            cap = self._b.size
            if self.n < cap:
                return
            omega = np.empty((2 * cap, self.spec.dim))
            omega[:cap] = self._omega
            self._omega = omega
            b = np.empty(2 * cap)
            b[:cap] = self._b
            self._b = b

    def append(self, handles):
        self._grow()
        i = self.n
        if isinstance(handles, ft.SpectralHandles):
            self._idx[i] = handles.indices[0]
            self._freq[i] = handles.freq[0]
            self._phase[i] = handles.phase[0]
            self._amp[i] = handles.amp[0]
        else:
            self._omega[i] = handles.omega[0]
            self._b[i] = handles.b[0]
        self.n += 1

    def view(self, upto: int):
        if isinstance(self.spec, ft.SpectralFeatures):
            return ft.SpectralHandles(
                self._idx[:upto], self._freq[:upto], self._phase[:upto], self._amp[:upto]
            )
        return ft.RFFHandles(self._omega[:upto], self._b[:upto])


def train(
    samples,
    schedule,
    spec: ft.FeatureMapSpec,
    master_seed: int,
    checkpoints=(),
    feature_cache: bool = False,
    risk_fn=None,
) -> tuple[Model, TrajectoryRecord]:
    """Fold the update over a sample stream; deterministic given the seeds.

    By default the residual f_t(x_t) is evaluated by replaying all past
    features from their seeds each step, matching the O(t*d)-per-step
    cost of the seed-replay storage scheme.  ``feature_cache=True``
    keeps the realized features in memory instead (same values, same
    asymptotics, smaller constant) and is intended for experiment runs.

    ``checkpoints`` is an iterable of step counts at which a trajectory
    point is recorded; ``risk_fn(model) -> float`` supplies the recorded
    excess risk when given.
    """
    checkpoint_set = set(int(c) for c in checkpoints)
    record = TrajectoryRecord()
    start = time.perf_counter()

    lam = schedule.lam
    cap = 64
    coeffs = np.empty(cap)
    scale = 1.0
    store = _HandleStore(spec, cap) if feature_cache else None
    t = 0

    def snapshot() -> Model:
        return Model(spec, master_seed, coeffs[:t].copy(), scale, lam)

    for t_next, (x, y) in enumerate(samples, start=1):
        eta = schedule.step_size(t_next)
        _check_step(spec, eta, lam)
        # residual of f_t at x_t, using features 1..t
        if t == 0:
            pred = 0.0
        elif feature_cache:
            phis = ft.eval_handles(spec, store.view(t), x)
            pred = scale * float(np.dot(coeffs[:t], phis))
        else:
            phis = ft.replay_values(spec, master_seed, t, x)
            pred = scale * float(np.dot(coeffs[:t], phis))
        residual = pred - float(y)

        seed_t = rng.derive_seed(master_seed, t_next)
        handles_t = ft.sample_handles(spec, np.array([seed_t], dtype=np.uint64))
        phi_t = float(ft.eval_handles(spec, handles_t, x)[0])

        new_scale = scale * (1.0 - eta * lam)
        b_t = -eta * residual * phi_t / new_scale
        if t_next > cap:
            cap *= 2
            grown = np.empty(cap)
            grown[:t] = coeffs[:t]
            coeffs = grown
        coeffs[t_next - 1] = b_t
        scale = new_scale
        if scale < _SCALE_FLOOR:
            coeffs[:t_next] *= scale
            scale = 1.0
        if feature_cache:
            store.append(handles_t)
        t = t_next

        if t in checkpoint_set:
            risk = float(risk_fn(snapshot())) if risk_fn is not None else None
            record.points.append(
                TrajectoryPoint(t=t, excess_risk=risk, wall_time=time.perf_counter() - start)
            )

    return snapshot(), record


def step_exact_kernel(state, sample, eta: float, lam: float, op: SpectralOperator) -> np.ndarray:
    """Classic kernel online update in the operator's basis coordinates.

    The kernel section at x has coordinates sigma_i * e_i(x), so
    h' = (1 - eta*lam) h - eta (h(x) - y) * sigma * e(x).  The decay
    factor is (1 - eta*lam), consistent with the doubly stochastic
    update, so lam == 0 recovers the unregularized recursion.
    """
    x, y = sample
    state = _check_coeffs(op, state)
    if eta <= 0:
        raise ValueError("step size must be positive")
    if eta * lam >= 1.0:
        raise ValueError("eta*lam >= 1 would zero out the iterate")
    if eta * (lam + op.kappa_sq) > 1.0:
        raise ValueError("step size violates eta*(lam + kappa_sq) <= 1")
    e = ft.trig_basis_point(float(x), op.dim)
    hx = float(np.dot(state, e))
    return (1.0 - eta * lam) * state - eta * (hx - float(y)) * op.eigenvalues * e


def serialize(model: Model) -> bytes:
    """Lossless UTF-8 JSON encoding (floats use shortest round-trip form)."""
    doc = {
        "format_version": FORMAT_VERSION,
        "feature_spec": ft.spec_to_dict(model.feature_spec),
        "master_seed": int(model.master_seed),
        "lambda": float(model.lam),
        "scale": float(model.scale),
        "coefficients": [float(c) for c in model.coefficients],
    }
    return json.dumps(doc).encode("utf-8")


def deserialize(data: bytes) -> Model:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ModelFormatError(f"not valid UTF-8 at byte {exc.start}", offset=exc.start)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(
            f"invalid JSON at byte offset {exc.pos}: {exc.msg}", offset=exc.pos
        )
    if not isinstance(doc, dict):
        raise ModelFormatError("top-level value must be an object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format_version: {version!r}")
    missing = {"feature_spec", "master_seed", "lambda", "scale", "coefficients"} - set(doc)
    if missing:
        raise ModelFormatError(f"missing fields: {sorted(missing)}")
    coeffs = doc["coefficients"]
    if not isinstance(coeffs, list) or not all(
        isinstance(c, (int, float)) for c in coeffs
    ):
        raise ModelFormatError("coefficients must be an array of numbers")
    try:
        spec = ft.spec_from_dict(doc["feature_spec"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"bad feature_spec: {exc}")
    return Model(
        feature_spec=spec,
        master_seed=int(doc["master_seed"]),
        coefficients=np.asarray(coeffs, dtype=float),
        scale=float(doc["scale"]),
        lam=float(doc["lambda"]),
    )
