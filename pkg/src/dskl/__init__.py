"""Doubly stochastic kernel learning with seed-replayable random features.

Submodules:

* ``spectrum``   -- diagonal model of the kernel integral operator;
* ``features``   -- random feature maps (Gaussian Fourier, spectral) with
  deterministic seed replay;
* ``schedules``  -- step-size presets and their feasibility checks;
* ``learner``    -- the doubly stochastic update, the exact-kernel online
  baseline, and model (de)serialization;
* ``synthetic``  -- synthetic regression problems with exact excess risk;
* ``bounds``     -- exact-versus-closed-form inequality oracle;
* ``harness``    -- replicated sweeps, rate fitting and acceptance checks;
* ``rng``        -- counter-based SplitMix64 derivation primitives.
"""

from .features import GaussianRFF, SpectralFeatures
from .learner import Model, deserialize, predict, serialize, step, train
from .schedules import Schedule
from .spectrum import SpectralOperator
from .synthetic import SpectralProblem, make_problem

__version__ = "0.1.0"

__all__ = [
    "GaussianRFF",
    "Model",
    "Schedule",
    "SpectralFeatures",
    "SpectralOperator",
    "SpectralProblem",
    "deserialize",
    "make_problem",
    "predict",
    "serialize",
    "step",
    "train",
    "__version__",
]
