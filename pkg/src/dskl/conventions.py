"""Degenerate-case arithmetic conventions shared by the spectral formulas.

Every closed-form expression in this package uses the same rules:
``0**0 == 1``, ``x/0 == inf`` for ``x > 0``, empty products are ``1``
and empty sums are ``0``.  The last two are what numpy reductions
already return; the power rule lives here so it is applied uniformly.
"""

from __future__ import annotations

import numpy as np


def zpow(base, exponent):
    """Elementwise ``base**exponent`` with 0**0 == 1 and 0**negative == inf.

    ``base`` must be non-negative.  Returns a float scalar for scalar
    inputs, otherwise an ndarray.
    """
    with np.errstate(divide="ignore"):
        out = np.power(np.asarray(base, dtype=float), exponent)
    if np.ndim(base) == 0 and np.ndim(exponent) == 0:
        return float(out)
    return out
