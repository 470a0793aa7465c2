"""SELU activation and a Monte Carlo check of its self-normalising fixed point.

Used as a sanity harness: normalised (and augmented) features feed SELU
networks, which expect roughly zero-mean, unit-variance inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .rng import Rng


@dataclass(frozen=True)
class SeluParams:
    # kept at 4 decimals on purpose; do not swap in the long-form constants
    alpha: float = 1.6733
    lam: float = 1.0507

    def __post_init__(self):
        if not (self.alpha > 0 and self.lam > 0):
            raise ValueError("alpha and lambda must be positive")


DEFAULT_SELU = SeluParams()


def selu(x, params: SeluParams = DEFAULT_SELU):
    """``lam * x`` for x > 0, ``lam * (alpha * exp(x) - alpha)`` otherwise."""
    arr = np.asarray(x, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise ValueError("selu input must be finite")
    neg = params.lam * (params.alpha * np.exp(np.minimum(arr, 0.0)) - params.alpha)
    out = np.where(arr > 0, params.lam * arr, neg)
    return out if out.ndim else float(out)


def selfnorm_check(n: int, seed: int, params: SeluParams = DEFAULT_SELU) -> Tuple[float, float]:
    """Mean and population variance of ``selu(z)`` for ``n`` standard normals ``z``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    z = Rng(seed).standard_normal(n)
    y = selu(z, params)
    y = np.atleast_1d(y)
    mean = float(y.mean())
    return mean, float(np.mean((y - mean) ** 2))
