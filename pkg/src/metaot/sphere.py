"""Euclidean slicing: uniform unit directions and 1D projections."""

import numpy as np

from .measures import EmpiricalMeasure, MetaMeasure
from .rng import as_generator


def sample_directions(d: int, S: int, seed) -> np.ndarray:
    """Draw S i.i.d. uniform directions on the unit sphere in R^d, one per row.

    Normalized standard Gaussian vectors; zero-norm draws (probability 0,
    but guarded) are redrawn.
    """
    if d < 1 or S < 1:
        raise ValueError(f"need d >= 1 and S >= 1, got d={d}, S={S}")
    rng = as_generator(seed)
    out = rng.standard_normal((S, d))
    norms = np.linalg.norm(out, axis=1)
    while np.any(norms == 0.0):
        bad = norms == 0.0
        out[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(out, axis=1)
    return out / norms[:, None]


def project_measure(measure: EmpiricalMeasure, theta: np.ndarray) -> EmpiricalMeasure:
    """Push the measure to R through x -> <theta, x>; weights unchanged."""
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size != measure.d:
        raise ValueError(f"dimension mismatch: direction has d={theta.size}, measure d={measure.d}")
    return EmpiricalMeasure((measure.points @ theta)[:, None], measure.weights)


def project_meta(meta: MetaMeasure, theta: np.ndarray) -> MetaMeasure:
    """Project every inner measure; outer weights unchanged."""
    inner = tuple(project_measure(m, theta) for m in meta.inner)
    return MetaMeasure(inner, meta.outer_weights)
