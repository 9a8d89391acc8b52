"""Quantile functions and the closed-form 1D Wasserstein distance.

The quantile function of an empirical measure on R is a nondecreasing step
function; the squared 2-Wasserstein distance between two such measures is
the exact integral of the squared quantile difference.  The integral is
computed on the common refinement of the two cumulative-weight breakpoint
sequences, with no quadrature.
"""

from dataclasses import dataclass

import numpy as np

from .measures import EmpiricalMeasure

#: interpolation modes for quantile evaluation
MODES = ("step", "linear")


@dataclass(frozen=True)
class Quantile1D:
    """Step representation of a quantile function.

    `values[j]` is the quantile on the interval (cum_weights[j-1],
    cum_weights[j]] with cum_weights[-1] read as 0.  Values are sorted,
    cumulative weights strictly increase and end at 1.
    """

    values: np.ndarray
    cum_weights: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        c = np.asarray(self.cum_weights, dtype=float).ravel()
        if v.shape != c.shape or v.size == 0:
            raise ValueError("values and cum_weights must be equal-length and nonempty")
        if np.any(np.diff(v) < 0):
            raise ValueError("values must be nondecreasing")
        if np.any(np.diff(c) <= 0) or c[0] <= 0:
            raise ValueError("cum_weights must be strictly increasing in (0, 1]")
        if abs(c[-1] - 1.0) > 1e-12:
            raise ValueError(f"last cum_weight is {c[-1]:.12g}, expected 1")
        for name, arr in (("values", v), ("cum_weights", c)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def quantile_of(measure: EmpiricalMeasure) -> Quantile1D:
    """Quantile function of a 1-dimensional empirical measure.

    Sorts the support, accumulates weights, drops zero-weight points, and
    merges ties so the representation is canonical.
    """
    if measure.d != 1:
        raise ValueError(f"quantile_of requires d=1, got d={measure.d}")
    x = measure.points[:, 0]
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ws = measure.weights[order]
    # merge consecutive equal support values
    keep = np.concatenate(([True], xs[1:] != xs[:-1]))
    idx = np.cumsum(keep) - 1
    merged_w = np.zeros(int(idx[-1]) + 1)
    np.add.at(merged_w, idx, ws)
    merged_x = xs[keep]
    positive = merged_w > 0
    merged_x = merged_x[positive]
    merged_w = merged_w[positive]
    cum = np.cumsum(merged_w)
    cum[-1] = 1.0  # absorb accumulation round-off; sum validated upstream
    return Quantile1D(merged_x, cum)


def eval_quantile(q: Quantile1D, t: float, mode: str = "step") -> float:
    """Evaluate the quantile at t in [0, 1].

    Step mode follows the generalized-inverse definition with Q(0) defined
    as the minimum support value.  Linear mode interpolates through the
    nodes (midpoint of step j, values[j]) and clamps outside the first and
    last midpoints.
    """
    return float(eval_quantile_grid(q, np.asarray([t], dtype=float), mode)[0])


def eval_quantile_grid(q: Quantile1D, ts: np.ndarray, mode: str = "step") -> np.ndarray:
    """Vectorized quantile evaluation at many locations in [0, 1]."""
    ts = np.asarray(ts, dtype=float)
    if np.any(ts < 0) or np.any(ts > 1):
        raise ValueError("quantile argument outside [0, 1]")
    if mode == "step":
        # smallest j with cum_weights[j] >= t; t = 0 maps to the first value
        idx = np.searchsorted(q.cum_weights, ts, side="left")
        idx = np.minimum(idx, q.values.size - 1)
        return q.values[idx]
    if mode == "linear":
        prev = np.concatenate(([0.0], q.cum_weights[:-1]))
        mids = 0.5 * (prev + q.cum_weights)
        return np.interp(ts, mids, q.values)
    raise ValueError(f"unknown interpolation mode {mode!r}")


def _w2_squared(qa: Quantile1D, qb: Quantile1D) -> float:
    """Exact integral of (Q_a - Q_b)^2 over the merged breakpoints."""
    breaks = np.concatenate([qa.cum_weights, qb.cum_weights])
    breaks.sort(kind="stable")
    starts = np.concatenate(([0.0], breaks[:-1]))
    seg = breaks - starts
    ia = np.minimum(np.searchsorted(qa.cum_weights, starts, side="right"), qa.values.size - 1)
    ib = np.minimum(np.searchsorted(qb.cum_weights, starts, side="right"), qb.values.size - 1)
    diff = qa.values[ia] - qb.values[ib]
    return float(np.dot(seg, diff * diff))


def wasserstein_1d(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    """Exact 1D 2-Wasserstein distance via the quantile formula."""
    if mu.d != 1 or nu.d != 1:
        raise ValueError(f"wasserstein_1d requires d=1 inputs, got d={mu.d} and d={nu.d}")
    w2 = _w2_squared(quantile_of(mu), quantile_of(nu))
    return float(np.sqrt(max(w2, 0.0)))
