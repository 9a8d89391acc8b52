"""Discretized slicing measure on L2([0,1]).

Slicing directions for quantile functions are Gaussian-process paths sampled
at quadrature knots.  A grid carries equispaced knots on [0,1] with
trapezoidal weights; the inner product between a quantile function and a
path is approximated by the weighted sum over the knots.
"""

from dataclasses import dataclass

import numpy as np

from .ot1d import Quantile1D, eval_quantile_grid
from .rng import as_generator

_JITTER_START = 1e-10
_JITTER_MAX = 1e-6


@dataclass(frozen=True)
class QuadratureGrid:
    """Strictly increasing knots in [0,1] with nonnegative weights."""

    knots: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.knots, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if t.size != w.size or t.size < 1:
            raise ValueError("knots and weights must be equal-length and nonempty")
        if np.any(np.diff(t) <= 0) or t[0] < 0 or t[-1] > 1:
            raise ValueError("knots must strictly increase within [0, 1]")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        for name, arr in (("knots", t), ("weights", w)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def R(self) -> int:
        return self.knots.size


@dataclass(frozen=True)
class KernelSpec:
    """Covariance kernel on [0,1]: squared-exponential or Brownian motion."""

    kind: str  # "rbf" | "brownian"
    sigma: float = 0.1

    def __post_init__(self):
        if self.kind not in ("rbf", "brownian"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf" and not self.sigma > 0:
            raise ValueError(f"rbf kernel needs sigma > 0, got {self.sigma}")

    @classmethod
    def rbf(cls, sigma: float) -> "KernelSpec":
        return cls("rbf", sigma)

    @classmethod
    def brownian(cls) -> "KernelSpec":
        return cls("brownian", sigma=0.0)


def make_grid(R: int) -> QuadratureGrid:
    """Equispaced endpoint-inclusive knots with trapezoidal weights."""
    if R < 2:
        raise ValueError(f"grid needs at least 2 knots, got {R}")
    knots = np.linspace(0.0, 1.0, R)
    weights = np.full(R, 1.0 / (R - 1))
    weights[0] = weights[-1] = 0.5 / (R - 1)
    return QuadratureGrid(knots, weights)


def covariance_matrix(kernel: KernelSpec, grid: QuadratureGrid) -> np.ndarray:
    """Kernel Gram matrix on the grid knots."""
    t = grid.knots
    if kernel.kind == "rbf":
        diff = t[:, None] - t[None, :]
        return np.exp(-(diff * diff) / (2.0 * kernel.sigma**2))
    return np.minimum(t[:, None], t[None, :])


def cholesky_factor(kernel: KernelSpec, grid: QuadratureGrid) -> np.ndarray:
    """Lower-triangular factor of the jittered covariance.

    Fine RBF grids are numerically rank-deficient, so a small diagonal
    jitter is added and escalated tenfold on failure up to 1e-6.
    """
    cov = covariance_matrix(kernel, grid)
    jitter = _JITTER_START
    while True:
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(grid.R))
        except np.linalg.LinAlgError:
            jitter *= 10.0
            if jitter > _JITTER_MAX:
                raise np.linalg.LinAlgError(
                    f"covariance factorization failed at maximum jitter {_JITTER_MAX}"
                ) from None


def sample_paths(kernel: KernelSpec, grid: QuadratureGrid, count: int, seed) -> np.ndarray:
    """Draw `count` zero-mean GP paths at the grid knots, one per row.

    Deterministic given the seed (an int or a numpy Generator).
    """
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count}")
    rng = as_generator(seed)
    factor = cholesky_factor(kernel, grid)
    z = rng.standard_normal((grid.R, count))
    return (factor @ z).T


def project_quantile(q: Quantile1D, path: np.ndarray, grid: QuadratureGrid,
                     mode: str = "step") -> float:
    """Quadrature approximation of the inner product <Q, g> on [0,1]."""
    path = np.asarray(path, dtype=float).ravel()
    if path.size != grid.R:
        raise ValueError(f"path length {path.size} does not match grid size {grid.R}")
    if not np.all(np.isfinite(path)):
        raise ValueError("path contains non-finite values")
    qvals = eval_quantile_grid(q, grid.knots, mode)
    return float(np.sum(grid.weights * qvals * path))
