"""Empirical measures, meta-measures, and file ingestion.

An empirical measure is a weighted finite point set in R^d.  A meta-measure
is a weighted finite collection of empirical measures sharing the ambient
dimension; its "points" are themselves measures.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

WEIGHT_TOL = 1e-12


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.flags.writeable = False
    return out


def _check_simplex(weights: np.ndarray, what: str) -> None:
    if np.any(weights < 0):
        raise ValueError(f"{what} contains negative entries")
    total = float(weights.sum())
    if abs(total - 1.0) > WEIGHT_TOL:
        raise ValueError(f"{what} sum {total:.12g}, expected 1")


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Weighted finite point set in R^d.

    Attributes:
        points: (n, d) array of finite coordinates.
        weights: (n,) nonnegative masses summing to 1.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError(f"points must be a nonempty n x d matrix, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite coordinates")
        if w.shape[0] != pts.shape[0]:
            raise ValueError(f"{w.shape[0]} weights for {pts.shape[0]} points")
        _check_simplex(w, "weights")
        object.__setattr__(self, "points", _freeze(pts))
        object.__setattr__(self, "weights", _freeze(w))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def uniform_measure(points) -> EmpiricalMeasure:
    """Empirical measure with uniform weights 1/n on the given points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[0]
    return EmpiricalMeasure(pts, np.full(n, 1.0 / n))


@dataclass(frozen=True)
class MetaMeasure:
    """Weighted finite collection of empirical measures with a common d."""

    inner: tuple
    outer_weights: np.ndarray

    def __post_init__(self):
        inner = tuple(self.inner)
        if len(inner) < 1:
            raise ValueError("meta-measure needs at least one inner measure")
        d0 = inner[0].d
        for k, m in enumerate(inner):
            if not isinstance(m, EmpiricalMeasure):
                raise TypeError(f"inner[{k}] is not an EmpiricalMeasure")
            if m.d != d0:
                raise ValueError(f"dimension mismatch: inner[0] has d={d0}, inner[{k}] has d={m.d}")
        w = np.asarray(self.outer_weights, dtype=float).ravel()
        if w.shape[0] != len(inner):
            raise ValueError(f"{w.shape[0]} outer weights for {len(inner)} inner measures")
        _check_simplex(w, "outer weights")
        object.__setattr__(self, "inner", inner)
        object.__setattr__(self, "outer_weights", _freeze(w))

    @property
    def N(self) -> int:
        return len(self.inner)

    @property
    def d(self) -> int:
        return self.inner[0].d


def build_meta(measures, outer_weights=None) -> MetaMeasure:
    """Assemble a meta-measure; omitted outer weights default to uniform 1/N."""
    measures = list(measures)
    if not measures:
        raise ValueError("empty measure list")
    if outer_weights is None:
        outer_weights = np.full(len(measures), 1.0 / len(measures))
    return MetaMeasure(tuple(measures), outer_weights)


def second_moment(measure: EmpiricalMeasure) -> float:
    """Weighted sum of squared Euclidean norms of the support points."""
    return float(measure.weights @ np.einsum("ij,ij->i", measure.points, measure.points))


# ---------------------------------------------------------------------------
# File ingestion.  Point clouds are CSV with one point per line; weights are
# always uniform at ingestion.  Non-uniform weights enter only through the
# constructors above.

def load_point_cloud(path) -> EmpiricalMeasure:
    """Load a headerless CSV of comma-separated coordinates, uniform weights.

    Accepts LF or CRLF line endings and scientific notation.  Raises
    ValueError on ragged rows, non-numeric/non-finite tokens, or an empty
    file; IO errors propagate as OSError.
    """
    text = Path(path).read_text(encoding="utf-8")
    rows = []
    arity = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        tokens = line.split(",")
        if arity is None:
            arity = len(tokens)
        elif len(tokens) != arity:
            raise ValueError(f"ragged row at line {lineno} in {path}")
        try:
            row = [float(tok) for tok in tokens]
        except ValueError:
            raise ValueError(f"non-numeric token at line {lineno} in {path}") from None
        if not all(np.isfinite(row)):
            raise ValueError(f"non-finite value at line {lineno} in {path}")
        rows.append(row)
    if not rows:
        raise ValueError(f"empty point cloud file: {path}")
    return uniform_measure(np.asarray(rows))


def save_point_cloud(measure: EmpiricalMeasure, path) -> None:
    """Write coordinates as CSV (17 significant digits, round-trip exact)."""
    lines = [",".join(format(x, ".17g") for x in row) for row in measure.points]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class DatasetManifest:
    """Labelled collection of point-cloud files below a base directory."""

    base_dir: Path
    items: tuple = field(default_factory=tuple)  # of (path, label)

    def __post_init__(self):
        object.__setattr__(self, "base_dir", Path(self.base_dir))
        items = tuple((Path(p), str(lab)) for p, lab in self.items)
        for p, lab in items:
            if not lab:
                raise ValueError(f"empty label for {p}")
            if not (self.base_dir / p).exists():
                raise ValueError(f"manifest path does not resolve: {self.base_dir / p}")
        object.__setattr__(self, "items", items)

    def resolved_paths(self):
        return [self.base_dir / p for p, _ in self.items]

    def labels(self):
        return [lab for _, lab in self.items]


def load_manifest(path) -> DatasetManifest:
    """Parse `{"base_dir": ..., "items": [{"path": ..., "label": ...}]}`."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        base_dir = raw["base_dir"]
        items = [(entry["path"], entry["label"]) for entry in raw["items"]]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed manifest {path}: {exc}") from None
    base = Path(base_dir)
    if not base.is_absolute():
        base = Path(path).parent / base
    return DatasetManifest(base, tuple(items))


def manifest_to_meta(manifest: DatasetManifest) -> MetaMeasure:
    """Load every item as an inner measure; uniform outer weights."""
    return build_meta([load_point_cloud(p) for p in manifest.resolved_paths()])
