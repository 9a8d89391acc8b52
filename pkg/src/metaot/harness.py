"""Experiment and validation pipelines.

KNN shape classification over precomputed distance matrices, Monte Carlo
convergence diagnostics, lower-bound sandwich checks, and point-cloud batch
evaluation sweeps, together with the synthetic shape families the desk-scale
experiments run on.
"""

import csv
import io
import json
from dataclasses import dataclass, replace

import numpy as np

from .measures import MetaMeasure, build_meta, uniform_measure
from .rng import substream
from .sqw_dsw import DistanceEstimate, SlicingConfig, dsw, sw_wow
from .wow import wow_exact


@dataclass(frozen=True)
class KnnConfig:
    """k-nearest-neighbor protocol over random train/test splits."""

    k: int = 3
    train_fraction: float = 0.25
    trials: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.trials < 1:
            raise ValueError("k and trials must be at least 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


@dataclass(frozen=True)
class EvalRow:
    parameter: float
    metric: str
    mean: float
    std: float


@dataclass(frozen=True)
class EvalReport:
    """Tabular sweep result: one row per (parameter value, metric)."""

    rows: tuple

    def __post_init__(self):
        rows = tuple(self.rows)
        for row in rows:
            if row.std < 0:
                raise ValueError("std must be nonnegative")
        object.__setattr__(self, "rows", rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["parameter", "metric", "mean", "std"])
        for row in self.rows:
            writer.writerow([format(row.parameter, ".17g"), row.metric,
                             format(row.mean, ".17g"), format(row.std, ".17g")])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps([
            {"parameter": r.parameter, "metric": r.metric, "mean": r.mean, "std": r.std}
            for r in self.rows
        ], indent=2)


def knn_classify(dist: np.ndarray, labels, cfg: KnnConfig):
    """Mean accuracy of k-NN majority voting over random splits.

    Each trial draws a uniform train subset (no stratification, at least one
    train item), classifies every test item by majority vote among its k
    nearest train items, and reports (mean, std) of accuracy over trials.
    Distance ties resolve to the lowest train index; vote ties to the class
    with the smallest summed distance, then to the earliest neighbor.
    """
    dist = np.asarray(dist, dtype=float)
    K = dist.shape[0]
    if dist.shape != (K, K) or K < 2:
        raise ValueError(f"need a square distance matrix over at least 2 items, got {dist.shape}")
    if np.max(np.abs(dist - dist.T)) > 1e-9 or np.max(np.abs(np.diag(dist))) != 0.0:
        raise ValueError("distance matrix must be symmetric with a zero diagonal")
    labels = list(labels)
    if len(labels) != K:
        raise ValueError(f"{len(labels)} labels for {K} items")
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise ValueError("degenerate label vector: only one class present")
    y = np.array([classes.index(lab) for lab in labels])

    rng = substream(cfg.seed, "knn-splits", 0)
    n_train = int(round(cfg.train_fraction * K))
    n_train = min(max(n_train, 1), K - 1)
    accuracies = np.empty(cfg.trials)
    for t in range(cfg.trials):
        perm = rng.permutation(K)
        train = np.sort(perm[:n_train])
        test = np.sort(perm[n_train:])
        sub = dist[np.ix_(test, train)]
        k = min(cfg.k, n_train)
        order = np.argsort(sub, axis=1, kind="stable")[:, :k]
        hits = 0
        for row in range(test.size):
            nn = order[row]
            nn_labels = y[train[nn]]
            nn_dists = sub[row, nn]
            best = None
            for c in np.unique(nn_labels):
                mask = nn_labels == c
                key = (-int(mask.sum()), float(nn_dists[mask].sum()),
                       int(np.argmax(mask)))
                if best is None or key < best[0]:
                    best = (key, c)
            hits += best[1] == y[test[row]]
        accuracies[t] = hits / test.size
    return float(accuracies.mean()), float(accuracies.std())


def mc_convergence_report(a: MetaMeasure, b: MetaMeasure, S_list, reps: int,
                          base_config: SlicingConfig):
    """Dispersion of the squared DSW estimate versus the projection count.

    For each S, runs `reps` independent-seed estimates with outer_S scaled
    so that outer_S * inner_per_outer ~= S, and fits the log-log slope of
    std(dsw^2) against S.  Returns (EvalReport, slope); the slope is None
    when any std vanishes (identical inputs).
    """
    S_list = list(S_list)
    if sorted(S_list) != S_list:
        raise ValueError("S_list must be ascending")
    if reps < 10:
        raise ValueError(f"need at least 10 repetitions, got {reps}")
    rows = []
    stds = []
    actual_S = []
    for si, S in enumerate(S_list):
        outer = max(1, S // base_config.inner_per_outer)
        estimates = np.empty(reps)
        for rep in range(reps):
            seed = int(substream(base_config.seed, "mc-rep", si * reps + rep).integers(2**63))
            cfg = replace(base_config, outer_S=outer, seed=seed)
            estimates[rep] = dsw(a, b, cfg).value ** 2
        std = float(np.std(estimates, ddof=1))
        rows.append(EvalRow(float(outer * base_config.inner_per_outer), "dsw_sq",
                            float(estimates.mean()), std))
        stds.append(std)
        actual_S.append(outer * base_config.inner_per_outer)
    if min(stds) <= 0.0:
        return EvalReport(tuple(rows)), None
    slope = float(np.polyfit(np.log(actual_S), np.log(stds), 1)[0])
    return EvalReport(tuple(rows)), slope


@dataclass(frozen=True)
class BoundCheckReport:
    """DSW <= sliced WoW <= WoW sandwich, with 3-sigma slack on the estimates."""

    dsw_est: DistanceEstimate
    sw_est: DistanceEstimate
    wow_value: float
    dsw_le_sw: bool
    sw_le_wow: bool

    @property
    def passed(self) -> bool:
        return self.dsw_le_sw and self.sw_le_wow


def bound_check_report(a: MetaMeasure, b: MetaMeasure, config: SlicingConfig,
                       sw_outer_S: int = None) -> BoundCheckReport:
    """Evaluate dsw, sw_wow, and wow_exact and check the ordering."""
    d_est = dsw(a, b, config)
    s_est = sw_wow(a, b, sw_outer_S or config.total_projections, config.seed)
    w_val = wow_exact(a, b)
    combined = 3.0 * float(np.hypot(d_est.std_error, s_est.std_error))
    return BoundCheckReport(
        d_est, s_est, w_val,
        dsw_le_sw=d_est.value <= s_est.value + combined,
        sw_le_wow=s_est.value <= w_val + 3.0 * s_est.std_error,
    )


def pointcloud_eval(reference: MetaMeasure, target_builder, sweep_param: str,
                    sweep_values, metric: str, reps: int,
                    config: SlicingConfig) -> EvalReport:
    """Sweep one target parameter and score targets against a fixed reference.

    `target_builder(M, noise_sigma, m, seed)` produces the target
    meta-measure; the non-swept parameters stay at the reference defaults
    (M = N, sigma = 0, m = n).  Scores are averaged over `reps` seeds.
    """
    if sweep_param not in ("M", "sigma", "m"):
        raise ValueError(f"unknown sweep parameter {sweep_param!r}")
    if metric not in ("dsw", "wow"):
        raise ValueError(f"unknown metric {metric!r}")
    defaults = {
        "M": reference.N,
        "sigma": 0.0,
        "m": reference.inner[0].n,
    }
    rows = []
    for vi, value in enumerate(sweep_values):
        params = dict(defaults)
        params[sweep_param] = value
        scores = np.empty(reps)
        for rep in range(reps):
            seed = int(substream(config.seed, "pc-eval", vi * reps + rep).integers(2**63))
            target = target_builder(int(params["M"]), float(params["sigma"]),
                                    int(params["m"]), seed)
            if metric == "dsw":
                scores[rep] = dsw(reference, target, replace(config, seed=seed)).value
            else:
                scores[rep] = wow_exact(reference, target)
        rows.append(EvalRow(float(value), metric, float(scores.mean()),
                            float(scores.std(ddof=1) if reps > 1 else 0.0)))
    return EvalReport(tuple(rows))


def perturbation_builder(reference: MetaMeasure):
    """Target builder that subsamples, truncates, and noises the reference.

    With (M = N, sigma = 0, m = n) the reference is reproduced exactly, so
    the noise sweep starts at a distance of exactly zero.
    """
    def build(M: int, noise_sigma: float, m: int, seed: int) -> MetaMeasure:
        rng = substream(seed, "pc-target", 0)
        N = reference.N
        if M == N and noise_sigma == 0.0 and all(m == inner.n for inner in reference.inner):
            chosen = np.arange(N)
        else:
            chosen = np.sort(rng.choice(N, size=M, replace=M > N))
        inners = []
        for idx in chosen:
            pts = reference.inner[int(idx)].points
            if m < pts.shape[0]:
                keep = np.sort(rng.choice(pts.shape[0], size=m, replace=False))
                pts = pts[keep]
            if noise_sigma > 0.0:
                pts = pts + rng.normal(0.0, noise_sigma, pts.shape)
            inners.append(uniform_measure(pts))
        return build_meta(inners)

    return build


# ---------------------------------------------------------------------------
# Synthetic shape families.  2D boundary families (circle, square, star) for
# the classification stand-in; 3D volumetric families (ellipsoid, box) for
# the point-cloud evaluation stand-in.

SHAPE_KINDS_2D = ("circle", "square", "star")


def synthetic_shape_cloud(kind: str, n: int, rng: np.random.Generator) -> np.ndarray:
    """Boundary sample of a randomly posed 2D shape with 1% jitter."""
    t = (np.arange(n) + rng.uniform()) / n
    if kind == "circle":
        base = np.stack([np.cos(2 * np.pi * t), np.sin(2 * np.pi * t)], axis=1)
    elif kind == "square":
        base = _square_boundary(t)
    elif kind == "star":
        base = _star_boundary(t)
    else:
        raise ValueError(f"unknown 2D shape kind {kind!r}")
    angle = rng.uniform(0.0, 2.0 * np.pi)
    rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    shift = rng.uniform(-2.0, 2.0, 2)
    return base @ rot.T + shift + rng.normal(0.0, 0.01, (n, 2))


def _square_boundary(t):
    # perimeter arc length parameter over four unit-half-side edges
    s = (t * 4.0) % 4.0
    edge = np.floor(s).astype(int)
    frac = s - edge
    x = np.where(edge == 0, -1 + 2 * frac, np.where(edge == 1, 1.0, np.where(edge == 2, 1 - 2 * frac, -1.0)))
    y = np.where(edge == 0, -1.0, np.where(edge == 1, -1 + 2 * frac, np.where(edge == 2, 1.0, 1 - 2 * frac)))
    return np.stack([x, y], axis=1)


def _star_boundary(t, points: int = 5, inner_radius: float = 0.4):
    # alternate outer/inner vertices and interpolate along the edges
    verts = []
    for k in range(2 * points):
        r = 1.0 if k % 2 == 0 else inner_radius
        ang = np.pi / 2 + k * np.pi / points
        verts.append([r * np.cos(ang), r * np.sin(ang)])
    verts = np.array(verts + [verts[0]])
    seg = t * 2 * points
    k = np.minimum(np.floor(seg).astype(int), 2 * points - 1)
    frac = (seg - k)[:, None]
    return verts[k] * (1 - frac) + verts[k + 1] * frac


def synthetic_shape_dataset(per_class: int, n: int, seed: int):
    """Labelled 2D clouds, `per_class` of each kind; returns (clouds, labels)."""
    clouds, labels = [], []
    for kind in SHAPE_KINDS_2D:
        for k in range(per_class):
            rng = substream(seed, f"shape-{kind}", k)
            clouds.append(synthetic_shape_cloud(kind, n, rng))
            labels.append(kind)
    return clouds, labels


def synthetic_cloud3d(kind: str, n: int, rng: np.random.Generator) -> np.ndarray:
    """Random 3D cloud: points on an ellipsoid surface or in a box."""
    if kind == "ellipsoid":
        axes = rng.uniform(0.5, 1.5, 3)
        raw = rng.standard_normal((n, 3))
        raw /= np.linalg.norm(raw, axis=1, keepdims=True)
        return raw * axes
    if kind == "box":
        sides = rng.uniform(0.5, 1.5, 3)
        return rng.uniform(-1.0, 1.0, (n, 3)) * sides
    raise ValueError(f"unknown 3D shape kind {kind!r}")


def synthetic_reference_meta(N: int, n: int, seed: int) -> MetaMeasure:
    """Mixed ellipsoid/box reference batch for the point-cloud sweeps."""
    inners = []
    for k in range(N):
        rng = substream(seed, "ref-cloud", k)
        kind = "ellipsoid" if k % 2 == 0 else "box"
        inners.append(uniform_measure(synthetic_cloud3d(kind, n, rng)))
    return build_meta(inners)


def random_meta(N: int, n: int, d: int, rng: np.random.Generator,
                uniform_outer: bool = True) -> MetaMeasure:
    """Random compactly supported meta-measure on [-1, 1]^d (test/demo data)."""
    inners = [uniform_measure(rng.uniform(-1.0, 1.0, (n, d))) for _ in range(N)]
    if uniform_outer:
        return build_meta(inners)
    w = rng.uniform(0.2, 1.0, N)
    return build_meta(inners, w / w.sum())
