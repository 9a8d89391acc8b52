"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Stochastic criteria run on fixed seeds so every run is reproducible; the
runtime budgets are asserted alongside the numerical tolerances.
"""

import json
import time

import numpy as np

from conftest import random_1d_measure
from metaot.cli import main as cli_main
from metaot.gp_slicer import KernelSpec, covariance_matrix, make_grid, sample_paths
from metaot.harness import (
    KnnConfig,
    bound_check_report,
    knn_classify,
    mc_convergence_report,
    perturbation_builder,
    pointcloud_eval,
    random_meta,
    synthetic_reference_meta,
    synthetic_shape_dataset,
)
from metaot.measures import EmpiricalMeasure, build_meta, uniform_measure
from metaot.mmspace import (
    ShapeInput,
    euclidean_mmspace,
    local_distance_distribution,
    sqw_shape_distance,
)
from metaot.ot1d import eval_quantile_grid, quantile_of, wasserstein_1d
from metaot.patches import GrayImage, PerlinParams, batch_to_meta, extract_patches, perlin_batch
from metaot.rng import substream
from metaot.sqw_dsw import SlicingConfig, dsw, dsw_distance_matrix, sqw, sqw_distance_matrix, sw_wow
from metaot.discrete_ot import solve_exact, squared_cost_matrix
from metaot.wow import wow_distance_matrix


class Criterion:
    def __init__(self, number, name, budget_s):
        self.number = number
        self.name = name
        self.budget_s = budget_s
        self.start = time.perf_counter()

    def finish(self, ok: bool):
        elapsed = time.perf_counter() - self.start
        verdict = "PASS" if ok and elapsed < self.budget_s else "FAIL"
        print(f"ACCEPTANCE {self.number:02d} {self.name}: {verdict} "
              f"({elapsed:.1f}s / {self.budget_s:.0f}s budget)")
        assert ok, f"criterion {self.number} ({self.name}) failed"
        assert elapsed < self.budget_s, (
            f"criterion {self.number} exceeded its runtime budget: "
            f"{elapsed:.1f}s >= {self.budget_s}s")


def test_01_1d_oracle_equivalence():
    crit = Criterion(1, "1d-oracle-equivalence", 5)
    rng = substream(101, "acc-1", 0)
    worst = 0.0
    for _ in range(200):
        mu = random_1d_measure(rng)
        nu = random_1d_measure(rng)
        cost = squared_cost_matrix(mu, nu)
        _, objective = solve_exact(cost, mu.weights, nu.weights)
        worst = max(worst, abs(wasserstein_1d(mu, nu) - np.sqrt(objective)))
    crit.finish(worst < 1e-9)


def test_02_quantile_isometry():
    crit = Criterion(2, "quantile-isometry", 5)
    rng = substream(102, "acc-2", 0)
    grid = make_grid(10_000)
    worst_rel = 0.0
    for _ in range(50):
        n, m = rng.integers(1, 21, 2)
        mu = EmpiricalMeasure(rng.uniform(-1, 1, (n, 1)), rng.dirichlet(np.ones(n)))
        nu = EmpiricalMeasure(rng.uniform(-1, 1, (m, 1)), rng.dirichlet(np.ones(m)))
        qa = eval_quantile_grid(quantile_of(mu), grid.knots, "step")
        qb = eval_quantile_grid(quantile_of(nu), grid.knots, "step")
        quadrature = float(np.sum(grid.weights * (qa - qb) ** 2))
        exact = wasserstein_1d(mu, nu) ** 2
        worst_rel = max(worst_rel, abs(quadrature - exact) / exact)
    crit.finish(worst_rel < 1e-3)


def test_03_bound_sandwich():
    crit = Criterion(3, "bound-sandwich", 60)
    # RBF discretized second moment is exactly 1, so the sliced values sit
    # below the exact WoW without any rescaling
    grid = make_grid(10)
    cov_diag = np.diag(covariance_matrix(KernelSpec.rbf(0.1), grid))
    assert abs(float(grid.weights @ cov_diag) - 1.0) <= 1e-12
    ok = True
    for k in range(20):
        a = random_meta(4, 6, 3, substream(103, "acc-3a", k))
        b = random_meta(4, 6, 3, substream(103, "acc-3b", k))
        config = SlicingConfig(outer_S=500, inner_per_outer=10, grid=grid,
                               kernel=KernelSpec.rbf(0.1), seed=1000 + k)
        report = bound_check_report(a, b, config, sw_outer_S=5000)
        ok = ok and report.passed
    crit.finish(ok)


def test_04_monte_carlo_rate():
    crit = Criterion(4, "monte-carlo-rate", 120)
    a = random_meta(4, 6, 3, substream(104, "acc-4", 0))
    b = random_meta(4, 6, 3, substream(104, "acc-4", 1))
    base = SlicingConfig(outer_S=10, inner_per_outer=10, grid=make_grid(10),
                         kernel=KernelSpec.rbf(0.1), seed=42)
    _, slope = mc_convergence_report(a, b, [100, 400, 1600, 6400], 50, base)
    crit.finish(slope is not None and -0.65 <= slope <= -0.35)


def test_05_metric_axioms_shared_projections():
    crit = Criterion(5, "metric-axioms-shared-projections", 60)
    metas = [random_meta(3, 5, 2, substream(105, "acc-5", k)) for k in range(8)]
    config = SlicingConfig(outer_S=200, inner_per_outer=10, grid=make_grid(10),
                           kernel=KernelSpec.rbf(0.1), seed=7)
    sliced = dsw_distance_matrix(metas, config)
    exact = wow_distance_matrix(metas)
    ok = (np.array_equal(sliced, sliced.T)
          and np.array_equal(np.diag(sliced), np.zeros(8))
          and np.max(np.abs(np.diag(exact))) <= 1e-8
          and np.max(np.abs(exact - exact.T)) == 0.0)
    for i in range(8):
        for j in range(8):
            for k in range(8):
                ok = ok and sliced[i, k] <= sliced[i, j] + sliced[j, k] + 1e-10
                ok = ok and exact[i, k] <= exact[i, j] + exact[j, k] + 1e-8
    crit.finish(ok)


def test_06_single_dirac_closed_form():
    crit = Criterion(6, "single-dirac-closed-form", 10)
    rng = substream(106, "acc-6", 0)
    ok = True
    for d in (2, 3, 8):
        x = rng.uniform(-1, 1, d)
        y = rng.uniform(-1, 1, d)
        a = build_meta([uniform_measure(x[None, :])])
        b = build_meta([uniform_measure(y[None, :])])
        est = sw_wow(a, b, 5000, seed=d)
        limit = float(np.linalg.norm(x - y) / np.sqrt(d))
        ok = ok and abs(est.value - limit) <= 3.0 * est.std_error + 1e-12
    crit.finish(ok)


def test_07_isometry_invariance():
    crit = Criterion(7, "isometry-invariance", 10)
    rng = substream(107, "acc-7", 0)
    # dyadic coordinates and an axis-swap isometry with integer shifts keep
    # every pairwise distance bit-identical, so the invariance test is exact
    pts = np.round(rng.uniform(-1, 1, (40, 2)) * 2**20) / 2**20
    moved = np.stack([-pts[:, 1] + 3.0, pts[:, 0] - 2.0], axis=1)
    config = SlicingConfig(outer_S=1, inner_per_outer=500, grid=make_grid(10),
                           kernel=KernelSpec.rbf(0.01), seed=9)
    same = sqw_shape_distance(ShapeInput.from_points(pts), ShapeInput.from_points(moved), config)
    scaled = sqw_shape_distance(ShapeInput.from_points(pts), ShapeInput.from_points(pts * 2.0), config)
    crit.finish(same.value == 0.0 and scaled.value > 5.0 * scaled.std_error)


def test_08_synthetic_shape_knn():
    crit = Criterion(8, "synthetic-shape-knn", 120)
    clouds, labels = synthetic_shape_dataset(per_class=30, n=50, seed=108)
    metas = [local_distance_distribution(euclidean_mmspace(c)) for c in clouds]
    grid = make_grid(10)
    paths = sample_paths(KernelSpec.rbf(0.01), grid, 100, substream(108, "acc-8-paths", 0))
    matrix = sqw_distance_matrix(metas, paths, grid, "linear")
    mean, std = knn_classify(matrix, labels, KnnConfig(k=3, train_fraction=0.25,
                                                       trials=1000, seed=11))
    print(f"  shape-knn accuracy {mean:.4f} +- {std:.4f}")
    crit.finish(mean >= 0.95)


def test_09_patch_count_constant():
    crit = Criterion(9, "patch-count-constant", 1)
    rng = substream(109, "acc-9", 0)
    img = GrayImage(rng.uniform(0, 1, (64, 64)))
    patches = extract_patches(img, 8)
    crit.finish(patches.n == 3249 and patches.d == 64)


def test_10_texture_discrimination():
    crit = Criterion(10, "texture-discrimination", 600)
    lacunarities = [1.0, 1.5, 2.0, 2.5, 3.0]
    reference = 2.0
    config = SlicingConfig(outer_S=100, inner_per_outer=100, grid=make_grid(10),
                           kernel=KernelSpec.rbf(0.1), interpolation="linear", seed=13)
    scores = np.zeros((len(lacunarities), 5))
    for rep in range(5):
        ref_seed = int(substream(110, "acc-10-ref", rep).integers(2**63))
        ref_meta = batch_to_meta(perlin_batch(
            16, 64, 64, PerlinParams(lacunarity=reference, seed=ref_seed)), 8)
        for li, lac in enumerate(lacunarities):
            tgt_seed = int(substream(110, "acc-10-tgt", rep * 100 + li).integers(2**63))
            tgt_meta = batch_to_meta(perlin_batch(
                16, 64, 64, PerlinParams(lacunarity=lac, seed=tgt_seed)), 8)
            run = SlicingConfig(outer_S=100, inner_per_outer=100, grid=config.grid,
                                kernel=config.kernel, interpolation="linear",
                                seed=rep * 100 + li)
            scores[li, rep] = dsw(ref_meta, tgt_meta, run).value
    means = scores.mean(axis=1)
    argmin = lacunarities[int(np.argmin(means))]
    print("  lacunarity means:", dict(zip(lacunarities, np.round(means, 4))))
    crit.finish(argmin == reference)


def test_11_pointcloud_trends():
    crit = Criterion(11, "pointcloud-trends", 300)
    reference = synthetic_reference_meta(10, 50, seed=111)
    builder = perturbation_builder(reference)
    config = SlicingConfig(outer_S=100, inner_per_outer=10, grid=make_grid(10),
                           kernel=KernelSpec.rbf(0.1), seed=15)

    collapse = pointcloud_eval(reference, builder, "M", [1, 10], "dsw", 5, config)
    lone, full = collapse.rows[0], collapse.rows[1]
    combined = np.hypot(lone.std, full.std)
    mode_ok = lone.mean > full.mean + 5.0 * combined

    noise = pointcloud_eval(reference, builder, "sigma", [0.0, 0.05, 0.1, 0.2],
                            "dsw", 5, config)
    means = [r.mean for r in noise.rows]
    stds = [r.std for r in noise.rows]
    noise_ok = all(
        means[i + 1] >= means[i] - 2.0 * np.hypot(stds[i], stds[i + 1])
        for i in range(3)
    )
    exact_zero = means[0] == 0.0
    print(f"  mode-collapse {lone.mean:.4f} vs {full.mean:.4f}; noise means {np.round(means, 4)}")
    crit.finish(mode_ok and noise_ok and exact_zero)


def test_12_cli_thread_determinism(tmp_path):
    crit = Criterion(12, "cli-thread-determinism", 30)
    rng = substream(112, "acc-12", 0)
    for name in ("p", "q"):
        pts = rng.uniform(-1, 1, (8, 3))
        (tmp_path / f"{name}.csv").write_text(
            "\n".join(",".join(format(x, ".17g") for x in row) for row in pts) + "\n")
        (tmp_path / f"{name}.json").write_text(json.dumps({
            "base_dir": ".", "items": [{"path": f"{name}.csv", "label": name}]}))
    blobs = []
    for threads in (1, 2, 8):
        out = tmp_path / f"out_{threads}.json"
        code = cli_main(["dsw", str(tmp_path / "p.json"), str(tmp_path / "q.json"),
                         "--seed", "99", "--outer", "24", "--inner", "5",
                         "--threads", str(threads), "--out", str(out)])
        assert code == 0
        blobs.append(out.read_bytes())
    crit.finish(blobs[0] == blobs[1] == blobs[2])


def test_13_discretization_stability():
    crit = Criterion(13, "discretization-stability", 60)
    rng = substream(113, "acc-13", 0)
    a = build_meta([uniform_measure(rng.uniform(-1, 1, (12, 1))) for _ in range(4)])
    b = build_meta([uniform_measure(rng.uniform(-1, 1, (15, 1))) for _ in range(5)])
    ok = True
    for kernel in (KernelSpec.rbf(0.1), KernelSpec.brownian()):
        estimates = []
        for R, seed in ((50, 21), (100, 22)):
            grid = make_grid(R)
            paths = sample_paths(kernel, grid, 10_000, substream(seed, "acc-13-paths", 0))
            estimates.append(sqw(a, b, paths, grid, "linear"))
        gap = abs(estimates[0].value - estimates[1].value)
        combined = 3.0 * float(np.hypot(estimates[0].std_error, estimates[1].std_error))
        ok = ok and gap < combined
    crit.finish(ok)
