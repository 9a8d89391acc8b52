"""Command-line surface.

Every stochastic subcommand requires an explicit --seed; outputs embed the
tool version and the resolved configuration (math parameters plus seed, not
execution knobs) so that repeated runs are byte-identical at any --threads
value.  Exit codes: 0 success, 1 usage error, 2 data error.
"""

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .cache import resolve_cache
from .gp_slicer import KernelSpec, make_grid, sample_paths
from .harness import (
    EvalReport,
    EvalRow,
    KnnConfig,
    bound_check_report,
    knn_classify,
    mc_convergence_report,
    perturbation_builder,
    pointcloud_eval,
    random_meta,
    synthetic_reference_meta,
)
from .measures import load_manifest, load_point_cloud, manifest_to_meta
from .mmspace import euclidean_mmspace, local_distance_distribution
from .patches import PerlinParams, batch_to_meta, perlin_batch, write_pgm
from .rng import substream
from .sqw_dsw import SlicingConfig, dsw, sqw, sqw_distance_matrix
from .wow import wow_exact


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _kernel_from(args) -> KernelSpec:
    if args.kernel == "rbf":
        return KernelSpec.rbf(args.sigma)
    return KernelSpec.brownian()


def _slicing_config(args) -> SlicingConfig:
    return SlicingConfig(
        outer_S=args.outer,
        inner_per_outer=args.inner,
        grid=make_grid(args.grid_size),
        kernel=_kernel_from(args),
        interpolation=args.interpolation,
        seed=args.seed,
    )


def _estimator_flags(parser, outer=100, inner=100):
    parser.add_argument("--outer", type=int, default=outer, help="outer sphere directions")
    parser.add_argument("--inner", type=int, default=inner, help="GP paths per direction")
    parser.add_argument("--grid-size", type=int, default=10, metavar="R",
                        help="quadrature knots on [0,1]")
    parser.add_argument("--sigma", type=float, default=0.1, help="RBF kernel bandwidth")
    parser.add_argument("--kernel", choices=("rbf", "brownian"), default="rbf")
    parser.add_argument("--interpolation", choices=("step", "linear"), default="linear")


def _common_flags(parser, stochastic=True):
    if stochastic:
        parser.add_argument("--seed", type=int, required=True,
                            help="master seed (required: outputs must be reproducible)")
    parser.add_argument("--out", type=Path, default=None, help="output file (JSON; CSV mirror)")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--cache-dir", type=Path, default=None)
    parser.add_argument("--verbose", action="store_true")


def build_parser() -> _Parser:
    parser = _Parser(prog="metaot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dsw", help="double-sliced distance between two manifest batches")
    p.add_argument("manifest_a", type=Path)
    p.add_argument("manifest_b", type=Path)
    _estimator_flags(p)
    _common_flags(p)

    p = sub.add_parser("sqw", help="sliced quantile distance between two 1D manifest batches")
    p.add_argument("manifest_a", type=Path)
    p.add_argument("manifest_b", type=Path)
    p.add_argument("--paths", type=int, default=10_000, help="number of GP paths")
    p.add_argument("--grid-size", type=int, default=10, metavar="R")
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--kernel", choices=("rbf", "brownian"), default="rbf")
    p.add_argument("--interpolation", choices=("step", "linear"), default="linear")
    _common_flags(p)

    p = sub.add_parser("wow", help="exact Wasserstein-over-Wasserstein between two manifests")
    p.add_argument("manifest_a", type=Path)
    p.add_argument("manifest_b", type=Path)
    p.add_argument("--inner-flag", choices=("exact", "entropic"), default="exact")
    p.add_argument("--epsilon", type=float, default=0.01)
    _common_flags(p, stochastic=False)

    p = sub.add_parser("shape-knn", help="KNN accuracy over SQW shape distances")
    p.add_argument("manifest", type=Path)
    p.add_argument("--paths", type=int, default=100)
    p.add_argument("--grid-size", type=int, default=10, metavar="R")
    p.add_argument("--sigma", type=float, default=0.01)
    p.add_argument("--kernel", choices=("rbf", "brownian"), default="rbf")
    p.add_argument("--interpolation", choices=("step", "linear"), default="linear")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--train-fraction", type=float, default=0.25)
    p.add_argument("--trials", type=int, default=1000)
    _common_flags(p)

    for name, help_text in (
        ("pointcloud-eval", "sweep point-cloud targets against a reference"),
        ("patch-eval", "Perlin texture discrimination sweep"),
        ("mc-report", "Monte Carlo convergence diagnostic"),
        ("bound-check", "DSW <= sliced WoW <= WoW sandwich check"),
        ("gen-perlin", "write a batch of Perlin PGM textures"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", type=Path)
        _common_flags(p)

    return parser


def _load_config_file(path: Path) -> dict:
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ValueError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid config JSON in {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ValueError(f"config root must be an object: {path}")
    return raw


def _config_slicing(cfg: dict, seed: int) -> SlicingConfig:
    kernel = (KernelSpec.rbf(float(cfg.get("sigma", 0.1)))
              if cfg.get("kernel", "rbf") == "rbf" else KernelSpec.brownian())
    return SlicingConfig(
        outer_S=int(cfg.get("outer", 100)),
        inner_per_outer=int(cfg.get("inner", 100)),
        grid=make_grid(int(cfg.get("grid_size", 10))),
        kernel=kernel,
        interpolation=cfg.get("interpolation", "linear"),
        seed=seed,
    )


def _pair_of_metas(cfg: dict, seed: int):
    """Meta-measures from manifests when given, synthetic random otherwise."""
    if "a_manifest" in cfg and "b_manifest" in cfg:
        return (manifest_to_meta(load_manifest(cfg["a_manifest"])),
                manifest_to_meta(load_manifest(cfg["b_manifest"])))
    N = int(cfg.get("N", 4))
    n = int(cfg.get("n", 6))
    d = int(cfg.get("d", 3))
    a = random_meta(N, n, d, substream(seed, "demo-meta", 0))
    b = random_meta(N, n, d, substream(seed, "demo-meta", 1))
    return a, b


def _estimate_result(est) -> dict:
    return {"value": est.value, "std_error": est.std_error, "S": est.S}


def _cmd_dsw(args, verbose):
    a = manifest_to_meta(load_manifest(args.manifest_a))
    b = manifest_to_meta(load_manifest(args.manifest_b))
    est = dsw(a, b, _slicing_config(args), threads=args.threads)
    summary = f"dsw value={est.value:.10g} std_error={est.std_error:.4g} S={est.S}"
    return _estimate_result(est), None, summary


def _cmd_sqw(args, verbose):
    a = manifest_to_meta(load_manifest(args.manifest_a))
    b = manifest_to_meta(load_manifest(args.manifest_b))
    if a.d != 1 or b.d != 1:
        raise ValueError("sqw requires 1-dimensional point clouds")
    grid = make_grid(args.grid_size)
    paths = sample_paths(_kernel_from(args), grid, args.paths,
                         substream(args.seed, "sqw-paths", 0))
    est = sqw(a, b, paths, grid, args.interpolation)
    summary = f"sqw value={est.value:.10g} std_error={est.std_error:.4g} S={est.S}"
    return _estimate_result(est), None, summary


def _cmd_wow(args, verbose):
    a = manifest_to_meta(load_manifest(args.manifest_a))
    b = manifest_to_meta(load_manifest(args.manifest_b))
    cache = resolve_cache(args.cache_dir)
    start = time.perf_counter()
    value = wow_exact(a, b, args.inner_flag, args.epsilon, cache, args.threads)
    if verbose:
        print(f"[metaot] wow computed in {time.perf_counter() - start:.3f}s "
              f"(cache={'on' if cache else 'off'})", file=sys.stderr)
    return {"value": value}, None, f"wow value={value:.10g}"


def _cmd_shape_knn(args, verbose):
    manifest = load_manifest(args.manifest)
    metas = [
        local_distance_distribution(euclidean_mmspace(load_point_cloud(p).points))
        for p in manifest.resolved_paths()
    ]
    grid = make_grid(args.grid_size)
    paths = sample_paths(_kernel_from(args), grid, args.paths,
                         substream(args.seed, "sqw-paths", 0))
    matrix = sqw_distance_matrix(metas, paths, grid, args.interpolation)
    mean, std = knn_classify(matrix, manifest.labels(), KnnConfig(
        k=args.k, train_fraction=args.train_fraction, trials=args.trials,
        seed=args.seed))
    rows = [["", *manifest.labels()]] + [
        [manifest.labels()[i], *(format(x, ".17g") for x in matrix[i])]
        for i in range(matrix.shape[0])
    ]
    summary = f"shape-knn accuracy={mean:.4f} std={std:.4f} shapes={matrix.shape[0]}"
    return {"accuracy_mean": mean, "accuracy_std": std}, rows, summary


def _cmd_pointcloud_eval(args, verbose):
    cfg = _load_config_file(args.config)
    reference = synthetic_reference_meta(int(cfg.get("N", 10)), int(cfg.get("n", 50)),
                                         int(substream(args.seed, "pc-ref", 0).integers(2**63)))
    report = pointcloud_eval(
        reference, perturbation_builder(reference),
        cfg.get("sweep", "sigma"), cfg.get("values", [0.0, 0.05, 0.1, 0.2]),
        cfg.get("metric", "dsw"), int(cfg.get("reps", 5)),
        _config_slicing(cfg, args.seed),
    )
    rows = [["parameter", "metric", "mean", "std"]] + [
        [format(r.parameter, ".17g"), r.metric, format(r.mean, ".17g"), format(r.std, ".17g")]
        for r in report.rows
    ]
    result = {"rows": [r.__dict__ for r in report.rows]}
    return result, rows, f"pointcloud-eval rows={len(report.rows)}"


def _cmd_patch_eval(args, verbose):
    cfg = _load_config_file(args.config)
    vary = cfg.get("vary", "lacunarity")
    if vary not in ("lacunarity", "persistence"):
        raise ValueError(f"unknown vary parameter {vary!r}")
    grid_values = [float(v) for v in cfg.get("values", [1.0, 1.5, 2.0, 2.5, 3.0])]
    reference_value = float(cfg.get("reference", 2.0))
    batch = int(cfg.get("batch", 16))
    h, w, p = int(cfg.get("h", 64)), int(cfg.get("w", 64)), int(cfg.get("p", 8))
    reps = int(cfg.get("reps", 5))
    # study defaults: lacunarity sweeps use persistence 1 with 6 octaves,
    # persistence sweeps use lacunarity 2.5 with 5 octaves
    base = {
        "scale": float(cfg.get("scale", 100.0)),
        "octaves": int(cfg.get("octaves", 6 if vary == "lacunarity" else 5)),
        "persistence": float(cfg.get("persistence", 1.0)),
        "lacunarity": float(cfg.get("lacunarity", 2.5)),
    }
    slicing = _config_slicing(cfg, args.seed)

    def perlin_params(value, seed):
        params = dict(base)
        params[vary] = value
        return PerlinParams(params["scale"], params["octaves"], params["persistence"],
                            params["lacunarity"], seed)

    scores = np.zeros((len(grid_values), reps))
    for rep in range(reps):
        ref_seed = int(substream(args.seed, "patch-ref", rep).integers(2**63))
        ref_meta = batch_to_meta(perlin_batch(
            batch, h, w, perlin_params(reference_value, ref_seed)), p)
        for vi, value in enumerate(grid_values):
            tgt_seed = int(substream(args.seed, "patch-target", rep * 1000 + vi).integers(2**63))
            tgt_meta = batch_to_meta(perlin_batch(
                batch, h, w, perlin_params(value, tgt_seed)), p)
            run_seed = int(substream(args.seed, "patch-run", rep * 1000 + vi).integers(2**63))
            scores[vi, rep] = dsw(ref_meta, tgt_meta, replace(slicing, seed=run_seed),
                                  threads=args.threads).value
        if verbose:
            print(f"[metaot] patch-eval rep {rep + 1}/{reps} done", file=sys.stderr)
    report = EvalReport(tuple(
        EvalRow(v, "dsw", float(scores[vi].mean()),
                float(scores[vi].std(ddof=1)) if reps > 1 else 0.0)
        for vi, v in enumerate(grid_values)
    ))
    best = grid_values[int(np.argmin([r.mean for r in report.rows]))]
    rows = [["parameter", "metric", "mean", "std"]] + [
        [format(r.parameter, ".17g"), r.metric, format(r.mean, ".17g"), format(r.std, ".17g")]
        for r in report.rows
    ]
    result = {"rows": [r.__dict__ for r in report.rows], "argmin": best,
              "reference": reference_value}
    return result, rows, f"patch-eval argmin={best:g} reference={reference_value:g}"


def _cmd_mc_report(args, verbose):
    cfg = _load_config_file(args.config)
    a, b = _pair_of_metas(cfg, args.seed)
    report, slope = mc_convergence_report(
        a, b, [int(s) for s in cfg.get("S_list", [100, 400, 1600, 6400])],
        int(cfg.get("reps", 50)), _config_slicing(cfg, args.seed))
    rows = [["parameter", "metric", "mean", "std"]] + [
        [format(r.parameter, ".17g"), r.metric, format(r.mean, ".17g"), format(r.std, ".17g")]
        for r in report.rows
    ]
    result = {"rows": [r.__dict__ for r in report.rows],
              "slope": slope if slope is not None else "undefined"}
    text = f"{slope:.4f}" if slope is not None else "undefined"
    return result, rows, f"mc-report slope={text}"


def _cmd_bound_check(args, verbose):
    cfg = _load_config_file(args.config)
    a, b = _pair_of_metas(cfg, args.seed)
    slicing = _config_slicing(cfg, args.seed)
    report = bound_check_report(a, b, slicing, sw_outer_S=cfg.get("sw_outer"))
    result = {
        "dsw": _estimate_result(report.dsw_est),
        "sw_wow": _estimate_result(report.sw_est),
        "wow": report.wow_value,
        "dsw_le_sw": report.dsw_le_sw,
        "sw_le_wow": report.sw_le_wow,
        "passed": report.passed,
    }
    verdict = "PASS" if report.passed else "FAIL"
    summary = (f"bound-check {verdict} dsw={report.dsw_est.value:.6g} "
               f"sw_wow={report.sw_est.value:.6g} wow={report.wow_value:.6g}")
    return result, None, summary


def _cmd_gen_perlin(args, verbose):
    cfg = _load_config_file(args.config)
    params = PerlinParams(
        scale=float(cfg.get("scale", 100.0)),
        octaves=int(cfg.get("octaves", 6)),
        persistence=float(cfg.get("persistence", 1.0)),
        lacunarity=float(cfg.get("lacunarity", 2.0)),
        seed=args.seed,
    )
    count = int(cfg.get("count", 16))
    h, w = int(cfg.get("h", 64)), int(cfg.get("w", 64))
    out_dir = Path(cfg.get("out_dir", "perlin_out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    binary = bool(cfg.get("binary", False))
    names = []
    for k, img in enumerate(perlin_batch(count, h, w, params)):
        name = f"{cfg.get('prefix', 'tex')}_{k:04d}.pgm"
        write_pgm(img, out_dir / name, binary=binary)
        names.append(name)
    result = {"images": names, "out_dir": str(out_dir)}
    return result, None, f"gen-perlin wrote {count} images to {out_dir}"


_COMMANDS = {
    "dsw": _cmd_dsw,
    "sqw": _cmd_sqw,
    "wow": _cmd_wow,
    "shape-knn": _cmd_shape_knn,
    "pointcloud-eval": _cmd_pointcloud_eval,
    "patch-eval": _cmd_patch_eval,
    "mc-report": _cmd_mc_report,
    "bound-check": _cmd_bound_check,
    "gen-perlin": _cmd_gen_perlin,
}

#: argparse fields that affect execution only, never results
_EXECUTION_FLAGS = ("out", "threads", "cache_dir", "verbose", "command")


def _resolved_config(args) -> dict:
    cfg = {}
    for key, value in sorted(vars(args).items()):
        if key in _EXECUTION_FLAGS:
            continue
        cfg[key] = str(value) if isinstance(value, Path) else value
    return cfg


def _write_outputs(args, payload: dict, rows) -> None:
    if args.out is None:
        return
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
    if rows is not None:
        csv_path = args.out.with_suffix(".csv")
        csv_path.write_text("\n".join(",".join(str(c) for c in row) for row in rows) + "\n",
                            encoding="utf-8")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        result, rows, summary = _COMMANDS[args.command](args, args.verbose)
        payload = {
            "tool": "metaot",
            "version": __version__,
            "command": args.command,
            "config": _resolved_config(args),
            "result": result,
        }
        _write_outputs(args, payload, rows)
        print(summary)
        if args.command == "bound-check" and not result["passed"]:
            return 2
        return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
