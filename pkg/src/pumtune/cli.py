"""Command-line interface: generate point clouds, fit, tune, and run benchmarks."""

from __future__ import annotations

import argparse
import sys

from .bayesopt import BoConfig
from .errors import PumtuneError
from .geometry import PointSet, generate_uniform_points, save_points_csv
from .harness import (
    BENCH_PRESETS,
    ExperimentConfig,
    RESULT_HEADER,
    emit_results,
    format_row,
    run_bench,
    run_bo_pum,
    run_fixed_pum,
    run_loocv_pum,
)
from .loocv import GridSpec
from .pum import franke_like_test_function

DEFAULTS = {
    "n_train": 1000,
    "n_test": 1000,
    "kernel": "gaussian",
    "optimizer": "bo",
    "tau": 1e-4,
    "seed": 0,
    "grid_eps": 500,
    "grid_delta": 30,
    "bo_init": 5,
    "bo_iters": 25,
    "split": 0.8,
    "n_min": 15,
    "threads": 1,
    "eps": 6.0,
    "delta_scale": 1.5,
    "preset": "desk",
}


def load_config_file(path) -> dict:
    """Parse a flat key=value config file; '#' starts a comment line."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _resolve(args, file_cfg: dict, key: str, cast):
    flag_value = getattr(args, key, None)
    if flag_value is not None:
        return flag_value
    if key in file_cfg:
        return cast(file_cfg[key])
    return DEFAULTS[key]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--n-train", dest="n_train", type=int)
    parser.add_argument("--n-test", dest="n_test", type=int)
    parser.add_argument("--kernel", choices=("gaussian", "matern4"))
    parser.add_argument("--seed", type=int)
    parser.add_argument("--n-min", dest="n_min", type=int)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--out", help="output file path")


def _add_tuning(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--optimizer", choices=("loocv", "bo"))
    parser.add_argument("--tau", type=float)
    parser.add_argument("--grid-eps", dest="grid_eps", type=int)
    parser.add_argument("--grid-delta", dest="grid_delta", type=int)
    parser.add_argument("--bo-init", dest="bo_init", type=int)
    parser.add_argument("--bo-iters", dest="bo_iters", type=int)
    parser.add_argument("--split", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pumtune",
        description="Partition-of-unity RBF interpolation with tuned hyperparameters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="write a random labeled point cloud as CSV")
    _add_common(p_gen)
    p_gen.add_argument("--header", action="store_true", help="write a CSV header row")

    p_fit = sub.add_parser("fit", help="fit with fixed epsilon and delta scale")
    _add_common(p_fit)
    p_fit.add_argument("--eps", type=float)
    p_fit.add_argument("--delta-scale", dest="delta_scale", type=float)

    p_tune = sub.add_parser("tune", help="one tuned run with either optimizer")
    _add_common(p_tune)
    _add_tuning(p_tune)

    p_bench = sub.add_parser("bench", help="run a benchmark matrix and emit CSV")
    _add_common(p_bench)
    _add_tuning(p_bench)
    p_bench.add_argument("--preset", choices=tuple(BENCH_PRESETS))
    p_bench.add_argument("--n-list", dest="n_list", help="comma-separated training sizes")
    p_bench.add_argument("--taus", help="comma-separated BO tolerances")
    p_bench.add_argument("--kernels", help="comma-separated kernel names")

    return parser


def _experiment_config(args, cfg: dict, optimizer: str) -> ExperimentConfig:
    grid = GridSpec(
        n_eps=_resolve(args, cfg, "grid_eps", int),
        n_delta=_resolve(args, cfg, "grid_delta", int),
    )
    tau = _resolve(args, cfg, "tau", float)
    bo = None
    if optimizer == "bo":
        bo = BoConfig(
            tolerance=tau,
            n_init=_resolve(args, cfg, "bo_init", int),
            max_bayes_iters=_resolve(args, cfg, "bo_iters", int),
        )
    return ExperimentConfig(
        n_train=_resolve(args, cfg, "n_train", int),
        optimizer=optimizer,
        kernel=_resolve(args, cfg, "kernel", str),
        n_test=_resolve(args, cfg, "n_test", int),
        tau=tau if optimizer == "bo" else None,
        seed=_resolve(args, cfg, "seed", int),
        grid=grid,
        bo=bo,
        split_fraction=_resolve(args, cfg, "split", float),
        n_min=_resolve(args, cfg, "n_min", int),
        threads=_resolve(args, cfg, "threads", int),
    )


def _cmd_generate(args, cfg: dict) -> int:
    n = _resolve(args, cfg, "n_train", int)
    seed = _resolve(args, cfg, "seed", int)
    out = args.out or cfg.get("out")
    if out is None:
        raise ValueError("generate needs --out")
    cloud = generate_uniform_points(n, 2, seed)
    values = franke_like_test_function(cloud.points[:, 0], cloud.points[:, 1])
    save_points_csv(PointSet(cloud.points, values), out, header=args.header)
    print(f"wrote {n} labeled points to {out}")
    return 0


def _cmd_fit(args, cfg: dict) -> int:
    config = _experiment_config(args, cfg, "bo")  # budgets unused by fixed fit
    _, row = run_fixed_pum(
        config,
        eps=_resolve(args, cfg, "eps", float),
        delta_scale=_resolve(args, cfg, "delta_scale", float),
    )
    _report([row], args.out or cfg.get("out"))
    return 0


def _cmd_tune(args, cfg: dict) -> int:
    optimizer = _resolve(args, cfg, "optimizer", str)
    config = _experiment_config(args, cfg, optimizer)
    runner = run_bo_pum if optimizer == "bo" else run_loocv_pum
    _, row = runner(config)
    _report([row], args.out or cfg.get("out"))
    return 0


def _cmd_bench(args, cfg: dict) -> int:
    preset = BENCH_PRESETS[_resolve(args, cfg, "preset", str)]
    n_list = preset["n_list"]
    taus = preset["taus"]
    kernels = preset["kernels"]
    grid = preset["grid"]
    n_test = _resolve(args, cfg, "n_test", int) if (args.n_test or "n_test" in cfg) else preset["n_test"]
    raw_n = args.n_list or cfg.get("n_list")
    if raw_n:
        n_list = tuple(int(v) for v in str(raw_n).split(","))
    raw_taus = args.taus or cfg.get("taus")
    if raw_taus:
        taus = tuple(float(v) for v in str(raw_taus).split(","))
    raw_kernels = args.kernels or cfg.get("kernels")
    if raw_kernels:
        kernels = tuple(str(raw_kernels).split(","))
    if args.grid_eps or args.grid_delta or "grid_eps" in cfg or "grid_delta" in cfg:
        grid = GridSpec(
            n_eps=_resolve(args, cfg, "grid_eps", int),
            n_delta=_resolve(args, cfg, "grid_delta", int),
        )
    rows = run_bench(
        n_list,
        taus,
        kernels,
        grid,
        n_test=n_test,
        seed=_resolve(args, cfg, "seed", int),
        threads=_resolve(args, cfg, "threads", int),
        progress=lambda line: print(line, flush=True),
    )
    _report(rows, args.out or cfg.get("out"))
    return 0


def _report(rows, out) -> None:
    if out:
        emit_results(rows, out)
        print(f"wrote {len(rows)} result row(s) to {out}")
    else:
        print(RESULT_HEADER)
        for row in rows:
            print(format_row(row))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = load_config_file(args.config) if args.config else {}
    handlers = {
        "generate": _cmd_generate,
        "fit": _cmd_fit,
        "tune": _cmd_tune,
        "bench": _cmd_bench,
    }
    try:
        return handlers[args.command](args, cfg)
    except (PumtuneError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
