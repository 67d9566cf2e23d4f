"""Experiment orchestration: end-to-end tuned PU fits, timing, and CSV reports."""

from __future__ import annotations

import dataclasses
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bayesopt import BoConfig, bo_minimize
from .errors import InsufficientPoints
from .geometry import (
    PointSet,
    Subdomain,
    build_center_grid,
    compute_delta_min,
    generate_uniform_points,
    points_in_ball,
)
from .kernels import RadialKernel, validate_family
from .loocv import GridSpec, SearchBox, grid_search
from .pum import PuInterpolant, fit_local, franke_like_test_function, max_abs_error

# Stream tags for per-subdomain seed derivation.
_STREAM_TEST = 0
_STREAM_SPLIT = 1
_STREAM_BO = 2


def _derived_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(entropy=seed, spawn_key=key).generate_state(1)[0])


def _default_target(points: np.ndarray) -> np.ndarray:
    return franke_like_test_function(points[:, 0], points[:, 1])


@dataclass
class ExperimentConfig:
    """One benchmark run: data sizes, kernel, optimizer, and tuning budgets."""

    n_train: int
    optimizer: str  # "loocv" or "bo"
    kernel: str = "gaussian"
    n_test: int = 1000
    tau: float | None = None  # BO stopping tolerance
    seed: int = 0
    grid: GridSpec = field(default_factory=GridSpec)
    bo: BoConfig | None = None
    split_fraction: float = 0.8
    n_min: int = 15
    threads: int = 1
    target: Callable[[np.ndarray], np.ndarray] = _default_target

    def __post_init__(self):
        validate_family(self.kernel)
        if self.optimizer not in ("loocv", "bo"):
            raise ValueError("optimizer must be 'loocv' or 'bo'")
        if self.optimizer == "bo" and self.tau is None and self.bo is None:
            raise ValueError("BO runs need a tolerance tau")
        if not 0.0 < self.split_fraction < 1.0:
            raise ValueError("split_fraction must be in (0, 1)")
        if self.n_min < 2:
            raise ValueError("n_min must be at least 2")
        if self.n_train < 4:
            raise ValueError("n_train must be at least 2^d = 4")


@dataclass(frozen=True)
class ResultRow:
    """One benchmark record, written as a row of the results CSV."""

    n: int
    optimizer: str
    tau: float | None
    time_s: float
    mae: float
    kernel: str
    seed: int
    m: int
    mean_bo_iters: float | None


def split_subdomain(member_indices, fraction: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Shuffle the members and split them into sub-train / sub-validation.

    The first ceil(fraction * n) shuffled members go to sub-train, capped so
    each side keeps at least one point.  Disjoint and exhaustive.
    """
    members = np.asarray(member_indices)
    n = members.shape[0]
    if n < 2:
        raise InsufficientPoints("need at least 2 members to split")
    n_train = min(max(math.ceil(fraction * n), 1), n - 1)
    perm = rng.permutation(n)
    return members[perm[:n_train]], members[perm[n_train:]]


def bo_objective_for_subdomain(
    train: PointSet, sub: Subdomain, kernel_family: str, split
) -> Callable[[float, float], float]:
    """Black-box objective: sub-validation MAE of the local fit at (eps, delta).

    Membership is recomputed at radius delta, intersected with the sub-train
    indices for fitting; the score is the max absolute error at sub-validation
    points inside the ball.  Infeasible configurations score +inf.
    """
    sub_train, sub_val = (np.asarray(s) for s in split)
    train_mask = np.zeros(train.n, dtype=bool)
    train_mask[sub_train] = True
    val_mask = np.zeros(train.n, dtype=bool)
    val_mask[sub_val] = True

    def objective(eps: float, delta: float) -> float:
        members = points_in_ball(train, sub.center, delta)
        fit_idx = members[train_mask[members]]
        val_idx = members[val_mask[members]]
        if fit_idx.size < 1 or val_idx.size < 1:
            return math.inf
        try:
            local_sub = Subdomain(sub.center, delta, fit_idx, sub.delta_min)
            model = fit_local(train, local_sub, RadialKernel(kernel_family, eps))
            pred = model.predict(train.points[val_idx])
        except Exception:
            return math.inf
        err = float(np.max(np.abs(pred - train.values[val_idx])))
        return err if math.isfinite(err) else math.inf

    return objective


def _bo_config_for(config: ExperimentConfig, bo_seed: int) -> BoConfig:
    if config.bo is not None:
        return dataclasses.replace(config.bo, seed=bo_seed)
    return BoConfig(tolerance=config.tau, seed=bo_seed)


def _tune_subdomain(train: PointSet, center: np.ndarray, m: int, config: ExperimentConfig, j: int):
    d = train.dim
    delta_min = compute_delta_min(train, center, m, d, config.n_min)
    members_max = points_in_ball(train, center, 2.0 * delta_min)
    proto = Subdomain(center, 2.0 * delta_min, members_max, delta_min)

    if config.optimizer == "loocv":
        result = grid_search(train, proto, config.kernel, config.grid)
        eps, delta = result.best_eps, result.best_delta
        iters = None
    else:
        split_rng = np.random.default_rng(
            np.random.SeedSequence(entropy=config.seed, spawn_key=(_STREAM_SPLIT, j))
        )
        split = split_subdomain(members_max, config.split_fraction, split_rng)
        objective = bo_objective_for_subdomain(train, proto, config.kernel, split)
        bo_cfg = _bo_config_for(config, _derived_seed(config.seed, _STREAM_BO, j))
        result = bo_minimize(objective, SearchBox(delta_min), bo_cfg)
        eps, delta = result.best_input
        iters = len(result.history)

    members = points_in_ball(train, center, delta)
    tuned = Subdomain(center, delta, members, delta_min)
    local = fit_local(train, tuned, RadialKernel(config.kernel, eps))
    return local, iters


def _run(config: ExperimentConfig) -> tuple[PuInterpolant, ResultRow]:
    train_pts = generate_uniform_points(config.n_train, 2, config.seed)
    train = PointSet(train_pts.points, config.target(train_pts.points))
    test_pts = generate_uniform_points(
        config.n_test, 2, _derived_seed(config.seed, _STREAM_TEST)
    )
    test = PointSet(test_pts.points, config.target(test_pts.points))

    t0 = time.perf_counter()
    grid = build_center_grid(config.n_train, 2)
    jobs = [(train, grid.centers[j], grid.m, config, j) for j in range(grid.m)]
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            tuned = list(pool.map(lambda a: _tune_subdomain(*a), jobs))
    else:
        tuned = [_tune_subdomain(*a) for a in jobs]
    locals_, iter_counts = zip(*tuned)
    interp = PuInterpolant(locals_)
    elapsed = time.perf_counter() - t0

    mae = max_abs_error(interp, test)
    mean_iters = (
        float(np.mean([i for i in iter_counts]))
        if config.optimizer == "bo"
        else None
    )
    row = ResultRow(
        n=config.n_train,
        optimizer=config.optimizer,
        tau=config.tau if config.optimizer == "bo" else None,
        time_s=elapsed,
        mae=mae,
        kernel=config.kernel,
        seed=config.seed,
        m=grid.m,
        mean_bo_iters=mean_iters,
    )
    return interp, row


def run_bo_pum(config: ExperimentConfig) -> tuple[PuInterpolant, ResultRow]:
    """Tune every subdomain with BO, refit on all members, and report test MAE."""
    if config.optimizer != "bo":
        raise ValueError("config.optimizer must be 'bo'")
    return _run(config)


def run_loocv_pum(config: ExperimentConfig) -> tuple[PuInterpolant, ResultRow]:
    """Tune every subdomain with the exhaustive grid and report test MAE."""
    if config.optimizer != "loocv":
        raise ValueError("config.optimizer must be 'loocv'")
    return _run(config)


def run_fixed_pum(
    config: ExperimentConfig, eps: float, delta_scale: float = 1.5
) -> tuple[PuInterpolant, ResultRow]:
    """Fit without tuning: every subdomain uses eps and delta = delta_scale * delta_min."""
    if not 1.0 <= delta_scale <= 2.0:
        raise ValueError("delta_scale must lie in [1, 2]")
    train_pts = generate_uniform_points(config.n_train, 2, config.seed)
    train = PointSet(train_pts.points, config.target(train_pts.points))
    test_pts = generate_uniform_points(
        config.n_test, 2, _derived_seed(config.seed, _STREAM_TEST)
    )
    test = PointSet(test_pts.points, config.target(test_pts.points))

    t0 = time.perf_counter()
    grid = build_center_grid(config.n_train, 2)
    locals_ = []
    for j in range(grid.m):
        center = grid.centers[j]
        delta_min = compute_delta_min(train, center, grid.m, 2, config.n_min)
        delta = delta_scale * delta_min
        sub = Subdomain(center, delta, points_in_ball(train, center, delta), delta_min)
        locals_.append(fit_local(train, sub, RadialKernel(config.kernel, eps)))
    interp = PuInterpolant(locals_)
    elapsed = time.perf_counter() - t0

    row = ResultRow(
        n=config.n_train,
        optimizer="fixed",
        tau=None,
        time_s=elapsed,
        mae=max_abs_error(interp, test),
        kernel=config.kernel,
        seed=config.seed,
        m=grid.m,
        mean_bo_iters=None,
    )
    return interp, row


RESULT_HEADER = "N,optimizer,tau,kernel,time_s,mae,m,mean_bo_iters,seed"


def _row_sort_key(row: ResultRow):
    return (-row.n, row.optimizer, row.tau if row.tau is not None else -1.0)


def format_row(row: ResultRow) -> str:
    tau = "" if row.tau is None else f"{row.tau:.0e}"
    iters = "" if row.mean_bo_iters is None else f"{row.mean_bo_iters:.2f}"
    return (
        f"{row.n},{row.optimizer},{tau},{row.kernel},"
        f"{row.time_s:.2e},{row.mae:.2e},{row.m},{iters},{row.seed}"
    )


def emit_results(rows, path) -> None:
    """Write benchmark rows as CSV, sorted by N descending, optimizer, tau."""
    if not rows:
        raise ValueError("need at least one result row")
    ordered = sorted(rows, key=_row_sort_key)
    with open(path, "w") as fh:
        fh.write(RESULT_HEADER + "\n")
        for row in ordered:
            fh.write(format_row(row) + "\n")


BENCH_PRESETS = {
    # Table-style full matrix; takes on the order of an hour.
    "paper": dict(
        n_list=(8000, 4000, 2000),
        taus=(1e-4, 1e-5),
        kernels=("gaussian", "matern4"),
        grid=GridSpec(500, 30),
        n_test=1000,
    ),
    # A few minutes: one size, both kernels, reduced grid.
    "desk": dict(
        n_list=(1000,),
        taus=(1e-4,),
        kernels=("gaussian", "matern4"),
        grid=GridSpec(100, 10),
        n_test=1000,
    ),
    # Seconds; used for determinism checks.
    "smoke": dict(
        n_list=(256,),
        taus=(1e-3,),
        kernels=("gaussian",),
        grid=GridSpec(20, 5),
        n_test=400,
    ),
}


def run_bench(
    n_list,
    taus,
    kernels,
    grid: GridSpec,
    n_test: int = 1000,
    seed: int = 0,
    threads: int = 1,
    progress: Callable[[str], None] | None = None,
) -> list[ResultRow]:
    """Run the LOOCV + BO matrix over sizes, tolerances, and kernels."""
    rows = []
    for n in n_list:
        for kernel in kernels:
            base = dict(
                n_train=n, kernel=kernel, n_test=n_test, seed=seed, threads=threads
            )
            _, row = run_loocv_pum(
                ExperimentConfig(optimizer="loocv", grid=grid, **base)
            )
            rows.append(row)
            if progress:
                progress(format_row(row))
            for tau in taus:
                _, row = run_bo_pum(ExperimentConfig(optimizer="bo", tau=tau, **base))
                rows.append(row)
                if progress:
                    progress(format_row(row))
    return rows
