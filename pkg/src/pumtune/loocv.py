"""Closed-form leave-one-out errors and the exhaustive (epsilon, delta) grid tuner."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientPoints, SingularSystem
from .geometry import PointSet, Subdomain, points_in_ball
from .kernels import (
    RadialKernel,
    check_distinct,
    gram_from_distances,
    inverse_diagonal,
    pairwise_distances,
    solve_spd,
    validate_family,
)


@dataclass(frozen=True)
class SearchBox:
    """Per-subdomain search space: epsilon in (0, eps_max], delta in [delta_min, 2*delta_min]."""

    delta_min: float
    eps_max: float = 20.0

    def __post_init__(self):
        if self.delta_min <= 0 or self.eps_max <= 0:
            raise ValueError("search box bounds must be positive")

    @property
    def delta_max(self) -> float:
        return 2.0 * self.delta_min

    def contains(self, eps: float, delta: float) -> bool:
        tol = 1e-12
        return (
            0.0 < eps <= self.eps_max * (1 + tol)
            and self.delta_min * (1 - tol) <= delta <= self.delta_max * (1 + tol)
        )

    def from_unit(self, u) -> tuple[float, float]:
        """Map a point of [0, 1]^2 into the box (epsilon floor keeps it > 0)."""
        eps = max(float(u[0]) * self.eps_max, self.eps_max * 1e-12)
        delta = self.delta_min * (1.0 + float(u[1]))
        return eps, min(delta, self.delta_max)

    def to_unit(self, eps: float, delta: float) -> np.ndarray:
        return np.array([eps / self.eps_max, delta / self.delta_min - 1.0])


@dataclass(frozen=True)
class GridSpec:
    """Sample counts for the exhaustive search over the box."""

    n_eps: int = 500
    n_delta: int = 30

    def __post_init__(self):
        if self.n_eps < 1 or self.n_delta < 1:
            raise ValueError("grid counts must be at least 1")

    def eps_values(self, box: SearchBox) -> np.ndarray:
        # Half-open interval: epsilon = eps_max * i / n_eps, i = 1..n_eps.
        return box.eps_max * np.arange(1, self.n_eps + 1) / self.n_eps

    def delta_values(self, box: SearchBox) -> np.ndarray:
        return np.linspace(box.delta_min, box.delta_max, self.n_delta)


@dataclass(frozen=True)
class TuneResult:
    best_eps: float
    best_delta: float
    best_score: float
    evaluations: int
    elapsed: float


def _rippa_from_arrays(
    points: np.ndarray, values: np.ndarray, kernel: RadialKernel
) -> np.ndarray:
    dist = pairwise_distances(points, points)
    check_distinct(dist)
    K = gram_from_distances(kernel, dist)
    c, fact = solve_spd(K, values)
    return c / inverse_diagonal(fact)


def rippa_errors(train_j: PointSet, kernel: RadialKernel) -> np.ndarray:
    """Leave-one-out errors from one factorization, entry k = c_k / (K^{-1})_kk.

    Entry k equals the residual f_k - P^{[k]}(x_k) of the interpolant refit
    without point k, but no refits are performed.
    """
    if train_j.values is None:
        raise ValueError("point set carries no values")
    if train_j.n < 2:
        raise InsufficientPoints("leave-one-out needs at least 2 points")
    return _rippa_from_arrays(train_j.points, train_j.values, kernel)


def loocv_criterion(
    train: PointSet, eps: float, delta: float, sub: Subdomain, kernel_family: str
) -> float:
    """Max-absolute leave-one-out error of the local model at (eps, delta).

    Membership is recomputed for radius `delta` around the subdomain center,
    so delta changes both the data and the system being scored.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if train.values is None:
        raise ValueError("training set carries no values")
    validate_family(kernel_family)
    members = points_in_ball(train, sub.center, delta)
    if members.size < 2:
        raise InsufficientPoints(
            f"delta-ball holds {members.size} points; need at least 2"
        )
    errors = _rippa_from_arrays(
        train.points[members], train.values[members], RadialKernel(kernel_family, eps)
    )
    return float(np.max(np.abs(errors)))


def grid_search(
    train: PointSet, sub: Subdomain, kernel_family: str, grid: GridSpec
) -> TuneResult:
    """Exhaustive minimization of the leave-one-out criterion over the box grid.

    Epsilon is sampled at eps_max * i / n_eps (exclusive of 0), delta at
    n_delta equispaced values spanning [delta_min, 2*delta_min] inclusive.
    Ties break toward smaller epsilon, then smaller delta; pairs whose
    factorization fails at every jitter level score +inf and are skipped.
    """
    validate_family(kernel_family)
    if train.values is None:
        raise ValueError("training set carries no values")
    box = SearchBox(sub.delta_min)
    eps_vals = grid.eps_values(box)
    delta_vals = grid.delta_values(box)
    scores = np.full((grid.n_eps, grid.n_delta), np.inf)
    t0 = time.perf_counter()
    for j_d, delta in enumerate(delta_vals):
        members = points_in_ball(train, sub.center, float(delta))
        if members.size < 2:
            continue
        pts = train.points[members]
        f = train.values[members]
        dist = pairwise_distances(pts, pts)
        check_distinct(dist)
        for i_e, eps in enumerate(eps_vals):
            kernel = RadialKernel(kernel_family, float(eps))
            try:
                K = gram_from_distances(kernel, dist)
                c, fact = solve_spd(K, f)
                scores[i_e, j_d] = np.max(np.abs(c / inverse_diagonal(fact)))
            except SingularSystem:
                continue
    flat = int(np.argmin(scores))  # first minimum: smallest eps, then delta
    i_e, j_d = divmod(flat, grid.n_delta)
    return TuneResult(
        best_eps=float(eps_vals[i_e]),
        best_delta=float(delta_vals[j_d]),
        best_score=float(scores[i_e, j_d]),
        evaluations=grid.n_eps * grid.n_delta,
        elapsed=time.perf_counter() - t0,
    )
