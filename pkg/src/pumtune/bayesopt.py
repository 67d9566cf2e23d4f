"""Gaussian-process surrogate, Expected Improvement, and the budgeted BO loop."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.spatial.distance import cdist
from scipy.special import ndtr

from .errors import SingularSystem
from .kernels import SpdFactorization, solve_spd
from .loocv import SearchBox

DEFAULT_LENGTHSCALE_GRID = (0.05, 0.1, 0.2, 0.5, 1.0)

# Raw objective values are capped before the surrogate transform so that
# +inf failure scores stay representable while preserving the ranking.
OBJECTIVE_CAP = 1e12

# Predictive deviations below this floor contribute zero improvement.
SIGMA_FLOOR = 1e-12

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class GpModel:
    """Fitted GP surrogate on [0, 1]^2 with anisotropic squared-exponential covariance.

    The covariance is signal_variance * exp(-sum_a (x_a - x'_a)^2 / (2 l_a^2)),
    with a noise nugget expressed relative to the signal variance, so the
    full train covariance is signal_variance * (R + noise_variance * I).
    """

    inputs: np.ndarray
    outputs: np.ndarray
    lengthscales: np.ndarray
    signal_variance: float
    noise_variance: float
    y_mean: float
    fact: SpdFactorization
    alpha: np.ndarray
    lower_inv: np.ndarray


def _correlation(a: np.ndarray, b: np.ndarray, lengthscales: np.ndarray) -> np.ndarray:
    # exp(-sum_a (x_a - x'_a)^2 / (2 l_a^2)) as a squared distance on
    # coordinates scaled by sqrt(2) * l_a.
    scale = math.sqrt(2.0) * np.asarray(lengthscales, dtype=float)
    return np.exp(-cdist(a / scale, b / scale, "sqeuclidean"))


def _profiled_lml(quad: float, logdet_half: float, s: int) -> tuple[float, float]:
    """Signal variance maximizing the likelihood for a fixed correlation, and
    the likelihood value there; near-zero output energy falls back to unit
    signal variance."""
    sig2 = quad / s
    if sig2 < 1e-12:
        sig2 = 1.0
    lml = -0.5 * s * (1.0 + _LOG_2PI) - 0.5 * s * math.log(sig2) - logdet_half
    return sig2, lml


def gp_fit(
    inputs,
    outputs,
    *,
    noise_variance: float = 1e-8,
    lengthscale_grid=DEFAULT_LENGTHSCALE_GRID,
) -> GpModel:
    """Fit a zero-mean GP to centered outputs, selecting hyperparameters on a grid.

    For each (l1, l2) cell of the lengthscale grid, the signal variance is
    profiled in closed form as y^T C^{-1} y / s with C = R + noise * I, and the
    cell maximizing the profiled log marginal likelihood wins (first cell on
    ties).  The grid is factorized once per cell, batched across cells.
    """
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(outputs, dtype=float)
    s = X.shape[0]
    if s < 1 or y.shape != (s,):
        raise ValueError("inputs and outputs must be non-empty and matched")
    y_mean = float(y.mean())
    yc = y - y_mean

    d1 = (X[:, 0, None] - X[None, :, 0]) ** 2
    d2 = (X[:, 1, None] - X[None, :, 1]) ** 2
    cells = [(l1, l2) for l1 in lengthscale_grid for l2 in lengthscale_grid]
    inv1 = np.array([0.5 / l1**2 for l1, _ in cells])
    inv2 = np.array([0.5 / l2**2 for _, l2 in cells])
    C = np.exp(-(inv1[:, None, None] * d1[None] + inv2[:, None, None] * d2[None]))
    diag = np.arange(s)
    C[:, diag, diag] += noise_variance

    best = None
    try:
        L = np.linalg.cholesky(C)
        logdet_half = np.log(np.diagonal(L, axis1=1, axis2=2)).sum(axis=1)
        quad = np.linalg.solve(C, yc) @ yc
        for k in range(len(cells)):
            sig2, lml = _profiled_lml(float(quad[k]), float(logdet_half[k]), s)
            if best is None or lml > best[0]:
                best = (lml, k, sig2)
    except np.linalg.LinAlgError:
        # Rare: some cell is numerically indefinite; score cells one by one.
        for k in range(len(cells)):
            try:
                Lk = cholesky(C[k], lower=True, check_finite=False)
            except np.linalg.LinAlgError:
                continue
            z = solve_triangular(Lk, yc, lower=True, check_finite=False)
            sig2, lml = _profiled_lml(float(z @ z), float(np.log(np.diag(Lk)).sum()), s)
            if best is None or lml > best[0]:
                best = (lml, k, sig2)
    if best is None:
        raise SingularSystem("no lengthscale cell produced a positive definite covariance")
    _, k, sig2 = best
    ls = np.array(cells[k], dtype=float)
    alpha, fact = solve_spd(C[k], yc)
    lower_inv = solve_triangular(
        fact.lower, np.eye(s), lower=True, check_finite=False
    )
    return GpModel(
        inputs=X,
        outputs=y,
        lengthscales=ls,
        signal_variance=sig2,
        noise_variance=noise_variance,
        y_mean=y_mean,
        fact=fact,
        alpha=alpha,
        lower_inv=lower_inv,
    )


def _gp_predict_many(model: GpModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r = _correlation(np.atleast_2d(x), model.inputs, model.lengthscales)
    mu = r @ model.alpha + model.y_mean
    v = r @ model.lower_inv.T
    sigma2 = model.signal_variance * np.maximum(
        0.0, 1.0 - np.einsum("ij,ij->i", v, v)
    )
    return mu, sigma2


def gp_predict(model: GpModel, x) -> tuple[float, float]:
    """Posterior mean and (clamped non-negative) variance at one point of [0, 1]^2."""
    mu, sigma2 = _gp_predict_many(model, np.asarray(x, dtype=float)[np.newaxis, :])
    return float(mu[0]), float(sigma2[0])


def expected_improvement(mu, sigma, best):
    """Closed-form expected improvement over `best` for a maximization target.

    EI = (mu - best) * Phi(Z) + sigma * phi(Z) with Z = (mu - best) / sigma,
    and exactly 0 where sigma is 0 (or below the numerical floor).
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    scalar = mu.ndim == 0 and sigma.ndim == 0
    diff = mu - best
    safe = np.maximum(sigma, SIGMA_FLOOR)
    z = diff / safe
    pdf = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    ei = np.maximum(diff * ndtr(z) + safe * pdf, 0.0)
    out = np.where(sigma > SIGMA_FLOOR, ei, 0.0)
    return float(out) if scalar else out


def propose_next(model: GpModel, best: float, budget: int, rng) -> np.ndarray:
    """Seeded-candidate acquisition maximization over [0, 1]^2.

    Draws `budget` uniform candidates, scores each by expected improvement,
    and returns the argmax (first occurrence on ties).
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    candidates = rng.random((budget, 2))
    mu, sigma2 = _gp_predict_many(model, candidates)
    ei = expected_improvement(mu, np.sqrt(sigma2), best)
    return candidates[int(np.argmax(ei))]


@dataclass(frozen=True)
class BoConfig:
    """Budget and stopping policy for one BO run."""

    tolerance: float
    seed: int = 0
    n_init: int = 5
    max_bayes_iters: int = 25
    candidate_budget: int = 2048
    noise_variance: float = 1e-8
    objective_transform: str = "log10"  # or "negate"

    def __post_init__(self):
        if self.n_init < 1 or self.max_bayes_iters < 0:
            raise ValueError("n_init must be >= 1 and max_bayes_iters >= 0")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.objective_transform not in ("log10", "negate"):
            raise ValueError("objective_transform must be 'log10' or 'negate'")


@dataclass(frozen=True)
class BoResult:
    best_input: tuple[float, float]
    best_objective: float
    history: tuple
    stopped_by_tolerance: bool
    elapsed: float


def _surrogate_targets(raw: np.ndarray, transform: str) -> np.ndarray:
    capped = np.minimum(raw, OBJECTIVE_CAP)
    if transform == "log10":
        return -np.log10(capped + 1e-16)
    return -capped


def bo_minimize(objective, box: SearchBox, config: BoConfig) -> BoResult:
    """Minimize a black-box objective over the box with a GP surrogate.

    Runs n_init seeded uniform evaluations, then up to max_bayes_iters rounds
    of fit / propose-by-EI / evaluate.  The surrogate models a monotone
    transform of the raw objective (negated, so BO maximizes); stopping
    applies to the raw value: the loop ends as soon as the best raw objective
    is <= tolerance, checked after every evaluation including the initial ones.
    Non-finite objective values are recorded as +inf and never win.
    """
    rng = np.random.default_rng(config.seed)
    t0 = time.perf_counter()
    units: list[np.ndarray] = []
    raws: list[float] = []
    history: list[tuple[tuple[float, float], float]] = []
    stopped = False

    def evaluate_at(u: np.ndarray) -> None:
        nonlocal stopped
        eps, delta = box.from_unit(u)
        try:
            val = float(objective(eps, delta))
        except Exception:
            val = math.inf
        if math.isnan(val) or val == -math.inf:
            val = math.inf
        units.append(np.asarray(u, dtype=float))
        raws.append(val)
        history.append(((eps, delta), val))
        if val <= config.tolerance:
            stopped = True

    for _ in range(config.n_init):
        evaluate_at(rng.random(2))
        if stopped:
            break

    iters = 0
    while not stopped and iters < config.max_bayes_iters:
        targets = _surrogate_targets(np.array(raws), config.objective_transform)
        model = gp_fit(
            np.array(units), targets, noise_variance=config.noise_variance
        )
        u_next = propose_next(
            model, float(targets.max()), config.candidate_budget, rng
        )
        evaluate_at(u_next)
        iters += 1

    best_idx = int(np.argmin(raws))
    return BoResult(
        best_input=history[best_idx][0],
        best_objective=raws[best_idx],
        history=tuple(history),
        stopped_by_tolerance=stopped,
        elapsed=time.perf_counter() - t0,
    )
