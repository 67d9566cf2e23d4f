"""Partition-of-unity blending: Shepard weights, local RBF fits, global evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySubdomain, UncoveredPoint
from .geometry import PointSet, Subdomain
from .kernels import (
    RadialKernel,
    check_distinct,
    gram_from_distances,
    pairwise_distances,
    solve_spd,
)


def bump_weight(r, delta):
    """Compactly supported bump psi(r; delta) = (1 - r/delta)_+^4 (4r/delta + 1).

    psi(0) = 1, psi vanishes for r >= delta, and psi is continuous and
    non-negative everywhere.
    """
    t = np.asarray(r, dtype=float) / delta
    out = np.maximum(0.0, 1.0 - t) ** 4 * (4.0 * t + 1.0)
    return float(out) if out.ndim == 0 else out


def shepard_weights(x, subdomains) -> tuple[np.ndarray, np.ndarray]:
    """Normalized weights of the subdomains whose support covers x.

    Returns (indices, weights): positions into `subdomains` with nonzero
    weight and the matching weights, which are non-negative and sum to 1.
    Raises UncoveredPoint when no bump is positive at x.
    """
    x = np.asarray(x, dtype=float)
    psi = np.empty(len(subdomains))
    for j, sub in enumerate(subdomains):
        r = np.sqrt(((x - sub.center) ** 2).sum())
        psi[j] = bump_weight(r, sub.radius)
    total = psi.sum()
    if total <= 0.0:
        raise UncoveredPoint(f"point {x.tolist()} is outside every subdomain")
    idx = np.nonzero(psi > 0.0)[0]
    return idx, psi[idx] / total


@dataclass(frozen=True)
class LocalModel:
    """One subdomain's RBF interpolant: nodes, kernel, and solved coefficients."""

    subdomain: Subdomain
    kernel: RadialKernel
    nodes: np.ndarray
    coefficients: np.ndarray
    jitter_used: float

    @property
    def delta(self) -> float:
        return self.subdomain.radius

    def predict(self, x) -> np.ndarray:
        """Evaluate the local interpolant at one point (d,) or a batch (q, d)."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        K = gram_from_distances(self.kernel, pairwise_distances(pts, self.nodes))
        return K @ self.coefficients


def fit_local(train: PointSet, sub: Subdomain, kernel: RadialKernel) -> LocalModel:
    """Solve the subdomain's interpolation system on its member points."""
    if sub.n_members == 0:
        raise EmptySubdomain(f"subdomain at {sub.center.tolist()} has no members")
    if train.values is None:
        raise ValueError("training set carries no values to interpolate")
    nodes = train.points[sub.member_indices]
    f = train.values[sub.member_indices]
    dist = pairwise_distances(nodes, nodes)
    check_distinct(dist)
    K = gram_from_distances(kernel, dist)
    c, fact = solve_spd(K, f)
    return LocalModel(sub, kernel, nodes, c, fact.jitter_used)


class PuInterpolant:
    """Weighted sum of local RBF models; evaluable anywhere the balls cover."""

    def __init__(self, local_models):
        if not local_models:
            raise ValueError("need at least one local model")
        self.locals = tuple(local_models)
        self.centers = np.stack([lm.subdomain.center for lm in self.locals])
        self.radii = np.array([lm.subdomain.radius for lm in self.locals])

    @property
    def m(self) -> int:
        return len(self.locals)

    def evaluate_many(self, x: np.ndarray) -> np.ndarray:
        """Evaluate at a batch of points (q, d); raises UncoveredPoint if any
        point has no positive weight."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        dist = pairwise_distances(x, self.centers)
        psi = bump_weight(dist, self.radii[np.newaxis, :])
        totals = psi.sum(axis=1)
        bad = np.nonzero(totals <= 0.0)[0]
        if bad.size:
            raise UncoveredPoint(
                f"point {x[bad[0]].tolist()} is outside every subdomain"
            )
        out = np.zeros(x.shape[0])
        for j, lm in enumerate(self.locals):
            rows = np.nonzero(psi[:, j] > 0.0)[0]
            if rows.size:
                out[rows] += psi[rows, j] / totals[rows] * lm.predict(x[rows])
        return out

    def evaluate(self, x) -> float:
        """Evaluate at a single point."""
        return float(self.evaluate_many(np.asarray(x, dtype=float)[np.newaxis, :])[0])

    __call__ = evaluate


def evaluate(interp: PuInterpolant, x) -> float:
    return interp.evaluate(x)


def max_abs_error(interp: PuInterpolant, test: PointSet) -> float:
    """Maximum absolute error of the interpolant over a labeled test set."""
    if test.values is None:
        raise ValueError("test set carries no values")
    pred = interp.evaluate_many(test.points)
    return float(np.max(np.abs(pred - test.values)))


def franke_like_test_function(x1, x2):
    """Oscillatory two-dimensional benchmark target on the unit square."""
    return 2.0 * np.cos(10.0 * x1) * np.sin(10.0 * x2) + np.sin(10.0 * x1 * x2)
