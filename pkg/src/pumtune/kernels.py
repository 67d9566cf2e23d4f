"""Radial kernels, Gram matrix assembly, and SPD solves with a jitter ladder."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, cho_solve, solve_triangular
from scipy.spatial.distance import cdist

from .errors import SingularSystem
from .geometry import PointSet

FAMILIES = ("gaussian", "matern4")

# Relative jitter levels tried in order when a Cholesky factorization fails.
# Each is scaled by trace(K)/n, which is 1 for kernel Gram matrices.
# A factorization that succeeds is accepted as-is: flat kernels produce
# condition numbers up to ~1e16 whose solves are still the accurate regime of
# RBF interpolation, so solve quality at jitter 0 tracks cond(K).
JITTER_MULTIPLIERS = (0.0, 1e-14, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4)

# Points closer than this are treated as duplicates in fit paths.
DISTINCT_TOL = 1e-14


def validate_family(family: str) -> str:
    if family not in FAMILIES:
        raise ValueError(f"unknown kernel family {family!r}; expected one of {FAMILIES}")
    return family


@dataclass(frozen=True)
class RadialKernel:
    """A radial kernel family tag plus its shape parameter.

    gaussian: phi(s) = exp(-s^2)
    matern4:  phi(s) = exp(-s) * (3 + 3s + s^2) / 3
    with s = epsilon * r; both satisfy phi(0) = 1 and both generate strictly
    positive definite kernel matrices on distinct points.
    """

    family: str
    epsilon: float

    def __post_init__(self):
        validate_family(self.family)
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


def _phi(family: str, s):
    if family == "gaussian":
        return np.exp(-(s * s))
    return np.exp(-s) * (3.0 + 3.0 * s + s * s) / 3.0


def kernel_value(kernel: RadialKernel, r):
    """Evaluate phi(epsilon * r) for scalar or array r >= 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be non-negative")
    out = _phi(kernel.family, kernel.epsilon * r)
    return float(out) if out.ndim == 0 else out


def _coords(obj) -> np.ndarray:
    return obj.points if isinstance(obj, PointSet) else np.asarray(obj, dtype=float)


def pairwise_distances(a, b) -> np.ndarray:
    """Euclidean distance matrix between two point arrays (or PointSets)."""
    return cdist(_coords(a), _coords(b))


def gram_from_distances(kernel: RadialKernel, dist: np.ndarray) -> np.ndarray:
    """Kernel matrix from a precomputed distance matrix."""
    return _phi(kernel.family, kernel.epsilon * dist)


def kernel_matrix(kernel: RadialKernel, a, b) -> np.ndarray:
    """Matrix with entry (i, j) = phi(epsilon * ||a_i - b_j||_2)."""
    return gram_from_distances(kernel, pairwise_distances(a, b))


def check_distinct(dist: np.ndarray) -> None:
    """Reject point sets with (near-)duplicate points, given their distances."""
    n = dist.shape[0]
    if n < 2:
        return
    off = dist + np.diag(np.full(n, np.inf))
    if off.min() <= DISTINCT_TOL:
        raise ValueError("points must be pairwise distinct (closer than 1e-14)")


@dataclass(frozen=True)
class SpdFactorization:
    """Lower-triangular Cholesky factor of K + jitter*I, for reuse."""

    lower: np.ndarray
    jitter_used: float

    @property
    def n(self) -> int:
        return self.lower.shape[0]


def _cholesky_with_jitter(K: np.ndarray) -> SpdFactorization:
    n = K.shape[0]
    tau = np.trace(K) / n
    for mult in JITTER_MULTIPLIERS:
        A = K if mult == 0.0 else K + (mult * tau) * np.eye(n)
        try:
            L = cholesky(A, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            continue
        return SpdFactorization(L, mult * tau)
    raise SingularSystem(
        f"Cholesky failed for an {n}x{n} system at every jitter level"
    )


def solve_spd(K: np.ndarray, f: np.ndarray) -> tuple[np.ndarray, SpdFactorization]:
    """Solve (K + jitter*I) c = f with escalating jitter on factorization failure.

    Jitter starts at 0 and walks the relative ladder 1e-14..1e-4 scaled by
    trace(K)/n.  Raises SingularSystem when every level fails.
    """
    K = np.asarray(K, dtype=float)
    f = np.asarray(f, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError("K must be square")
    if f.shape[0] != K.shape[0]:
        raise ValueError("f length must match K")
    fact = _cholesky_with_jitter(K)
    c = cho_solve((fact.lower, True), f, check_finite=False)
    return c, fact


def solve_with(fact: SpdFactorization, b: np.ndarray) -> np.ndarray:
    """Reuse a factorization to solve (K + jitter*I) x = b."""
    return cho_solve((fact.lower, True), b, check_finite=False)


def inverse_diagonal(fact: SpdFactorization) -> np.ndarray:
    """Diagonal of (K + jitter*I)^{-1} via triangular solves of unit vectors.

    Entries are strictly positive for any SPD factorization.
    """
    n = fact.n
    Linv = solve_triangular(
        fact.lower, np.eye(n), lower=True, check_finite=False
    )
    return (Linv * Linv).sum(axis=0)
