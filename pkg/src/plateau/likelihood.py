"""Softened profile log-likelihood with a Gaussian common-variance model.

Each point gets a sigmoid weight ``s_i = 1 / (1 + exp(-g_i))`` of belonging
to side 2 (and ``1 - s_i`` of side 1). Given the weights, the two means
and the pooled variance have closed-form maximizers and the profile
log-likelihood collapses to ``-(n/2) log(2 pi sigma^2) - n/2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .boundary import params_from_vector
from .exceptions import DegeneratePartition, DimensionMismatch, InputError, NonFiniteValue

__all__ = [
    "EPS_MASS",
    "DEGENERATE_LOGLIK",
    "SoftWeights",
    "SoftFitStats",
    "ZhuGhodsiResult",
    "variance_floor",
    "soft_weights",
    "soft_mle",
    "soft_profile_loglik",
    "soft_profile_loglik_twoterm",
    "hard_profile_loglik",
    "hard_mle",
    "zhu_ghodsi_1d",
    "objective_and_gradient",
    "SoftProfileObjective",
]

#: Minimum effective number of points per side.
EPS_MASS = 0.5
#: Objective value reported for degenerate partitions inside optimizers.
DEGENERATE_LOGLIK = -1e15

_LOG_2PI = np.log(2 * np.pi)


def variance_floor(z) -> float:
    """Lower bound on the pooled variance: ``1e-12 * (1 + var(z))``."""
    return 1e-12 * (1.0 + float(np.var(z)))


@dataclass(frozen=True)
class SoftWeights:
    """Sigmoid weights; ``s`` for side 2 and its complement for side 1.

    The complement is evaluated as ``sigmoid(-g)`` rather than ``1 - s`` so
    both stay accurate when ``|g|`` is large.
    """

    s: np.ndarray
    s_comp: np.ndarray

    @property
    def n(self) -> int:
        return self.s.size

    @property
    def mass1(self) -> float:
        return float(np.sum(self.s_comp))

    @property
    def mass2(self) -> float:
        return float(np.sum(self.s))

    @classmethod
    def from_probabilities(cls, s) -> "SoftWeights":
        s = np.asarray(s, dtype=float)
        return cls(s, 1.0 - s)


def soft_weights(g_values) -> SoftWeights:
    g = np.asarray(g_values, dtype=float)
    if not np.all(np.isfinite(g)):
        raise NonFiniteValue("boundary values must be finite")
    return SoftWeights(expit(g), expit(-g))


@dataclass(frozen=True)
class SoftFitStats:
    mu1: float
    mu2: float
    rss1: float
    rss2: float
    sigma2: float
    loglik: float
    floored: bool = False


def _check_lengths(w: SoftWeights, z: np.ndarray) -> None:
    if w.s.shape != z.shape:
        raise DimensionMismatch(f"{w.s.size} weights for {z.size} metric values")


def soft_mle(weights: SoftWeights, z) -> SoftFitStats:
    """Softened MLEs and the closed-form profile log-likelihood."""
    z = np.asarray(z, dtype=float)
    _check_lengths(weights, z)
    w1, w2 = weights.s_comp, weights.s
    m1, m2 = float(np.sum(w1)), float(np.sum(w2))
    if m1 < EPS_MASS or m2 < EPS_MASS:
        raise DegeneratePartition(
            f"effective side masses ({m1:.3g}, {m2:.3g}) below {EPS_MASS}"
        )
    n = z.size
    mu1 = float(w1 @ z) / m1
    mu2 = float(w2 @ z) / m2
    rss1 = float(w1 @ (z - mu1) ** 2)
    rss2 = float(w2 @ (z - mu2) ** 2)
    sigma2 = (rss1 + rss2) / n
    floor = variance_floor(z)
    floored = sigma2 < floor
    if floored:
        sigma2 = floor
    loglik = -0.5 * n * (_LOG_2PI + np.log(sigma2)) - 0.5 * n
    return SoftFitStats(mu1, mu2, rss1, rss2, sigma2, float(loglik), floored)


def soft_profile_loglik(weights: SoftWeights, z) -> float:
    return soft_mle(weights, z).loglik


def soft_profile_loglik_twoterm(weights: SoftWeights, z) -> float:
    """Weighted sum of Gaussian log-densities at the softened MLEs.

    Evaluated term by term without the algebraic reduction, so it serves as
    an independent check on :func:`soft_mle`.
    """
    z = np.asarray(z, dtype=float)
    _check_lengths(weights, z)
    w1, w2 = weights.s_comp, weights.s
    if w1.sum() < EPS_MASS or w2.sum() < EPS_MASS:
        raise DegeneratePartition("effective side mass below threshold")
    mu1 = np.average(z, weights=w1)
    mu2 = np.average(z, weights=w2)
    sigma2 = (np.sum(w1 * (z - mu1) ** 2) + np.sum(w2 * (z - mu2) ** 2)) / z.size
    sigma2 = max(sigma2, variance_floor(z))

    def logpdf(x, mu):
        return -0.5 * np.log(2 * np.pi * sigma2) - (x - mu) ** 2 / (2 * sigma2)

    return float(np.sum(w1 * logpdf(z, mu1)) + np.sum(w2 * logpdf(z, mu2)))


def hard_mle(side2, z) -> SoftFitStats:
    """MLEs for a hard split; ``side2[i]`` is True for points on side 2."""
    side2 = np.asarray(side2, dtype=bool)
    z = np.asarray(z, dtype=float)
    if side2.shape != z.shape:
        raise DimensionMismatch(f"{side2.size} side flags for {z.size} metric values")
    if side2.all() or not side2.any():
        raise DegeneratePartition("every point is on one side of the split")
    a, b = z[~side2], z[side2]
    mu1, mu2 = float(a.mean()), float(b.mean())
    rss1 = float(np.sum((a - mu1) ** 2))
    rss2 = float(np.sum((b - mu2) ** 2))
    n = z.size
    sigma2 = (rss1 + rss2) / n
    floor = variance_floor(z)
    floored = sigma2 < floor
    sigma2 = max(sigma2, floor)
    loglik = -0.5 * n * (_LOG_2PI + np.log(sigma2)) - 0.5 * n
    return SoftFitStats(mu1, mu2, rss1, rss2, sigma2, float(loglik), floored)


def hard_profile_loglik(side2, z) -> float:
    """Profile log-likelihood of a hard two-way split of ``z``."""
    return hard_mle(side2, z).loglik


@dataclass(frozen=True)
class ZhuGhodsiResult:
    threshold: float
    index: int
    candidates: np.ndarray
    profile: np.ndarray


def zhu_ghodsi_1d(u, z) -> ZhuGhodsiResult:
    """Grid search over thresholds ``w``; side 1 is ``u <= w``.

    Candidates are the distinct values of ``u`` except the largest. Ties
    go to the smaller threshold.
    """
    u = np.asarray(u, dtype=float).ravel()
    z = np.asarray(z, dtype=float).ravel()
    if u.shape != z.shape:
        raise DimensionMismatch(f"{u.size} positions for {z.size} metric values")
    candidates = np.unique(u)[:-1]
    if candidates.size == 0:
        raise InputError("need at least 2 distinct values to place a threshold")
    profile = np.array([hard_profile_loglik(u > w, z) for w in candidates])
    k = int(np.argmax(profile))
    return ZhuGhodsiResult(float(candidates[k]), k, candidates, profile)


def objective_and_gradient(params, points, z) -> tuple[float, np.ndarray]:
    """Soft profile log-likelihood of ``params`` and its gradient with
    respect to the flat parameter vector.

    The nuisance estimates are inner maximizers, so the gradient holds them
    fixed. Degenerate partitions return :data:`DEGENERATE_LOGLIK` and a zero
    gradient rather than raising.
    """
    z = np.asarray(z, dtype=float)
    g, J = params.value_and_jacobian(np.asarray(points, dtype=float))
    try:
        w = soft_weights(g)
        stats = soft_mle(w, z)
    except (DegeneratePartition, NonFiniteValue):
        return DEGENERATE_LOGLIK, np.zeros(J.shape[1])
    if stats.floored:
        return stats.loglik, np.zeros(J.shape[1])
    # d loglik / d s_i, then chain through s' = s (1 - s)
    dl_ds = ((z - stats.mu1) ** 2 - (z - stats.mu2) ** 2) / (2.0 * stats.sigma2)
    dl_dg = dl_ds * w.s * w.s_comp
    return stats.loglik, J.T @ dl_dg


class SoftProfileObjective:
    """Objective on flat parameter vectors, as consumed by the optimizers."""

    def __init__(self, family: str, points, z, hidden: int = 32):
        self.family = family
        self.points = np.asarray(points, dtype=float)
        self.z = np.asarray(z, dtype=float)
        self.hidden = hidden

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def params(self, theta) -> object:
        return params_from_vector(self.family, theta, self.dim, self.hidden)

    def __call__(self, theta) -> tuple[float, np.ndarray]:
        theta = np.asarray(theta, dtype=float)
        if not np.all(np.isfinite(theta)):
            return DEGENERATE_LOGLIK, np.zeros_like(theta)
        return objective_and_gradient(self.params(theta), self.points, self.z)
