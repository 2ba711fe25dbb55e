"""Gaussian distribution arithmetic.

Closed-form entropy and KL divergence, 1-D pushforwards of multivariate
Gaussians, the Gaussian integral of a squared exponential, quadratic-tilt
integrals, and Gauss-Hermite quadrature.  All integrals are computed in
log-space and exponentiated once, so that long products of per-round
weight factors stay stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_GH_NODE_COUNTS = (16, 32, 64, 128)
_GH_CACHE = {n: np.polynomial.hermite.hermgauss(n) for n in _GH_NODE_COUNTS}

LOG_2PI = float(np.log(2.0 * np.pi))


class CovarianceError(ValueError):
    """Covariance is not symmetric positive-definite."""


@dataclass(frozen=True)
class GaussianDist:
    """Mean vector plus SPD covariance, carried with its Cholesky factor.

    All solves and log-determinants go through the factorization.
    """

    mean: np.ndarray
    cov: np.ndarray
    chol: np.ndarray = None  # lower-triangular factor, computed on construction

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise CovarianceError(f"cov shape {cov.shape} does not match dimension {mean.size}")
        asym = np.abs(cov - cov.T)
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(asym) > 1e-12 * scale:
            raise CovarianceError("covariance is not symmetric")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise CovarianceError("covariance is not positive definite") from exc
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "chol", chol)

    @property
    def d(self) -> int:
        return self.mean.size

    @property
    def log_det_cov(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.chol))))

    def solve_cov(self, rhs: np.ndarray) -> np.ndarray:
        """Solve cov @ x = rhs through the Cholesky factor."""
        from scipy.linalg import cho_solve

        return cho_solve((self.chol, True), rhs)

    def log_density(self, u: np.ndarray) -> float:
        delta = np.asarray(u, dtype=float) - self.mean
        maha = float(delta @ self.solve_cov(delta))
        return -0.5 * (self.d * LOG_2PI + self.log_det_cov + maha)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        z = rng.standard_normal((n, self.d))
        return self.mean + z @ self.chol.T


@dataclass(frozen=True)
class Pushforward1D:
    """1-D law of w'x for w ~ N(mean, cov): mu = mean'x, v = x'cov x."""

    mu: float
    v: float

    def __post_init__(self):
        if self.v < 0:
            raise ValueError(f"pushforward variance must be nonnegative, got {self.v}")


def entropy(g: GaussianDist) -> float:
    """Differential entropy (d/2) ln(2 pi e) + (1/2) ln|cov|."""
    return 0.5 * g.d * (LOG_2PI + 1.0) + 0.5 * g.log_det_cov


def kl_divergence(q: GaussianDist, p: GaussianDist) -> float:
    """KL(q || p) between Gaussians, via the closed form."""
    if q.d != p.d:
        raise ValueError(f"dimension mismatch: {q.d} vs {p.d}")
    delta = p.mean - q.mean
    trace = float(np.trace(p.solve_cov(q.cov)))
    maha = float(delta @ p.solve_cov(delta))
    return 0.5 * (p.log_det_cov - q.log_det_cov + trace + maha - q.d)


def pushforward(g: GaussianDist, x: np.ndarray) -> Pushforward1D:
    """Project a Gaussian over weights to the scalar law of w'x."""
    x = np.asarray(x, dtype=float)
    if x.shape != (g.d,):
        raise ValueError(f"feature shape {x.shape}, expected ({g.d},)")
    if not np.any(x):
        raise ValueError("pushforward direction must be nonzero")
    return Pushforward1D(mu=float(g.mean @ x), v=float(x @ g.cov @ x))


def log_sq_exp_integral(mu, v, y: float, B: float):
    """log E_{z ~ N(mu, v)}[exp(-(z - y)^2 / (2 B^2))], elementwise in (mu, v).

    Closed form: (1/2) ln(B^2/(B^2+v)) - (mu-y)^2 / (2 (B^2 + v)).
    """
    mu = np.asarray(mu, dtype=float)
    v = np.asarray(v, dtype=float)
    b2 = B * B
    total = b2 + v
    return 0.5 * (np.log(b2) - np.log(total)) - (mu - y) ** 2 / (2.0 * total)


def sq_exp_integral(pf: Pushforward1D, y: float, B: float) -> float:
    """E_{z ~ N(mu, v)}[exp(-(z - y)^2 / (2 B^2))], in (0, 1]."""
    if B <= 0:
        raise ValueError("B must be positive")
    return float(np.exp(log_sq_exp_integral(pf.mu, pf.v, y, B)))


def log_tilted_gauss_integral(mu, v, a: float, b: float):
    """log E_{s ~ N(mu, v)}[exp(-a s^2 - b s)] for a >= 0, elementwise.

    Completing the square with A = 1/v + 2a and C = mu/v - b gives
    log = -(1/2) ln(v A) + C^2/(2A) - mu^2/(2v); the v -> 0 limit is
    -a mu^2 - b mu.  Reduces to the Gaussian MGF when a = 0.
    """
    if a < 0:
        raise ValueError("quadratic tilt coefficient must be nonnegative")
    mu = np.asarray(mu, dtype=float)
    v = np.asarray(v, dtype=float)
    # Rearranged to stay finite as v -> 0:
    #   -(1/2) ln(1 + 2av) + (-a mu^2 - b mu + v (2a mu + b)^2 / (2 (1+2av)))
    one_plus = 1.0 + 2.0 * a * v
    return -0.5 * np.log(one_plus) - a * mu * mu - b * mu + v * (2.0 * a * mu + b) ** 2 / (2.0 * one_plus)


def tilted_gauss_integral(pf: Pushforward1D, a: float, b: float) -> float:
    """E_{s ~ N(mu, v)}[exp(-a s^2 - b s)]; finite and positive."""
    return float(np.exp(log_tilted_gauss_integral(pf.mu, pf.v, a, b)))


def gauss_hermite_expect(pf: Pushforward1D, f, n_nodes: int = 64) -> float:
    """E_{z ~ N(mu, v)}[f(z)] by Gauss-Hermite quadrature.

    Exact for polynomials of degree <= 2 n_nodes - 1.
    """
    nodes, weights = gauss_hermite_nodes(n_nodes)
    z = pf.mu + np.sqrt(2.0 * pf.v) * nodes
    return float(np.sum(weights * f(z)) / np.sqrt(np.pi))


def gauss_hermite_nodes(n_nodes: int):
    if n_nodes not in _GH_CACHE:
        raise ValueError(f"unsupported node count {n_nodes}; choose one of {_GH_NODE_COUNTS}")
    return _GH_CACHE[n_nodes]
