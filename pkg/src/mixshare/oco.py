"""Projected fixed-share with a surrogate loss for exp-concave OCO.

Each round predicts the mixture mean, builds the quadratic surrogate from
the observed gradient, tilts every Gaussian component in closed form,
repairs the mixture back into the constraint family (means inside the
domain, covariance eigenvalues in [1/T, 1]), and mixes in the anchor.

The repair step approximates the exact KL projection onto the mixture
family, which the source analysis only proves to exist; the approximation
preserves every testable membership invariant and proper learning, but
not the formal regret guarantee.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp

from .core import DomainSpec
from .forecasters import GaussianMixture
from .gaussian import GaussianDist, LOG_2PI, log_tilted_gauss_integral


class ConstraintViolationError(ValueError):
    """Mixture component violates the constraint-set invariants."""


@dataclass(frozen=True)
class SurrogateLoss:
    """Linear plus squared-linear loss s + (gamma/2) s^2, s = g'(w - w_ref)."""

    g: np.ndarray
    w_ref: np.ndarray
    gamma: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        object.__setattr__(self, "g", np.asarray(self.g, dtype=float))
        object.__setattr__(self, "w_ref", np.asarray(self.w_ref, dtype=float))

    def __call__(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        s = (w - self.w_ref) @ self.g
        return s + 0.5 * self.gamma * s * s


def make_surrogate(g: np.ndarray, w_ref: np.ndarray, gamma: float) -> SurrogateLoss:
    return SurrogateLoss(g, w_ref, gamma)


@dataclass(frozen=True)
class MixtureInM:
    """Gaussian mixture with component means in the domain and covariance
    eigenvalues inside [1/T, 1]."""

    mixture: GaussianMixture
    horizon: int

    def validate(self, domain: DomainSpec, tol: float = 1e-10):
        m = self.mixture
        if abs(float(logsumexp(m.log_w))) > 1e-12:
            raise ConstraintViolationError("component weights do not sum to 1")
        for mean in m.means:
            if not domain.contains(mean, tol=tol):
                raise ConstraintViolationError("component mean outside the domain")
        eigs = np.linalg.eigvalsh(m.covs)
        lo, hi = 1.0 / self.horizon, 1.0
        if np.min(eigs) < lo - tol or np.max(eigs) > hi + tol:
            raise ConstraintViolationError(
                f"covariance eigenvalues [{np.min(eigs)}, {np.max(eigs)}] outside [{lo}, {hi}]"
            )


@dataclass(frozen=True)
class OcoState:
    mixture: MixtureInM
    round: int
    mu: float
    gamma: float
    G: float
    domain: DomainSpec
    w0: np.ndarray


def init_oco(domain: DomainSpec, horizon: int, eta: float, G: float) -> OcoState:
    """Anchor mixture N(w0, I_d); gamma = min{1/(8GD), eta/2} satisfies every
    stated condition on the surrogate coefficient simultaneously."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    D = domain.diameter
    gamma = min(1.0 / (8.0 * G * D), eta / 2.0)
    w0 = domain.center.copy()
    anchor = GaussianMixture(
        log_w=np.zeros(1),
        means=w0[None, :],
        covs=np.eye(domain.d)[None, :, :],
    )
    mix = MixtureInM(anchor, horizon)
    mix.validate(domain)
    return OcoState(mixture=mix, round=1, mu=1.0 / horizon, gamma=gamma, G=G, domain=domain, w0=w0)


def predict_mean(s: OcoState) -> np.ndarray:
    """Mixture mean; a convex combination of in-domain component means."""
    return s.mixture.mixture.mean()


def ew_update_surrogate(m: MixtureInM, f: SurrogateLoss) -> GaussianMixture:
    """Exact Gaussian tilt by exp(-gamma * f / 2).

    With s = g'(w - w_ref) the tilt is exp(-a s^2 - b s) for a = gamma^2/4
    and b = gamma/2, so each component's precision gains (gamma^2/2) g g',
    its mean shifts in closed form (Sherman-Morrison on the covariance),
    and its log-weight gains the 1-D tilted Gaussian integral along g.
    """
    mix = m.mixture
    g, c = f.g, float(f.g @ f.w_ref)
    a = f.gamma * f.gamma / 4.0
    b = f.gamma / 2.0
    if not np.any(g):
        return GaussianMixture(mix.log_w.copy(), mix.means.copy(), mix.covs.copy())

    cov_g = np.einsum("kij,j->ki", mix.covs, g)  # (k, d)
    v = np.maximum(np.einsum("ki,i->k", cov_g, g), 0.0)
    mu = mix.means @ g

    one_plus = 1.0 + 2.0 * a * v
    kfac = 2.0 * a / one_plus
    covs = mix.covs - kfac[:, None, None] * np.einsum("ki,kj->kij", cov_g, cov_g)
    # mean' = m - kfac (g'm) cov_g + (2a c - b) cov_g / (1 + 2av)
    coef = -kfac * mu + (2.0 * a * c - b) / one_plus
    means = mix.means + coef[:, None] * cov_g

    log_w = mix.log_w + log_tilted_gauss_integral(mu - c, v, a, b)
    log_w = log_w - logsumexp(log_w)
    return GaussianMixture(log_w, means, 0.5 * (covs + np.swapaxes(covs, 1, 2)))


def approx_project_to_M(mix: GaussianMixture, domain: DomainSpec, T: int) -> MixtureInM:
    """Per-component repair: project means onto the ball, clamp covariance
    eigenvalues to [1/T, 1] in the eigenbasis; weights unchanged."""
    means = np.stack([domain.project(mean) for mean in mix.means])
    eigvals, eigvecs = np.linalg.eigh(mix.covs)
    eigvals = np.clip(eigvals, 1.0 / T, 1.0)
    covs = np.einsum("kij,kj,klj->kil", eigvecs, eigvals, eigvecs)
    out = MixtureInM(GaussianMixture(mix.log_w.copy(), means, 0.5 * (covs + np.swapaxes(covs, 1, 2))), T)
    out.validate(domain)
    return out


def fixed_share_anchor(m: MixtureInM, mu: float, anchor_mean: np.ndarray) -> MixtureInM:
    """(1 - mu) * mixture + mu * N(anchor, I_d); mu = 0 and 1 degenerate."""
    mix = m.mixture
    d = mix.means.shape[1]
    if mu == 0.0:
        return m
    if mu == 1.0:
        return MixtureInM(
            GaussianMixture(np.zeros(1), np.asarray(anchor_mean)[None, :], np.eye(d)[None, :, :]),
            m.horizon,
        )
    log_w = np.append(mix.log_w + np.log1p(-mu), np.log(mu))
    log_w = log_w - logsumexp(log_w)
    means = np.concatenate([mix.means, np.asarray(anchor_mean, dtype=float)[None, :]])
    covs = np.concatenate([mix.covs, np.eye(d)[None, :, :]])
    return MixtureInM(GaussianMixture(log_w, means, covs), m.horizon)


def oco_round(s: OcoState, grad_oracle) -> tuple:
    """One full round: predict mean, tilt, repair, fixed-share anchor."""
    w_t = predict_mean(s)
    if not s.domain.contains(w_t, tol=1e-9):
        raise ConstraintViolationError("mixture mean escaped the domain")
    g = np.asarray(grad_oracle(w_t), dtype=float)
    if float(np.linalg.norm(g)) > s.G * (1.0 + 1e-9):
        raise ValueError(f"gradient norm {np.linalg.norm(g)} exceeds declared bound G = {s.G}")
    f = make_surrogate(g, w_t, s.gamma)
    tilted = ew_update_surrogate(s.mixture, f)
    projected = approx_project_to_M(tilted, s.domain, s.mixture.horizon)
    mixed = fixed_share_anchor(projected, s.mu, s.w0)
    return w_t, replace(s, mixture=mixed, round=s.round + 1)


def log_density(mix: GaussianMixture, points: np.ndarray) -> np.ndarray:
    """ln of the mixture density at each row of ``points``; vectorized."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    k, d = mix.means.shape
    from scipy.linalg import solve_triangular

    chols = np.linalg.cholesky(mix.covs)
    log_dets = 2.0 * np.sum(np.log(np.diagonal(chols, axis1=1, axis2=2)), axis=1)
    maha = np.empty((k, points.shape[0]))
    for i in range(k):
        sol = solve_triangular(chols[i], (points - mix.means[i]).T, lower=True)
        maha[i] = np.sum(sol * sol, axis=0)
    comp_log = -0.5 * (d * LOG_2PI + log_dets[:, None] + maha)
    return logsumexp(mix.log_w[:, None] + comp_log, axis=0)
