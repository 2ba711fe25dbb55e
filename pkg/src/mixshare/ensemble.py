"""Ensemble of per-round base learners with Hedge meta-weights.

Each round spawns a fresh base learner initialized at the anchor Gaussian
N(w0, I_d) with meta-weight mu, while survivors are reweighted by the
mix factors of their posteriors and scaled by (1 - mu).  The resulting
mixture evolves identically to a single fixed-share exponential-weight
update over the continuous parameter space, which the verification module
checks against a grid simulator.

Quadratic losses keep all posteriors in stacked natural-parameter arrays
so a round costs one batched solve; the logistic loss keeps a list of
Laplace posteriors.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp

from .core import DataPoint, DomainSpec, LossKind, LossSpec
from .forecasters import GaussianMixture, ScalarGaussianMixture
from .gaussian import GaussianDist, gauss_hermite_nodes, log_sq_exp_integral
from .posterior import NewtonConvergenceError

# Mix factors are positive for finite losses; the floor only guards
# log(0) from underflow on extremely unlucky streams.
LOG_FACTOR_FLOOR = -700.0


class HorizonExceededError(RuntimeError):
    """Observed more rounds than the declared horizon."""


@dataclass(frozen=True)
class EnsembleState:
    loss_spec: LossSpec
    domain: DomainSpec
    horizon: int
    mu: float
    round: int
    births: tuple
    log_weights: np.ndarray
    w0: np.ndarray
    # quadratic branch: stacked natural parameters, shape (k, d, d) / (k, d)
    precisions: np.ndarray = None
    shifts: np.ndarray = None
    # logistic branch: stacked Laplace modes/Hessians plus the shared
    # observation history (learner born at round b uses history rows
    # b-1 onward)
    modes: np.ndarray = None
    hessians: np.ndarray = None
    x_hist: np.ndarray = None
    y_hist: np.ndarray = None

    @property
    def n_learners(self) -> int:
        return len(self.births)

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def means(self) -> np.ndarray:
        if self.precisions is not None:
            return np.linalg.solve(self.precisions, self.shifts[..., None])[..., 0]
        return self.modes.copy()

    def covs(self) -> np.ndarray:
        if self.precisions is not None:
            return np.linalg.inv(self.precisions)
        return np.linalg.inv(self.hessians)


def init(spec: LossSpec, domain: DomainSpec, horizon: int, mu: float | None = None) -> EnsembleState:
    """One base learner at the anchor with weight 1; mu defaults to 1/T."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if mu is None:
        mu = 1.0 / horizon
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"mu must lie in [0, 1], got {mu}")
    w0 = domain.center.copy()
    d = domain.d
    state = EnsembleState(
        loss_spec=spec,
        domain=domain,
        horizon=horizon,
        mu=mu,
        round=1,
        births=(1,),
        log_weights=np.zeros(1),
        w0=w0,
    )
    if spec.kind in (LossKind.SQUARED_1D, LossKind.LEAST_SQUARES):
        return replace(state, precisions=np.eye(d)[None, :, :], shifts=w0[None, :])
    if spec.kind == LossKind.LOGISTIC:
        return replace(
            state,
            modes=w0[None, :],
            hessians=np.eye(d)[None, :, :],
            x_hist=np.zeros((0, d)),
            y_hist=np.zeros(0),
        )
    raise ValueError(f"unsupported loss family for the ensemble: {spec.kind}")


def observe(s: EnsembleState, point: DataPoint) -> EnsembleState:
    """Advance one round: meta reweight, base updates, newborn at weight mu."""
    if s.round >= s.horizon:
        # mu = 1/T ties the weight schedule to the horizon, so a longer
        # stream would invalidate the fixed-share coupling.
        raise HorizonExceededError(f"round {s.round} reached horizon {s.horizon}")

    if s.precisions is not None:
        log_factors, precisions, shifts = _quad_step(s, point)
        modes = hessians = x_hist = y_hist = None
    else:
        log_factors = _logistic_mix_factors(s, point)
        modes, hessians, x_hist, y_hist = _logistic_refit(s, point)
        precisions = shifts = None

    log_factors = np.maximum(log_factors, LOG_FACTOR_FLOOR)
    log_w = s.log_weights + log_factors
    log_w = log_w - logsumexp(log_w)

    births = s.births
    if s.mu > 0.0:
        log_w = np.append(log_w + np.log1p(-s.mu), np.log(s.mu))
        births = births + (s.round + 1,)
        if precisions is not None:
            precisions = np.concatenate([precisions, np.eye(s.domain.d)[None, :, :]])
            shifts = np.concatenate([shifts, s.w0[None, :]])
        else:
            modes = np.concatenate([modes, s.w0[None, :]])
            hessians = np.concatenate([hessians, np.eye(s.domain.d)[None, :, :]])
        log_w = log_w - logsumexp(log_w)

    return replace(
        s,
        round=s.round + 1,
        births=births,
        log_weights=log_w,
        precisions=precisions,
        shifts=shifts,
        modes=modes,
        hessians=hessians,
        x_hist=x_hist,
        y_hist=y_hist,
    )


def _quad_step(s: EnsembleState, point: DataPoint):
    """Batched mix factors and exact rank-one posterior updates."""
    B = s.loss_spec.B
    if abs(point.y) > B:
        raise ValueError(f"|y| = {abs(point.y)} exceeds label bound B = {B}")
    x = point.x
    means = np.linalg.solve(s.precisions, s.shifts[..., None])[..., 0]
    cov_x = np.linalg.solve(s.precisions, np.broadcast_to(x, means.shape)[..., None])[..., 0]
    mu = means @ x
    v = np.maximum(cov_x @ x, 0.0)
    log_factors = log_sq_exp_integral(mu, v, point.y, B)
    b2 = B * B
    precisions = s.precisions + np.outer(x, x)[None, :, :] / b2
    shifts = s.shifts + (point.y / b2) * x[None, :]
    return log_factors, precisions, shifts


def _logistic_mix_factors(s: EnsembleState, point: DataPoint, n_nodes: int = 64) -> np.ndarray:
    """log E_i[exp(-eta * logistic loss)] for every learner, by quadrature
    on the 1-D pushforward of the score under each Laplace Gaussian."""
    x = point.x
    cov_x = np.linalg.solve(s.hessians, np.broadcast_to(x, s.modes.shape)[..., None])[..., 0]
    mu = s.modes @ x
    v = np.maximum(cov_x @ x, 0.0)
    nodes, weights = gauss_hermite_nodes(n_nodes)
    z = mu[:, None] + np.sqrt(2.0 * v)[:, None] * nodes[None, :]
    log_vals = -s.loss_spec.eta * np.logaddexp(0.0, -point.y * z)
    return np.minimum(logsumexp(log_vals, b=weights[None, :] / np.sqrt(np.pi), axis=1), 0.0)


def _logistic_refit(s: EnsembleState, point: DataPoint, grad_tol: float = 1e-8, max_iter: int = 50):
    """Append the observation and refit every learner's Laplace mode by a
    batched, warm-started damped Newton iteration.

    Learner j (birth round b_j) owns the history suffix starting at row
    b_j - 1; a (rows, learners) mask realizes the per-learner sums in
    shared array operations.
    """
    if point.y not in (-1.0, 1.0):
        raise ValueError(f"logistic labels must be +/-1, got {point.y}")
    eta = s.loss_spec.eta
    X = np.vstack([s.x_hist, point.x])
    y = np.append(s.y_hist, point.y)
    n, k = X.shape[0], s.n_learners
    births = np.asarray(s.births)
    mask = (np.arange(n)[:, None] >= births[None, :] - 1).astype(float)  # (n, k)
    Xw = X * np.sqrt(eta)  # reused inside the Hessian einsum

    def value_grad_hess(modes):
        delta = modes - s.w0[None, :]
        z = X @ modes.T  # (n, k)
        losses = np.logaddexp(0.0, -y[:, None] * z)
        values = 0.5 * np.sum(delta * delta, axis=1) + eta * np.sum(mask * losses, axis=0)
        p = 1.0 / (1.0 + np.exp(-np.abs(z)))
        sig = np.where(z >= 0, p, 1.0 - p)  # sigma(z)
        coeff = -y[:, None] * np.where(y[:, None] > 0, 1.0 - sig, sig)
        grads = delta + eta * (X.T @ (mask * coeff)).T
        weights = mask * sig * (1.0 - sig)
        hess = np.eye(s.domain.d)[None, :, :] + np.einsum("ni,nk,nj->kij", Xw, weights, Xw)
        return values, grads, hess

    modes = s.modes
    f_val, grads, hess = value_grad_hess(modes)
    for _ in range(max_iter):
        norms = np.linalg.norm(grads, axis=1)
        if np.max(norms) <= grad_tol:
            return modes, hess, X, y
        steps = np.linalg.solve(hess, grads[..., None])[..., 0]
        slack = 1e-12 * np.maximum(1.0, np.abs(f_val))
        alpha = np.ones(k)
        for _ in range(40):
            trial = modes - alpha[:, None] * steps
            f_new, g_new, h_new = value_grad_hess(trial)
            bad = f_new > f_val + slack
            if not np.any(bad):
                break
            alpha = np.where(bad, 0.5 * alpha, alpha)
        modes, f_val, grads, hess = trial, f_new, g_new, h_new
    norms = np.linalg.norm(grads, axis=1)
    if np.max(norms) <= grad_tol:
        return modes, hess, X, y
    raise NewtonConvergenceError(
        f"worst gradient norm {np.max(norms):.3e} after {max_iter} Newton iterations"
    )


def mixture(s: EnsembleState) -> list:
    """The current mixture as a list of (weight, GaussianDist)."""
    weights = s.weights
    means = s.means()
    covs = s.covs()
    out = []
    for w, m, c in zip(weights, means, covs):
        out.append((float(w), GaussianDist(m, 0.5 * (c + c.T))))
    return out


def mixture_arrays(s: EnsembleState) -> GaussianMixture:
    return GaussianMixture(log_w=s.log_weights.copy(), means=s.means(), covs=s.covs())


def pushforward_mixture(s: EnsembleState, x: np.ndarray) -> ScalarGaussianMixture:
    """1-D mixture of w'x without materializing full covariances."""
    x = np.asarray(x, dtype=float)
    if s.precisions is not None:
        means = np.linalg.solve(s.precisions, s.shifts[..., None])[..., 0]
        cov_x = np.linalg.solve(s.precisions, np.broadcast_to(x, means.shape)[..., None])[..., 0]
        return ScalarGaussianMixture(s.log_weights.copy(), means @ x, np.maximum(cov_x @ x, 0.0))
    cov_x = np.linalg.solve(s.hessians, np.broadcast_to(x, s.modes.shape)[..., None])[..., 0]
    return ScalarGaussianMixture(s.log_weights.copy(), s.modes @ x, np.maximum(cov_x @ x, 0.0))
