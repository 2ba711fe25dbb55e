"""Command-line entry point: run experiments, verify numerics, sweep axes."""

from __future__ import annotations

import argparse
import pathlib
import sys
from dataclasses import replace

import numpy as np

from . import bench, ensemble, forecasters, oco, posterior, verification
from .core import DataPoint, DomainSpec, LossSpec
from .gaussian import GaussianDist, entropy, kl_divergence, LOG_2PI


def _suite_gaussian(seed: int):
    rng = np.random.default_rng(seed)
    checks = []
    for _ in range(5):
        d = int(rng.integers(1, 4))
        a = rng.standard_normal((d, d))
        q = GaussianDist(rng.standard_normal(d), a @ a.T + np.eye(d))
        b = rng.standard_normal((d, d))
        p = GaussianDist(rng.standard_normal(d), b @ b.T + np.eye(d))
        samples = q.sample(rng, 200_000)
        mc_ent = -np.mean([q.log_density(s) for s in samples[:50_000]])
        checks.append(("entropy_mc", abs(mc_ent - entropy(q)) < 0.05 * max(1.0, abs(entropy(q)))))
        checks.append(("kl_nonneg", kl_divergence(q, p) >= -1e-12))
        checks.append(("kl_self_zero", abs(kl_divergence(q, q)) < 1e-10))
    return checks


def _suite_posterior(seed: int):
    rng = np.random.default_rng(seed)
    checks = []
    B = 1.0
    p = posterior.QuadraticPosterior.from_anchor(np.zeros(2))
    for _ in range(10):
        pt = DataPoint(rng.standard_normal(2), float(np.clip(rng.standard_normal(), -B, B)))
        closed = posterior.log_quad_mix_factor(p, pt, B)
        pf_mu = float(p.mean @ pt.x)
        pf_v = float(pt.x @ np.linalg.solve(p.precision, pt.x))
        grid = verification.gaussian_grid(pf_mu, pf_v, lo=pf_mu - 10 * np.sqrt(pf_v), hi=pf_mu + 10 * np.sqrt(pf_v))
        num = np.log(np.sum(grid.values * np.exp(-((grid.grid - pt.y) ** 2) / (2 * B * B))) * grid.dz)
        checks.append(("quad_mix_factor_grid", abs(closed - num) < 1e-6))
        p = posterior.quad_update(p, pt, B)
    posterior.quad_variance_recursion_check(200)
    checks.append(("variance_telescoping", True))
    return checks


def _suite_ensemble(seed: int):
    rng = np.random.default_rng(seed)
    spec = LossSpec.squared_1d(B=1.0)
    domain = DomainSpec(1, 1.0)
    T = 20
    state = ensemble.init(spec, domain, T)
    anchor = verification.gaussian_grid(0.0, 1.0)
    grid = verification.gaussian_grid(0.0, 1.0)
    checks = []
    for t in range(T - 1):
        pt = DataPoint(np.ones(1), float(np.clip(0.5 + 0.3 * rng.standard_normal(), -1, 1)))
        z_ens = forecasters.predict_squared_1d(ensemble.pushforward_mixture(state, pt.x), spec.B)
        z_grid = verification.grid_predict_squared(grid, spec)
        checks.append((f"equivalence_round_{t + 1}", abs(z_ens - z_grid) < 1e-3))
        state = ensemble.observe(state, pt)
        grid = verification.grid_fixed_share_round(grid, pt, spec, state.mu, anchor)
    return checks


def _suite_forecasters(seed: int):
    rng = np.random.default_rng(seed)
    checks = []
    for i in range(20):
        k = int(rng.integers(1, 5))
        w = rng.dirichlet(np.ones(k))
        mix = forecasters.ScalarGaussianMixture.from_weights(w, rng.uniform(-2, 2, k), rng.uniform(0.01, 2, k))
        B = 1.0
        z = forecasters.predict_squared_1d(mix, B)
        gap = max(
            (z - y) ** 2 - forecasters.mix_loss_squared(mix, y, B).value for y in (-B, B)
        )
        checks.append((f"squared_gap_{i}", gap <= 1e-9))
        z_log = float(np.log(forecasters.mean_sigmoid(mix) / (1 - forecasters.mean_sigmoid(mix))))
        for y in (-1.0, 1.0):
            loss = np.logaddexp(0.0, -y * z_log)
            mloss = forecasters.mix_loss_logistic(mix, y).value
            checks.append((f"logistic_gap_{i}_{int(y)}", loss - mloss <= 1e-9))
    return checks


def _suite_oco(seed: int):
    rng = np.random.default_rng(seed)
    domain = DomainSpec(2, 1.0)
    T = 50
    state = oco.init_oco(domain, T, eta=1.0 / domain.diameter**2, G=2.0 * domain.R)
    checks = []
    log_bound = 0.5 * domain.d * (np.log(T) - LOG_2PI)
    for t in range(T):
        c = domain.project(rng.standard_normal(2))
        w_t, state = oco.oco_round(state, lambda w: w - c)
        checks.append((f"mean_in_domain_{t + 1}", domain.contains(w_t, tol=1e-9)))
        pts = state.mixture.mixture.means
        checks.append((f"density_bound_{t + 1}", bool(np.all(oco.log_density(state.mixture.mixture, pts) <= log_bound + 1e-9))))
    try:
        state.mixture.validate(domain)
        checks.append(("membership", True))
    except oco.ConstraintViolationError:
        checks.append(("membership", False))
    return checks


_SUITES = {
    "gaussian": _suite_gaussian,
    "posterior": _suite_posterior,
    "ensemble-equivalence": _suite_ensemble,
    "forecasters": _suite_forecasters,
    "oco": _suite_oco,
}


def run_suite(name: str, seed: int = 0) -> bool:
    names = list(_SUITES) if name == "all" else [name]
    all_ok = True
    for suite in names:
        checks = _SUITES[suite](seed)
        failed = [label for label, ok in checks if not ok]
        status = "ok" if not failed else f"FAILED ({', '.join(failed[:5])})"
        print(f"suite {suite}: {len(checks) - len(failed)}/{len(checks)} checks {status}")
        all_ok = all_ok and not failed
    return all_ok


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mixshare")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the experiments in a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None)

    p_verify = sub.add_parser("verify", help="run a numerical verification suite")
    p_verify.add_argument("--suite", required=True, choices=sorted(_SUITES) + ["all"])
    p_verify.add_argument("--seed", type=int, default=0)

    p_sweep = sub.add_parser("sweep", help="scaling study along one axis")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--axis", required=True, choices=["T", "P"])
    p_sweep.add_argument("--values", default=None, help="comma-separated axis values")
    p_sweep.add_argument("--seed", type=int, default=None)

    args = parser.parse_args(argv)

    if args.command == "verify":
        return 0 if run_suite(args.suite, args.seed) else 1

    cfg = bench.parse_config(pathlib.Path(args.config).read_text())
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)

    if args.command == "run":
        result = bench.run_experiment(cfg)
        sys.stdout.write(result.summary_text())
        return 0

    if args.values is not None:
        values = [float(v) for v in args.values.split(",")]
    else:
        values = [500, 1000, 2000] if args.axis == "T" else [1.0, 4.0, 16.0]
    rows, slope = bench.sweep(cfg, args.axis, values)
    print("T,path_length,final_regret")
    for row in rows:
        print(f"{row.T},{row.path_length:.6g},{row.final_regret:.6g}")
    print(f"fitted_loglog_slope = {slope:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
