"""Invariant battery behind ``econpotential verify``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import economy as econ
from .errors import TieError
from .negishi import NegishiConfig, solve_equilibrium_weights
from .oracle import fd_gradient, grid_welfare_max, numeric_fenchel
from .potential import maximize_welfare, potential, welfare_gradient


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def rel_err(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def _random_interior(rng, k, size):
    return np.exp(rng.uniform(np.log(0.2), np.log(5.0), size=(size, k)))


def _random_feasible(rng, w, n):
    shares = rng.dirichlet(np.ones(n), size=w.size).T
    return shares * w * rng.uniform(0.2, 1.0)


def run_checks(economy: econ.Economy, samples: int = 1000, tol: float = 1e-8, seed: int = 0) -> list[CheckResult]:
    """Run every invariant check on ``economy``.

    Random draws (``seed``) only pick test points; the equilibrium solves
    themselves are deterministic.
    """
    rng = np.random.default_rng(seed)
    k, n = economy.n_goods, economy.n_consumers
    w = economy.total
    out: list[CheckResult] = []
    probes = max(10, samples // 10)

    worst = 0.0
    for u in economy.utilities:
        for x in _random_interior(rng, k, probes):
            fd = fd_gradient(lambda z: econ.utility(u, z), x, 1e-5, lower=0.0)
            worst = max(worst, rel_err(econ.grad_utility(u, x), fd))
    out.append(CheckResult("utility_gradient", worst < 1e-6, f"max rel err {worst:.2e}"))

    worst = 0.0
    for u in economy.utilities:
        for q in _random_interior(rng, k, probes):
            try:
                demand = econ.fenchel_demand(u, q)
            except TieError:
                continue
            fd = -fd_gradient(lambda z: econ.fenchel_dual(u, z), q, 1e-5, lower=0.0)
            worst = max(worst, rel_err(demand, fd))
    out.append(CheckResult("roy_identity", worst < 1e-5, f"max rel err {worst:.2e}"))

    worst = 0.0
    for u in economy.utilities:
        if k > 2 and not isinstance(u, (econ.CobbDouglas, econ.SeparableIsoelastic)):
            continue
        for q in _random_interior(rng, k, 3):
            worst = max(worst, abs(numeric_fenchel(u, q) - econ.fenchel_dual(u, q)))
    out.append(CheckResult("fenchel_oracle", worst <= 1e-6, f"max abs err {worst:.2e}"))

    top = -np.inf
    for _ in range(samples):
        alpha = rng.dirichlet(np.ones(n))
        x = _random_feasible(rng, w, n)
        p = _random_interior(rng, k, 1)[0]
        top = max(top, potential(economy, alpha, x, p))
    out.append(CheckResult("nonpositivity", top <= 1e-12, f"max potential {top:.3e}"))

    report = solve_equilibrium_weights(economy, NegishiConfig())
    worst_res = max(s.residual for s in report.solutions)
    out.append(
        CheckResult(
            "equilibrium_weights",
            all(s.residual <= report.tol * max(1.0, float(s.point.p @ w)) for s in report.solutions),
            f"{len(report.solutions)} solution(s), max residual {worst_res:.2e}",
        )
    )

    worst = max(max(abs(s.point.y_residual), abs(s.point.welfare - s.point.dual_value)) for s in report.solutions)
    out.append(CheckResult("utility_clearing", worst <= tol, f"max |Y| {worst:.2e}"))

    if economy.smooth:
        worst_p, worst_mrs = 0.0, 0.0
        for s in report.solutions:
            grad_w = welfare_gradient(economy, s.alpha)
            worst_p = max(worst_p, rel_err(grad_w, s.point.p))
            for i, u in enumerate(economy.utilities):
                gu = econ.grad_utility(u, s.point.x[i])
                worst_mrs = max(worst_mrs, rel_err(grad_w / grad_w[0], gu / gu[0]))
        out.append(
            CheckResult(
                "price_gradient_duality",
                worst_p < 1e-4 and worst_mrs < 1e-5,
                f"price rel err {worst_p:.2e}, MRS rel err {worst_mrs:.2e}",
            )
        )

    if n == 2 and k == 2:
        worst = 0.0
        for s in report.solutions:
            _, w_grid = grid_welfare_max(economy, s.alpha)
            _, w_opt = maximize_welfare(economy, s.alpha)
            worst = max(worst, abs(w_grid - w_opt))
        out.append(CheckResult("grid_welfare_oracle", worst <= 1e-4, f"max gap {worst:.2e}"))
    return out
