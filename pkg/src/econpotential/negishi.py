"""Equilibrium weights for endowment-parameterized economies.

An equilibrium for endowments ``omega`` is the weight-indexed equilibrium
at weights where every consumer's equilibrium income equals the value of
her endowment:

    e_i(alpha) = <p(alpha)|omega_i> - m_i(alpha) = 0.

Because incomes add up to ``<p|w>``, ``e`` sums to zero and is a vector
field on the simplex; it points inward on the boundary.  Roots are found
by damped residual following from many starts, each polished by Newton's
method in the simplex's tangent space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .economy import Economy
from .errors import ConvergenceError, NoSolutionFound
from .potential import EquilibriumPoint, as_weights, equilibrium_from_weights

__all__ = [
    "NegishiConfig",
    "WeightSolution",
    "StartTrace",
    "SolveReport",
    "BoundaryReport",
    "excess_budget",
    "start_points",
    "solve_equilibrium_weights",
    "boundary_inwardness_check",
]


@dataclass(frozen=True)
class NegishiConfig:
    """Settings of the multistart weight solver.

    ``starts=None`` means 20 for two consumers and ``10 N`` otherwise.
    ``tol`` bounds ``max|e|`` relative to ``max(1, <p|w>)``.
    """

    starts: int | None = None
    step: float = 1.0
    tol: float = 1e-10
    max_iter: int = 2000
    dedup_radius: float = 1e-4
    polish_from: float = 1e-3
    max_rejections: int = 12
    newton_iter: int = 60

    def n_starts(self, n_consumers: int) -> int:
        if self.starts is not None:
            return self.starts
        return 20 if n_consumers == 2 else 10 * n_consumers


@dataclass
class WeightSolution:
    alpha: np.ndarray
    point: EquilibriumPoint
    residual: float
    start: int


@dataclass
class StartTrace:
    start: int
    alpha0: np.ndarray
    iterations: int
    residual: float
    converged: bool
    alpha: np.ndarray


@dataclass
class SolveReport:
    """Distinct converged equilibria, in order of the start that found them."""

    solutions: list[WeightSolution]
    traces: list[StartTrace]
    dedup_radius: float
    tol: float

    @property
    def alphas(self) -> np.ndarray:
        return np.array([s.alpha for s in self.solutions])


@dataclass
class BoundaryReport:
    epsilon: float
    points: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    max_abs_sum: float = 0.0

    @property
    def inward(self) -> bool:
        return not self.violations


def _evaluate(economy, alpha, p0=None):
    point = equilibrium_from_weights(economy, alpha, p0=p0, check=False)
    e = economy.endowments @ point.p - point.m
    return e, point


def excess_budget(economy: Economy, alpha) -> np.ndarray:
    """``e_i = <p(alpha)|omega_i> - m_i(alpha)`` for weights on the simplex."""
    a = as_weights(alpha, economy.n_consumers)
    return _evaluate(economy, a / a.sum())[0]


def start_points(n_consumers: int, count: int, shrink: float = 0.02) -> np.ndarray:
    """Deterministic low-discrepancy interior points of the simplex.

    Halton points in the unit cube (skipping the origin) are mapped to the
    simplex by sorted spacings, then pulled slightly towards the barycentre.
    """
    if n_consumers == 1:
        return np.ones((count, 1))
    cube = qmc.Halton(d=n_consumers - 1, scramble=False).random(count + 1)[1:]
    cube = np.sort(cube, axis=1)
    edges = np.hstack([np.zeros((count, 1)), cube, np.ones((count, 1))])
    alpha = np.diff(edges, axis=1)
    return (1.0 - shrink) * alpha + shrink / n_consumers


def _norm(e):
    return float(np.max(np.abs(e)))


def _follow(economy, alpha, cfg, scale):
    """Damped residual following ``alpha <- alpha + s e(alpha)``.

    The step grows after an accepted move and halves whenever the residual
    norm would increase or a weight would leave the simplex.
    """
    e, point = _evaluate(economy, alpha)
    r = _norm(e)
    s = cfg.step / scale
    rejections = 0
    it = 0
    while it < cfg.max_iter and r > cfg.polish_from * scale and rejections < cfg.max_rejections:
        it += 1
        cand = alpha + s * e
        if np.any(cand <= 1e-9):
            s *= 0.5
            rejections += 1
            continue
        cand = cand / cand.sum()
        try:
            e_c, point_c = _evaluate(economy, cand, p0=point.p)
        except ConvergenceError:
            s *= 0.5
            rejections += 1
            continue
        r_c = _norm(e_c)
        if r_c > r:
            s *= 0.5
            rejections += 1
            continue
        alpha, e, point, r = cand, e_c, point_c, r_c
        s *= 1.5
        rejections = 0
    return alpha, e, point, it


def _polish(economy, alpha, e, point, cfg, scale):
    """Newton on the first ``N-1`` residuals in tangent coordinates.

    ``alpha = alpha_ref + B z`` with ``B`` spanning ``{sum = 0}``; the last
    residual is implied by the zero sum.  Steps backtrack on the residual
    norm and stay inside the simplex.
    """
    n = alpha.size
    basis = np.vstack([np.eye(n - 1), -np.ones((1, n - 1))])
    r = _norm(e)
    it = 0
    while r > cfg.tol * scale and it < cfg.newton_iter:
        it += 1
        h = 1e-7
        jac = np.empty((n - 1, n - 1))
        for j in range(n - 1):
            step = h * basis[:, j]
            ep, _ = _evaluate(economy, alpha + step, p0=point.p)
            em, _ = _evaluate(economy, alpha - step, p0=point.p)
            jac[:, j] = (ep[:-1] - em[:-1]) / (2 * h)
        try:
            dz = np.linalg.solve(jac, -e[:-1])
        except np.linalg.LinAlgError:
            break
        t = 1.0
        moved = False
        for _ in range(40):
            cand = alpha + t * (basis @ dz)
            if np.all(cand > 1e-9):
                try:
                    e_c, point_c = _evaluate(economy, cand, p0=point.p)
                except ConvergenceError:
                    e_c = None
                if e_c is not None and _norm(e_c) < r:
                    alpha, e, point, r = cand, e_c, point_c, _norm(e_c)
                    moved = True
                    break
            t *= 0.5
        if not moved:
            break
    return alpha, e, point, it


def solve_equilibrium_weights(economy: Economy, config: NegishiConfig | None = None) -> SolveReport:
    """Find equilibrium weights from a deterministic set of starts.

    Every start runs residual following and then a Newton polish; a start
    converges when ``max|e| <= tol * max(1, <p|w>)``.  Converged weights
    closer than ``dedup_radius`` (max-norm) to an earlier solution are
    merged into it.  Raises NoSolutionFound if no start converges.
    """
    cfg = config or NegishiConfig()
    n = economy.n_consumers
    starts = start_points(n, cfg.n_starts(n))
    solutions: list[WeightSolution] = []
    traces: list[StartTrace] = []
    best = (np.inf, None)
    for idx, alpha0 in enumerate(starts):
        e0, p0 = _evaluate(economy, alpha0)
        scale = max(1.0, float(p0.p @ economy.total))
        alpha, e, point, it1 = _follow(economy, alpha0, cfg, scale)
        alpha, e, point, it2 = _polish(economy, alpha, e, point, cfg, scale)
        r = _norm(e)
        ok = r <= cfg.tol * scale
        traces.append(StartTrace(idx, alpha0, it1 + it2, r, ok, alpha))
        if r < best[0]:
            best = (r, alpha)
        if not ok:
            continue
        if any(np.max(np.abs(alpha - s.alpha)) <= cfg.dedup_radius for s in solutions):
            continue
        point = equilibrium_from_weights(economy, alpha, p0=point.p)
        solutions.append(WeightSolution(alpha, point, r, idx))
    if not solutions:
        raise NoSolutionFound(
            f"no start converged; best residual {best[0]:.3e}", best_residual=best[0], best_alpha=best[1]
        )
    return SolveReport(solutions, traces, cfg.dedup_radius, cfg.tol)


def boundary_inwardness_check(economy: Economy, epsilon: float = 1e-3, samples_per_face: int = 8) -> BoundaryReport:
    """Evaluate the residual field on the faces ``alpha_i = epsilon``.

    The field points inward when ``e_i > 0`` at every sampled point of face
    ``i``.  Violations are collected, not raised.
    """
    if not 0 < epsilon < 0.1:
        raise ValueError("epsilon must lie in (0, 0.1)")
    n = economy.n_consumers
    report = BoundaryReport(epsilon)
    if n == 1:
        return report
    rest = start_points(n - 1, samples_per_face) if n > 2 else np.ones((1, 1))
    for i in range(n):
        for other in rest:
            alpha = np.insert((1.0 - epsilon) * other, i, epsilon)
            e = excess_budget(economy, alpha)
            report.points.append((alpha, e))
            report.max_abs_sum = max(report.max_abs_sum, abs(float(e.sum())))
            if not e[i] > 0:
                report.violations.append((i, alpha, e))
    return report
