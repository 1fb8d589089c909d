"""The economy's potential and its primal and dual programs.

For welfare weights ``alpha`` the primal program maximizes weighted
utility ``U(x) = sum_i alpha_i u_i(x_i)`` over feasible allocations; the
dual minimizes

    V(p, w) = <p|w> + sum_i alpha_i vbar_i(p / alpha_i)

over positive prices.  The potential ``Y = U - V`` is nonpositive and its
root is the Walrasian equilibrium with incomes ``m_i`` whose marginal
utility is ``1/alpha_i``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import economy as econ
from .economy import Economy
from .errors import (
    ConstructionError,
    ConvergenceError,
    DomainError,
    InfeasibleError,
    TieAmbiguityWarning,
    UnsupportedEconomyError,
)
from .oracle import fd_gradient

__all__ = [
    "WelfareWeights",
    "DualSolution",
    "EquilibriumPoint",
    "as_weights",
    "weighted_utility",
    "dual_value",
    "dual_gradient",
    "potential",
    "minimize_dual",
    "maximize_welfare",
    "welfare_value",
    "equilibrium_from_weights",
    "welfare_gradient",
]

MIN_WEIGHT_SHARE = 1e-12


class WelfareWeights:
    """Strictly positive welfare weights, normalized onto the unit simplex."""

    __slots__ = ("values",)

    def __init__(self, alpha):
        self.values = as_weights(alpha) / np.sum(alpha)
        self.values.setflags(write=False)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self):
        return self.values.size

    def __repr__(self):
        return f"WelfareWeights({self.values.tolist()})"


def as_weights(alpha, n: int | None = None) -> np.ndarray:
    """Validate raw (unnormalized) welfare weights.

    Weights are used at the scale given; only their shares are checked
    against the degeneracy floor.
    """
    a = np.array(alpha, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ConstructionError(f"weights must be a non-empty 1-d array, got shape {a.shape}")
    if n is not None and a.size != n:
        raise ConstructionError(f"expected {n} weights, got {a.size}")
    if not np.all(np.isfinite(a)) or np.any(a <= 0):
        raise ConstructionError(f"weights must be strictly positive, got {a}")
    if np.min(a) / np.sum(a) < MIN_WEIGHT_SHARE:
        raise ConstructionError(f"weight share below {MIN_WEIGHT_SHARE}: {a}")
    return a


def _setup(economy: Economy, alpha, w):
    a = as_weights(alpha, economy.n_consumers)
    w = economy.total if w is None else np.asarray(w, dtype=float)
    if w.shape != (economy.n_goods,) or np.any(w <= 0):
        raise DomainError(f"aggregate endowment must be positive with shape ({economy.n_goods},)")
    return a, w


def weighted_utility(economy: Economy, alpha, x) -> float:
    """``sum_i alpha_i u_i(x_i)``."""
    a = as_weights(alpha, economy.n_consumers)
    x = np.asarray(x, dtype=float)
    return float(sum(a[i] * econ.utility(u, x[i]) for i, u in enumerate(economy.utilities)))


def dual_value(economy: Economy, alpha, p, w=None) -> float:
    """``V(p, w) = <p|w> + sum_i alpha_i vbar_i(p/alpha_i)``."""
    a, w = _setup(economy, alpha, w)
    p = econ.as_prices(p)
    return float(p @ w) + float(sum(a[i] * u._dual(p / a[i]) for i, u in enumerate(economy.utilities)))


def dual_gradient(economy: Economy, alpha, p, w=None) -> np.ndarray:
    """``grad_p V = w - sum_i xbar_i(p/alpha_i)``: the excess supply at ``p``.

    Raises TieError when a linear-aggregate consumer's demand is set-valued.
    """
    a, w = _setup(economy, alpha, w)
    p = econ.as_prices(p)
    g = w.copy()
    for i, u in enumerate(economy.utilities):
        g -= u._demand(p / a[i])
    return g


def potential(economy: Economy, alpha, x, p, w=None, *, feas_tol: float = 1e-9) -> float:
    """``Y = U(x) - V(p, w)``; raises InfeasibleError outside the feasible set."""
    a, w = _setup(economy, alpha, w)
    if not econ.is_feasible(economy, x, feas_tol * max(1.0, float(np.max(w))), w=w):
        raise InfeasibleError("allocation is not feasible for this economy")
    x = np.clip(np.asarray(x, dtype=float), 0.0, None)
    return weighted_utility(economy, a, x) - dual_value(economy, a, p, w)


@dataclass
class DualSolution:
    """Minimizer of the dual program plus solver diagnostics."""

    prices: np.ndarray
    value: float
    iterations: int
    grad_norm: float
    method: str


@dataclass
class EquilibriumPoint:
    """Walrasian equilibrium attached to a vector of welfare weights.

    Prices are on the solver's raw scale, which the weights fix through
    ``lambda_i = 1/alpha_i``; incomes are in the same currency.
    """

    x: np.ndarray
    p: np.ndarray
    m: np.ndarray
    alpha: np.ndarray
    y_residual: float
    welfare: float
    dual_value: float
    diagnostics: dict = field(default_factory=dict)

    def normalized_prices(self, mode: str = "sum_to_one") -> np.ndarray:
        return econ.normalize_prices(self.p, mode)


def _newton_dual(economy, a, w, p0, tol, max_iter):
    def value(p):
        return dual_value(economy, a, p, w)

    def grad(p):
        return dual_gradient(economy, a, p, w)

    p = p0.copy()
    g = grad(p)
    scale = max(1.0, float(np.max(w)))
    k = p.size
    for it in range(max_iter + 1):
        gnorm = float(np.max(np.abs(g)))
        if gnorm <= tol * scale:
            return DualSolution(p, value(p), it, gnorm, "newton")
        if it == max_iter:
            break
        # Hessian by central differences of the analytic gradient
        h = 1e-6 * p
        H = np.empty((k, k))
        for j in range(k):
            e = np.zeros(k)
            e[j] = h[j]
            H[:, j] = (grad(p + e) - grad(p - e)) / (2.0 * h[j])
        H = 0.5 * (H + H.T)
        try:
            np.linalg.cholesky(H)
            d = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            d = g * p**2 / max(1.0, float(np.max(np.abs(g * p))))
        v0 = value(p)
        # below this predicted decrease V is compared at roundoff level, so
        # backtrack on the gradient norm instead
        by_gradient = abs(float(g @ d)) <= 1e-10 * max(1.0, abs(v0))
        t = 1.0
        for _ in range(60):
            cand = np.maximum(p / 2, p - t * d)
            if by_gradient:
                gc = grad(cand)
                if np.max(np.abs(gc)) < gnorm:
                    break
            elif value(cand) <= v0 + 1e-4 * float(g @ (cand - p)):
                gc = grad(cand)
                break
            t *= 0.5
        else:
            raise ConvergenceError(f"dual line search stalled at |grad| = {gnorm:.3e}")
        p, g = cand, gc
    raise ConvergenceError(f"dual Newton did not converge in {max_iter} steps (|grad| = {gnorm:.3e})")


def _kink_logratios(economy):
    out = []
    for u in economy.utilities:
        if isinstance(u, econ.LinearAggregate) and np.all(u.coeffs > 0):
            out.append(float(np.log(u.coeffs[0] / u.coeffs[1])))
    return out


def _nested_dual(economy, a, w, span=25.0):
    """Nonsmooth fallback for two goods.

    Prices are written ``p = t (e^{s/2}, e^{-s/2})``.  For each price ratio
    ``s`` the scale ``t`` is the root of the monotone directional derivative
    of ``V``; the ratio is then found by bounded 1-d minimization of the
    resulting quasiconvex profile, and finally compared against the kinks
    where a linear consumer is indifferent between the goods.
    """
    if economy.n_goods != 2:
        raise UnsupportedEconomyError("nonsmooth dual minimization is implemented for two goods only")
    utils = economy.utilities
    evals = [0]

    def direction(s):
        return np.array([np.exp(s / 2), np.exp(-s / 2)])

    def slope(tau, d):
        # d/dtau V(e^tau d) / e^tau: <d|w> - sum_i <d|xbar_i(e^tau d / alpha_i)>
        t = np.exp(tau)
        out = float(d @ w)
        for i, u in enumerate(utils):
            if u.log_homogeneous:
                out -= a[i] / t
            else:
                out -= float(d @ u._demand(t * d / a[i]))
        return out

    def best_scale(s):
        d = direction(s)
        lo, hi = -1.0, 1.0
        while slope(lo, d) > 0:
            lo -= 2.0
            if lo < -200:
                raise ConvergenceError("could not bracket the price scale")
        while slope(hi, d) < 0:
            hi += 2.0
            if hi > 200:
                raise ConvergenceError("could not bracket the price scale")
        tau = brentq(slope, lo, hi, args=(d,), xtol=1e-15, rtol=4 * np.finfo(float).eps)
        return np.exp(tau) * d

    def profile(s):
        evals[0] += 1
        return dual_value(economy, a, best_scale(s), w)

    res = minimize_scalar(profile, bounds=(-span, span), method="bounded", options={"xatol": 1e-12, "maxiter": 500})
    s_best, v_best = float(res.x), float(res.fun)
    for s in _kink_logratios(economy):
        if abs(s) < span:
            v = profile(s)
            if v <= v_best:
                s_best, v_best = s, v
    kinks = [k for k in _kink_logratios(economy) if abs(k - s_best) < 1e-5]
    if not kinks:
        # smooth piece: sharpen the ratio on the sign of good 1's excess supply
        def excess1(s):
            return dual_gradient(economy, a, best_scale(s), w)[0]

        lo, hi = s_best - 1e-5, s_best + 1e-5
        try:
            f_lo, f_hi = excess1(lo), excess1(hi)
        except econ.TieError:
            f_lo = f_hi = 0.0
        if f_lo < 0 < f_hi:
            s_best = brentq(excess1, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    p = best_scale(s_best)
    return DualSolution(p, dual_value(economy, a, p, w), evals[0], float("nan"), "nested-golden")


def minimize_dual(
    economy: Economy,
    alpha,
    *,
    w=None,
    p0=None,
    tol: float = 1e-12,
    max_iter: int = 500,
) -> DualSolution:
    """Minimize ``V(., w)`` over strictly positive prices.

    Smooth economies use damped Newton with a finite-difference Hessian of
    the analytic gradient, Armijo backtracking and the positivity guard
    ``p <- max(p/2, p - step)``; convergence means
    ``max|grad V| <= tol * max(1, max w)``.  Economies with a linear
    aggregate consumer have a kinked dual and go through a nested 1-d
    search instead (two goods only).
    """
    a, w = _setup(economy, alpha, w)
    if not economy.smooth:
        return _nested_dual(economy, a, w)
    if p0 is None:
        p0 = a.sum() / (economy.n_goods * w)
    p0 = econ.as_prices(p0)
    return _newton_dual(economy, a, w, p0, tol, max_iter)


def _clean_grad(u, x):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        g = u._gradient(x)
    return np.where(np.isnan(g), 0.0, g)


def _primal_two_by_two(economy, a, w, resolution=401):
    """Direct maximization of weighted utility over the Edgeworth box.

    A dense grid locates the optimum and flags flat optima; the optimum is
    then polished by nested root finding on the partial derivatives, which
    are monotone because the objective is concave.
    """
    u1, u2 = economy.utilities

    def dphi(x1, k):
        x2 = w - x1
        return a[0] * _clean_grad(u1, x1)[k] - a[1] * _clean_grad(u2, x2)[k]

    def root_on(f, hi):
        f0, f1 = f(0.0), f(hi)
        if not f0 > 0:
            return 0.0
        if not f1 < 0:
            return hi
        return brentq(lambda t: np.clip(f(t), -1e300, 1e300), 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)

    def inner(x0):
        return root_on(lambda t: dphi(np.array([x0, t]), 1), w[1])

    x0 = root_on(lambda t: dphi(np.array([t, inner(t)]), 0), w[0])
    x1 = np.array([x0, inner(x0)])
    polished = np.vstack([x1, w - x1])

    g0 = np.linspace(0.0, w[0], resolution)
    g1 = np.linspace(0.0, w[1], resolution)
    mesh = np.stack(np.meshgrid(g0, g1, indexing="ij"), axis=-1).reshape(-1, 2)
    vals = a[0] * econ.utility_batch(u1, mesh) + a[1] * econ.utility_batch(u2, w - mesh)
    top = np.max(vals)
    near = mesh[vals >= top - 1e-10 * max(1.0, abs(top))]
    cells = (near.max(axis=0) - near.min(axis=0)) / (w / (resolution - 1))
    if np.any(cells > 2.5):
        warnings.warn(
            "weighted utility has a flat maximum; the returned allocation is one of many",
            TieAmbiguityWarning,
            stacklevel=3,
        )
    v_pol = a[0] * econ.utility_batch(u1, polished[:1])[0] + a[1] * econ.utility_batch(u2, polished[1:])[0]
    if not v_pol >= top - 1e-12 * max(1.0, abs(top)):
        raise ConvergenceError("primal polish fell below the grid optimum")
    return polished


def maximize_welfare(economy: Economy, alpha, *, w=None, dual: DualSolution | None = None):
    """Maximize weighted utility over feasible allocations.

    For strictly concave utilities the allocation is read off the dual
    solution as ``x_i = xbar_i(p/alpha_i)``.  Economies with a linear
    aggregate consumer are solved directly on the Edgeworth box, which
    restricts them to two consumers and two goods.

    Returns ``(x, W)`` with ``W`` the weighted utility at ``x``.
    """
    a, w = _setup(economy, alpha, w)
    if economy.smooth:
        if dual is None:
            dual = minimize_dual(economy, a, w=w)
        x = np.vstack([u._demand(dual.prices / a[i]) for i, u in enumerate(economy.utilities)])
    else:
        if economy.n_consumers != 2 or economy.n_goods != 2:
            raise UnsupportedEconomyError(
                "welfare maximization with linear utilities is implemented for two consumers and two goods"
            )
        x = _primal_two_by_two(economy, a, w)
    return x, weighted_utility(economy, a, x)


def welfare_value(economy: Economy, alpha, w=None) -> float:
    """``W(w)``: maximal weighted utility for aggregate endowment ``w``."""
    return maximize_welfare(economy, alpha, w=w)[1]


def equilibrium_from_weights(
    economy: Economy,
    alpha,
    *,
    w=None,
    p0=None,
    tol: float = 1e-8,
    check: bool = True,
) -> EquilibriumPoint:
    """Root of the potential for the given weights.

    Minimizes the dual, recovers the allocation, and assigns each consumer
    the income whose marginal utility is ``1/alpha_i``.  With ``check`` the
    result must clear markets, satisfy ``sum m = <p|w>``, have ``|Y| <= tol``
    and give every consumer ``u_i(x_i) = v_i(p, m_i)``; otherwise
    ConvergenceError is raised.  Tolerances scale with ``max(1, |value|)``.
    """
    a, w = _setup(economy, alpha, w)
    dual = minimize_dual(economy, a, w=w, p0=p0)
    x, welfare = maximize_welfare(economy, a, w=w, dual=dual)
    p = dual.prices
    m = np.array([econ.income_from_weight(u, p, a[i]) for i, u in enumerate(economy.utilities)])
    y = welfare - dual.value
    point = EquilibriumPoint(
        x=x,
        p=p,
        m=m,
        alpha=a,
        y_residual=float(y),
        welfare=float(welfare),
        dual_value=float(dual.value),
        diagnostics={"iterations": dual.iterations, "grad_norm": dual.grad_norm, "method": dual.method},
    )
    if check:
        _check_equilibrium(economy, point, w, tol)
    return point


def _check_equilibrium(economy, point, w, tol):
    def close(lhs, rhs):
        return abs(lhs - rhs) <= tol * max(1.0, abs(lhs), abs(rhs))

    excess = point.x.sum(axis=0) - w
    if np.max(np.abs(excess)) > tol * max(1.0, float(np.max(w))):
        raise ConvergenceError(f"markets do not clear: excess demand {excess}")
    if not close(point.m.sum(), float(point.p @ w)):
        raise ConvergenceError("incomes do not add up to the value of the aggregate endowment")
    if not close(point.welfare, point.dual_value):
        raise ConvergenceError(f"potential residual {point.y_residual:.3e} exceeds tolerance")
    for i, u in enumerate(economy.utilities):
        ui = econ.utility(u, point.x[i])
        vi = econ.indirect_utility(u, point.p, point.m[i])
        if not close(ui, vi):
            raise ConvergenceError(f"consumer {i} is not optimizing: u = {ui!r}, v = {vi!r}")


def welfare_gradient(economy: Economy, alpha, *, step: float = 1e-4) -> np.ndarray:
    """Finite-difference gradient of ``W`` with respect to the aggregate endowment.

    At an equilibrium this reproduces the price vector.
    """
    a, w = _setup(economy, alpha, None)
    return fd_gradient(lambda ww: welfare_value(economy, a, ww), w, step)
