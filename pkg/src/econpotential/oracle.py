"""Brute-force and finite-difference oracles.

Nothing here calls the dual solvers: the only shared code is utility
evaluation from :mod:`econpotential.economy`.  These routines are slow on
purpose and exist to certify the closed forms and solver outputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .economy import (
    CobbDouglas,
    Economy,
    SeparableIsoelastic,
    UtilitySpec,
    utility,
    utility_batch,
)
from .errors import DomainError, UnsupportedEconomyError

__all__ = [
    "GridSpec",
    "fd_gradient",
    "fenchel_search",
    "numeric_fenchel",
    "numeric_fenchel_demand",
    "numeric_indirect_utility",
    "grid_welfare_max",
]

# candidate coordinates for unbounded 1-d searches over x >= 0
_HALF_LINE = np.concatenate(([0.0], np.logspace(-9, 9, 109)))
_HALF_LINE_COARSE = np.concatenate(([0.0], np.logspace(-9, 9, 37)))


@dataclass(frozen=True)
class GridSpec:
    """Resolution and refinement schedule for grid searches.

    ``box`` optionally overrides the search box as ``(lower, upper)`` arrays.
    """

    resolution: int = 401
    levels: int = 6
    box: tuple | None = None

    def __post_init__(self):
        if self.resolution < 16:
            raise ValueError("grid resolution must be at least 16")
        if self.levels < 1:
            raise ValueError("grid needs at least one refinement level")


def fd_gradient(
    f: Callable[[np.ndarray], float],
    point,
    step: float = 1e-5,
    *,
    lower=None,
    richardson: bool = True,
) -> np.ndarray:
    """Central-difference gradient of a scalar field.

    The step for coordinate ``k`` is ``step * max(1, |x_k|)``.  With
    ``richardson`` the differences at ``h`` and ``h/2`` are combined to
    cancel the ``O(h^2)`` error term.  If ``lower`` is given, a stencil that
    would reach ``x_k <= lower_k`` raises DomainError.
    """
    x = np.asarray(point, dtype=float)
    h = step * np.maximum(1.0, np.abs(x))
    if lower is not None and np.any(x - h <= np.broadcast_to(lower, x.shape)):
        raise DomainError(f"finite-difference stencil leaves the domain at {x}")

    def central(hk, k):
        e = np.zeros_like(x)
        e[k] = hk
        return (f(x + e) - f(x - e)) / (2.0 * hk)

    g = np.empty_like(x)
    for k in range(x.size):
        d1 = central(h[k], k)
        if richardson:
            d2 = central(h[k] / 2.0, k)
            g[k] = (4.0 * d2 - d1) / 3.0
        else:
            g[k] = d1
    return g


def _safe(f, t):
    try:
        v = f(t)
    except DomainError:
        return -np.inf
    return v if np.isfinite(v) else -np.inf


def _argmax_1d(f, candidates, batch=None):
    """Maximize a unimodal function over sorted ``candidates``' hull.

    Grid scan first (``batch`` evaluates all candidates at once when
    given), then bounded Brent between the neighbours of the best grid
    point.
    """
    if batch is not None:
        vals = batch(candidates)
    else:
        vals = np.array([_safe(f, t) for t in candidates])
    j = int(np.argmax(vals))
    lo = candidates[max(j - 1, 0)]
    hi = candidates[min(j + 1, len(candidates) - 1)]
    best_t, best_v = candidates[j], vals[j]
    if hi > lo:
        res = minimize_scalar(
            lambda t: -_safe(f, t),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-14 * max(1.0, hi), "maxiter": 500},
        )
        if -res.fun > best_v:
            best_t, best_v = res.x, -res.fun
    return float(best_t), float(best_v)


def fenchel_search(spec: UtilitySpec, q) -> tuple[float, np.ndarray]:
    """Numerically maximize ``u(x) - <q|x>``; returns ``(value, maximizer)``.

    Separable families are searched coordinate by coordinate; the others
    by a nested search over the two goods.  Each 1-d search scans a
    log-spaced grid on ``[0, 1e9]`` and refines between grid neighbours.
    """
    q = np.asarray(q, dtype=float)
    k = spec.n_goods

    def objective(x):
        return utility(spec, x) - float(q @ x)

    if isinstance(spec, (CobbDouglas, SeparableIsoelastic)):
        # additively separable: optimize one coordinate at a time
        x = np.ones(k)
        for j in range(k):
            def along(t, j=j):
                y = x.copy()
                y[j] = t
                return objective(y)

            x[j], _ = _argmax_1d(along, _HALF_LINE)
        return objective(x), x

    if k != 2:
        raise UnsupportedEconomyError("numeric Fenchel oracle handles non-separable families only for K = 2")

    def inner(x0):
        def batch(ts):
            xs = np.column_stack([np.full_like(ts, x0), ts])
            return utility_batch(spec, xs) - xs @ q

        t, v = _argmax_1d(lambda x1: objective(np.array([x0, x1])), _HALF_LINE_COARSE, batch)
        return v, t

    x0, v = _argmax_1d(lambda t: inner(t)[0], _HALF_LINE_COARSE)
    _, x1 = inner(x0)
    return v, np.array([x0, x1])


def numeric_fenchel(spec: UtilitySpec, q, grid: GridSpec | None = None) -> float:
    """``max_{x>=0} u(x) - <q|x>`` via :func:`fenchel_search`."""
    return fenchel_search(spec, q)[0]


def numeric_fenchel_demand(spec: UtilitySpec, q, grid: GridSpec | None = None) -> np.ndarray:
    """Maximizer found by the same search as :func:`numeric_fenchel`."""
    return fenchel_search(spec, q)[1]


def numeric_indirect_utility(spec: UtilitySpec, p, m: float) -> tuple[float, np.ndarray]:
    """Maximize ``u`` on the budget line ``<p|x> = m`` for two goods."""
    p = np.asarray(p, dtype=float)
    if spec.n_goods != 2:
        raise UnsupportedEconomyError("budget-line oracle handles K = 2 only")
    top = m / p[0]

    def on_line(t):
        return utility(spec, np.array([t, max(m - p[0] * t, 0.0) / p[1]]))

    cand = np.linspace(0.0, top, 2001)
    t, v = _argmax_1d(on_line, cand)
    return v, np.array([t, max(m - p[0] * t, 0.0) / p[1]])


def grid_welfare_max(economy: Economy, alpha, grid: GridSpec | None = None, w=None):
    """Best allocation of ``sum_i alpha_i u_i(x_i)`` over a refined grid.

    Two consumers only; consumer 2 receives whatever consumer 1 leaves, so
    the search runs over consumer 1's bundle in the box ``[0, w]``.  Each
    level re-centres a grid of ``grid.resolution`` points per good on the
    best point found, two cells either side.

    Returns the allocation (shape ``(2, K)``) and its weighted utility.
    """
    grid = grid or GridSpec()
    if economy.n_consumers != 2:
        raise UnsupportedEconomyError("grid welfare oracle needs exactly two consumers")
    k = economy.n_goods
    if k > 3:
        raise UnsupportedEconomyError("grid welfare oracle handles at most three goods")
    a = np.asarray(alpha, dtype=float)
    w = economy.total if w is None else np.asarray(w, dtype=float)
    u1, u2 = economy.utilities
    lower, upper = (np.zeros(k), w.copy()) if grid.box is None else map(np.asarray, grid.box)

    best_x, best_v = None, -np.inf
    for _ in range(grid.levels):
        axes = [np.linspace(lower[j], upper[j], grid.resolution) for j in range(k)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, k)
        rest = np.clip(w - mesh, 0.0, None)
        vals = a[0] * utility_batch(u1, mesh) + a[1] * utility_batch(u2, rest)
        j = int(np.argmax(vals))
        if vals[j] > best_v:
            best_v, best_x = float(vals[j]), mesh[j].copy()
        cell = (upper - lower) / (grid.resolution - 1)
        lower = np.maximum(best_x - 2 * cell, 0.0)
        upper = np.minimum(best_x + 2 * cell, w)
    alloc = np.vstack([best_x, np.clip(w - best_x, 0.0, None)])
    return alloc, best_v
