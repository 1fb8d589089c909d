"""Consumers, their utility families, and the per-consumer duality toolkit.

Every utility family carries closed forms for its Fenchel dual

    vbar(q) = max_{x >= 0} u(x) - <q|x>

and for the maximizer ``xbar(q) = -grad vbar(q)``.  Classical indirect
utility and Marshallian demand are recovered from these through the
marginal utility of income ``lam`` solving ``<p|xbar(lam p)> = m``:

    v(p, m) = lam m + vbar(lam p),    x(p, m) = xbar(lam p).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .errors import ConstructionError, ConvergenceError, DomainError, TieError

__all__ = [
    "UtilitySpec",
    "CobbDouglas",
    "CES",
    "LinearAggregate",
    "SeparableIsoelastic",
    "Economy",
    "utility",
    "utility_batch",
    "grad_utility",
    "fenchel_dual",
    "fenchel_demand",
    "lambda_of_income",
    "income_from_weight",
    "indirect_utility",
    "marshallian_demand",
    "as_prices",
    "normalize_prices",
    "is_feasible",
]

# relative gap below which two bang-per-buck ratios count as tied
TIE_RTOL = 1e-12


def _lse(v: np.ndarray) -> float:
    # scalar log-sum-exp; scipy's version carries heavy per-call overhead
    top = v.max()
    if not np.isfinite(top):
        return float(top)
    return float(top + np.log(np.exp(v - top).sum()))


def _readonly(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ConstructionError(f"{name} must be a non-empty 1-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConstructionError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


def as_prices(p) -> np.ndarray:
    """Validate a price vector: a 1-d array of strictly positive finite reals."""
    q = np.asarray(p, dtype=float)
    if q.ndim != 1:
        raise DomainError(f"prices must be 1-d, got shape {q.shape}")
    if not np.all(np.isfinite(q)) or np.any(q <= 0):
        raise DomainError(f"prices must be strictly positive and finite, got {q}")
    return q


def normalize_prices(p, mode: str = "sum_to_one") -> np.ndarray:
    """Rescale prices for reporting.

    ``"sum_to_one"`` divides by the price sum, ``"numeraire"`` by the price
    of the first good.
    """
    q = as_prices(p)
    if mode == "sum_to_one":
        return q / q.sum()
    if mode == "numeraire":
        return q / q[0]
    raise ValueError(f"unknown normalization {mode!r}")


def _bundle(spec: "UtilitySpec", x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.n_goods,):
        raise DomainError(f"bundle must have shape ({spec.n_goods},), got {x.shape}")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise DomainError(f"bundle must be nonnegative and finite, got {x}")
    return x


def _interior(spec: "UtilitySpec", x) -> np.ndarray:
    x = _bundle(spec, x)
    if np.any(x <= 0):
        raise DomainError(f"gradient requires a strictly positive bundle, got {x}")
    return x


def _price_arg(spec: "UtilitySpec", q) -> np.ndarray:
    q = as_prices(q)
    if q.shape != (spec.n_goods,):
        raise DomainError(f"prices must have shape ({spec.n_goods},), got {q.shape}")
    return q


@dataclass(frozen=True, eq=False)
class UtilitySpec:
    """Base class of the utility families.

    Subclasses set ``family`` (the config tag), ``strictly_concave`` and
    ``log_homogeneous``.  The latter marks families with
    ``u(t x) = log t + u(x)``, for which ``<q|xbar(q)> = 1`` and the marginal
    utility of income is ``1/m``.
    """

    family: ClassVar[str] = ""
    strictly_concave: ClassVar[bool] = True
    log_homogeneous: ClassVar[bool] = False

    @property
    def n_goods(self) -> int:
        raise NotImplementedError

    def _value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def _gradient(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _dual(self, q: np.ndarray) -> float:
        raise NotImplementedError

    def _demand(self, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _lambda(self, p: np.ndarray, m: float) -> float | None:
        """Closed-form marginal utility of income, or None if there is none."""
        return None

    def params(self) -> dict:
        """Family parameters as plain lists (the config-file layout)."""
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class CobbDouglas(UtilitySpec):
    """``u(x) = sum_k c_k log x_k`` with all ``c_k > 0``."""

    coeffs: np.ndarray

    family: ClassVar[str] = "cobb_douglas"

    def __post_init__(self):
        c = _readonly(self.coeffs, "coeffs")
        if np.any(c <= 0):
            raise ConstructionError(f"cobb_douglas coeffs must be > 0, got {c}")
        object.__setattr__(self, "coeffs", c)

    @property
    def n_goods(self) -> int:
        return self.coeffs.size

    def _value(self, x):
        if np.any(x <= 0):
            raise DomainError("cobb_douglas utility diverges at a zero coordinate")
        return float(self.coeffs @ np.log(x))

    def _gradient(self, x):
        return self.coeffs / x

    def _dual(self, q):
        c = self.coeffs
        return float(np.sum(c * (np.log(c / q) - 1.0)))

    def _demand(self, q):
        return self.coeffs / q

    def _lambda(self, p, m):
        return float(self.coeffs.sum()) / m

    def params(self):
        return {"coeffs": self.coeffs.tolist()}


@dataclass(frozen=True, eq=False)
class CES(UtilitySpec):
    """``u(x) = (1/rho) log sum_k a_k x_k^rho`` with ``rho < 1``, ``rho != 0``."""

    rho: float
    weights: np.ndarray

    family: ClassVar[str] = "ces"
    log_homogeneous: ClassVar[bool] = True

    def __post_init__(self):
        rho = float(self.rho)
        if not np.isfinite(rho) or rho >= 1 or rho == 0:
            raise ConstructionError(f"ces rho must satisfy rho < 1 and rho != 0, got {rho}")
        a = _readonly(self.weights, "weights")
        if np.any(a <= 0):
            raise ConstructionError(f"ces weights must be > 0, got {a}")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "weights", a)

    @property
    def n_goods(self) -> int:
        return self.weights.size

    def _value(self, x):
        rho, a = self.rho, self.weights
        if np.any(x <= 0):
            if rho < 0 or np.all(x <= 0):
                raise DomainError("ces utility diverges at this bundle")
            pos = x > 0
            return _lse(np.log(a[pos]) + rho * np.log(x[pos])) / rho
        return _lse(np.log(a) + rho * np.log(x)) / rho

    def _gradient(self, x):
        rho, a = self.rho, self.weights
        log_s = _lse(np.log(a) + rho * np.log(x))
        return np.exp(np.log(a) + (rho - 1.0) * np.log(x) - log_s)

    def _log_t(self, q):
        rho, a = self.rho, self.weights
        r = rho / (rho - 1.0)
        return _lse(np.log(a) + r * (np.log(q) - np.log(a)))

    def _dual(self, q):
        rho = self.rho
        return float((1.0 - rho) / rho * self._log_t(q) - 1.0)

    def _demand(self, q):
        rho, a = self.rho, self.weights
        return np.exp((np.log(q) - np.log(a)) / (rho - 1.0) - self._log_t(q))

    def _lambda(self, p, m):
        return 1.0 / m

    def params(self):
        return {"rho": self.rho, "weights": self.weights.tolist()}


@dataclass(frozen=True, eq=False)
class LinearAggregate(UtilitySpec):
    """``u(x) = log <b|x>`` with ``b >= 0`` not all zero.

    Concave but not strictly so; the Fenchel dual has kinks wherever two
    goods tie for the best ratio ``b_k / q_k``.
    """

    coeffs: np.ndarray

    family: ClassVar[str] = "linear_aggregate"
    strictly_concave: ClassVar[bool] = False
    log_homogeneous: ClassVar[bool] = True

    def __post_init__(self):
        b = _readonly(self.coeffs, "coeffs")
        if np.any(b < 0) or not np.any(b > 0):
            raise ConstructionError(f"linear_aggregate coeffs must be >= 0 and not all zero, got {b}")
        object.__setattr__(self, "coeffs", b)

    @property
    def n_goods(self) -> int:
        return self.coeffs.size

    def _value(self, x):
        s = float(self.coeffs @ x)
        if s <= 0:
            raise DomainError("linear_aggregate utility diverges where <b|x> = 0")
        return float(np.log(s))

    def _gradient(self, x):
        return self.coeffs / float(self.coeffs @ x)

    def _ratios(self, q):
        return self.coeffs / q

    def _dual(self, q):
        return float(np.log(np.max(self._ratios(q))) - 1.0)

    def _demand(self, q):
        r = self._ratios(q)
        best = np.max(r)
        winners = np.flatnonzero(r >= best * (1.0 - TIE_RTOL))
        if winners.size > 1:
            raise TieError(f"goods {winners.tolist()} tie for the best ratio b/q at q={q}")
        x = np.zeros_like(q)
        k = winners[0]
        x[k] = 1.0 / q[k]
        return x

    def _lambda(self, p, m):
        return 1.0 / m

    def params(self):
        return {"coeffs": self.coeffs.tolist()}


@dataclass(frozen=True, eq=False)
class SeparableIsoelastic(UtilitySpec):
    """``u(x) = sum_k theta_k x_k^gamma_k / gamma_k``.

    Requires ``theta_k > 0`` and ``gamma_k < 1``, ``gamma_k != 0``.
    """

    theta: np.ndarray
    gamma: np.ndarray

    family: ClassVar[str] = "separable_isoelastic"

    def __post_init__(self):
        th = _readonly(self.theta, "theta")
        ga = _readonly(self.gamma, "gamma")
        if th.shape != ga.shape:
            raise ConstructionError("theta and gamma must have the same length")
        if np.any(th <= 0):
            raise ConstructionError(f"separable_isoelastic theta must be > 0, got {th}")
        if np.any(ga >= 1) or np.any(ga == 0):
            raise ConstructionError(f"separable_isoelastic gamma must be < 1 and != 0, got {ga}")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "gamma", ga)

    @property
    def n_goods(self) -> int:
        return self.theta.size

    def _value(self, x):
        if np.any((x <= 0) & (self.gamma < 0)):
            raise DomainError("separable_isoelastic utility diverges at a zero coordinate with gamma < 0")
        return float(np.sum(self.theta * x**self.gamma / self.gamma))

    def _gradient(self, x):
        return self.theta * x ** (self.gamma - 1.0)

    def _dual(self, q):
        th, ga = self.theta, self.gamma
        return float(np.sum(th * (1.0 - ga) / ga * (q / th) ** (ga / (ga - 1.0))))

    def _demand(self, q):
        return (q / self.theta) ** (1.0 / (self.gamma - 1.0))

    def params(self):
        return {"theta": self.theta.tolist(), "gamma": self.gamma.tolist()}


@dataclass(frozen=True, eq=False)
class Economy:
    """An exchange economy: one utility and one endowment row per consumer.

    Endowment rows must be nonnegative with positive total, and every good
    must be held by someone, so the aggregate endowment ``total`` is
    strictly positive.
    """

    utilities: tuple
    endowments: np.ndarray
    total: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        utils = tuple(self.utilities)
        if not utils:
            raise ConstructionError("an economy needs at least one consumer")
        for u in utils:
            if not isinstance(u, UtilitySpec):
                raise ConstructionError(f"not a UtilitySpec: {u!r}")
        k = utils[0].n_goods
        if any(u.n_goods != k for u in utils):
            raise ConstructionError("all consumers must share the same number of goods")
        omega = np.array(self.endowments, dtype=float)
        if omega.shape != (len(utils), k):
            raise ConstructionError(f"endowments must have shape ({len(utils)}, {k}), got {omega.shape}")
        if not np.all(np.isfinite(omega)) or np.any(omega < 0):
            raise ConstructionError("endowments must be nonnegative and finite")
        if np.any(omega.sum(axis=1) <= 0):
            raise ConstructionError("every consumer must own something")
        w = omega.sum(axis=0)
        if np.any(w <= 0):
            raise ConstructionError("aggregate endowment must be strictly positive in every good")
        omega.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "utilities", utils)
        object.__setattr__(self, "endowments", omega)
        object.__setattr__(self, "total", w)

    @property
    def n_consumers(self) -> int:
        return len(self.utilities)

    @property
    def n_goods(self) -> int:
        return self.endowments.shape[1]

    @property
    def smooth(self) -> bool:
        """True when every consumer's Fenchel dual is differentiable."""
        return all(u.strictly_concave for u in self.utilities)

    def with_endowments(self, endowments) -> "Economy":
        return Economy(self.utilities, endowments)


def is_feasible(economy: Economy, x, tol: float = 1e-9, w=None) -> bool:
    """Check ``x >= 0`` and ``sum_i x_i <= w`` componentwise, up to ``tol``."""
    x = np.asarray(x, dtype=float)
    w = economy.total if w is None else np.asarray(w, dtype=float)
    if x.shape != (economy.n_consumers, economy.n_goods):
        return False
    return bool(np.all(x >= -tol) and np.all(x.sum(axis=0) <= w + tol))


def utility(spec: UtilitySpec, x: Sequence[float]) -> float:
    """Utility of bundle ``x``; raises DomainError where the family diverges."""
    return spec._value(_bundle(spec, x))


def utility_batch(spec: UtilitySpec, xs) -> np.ndarray:
    """Vectorized utility over the rows of ``xs`` (shape ``(M, K)``).

    Rows where the family diverges evaluate to ``-inf`` instead of raising,
    which is what grid searches want.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != spec.n_goods:
        raise DomainError(f"expected shape (M, {spec.n_goods}), got {xs.shape}")
    if np.any(xs < 0):
        raise DomainError("bundles must be nonnegative")
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if isinstance(spec, CobbDouglas):
            out = np.log(xs) @ spec.coeffs
        elif isinstance(spec, CES):
            out = logsumexp(np.log(spec.weights) + spec.rho * np.log(xs), axis=1) / spec.rho
        elif isinstance(spec, LinearAggregate):
            out = np.log(xs @ spec.coeffs)
        elif isinstance(spec, SeparableIsoelastic):
            out = (spec.theta * xs**spec.gamma / spec.gamma).sum(axis=1)
        else:
            out = np.array([spec._value(x) for x in xs])
    return np.where(np.isnan(out), -np.inf, out)


def grad_utility(spec: UtilitySpec, x: Sequence[float]) -> np.ndarray:
    """Analytic gradient of the utility at a strictly positive bundle."""
    return spec._gradient(_interior(spec, x))


def fenchel_dual(spec: UtilitySpec, q: Sequence[float]) -> float:
    """Closed-form ``max_{x>=0} u(x) - <q|x>`` at strictly positive ``q``."""
    return spec._dual(_price_arg(spec, q))


def fenchel_demand(spec: UtilitySpec, q: Sequence[float]) -> np.ndarray:
    """The maximizer of ``u(x) - <q|x>``.

    Raises TieError for a linear aggregate whose best ratio ``b_k/q_k`` is
    attained by more than one good.
    """
    return spec._demand(_price_arg(spec, q))


def _expenditure(spec, p, lam):
    return float(p @ spec._demand(lam * p))


def lambda_of_income(
    spec: UtilitySpec,
    p: Sequence[float],
    m: float,
    *,
    rtol: float = 1e-14,
    max_expand: int = 200,
) -> float:
    """Marginal utility of income: the ``lam > 0`` with ``<p|xbar(lam p)> = m``.

    Closed form where the family has one, otherwise a bracketed root search
    on ``log lam`` (the expenditure is strictly decreasing in ``lam``).
    """
    p = _price_arg(spec, p)
    m = float(m)
    if not np.isfinite(m) or m <= 0:
        raise DomainError(f"income must be positive, got {m}")
    lam = spec._lambda(p, m)
    if lam is not None:
        return lam

    def excess(s):
        return np.log(_expenditure(spec, p, np.exp(s))) - np.log(m)

    lo = hi = -np.log(m)
    f_lo = f_hi = excess(lo)
    for _ in range(max_expand):
        if f_lo >= 0:
            break
        hi, f_hi = lo, f_lo
        lo -= 1.0
        f_lo = excess(lo)
    else:
        raise ConvergenceError("could not bracket the marginal utility of income from below")
    for _ in range(max_expand):
        if f_hi <= 0:
            break
        lo, f_lo = hi, f_hi
        hi += 1.0
        f_hi = excess(hi)
    else:
        raise ConvergenceError("could not bracket the marginal utility of income from above")
    if f_lo == 0:
        return float(np.exp(lo))
    if f_hi == 0:
        return float(np.exp(hi))
    s = brentq(excess, lo, hi, xtol=1e-15, rtol=max(rtol, 4 * np.finfo(float).eps))
    return float(np.exp(s))


def income_from_weight(spec: UtilitySpec, p: Sequence[float], alpha_i: float) -> float:
    """Income ``m = <p|xbar(p/alpha_i)>`` whose marginal utility is ``1/alpha_i``."""
    p = _price_arg(spec, p)
    alpha_i = float(alpha_i)
    if not np.isfinite(alpha_i) or alpha_i <= 0:
        raise DomainError(f"welfare weight must be positive, got {alpha_i}")
    if spec.log_homogeneous:
        # <q|xbar(q)> = 1 for every q, so the income equals the weight
        return alpha_i
    return float(p @ spec._demand(p / alpha_i))


def indirect_utility(spec: UtilitySpec, p: Sequence[float], m: float) -> float:
    """``v(p, m) = lam m + vbar(lam p)`` with ``lam = lambda_of_income(p, m)``."""
    p = _price_arg(spec, p)
    lam = lambda_of_income(spec, p, m)
    return lam * float(m) + spec._dual(lam * p)


def marshallian_demand(spec: UtilitySpec, p: Sequence[float], m: float) -> np.ndarray:
    """Utility-maximizing bundle on the budget ``<p|x> = m``."""
    p = _price_arg(spec, p)
    lam = lambda_of_income(spec, p, m)
    return spec._demand(lam * p)
