"""Strength distributions for the random environment.

A :class:`StrengthModel` describes the law of a positive merit ``U``.  All
operations work through the tail function ``Q(x) = P(U > x)`` (strict
inequality, hence right-continuous) and its generalized inverse
``Q^-1(y) = inf{x > 0 : Q(x) <= y}``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

KINDS = (
    "exponential",
    "uniform01",
    "beta",
    "arcsine",
    "pointmass",
    "finite_mixture",
    "pareto",
    "exp_of_gaussian",
    "half_gaussian",
)

QUAD_TOL = 1e-10
ASSUMPTION_A_TOL = 0.1
CONVEXITY_TOL = 1e-9


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class InapplicableModelError(ValueError):
    """A diagnostic was asked of a model it cannot say anything about."""


@dataclass(frozen=True, eq=True)
class StrengthModel:
    name: str
    kind: str
    params: dict = field(default_factory=dict, hash=False)
    alpha: float | None = None
    support_max: float = math.inf

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.alpha is not None:
            if self.support_max != 1.0:
                raise ValueError(
                    f"alpha given for model {self.name!r} but support_max="
                    f"{self.support_max}; the tail exponent needs support_max = 1"
                )
            if not 0.0 <= self.alpha < 2.0:
                raise ValueError(f"alpha must lie in [0, 2), got {self.alpha}")

    def __hash__(self):
        return hash((self.name, self.kind, tuple(sorted(self.params.items())), self.alpha))

    def with_alpha(self, alpha: float | None) -> "StrengthModel":
        return StrengthModel(self.name, self.kind, dict(self.params), alpha, self.support_max)


@dataclass(frozen=True)
class MomentSet:
    mean: float
    second_moment: float
    theta_u: float
    inv_one_plus: float
    method: str = "closed"


# -- constructors ---------------------------------------------------------


def _positive(name, value):
    value = float(value)
    if not value > 0 or not math.isfinite(value):
        raise ValueError(f"{name} must be a positive finite number, got {value}")
    return value


def exponential(rate: float = 1.0) -> StrengthModel:
    rate = _positive("rate", rate)
    return StrengthModel(f"exponential({rate:g})", "exponential", {"rate": rate})


def uniform01(alpha: float | None = 1.0) -> StrengthModel:
    return StrengthModel("uniform01", "uniform01", {}, alpha, 1.0)


def beta(a: float, b: float, alpha: float | None = None) -> StrengthModel:
    a, b = _positive("a", a), _positive("b", b)
    if alpha is None and b < 2:
        alpha = b
    return StrengthModel(f"beta({a:g},{b:g})", "beta", {"a": a, "b": b}, alpha, 1.0)


def arcsine(alpha: float | None = 0.5) -> StrengthModel:
    return StrengthModel("arcsine", "arcsine", {}, alpha, 1.0)


def pointmass(value: float = 1.0, alpha: float | None = None) -> StrengthModel:
    value = _positive("value", value)
    if alpha is None and value == 1.0:
        alpha = 0.0
    return StrengthModel(f"pointmass({value:g})", "pointmass", {"value": value}, alpha, value)


def finite_mixture(values: Sequence[float], weights: Sequence[float],
                   alpha: float | None = None) -> StrengthModel:
    values = [float(v) for v in values]
    weights = [float(w) for w in weights]
    if not values or len(values) != len(weights):
        raise ValueError("finite_mixture needs equally many values and weights")
    if any(not v > 0 for v in values):
        raise ValueError("finite_mixture values must be positive")
    if any(not w > 0 for w in weights):
        raise ValueError("finite_mixture weights must be positive")
    if abs(sum(weights) - 1.0) > 1e-12:
        raise ValueError(f"finite_mixture weights must sum to 1, got {sum(weights)!r}")
    if len(set(values)) != len(values):
        raise ValueError("finite_mixture values must be distinct")
    order = np.argsort(values)
    values = [values[i] for i in order]
    weights = [weights[i] for i in order]
    top = values[-1]
    if alpha is None and top == 1.0:
        alpha = 0.0
    atoms = ",".join(f"{v:g}:{w:g}" for v, w in zip(values, weights))
    return StrengthModel(f"finite_mixture({atoms})", "finite_mixture",
                         {"values": tuple(values), "weights": tuple(weights)}, alpha, top)


def pareto(shape: float) -> StrengthModel:
    shape = _positive("shape", shape)
    return StrengthModel(f"pareto({shape:g})", "pareto", {"shape": shape})


def exp_of_gaussian(mu: float = 0.0, sigma: float = 1.0) -> StrengthModel:
    sigma = _positive("sigma", sigma)
    return StrengthModel(f"exp_of_gaussian({mu:g},{sigma:g})", "exp_of_gaussian",
                         {"mu": float(mu), "sigma": sigma})


def half_gaussian(sigma: float = 1.0) -> StrengthModel:
    sigma = _positive("sigma", sigma)
    return StrengthModel(f"half_gaussian({sigma:g})", "half_gaussian", {"sigma": sigma})


_FACTORIES: dict[str, Callable[..., StrengthModel]] = {
    "exponential": exponential,
    "uniform01": uniform01,
    "beta": beta,
    "arcsine": arcsine,
    "pointmass": pointmass,
    "finite_mixture": finite_mixture,
    "pareto": pareto,
    "exp_of_gaussian": exp_of_gaussian,
    "half_gaussian": half_gaussian,
}


def make_model(kind: str, alpha: float | None = None, **params) -> StrengthModel:
    """Build a model from its kind name and keyword parameters.

    An explicit ``alpha`` overrides the kind's default tail exponent.
    """
    if kind not in _FACTORIES:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {', '.join(KINDS)}")
    model = _FACTORIES[kind](**params)
    if alpha is not None:
        model = model.with_alpha(float(alpha))
    return model


# -- tail and inverse -----------------------------------------------------


def _tail_array(model: StrengthModel, x: np.ndarray) -> np.ndarray:
    p = model.params
    k = model.kind
    if k == "exponential":
        return np.exp(-p["rate"] * x)
    if k == "uniform01":
        return np.clip(1.0 - x, 0.0, 1.0)
    if k == "beta":
        inside = special.betainc(p["b"], p["a"], np.clip(1.0 - x, 0.0, 1.0))
        return np.where(x >= 1.0, 0.0, inside)
    if k == "arcsine":
        xc = np.clip(x, 0.0, 1.0)
        # arcsin(sqrt(1 - x)) stays accurate next to the top of the support
        near_top = (2.0 / np.pi) * np.arcsin(np.sqrt(1.0 - xc))
        return np.where(xc > 0.5, near_top, (2.0 / np.pi) * np.arccos(np.sqrt(xc)))
    if k == "pointmass":
        return np.where(x < p["value"], 1.0, 0.0)
    if k == "finite_mixture":
        vals = np.asarray(p["values"])
        w = np.asarray(p["weights"])
        return (w[None, :] * (vals[None, :] > x.reshape(-1, 1))).sum(axis=1).reshape(x.shape)
    if k == "pareto":
        with np.errstate(divide="ignore"):
            return np.where(x < 1.0, 1.0, np.power(np.maximum(x, 1.0), -p["shape"]))
    if k == "exp_of_gaussian":
        with np.errstate(divide="ignore"):
            z = (np.log(x) - p["mu"]) / (p["sigma"] * math.sqrt(2.0))
        return 0.5 * special.erfc(z)
    if k == "half_gaussian":
        return special.erfc(x / (p["sigma"] * math.sqrt(2.0)))
    raise AssertionError(k)


def tail(model: StrengthModel, x):
    """Return ``Q(x) = P(U > x)``; accepts scalars or arrays of non-negative reals."""
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise ValueError("tail is only defined for x >= 0")
    out = _tail_array(model, arr)
    if np.ndim(x) == 0:
        return float(out)
    return out


def tail_below_max(model: StrengthModel, u):
    """``Q(support_max - u)`` evaluated without cancellation near the top."""
    if not math.isfinite(model.support_max):
        raise InapplicableModelError(f"{model.name} has unbounded support")
    u = np.asarray(u, dtype=float)
    p = model.params
    k = model.kind
    top = model.support_max
    if k == "uniform01":
        out = np.clip(u, 0.0, 1.0)
    elif k == "beta":
        out = special.betainc(p["b"], p["a"], np.clip(u, 0.0, 1.0))
    elif k == "arcsine":
        out = (2.0 / np.pi) * np.arcsin(np.sqrt(np.clip(u, 0.0, 1.0)))
    else:
        out = _tail_array(model, np.maximum(top - u, 0.0))
    return float(out) if out.ndim == 0 else out


def _inverse_closed(model: StrengthModel, y: np.ndarray):
    p = model.params
    k = model.kind
    if k == "exponential":
        return -np.log(y) / p["rate"]
    if k == "uniform01":
        return 1.0 - y
    if k == "arcsine":
        return np.cos(0.5 * np.pi * y) ** 2
    if k == "pointmass":
        return np.full_like(y, p["value"])
    if k == "finite_mixture":
        vals = np.asarray(p["values"])
        w = np.asarray(p["weights"])
        # tails[k] = Q on [vals[k], vals[k+1]); the answer is the first atom whose tail is <= y
        tails = 1.0 - np.cumsum(w)
        tails[-1] = 0.0
        idx = np.searchsorted(-tails, -y, side="left")
        return vals[np.minimum(idx, len(vals) - 1)]
    if k == "pareto":
        return np.power(y, -1.0 / p["shape"])
    if k == "exp_of_gaussian":
        return np.exp(p["mu"] + p["sigma"] * math.sqrt(2.0) * special.erfcinv(2.0 * y))
    if k == "half_gaussian":
        return p["sigma"] * math.sqrt(2.0) * special.erfcinv(y)
    return None


def _inverse_bisect(model: StrengthModel, y: float) -> float:
    hi = 1.0
    while tail(model, hi) > y:
        hi *= 2.0
    lo = 0.0
    while hi - lo > 1e-12 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if tail(model, mid) <= y:
            hi = mid
        else:
            lo = mid
    return hi


def inverse_tail(model: StrengthModel, y):
    """Generalized inverse ``inf{x > 0 : Q(x) <= y}`` for ``y`` in (0, 1)."""
    arr = np.asarray(y, dtype=float)
    if np.any(~((arr > 0) & (arr < 1))):
        raise ValueError("inverse_tail needs 0 < y < 1")
    out = _inverse_closed(model, np.atleast_1d(arr))
    if out is None:
        out = np.array([_inverse_bisect(model, float(v)) for v in np.atleast_1d(arr)])
    else:
        # a closed form can round below the infimum; step up until Q(x) <= y holds
        yy = np.atleast_1d(arr)
        for _ in range(64):
            low = _tail_array(model, out) > yy
            if not low.any():
                break
            out = np.where(low, np.nextafter(out, np.inf), out)
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def open_uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform draws strictly inside (0, 1), on the grid (k + 1/2) / 2**52."""
    return (np.floor(rng.random(n) * 2.0**52) + 0.5) * 2.0**-52


def sample(model: StrengthModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` i.i.d. strengths.

    Inverse transform is used wherever the inverse tail has a closed form;
    the beta law falls back to numpy's native sampler.
    """
    if n < 1:
        raise ValueError("sample size must be >= 1")
    if model.kind == "beta":
        out = rng.beta(model.params["a"], model.params["b"], size=n)
        # guard against underflow to an exact zero
        return np.maximum(out, np.finfo(float).tiny)
    if model.kind == "pointmass":
        return np.full(n, model.params["value"])
    return _inverse_closed(model, open_uniform(rng, n))


def order_statistics(values) -> np.ndarray:
    """Sort ascending (stable), so equal strengths keep their input order."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("order_statistics needs a non-empty input")
    return np.sort(arr, kind="stable")


# -- moments --------------------------------------------------------------


def _closed_moments(model: StrengthModel):
    """(mean, E[U^2], theta_u, E[1/(1+U)]); theta/inv may be None."""
    p = model.params
    k = model.kind
    if k == "pointmass":
        v = p["value"]
        return v, v * v, v / (1 + v) ** 2, 1 / (1 + v)
    if k == "finite_mixture":
        vals = np.asarray(p["values"])
        w = np.asarray(p["weights"])
        return (float(w @ vals), float(w @ vals**2),
                float(w @ (vals / (1 + vals) ** 2)), float(w @ (1 / (1 + vals))))
    if k == "uniform01":
        return 0.5, 1.0 / 3.0, math.log(2.0) - 0.5, math.log(2.0)
    if k == "arcsine":
        r2 = math.sqrt(2.0)
        return 0.5, 3.0 / 8.0, 1.0 / (4.0 * r2), 1.0 / r2
    if k == "beta":
        a, b = p["a"], p["b"]
        inv1 = special.hyp2f1(1.0, a, a + b, -1.0)
        inv2 = special.hyp2f1(2.0, a, a + b, -1.0)
        return a / (a + b), a * (a + 1) / ((a + b) * (a + b + 1)), inv1 - inv2, inv1
    if k == "exponential":
        lam = p["rate"]
        inv1 = lam * special.exp1(lam) * math.exp(lam)
        inv2 = lam * special.expn(2, lam) * math.exp(lam)
        return 1 / lam, 2 / lam**2, inv1 - inv2, inv1
    if k == "pareto":
        s = p["shape"]
        mean = s / (s - 1) if s > 1 else math.inf
        second = s / (s - 2) if s > 2 else math.inf
        inv1 = s / (s + 1) * special.hyp2f1(1.0, s + 1, s + 2, -1.0)
        inv2 = s / (s + 2) * special.hyp2f1(2.0, s + 2, s + 3, -1.0)
        return mean, second, inv1 - inv2, inv1
    if k == "exp_of_gaussian":
        mu, sg = p["mu"], p["sigma"]
        return math.exp(mu + sg**2 / 2), math.exp(2 * mu + 2 * sg**2), None, None
    if k == "half_gaussian":
        sg = p["sigma"]
        return sg * math.sqrt(2 / math.pi), sg**2, None, None
    raise AssertionError(k)


def _breakpoints(model: StrengthModel) -> list[float]:
    """Points in x where Q jumps or has a kink."""
    p = model.params
    if model.kind == "pointmass":
        return [p["value"]]
    if model.kind == "finite_mixture":
        return list(p["values"])
    if model.kind == "pareto":
        return [1.0]
    if math.isfinite(model.support_max):
        return [model.support_max]
    return []


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = QUAD_TOL, max_intervals: int = 200_000) -> float:
    """Globally adaptive Simpson rule.

    The interval with the largest error estimate is split until the summed
    estimate drops below ``tol``; singular endpoints therefore only cost
    local refinement.
    """

    def panel(lo, hi, flo, fhi):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        coarse = (hi - lo) / 6.0 * (flo + 4 * fmid + fhi)
        fine = (hi - lo) / 12.0 * (flo + 4 * flm + 2 * fmid + 4 * frm + fhi)
        err = abs(fine - coarse) / 15.0
        return (-err, lo, hi, flo, fhi, fine + (fine - coarse) / 15.0, fmid)

    heap = [panel(a, b, f(a), f(b))]
    total_err = -heap[0][0]
    count = 1
    while total_err > tol:
        if count >= max_intervals:
            raise QuadratureError(
                f"adaptive Simpson stopped at {count} panels with error estimate {total_err:.3g}"
            )
        neg_err, lo, hi, flo, fhi, _, fmid = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        left = panel(lo, mid, flo, fmid)
        right = panel(mid, hi, fmid, fhi)
        heapq.heappush(heap, left)
        heapq.heappush(heap, right)
        total_err += neg_err - left[0] - right[0]
        count += 1
        if count % 1024 == 0:
            # refresh to avoid drift of the running sum
            total_err = -sum(item[0] for item in heap)
    return math.fsum(item[5] for item in heap)


def _tail_on_unit(model: StrengthModel) -> Callable[[float], float]:
    def g(t: float) -> float:
        if t >= 1.0:
            return 0.0
        return float(_tail_array(model, np.asarray(t / (1.0 - t))))

    return g


def _integrate_pieces(f, cuts, tol):
    edges = [0.0] + sorted(c for c in set(cuts) if 0.0 < c < 1.0) + [1.0]
    share = tol / (len(edges) - 1)

    def one_sided(lo, hi):
        # endpoint values are taken as limits from inside the piece
        lo_in, hi_in = np.nextafter(lo, hi), np.nextafter(hi, lo)
        return lambda t: f(min(max(t, lo_in), hi_in))

    return math.fsum(
        adaptive_simpson(one_sided(lo, hi), lo, hi, share) for lo, hi in zip(edges, edges[1:])
    )


def quadrature_moments(model: StrengthModel, tol: float = QUAD_TOL) -> tuple[float, float]:
    """(theta_u, E[1/(1+U)]) from the tail after the substitution t = x / (1 + x).

    Integrating by parts against Q gives
    ``E[1/(1+U)] = 1 - int_0^1 Q(t/(1-t)) dt`` and
    ``E[U/(1+U)^2] = int_0^1 Q(t/(1-t)) (1 - 2t) dt``.
    """
    q = _tail_on_unit(model)
    cuts = [x / (1.0 + x) for x in _breakpoints(model)]
    cuts.append(0.5)
    inv = 1.0 - _integrate_pieces(q, cuts, tol / 2)
    theta = _integrate_pieces(lambda t: q(t) * (1.0 - 2.0 * t), cuts, tol / 2)
    return theta, inv


def moments(model: StrengthModel, method: str = "auto") -> MomentSet:
    """Mean, second moment, ``theta_u = E[U/(U+1)^2]`` and ``E[1/(1+U)]``.

    ``method="auto"`` uses closed forms when the kind has them and quadrature
    otherwise; ``"quadrature"`` forces the numerical path for the last two.
    """
    if method not in ("auto", "closed", "quadrature"):
        raise ValueError(f"unknown moment method {method!r}")
    mean, second, theta, inv = _closed_moments(model)
    used = "closed"
    if method == "quadrature" or theta is None:
        if method == "closed":
            raise ValueError(f"{model.kind} has no closed-form theta_u")
        theta, inv = quadrature_moments(model)
        used = "quadrature"
    return MomentSet(float(mean), float(second), float(theta), float(inv), used)


# -- hypothesis diagnostics -----------------------------------------------


@dataclass(frozen=True)
class AssumptionAReport:
    alpha: float
    slope: float
    deviation: float
    passed: bool
    points_used: int
    tolerance: float = ASSUMPTION_A_TOL


def default_u_grid() -> np.ndarray:
    return np.geomspace(1e-6, 1e-2, 40)


def check_assumption_a(model: StrengthModel, alpha: float | None = None,
                       u_grid=None, tolerance: float = ASSUMPTION_A_TOL) -> AssumptionAReport:
    """Fit the slope of ``log Q(1 - u)`` against ``log u`` near the top of the support."""
    if model.support_max != 1.0:
        raise InapplicableModelError(
            f"{model.name}: the tail-exponent check needs support_max = 1"
        )
    if alpha is None:
        alpha = model.alpha
    if alpha is None:
        raise InapplicableModelError(f"{model.name} carries no alpha to compare against")
    u = default_u_grid() if u_grid is None else np.asarray(u_grid, dtype=float)
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError("u_grid must lie inside (0, 1)")
    q = np.asarray(tail_below_max(model, u), dtype=float)
    keep = q > 0
    if keep.sum() < 2:
        raise InapplicableModelError(f"{model.name}: Q(1-u) vanishes on the grid")
    slope = float(np.polyfit(np.log(u[keep]), np.log(q[keep]), 1)[0])
    dev = abs(slope - alpha)
    return AssumptionAReport(float(alpha), slope, dev, dev <= tolerance, int(keep.sum()), tolerance)


@dataclass(frozen=True)
class ConvexityReport:
    beta: float
    x0: float
    min_second_difference: float
    passed: bool
    points: int


def check_convexity(model: StrengthModel, beta: float = 0.25, x0: float | None = None,
                    grid=None, n_points: int = 100) -> ConvexityReport:
    """Second-difference test of convexity of ``Q ** (1/2 - beta)`` on ``[x0, ...)``."""
    if not 0 < beta < 0.5:
        raise ValueError("beta must lie in (0, 1/2)")
    if x0 is None:
        x0 = inverse_tail(model, 0.5)
    q0 = tail(model, x0)
    if not 0 < q0 < 1:
        raise InapplicableModelError(f"x0={x0} is not interior to the support of {model.name}")
    if grid is None:
        hi = model.support_max if math.isfinite(model.support_max) else inverse_tail(model, 1e-12)
        grid = np.linspace(x0, hi, n_points)
    grid = np.asarray(grid, dtype=float)
    if grid.size < 3:
        raise ValueError("convexity check needs at least 3 grid points")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    f = np.power(tail(model, grid), 0.5 - beta)
    slopes = np.diff(f) / np.diff(grid)
    d2 = np.diff(slopes) * (grid[2:] - grid[:-2]) / 2.0
    worst = float(d2.min())
    return ConvexityReport(beta, float(x0), worst, worst >= -CONVEXITY_TOL, int(grid.size))
