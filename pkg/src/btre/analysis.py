"""Monte Carlo estimators and bound calculators for the three limit results.

Estimators fan replicates out through :func:`btre.streams.fan_out`; each
replicate owns a stream keyed by ``(seed, replicate)`` so every estimate is
identical for any worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Sequence

import numpy as np
from scipy import stats

from . import streams
from .distributions import StrengthModel, moments, order_statistics, sample
from .tournament import event_indicators, play, play_batch, play_with_tagged_sweep

Z95 = float(stats.norm.ppf(0.975))
Z997 = float(stats.norm.ppf(1 - 0.003 / 2))
BATCH_BLOCK = 10_000


@dataclass(frozen=True)
class Estimate:
    value: float
    replicates: int
    ci_low: float
    ci_high: float
    seed: int | None = None
    successes: int | None = None

    @property
    def width(self) -> float:
        return self.ci_high - self.ci_low

    def covers(self, p: float) -> bool:
        return self.ci_low <= p <= self.ci_high


def wilson_interval(successes: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n < 1:
        raise ValueError("Wilson interval needs n >= 1")
    phat = successes / n
    denom = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    # clamp so the point estimate always sits inside despite rounding
    return min(max(0.0, centre - half), phat), max(min(1.0, centre + half), phat)


def proportion(successes: int, n: int, seed: int | None = None, z: float = Z95) -> Estimate:
    lo, hi = wilson_interval(int(successes), n, z)
    return Estimate(successes / n, n, lo, hi, seed, int(successes))


def non_decreasing_within_ci(estimates: Sequence[Estimate]) -> bool:
    """Each step either goes up or keeps overlapping confidence intervals."""
    return all(b.value >= a.value or b.ci_high >= a.ci_low for a, b in zip(estimates, estimates[1:]))


# -- per-replicate work items (module level so they pickle) ---------------


@dataclass(frozen=True)
class ReplicateSummary:
    replicate: int
    max_score: int
    winner_rank_from_top: int
    winner_count: int
    best_strict_win: bool
    best_co_win: bool
    top_k_cowin: bool | None = None
    top_k_strict: bool | None = None


def _environment(model: StrengthModel, n: int, seed: int, rng, fixed: bool) -> np.ndarray:
    if fixed:
        return order_statistics(sample(model, n, streams.stream(seed, streams.ENVIRONMENT, n)))
    return order_statistics(sample(model, n, rng))


def _summary_replicate(model, n, seed, k, fixed, r) -> ReplicateSummary:
    rng = streams.replicate_rng(seed, r)
    v = _environment(model, n, seed, rng, fixed)
    out = play(v, rng)
    s = out.scores
    co = strict = None
    if k is not None:
        best = s[n - k:].max()
        co = bool(best == s.max())
        strict = bool(k == n or best > s[: n - k].max())
    return ReplicateSummary(r, out.max_score, out.winner_rank_from_top, out.winner_count,
                            out.best_strict_win, out.best_co_win, co, strict)


def simulate_summaries(model: StrengthModel, n: int, replicates: int, seed: int,
                       k: int | None = None, fixed_environment: bool = False,
                       workers=1) -> list[ReplicateSummary]:
    """Run ``replicates`` tournaments and keep one summary row each."""
    fn = partial(_summary_replicate, model, n, seed, k, fixed_environment)
    return streams.fan_out(fn, range(replicates), workers)


# -- best-player estimator ------------------------------------------------


def estimate_prob_best_wins(model: StrengthModel, n: int, replicates: int, seed: int,
                            workers=1) -> tuple[Estimate, Estimate]:
    """(strict, co-win) probabilities that the strongest player wins.

    The environment is resampled for every replicate.
    """
    if replicates < 100:
        raise ValueError("use at least 100 replicates")
    rows = simulate_summaries(model, n, replicates, seed, workers=workers)
    strict = sum(r.best_strict_win for r in rows)
    co = sum(r.best_co_win for r in rows)
    return proportion(strict, replicates, seed), proportion(co, replicates, seed)


def estimate_prob_top_k_wins(model: StrengthModel, n: int, k: int, replicates: int, seed: int,
                             fixed_environment: bool = False,
                             workers=1) -> tuple[Estimate, Estimate]:
    """(co-win, strict) probabilities that one of the ``k`` strongest has the top score."""
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in 1..{n}")
    rows = simulate_summaries(model, n, replicates, seed, k, fixed_environment, workers)
    co = sum(r.top_k_cowin for r in rows)
    strict = sum(r.top_k_strict for r in rows)
    return proportion(co, replicates, seed), proportion(strict, replicates, seed)


# -- winner-rank statistics -----------------------------------------------


@dataclass(frozen=True)
class RankDistribution:
    n: int
    ranks: np.ndarray
    median: float
    median_ci: tuple[float, float]
    mean: float
    exponent: float  # log(median) / log(n)
    replicates: int
    seed: int
    best_strict: Estimate
    winner_counts: np.ndarray = field(repr=False, default=None)
    environment: str = "resample"

    def histogram(self) -> np.ndarray:
        """``histogram()[r - 1]`` counts replicates whose best winner has rank ``r``."""
        return np.bincount(self.ranks, minlength=self.n + 1)[1:]


def bootstrap_median_ci(values: np.ndarray, rng: np.random.Generator, resamples: int = 1000,
                        level: float = 0.95) -> tuple[float, float]:
    idx = rng.integers(0, len(values), size=(resamples, len(values)))
    meds = np.median(values[idx], axis=1)
    tail = (1 - level) / 2
    return float(np.quantile(meds, tail)), float(np.quantile(meds, 1 - tail))


def winner_rank_distribution(model: StrengthModel, n: int, replicates: int, seed: int,
                             fixed_environment: bool = False, workers=1) -> RankDistribution:
    """Distribution of the rank-from-top of the strongest winner.

    Rank 1 is the strongest player; among tied scores the strongest label is
    kept, and equal strengths are ordered by index.
    """
    if model.alpha is None:
        raise ValueError(f"{model.name} has no alpha; the rank experiment needs one")
    rows = simulate_summaries(model, n, replicates, seed, fixed_environment=fixed_environment,
                              workers=workers)
    ranks = np.array([r.winner_rank_from_top for r in rows], dtype=np.int64)
    counts = np.array([r.winner_count for r in rows], dtype=np.int64)
    med = float(np.median(ranks))
    ci = bootstrap_median_ci(ranks.astype(float), streams.stream(seed, streams.BOOTSTRAP, n))
    strict = proportion(sum(r.best_strict_win for r in rows), replicates, seed)
    return RankDistribution(n, ranks, med, ci, float(ranks.mean()),
                            math.log(med) / math.log(n) if med > 0 else float("nan"),
                            replicates, seed, strict, counts,
                            "fixed" if fixed_environment else "resample")


def fit_rank_exponent(n_values: Sequence[int], medians: Sequence[float]) -> float:
    """Least-squares slope of log(median rank) against log N."""
    if len(n_values) < 3:
        raise ValueError("the exponent fit needs at least 3 grid points")
    x = np.log(np.asarray(n_values, dtype=float))
    y = np.log(np.asarray(medians, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


# -- tagged player cutoff -------------------------------------------------


def epsilon_n(alpha: float, theta_u: float, n: int) -> float:
    """Cutoff scale ``sqrt((2 - alpha) / theta_u * log(N) / N)`` (natural log)."""
    if not alpha < 2:
        raise ValueError("alpha must be < 2")
    if not theta_u > 0:
        raise ValueError("theta_u must be positive")
    if n < 2:
        raise ValueError("N must be >= 2")
    return math.sqrt((2 - alpha) / theta_u * math.log(n) / n)


@dataclass(frozen=True)
class CutoffPoint:
    c: float
    v_tagged: float
    win_prob: Estimate
    sufficient_prob: Estimate
    loss_prob: Estimate


def _tagged_replicate(model, n, seed, v_list, fixed, r):
    rng = streams.replicate_rng(seed, r)
    v = _environment(model, n, seed, rng, fixed)
    outs = play_with_tagged_sweep(v, v_list, rng)
    rows = []
    for o in outs:
        win, suff, loss = o.tagged_strict_win, o.tagged_sufficient_win, o.tagged_sure_loss
        if (suff and not win) or (win and loss):
            raise AssertionError(f"tagged events do not nest on replicate {r}")
        rows.append((win, suff, loss))
    return rows


def cutoff_sweep(model: StrengthModel, n: int, c_values: Sequence[float], replicates: int,
                 seed: int, fixed_environment: bool = False, workers=1) -> list[CutoffPoint]:
    """Tagged-player event probabilities at ``v = 1 + c * epsilon_N`` for each ``c``.

    All sweep points share each replicate's tournament and tagged uniforms.
    """
    if model.alpha is None or model.support_max != 1.0:
        raise ValueError("the cutoff sweep needs alpha metadata and support_max = 1")
    c_values = [float(c) for c in c_values]
    if any(c < 0 for c in c_values) or any(b <= a for a, b in zip(c_values, c_values[1:])):
        raise ValueError("c_values must be non-negative and strictly ascending")
    eps = epsilon_n(model.alpha, moments(model).theta_u, n)
    v_list = [1.0 + c * eps for c in c_values]
    fn = partial(_tagged_replicate, model, n, seed, v_list, fixed_environment)
    per_rep = streams.fan_out(fn, range(replicates), workers)
    points = []
    for idx, (c, v) in enumerate(zip(c_values, v_list)):
        win = sum(rows[idx][0] for rows in per_rep)
        suff = sum(rows[idx][1] for rows in per_rep)
        loss = sum(rows[idx][2] for rows in per_rep)
        points.append(CutoffPoint(c, v, proportion(win, replicates, seed),
                                  proportion(suff, replicates, seed),
                                  proportion(loss, replicates, seed)))
    return points


# -- quenched batch estimator (small N, oracle comparisons) ---------------


def _batch_block(strengths, v_tagged, seed, total, b):
    size = min(BATCH_BLOCK, total - b * BATCH_BLOCK)
    scores, beat = play_batch(strengths, size, streams.stream(seed, streams.BATCH, b), v_tagged)
    return {name: int(ind.sum()) for name, ind in event_indicators(scores, beat).items()}


def estimate_events(strengths, replicates: int, seed: int, v_tagged: float | None = None,
                    z: float = Z95, workers=1) -> dict[str, Estimate]:
    """Monte Carlo estimate of every named event for fixed strengths.

    Replicates run in blocks of ``BATCH_BLOCK``, each block on its own
    stream ``(seed, block)``.
    """
    n_blocks = -(-replicates // BATCH_BLOCK)
    fn = partial(_batch_block, np.asarray(strengths, dtype=float), v_tagged, seed, replicates)
    parts = streams.fan_out(fn, range(n_blocks), workers)
    counts: dict[str, int] = {}
    for part in parts:
        for name, c in part.items():
            counts[name] = counts.get(name, 0) + c
    return {name: proportion(c, replicates, seed, z) for name, c in counts.items()}


# -- concentration tools --------------------------------------------------


def hoeffding_score_bound(strengths, u: float) -> float:
    """Lower score bound ``sum_{i<N} V_N/(V_N+V_i) - sqrt(N u)`` for the strongest player."""
    if not u > 0:
        raise ValueError("u must be positive")
    v = np.asarray(strengths, dtype=float)
    top = v[-1]
    return float(np.sum(top / (top + v[:-1])) - math.sqrt(len(v) * u))


def bounded_difference_tail(n: int, u: float) -> tuple[float, float]:
    """(``exp(-u)``, deviation radius ``sqrt(n u / 2)``) for ``n`` independent blocks."""
    if not u > 0:
        raise ValueError("u must be positive")
    return math.exp(-u), math.sqrt(n * u / 2)


def bernoulli_mgf_bounds(a: float, p: float) -> tuple[float, float, float]:
    """(exact, lower, upper) for ``E[exp(a (X - p))]``, ``X ~ Bernoulli(p)``, ``0 <= a <= 1``."""
    if not 0 <= a <= 1:
        raise ValueError("a must lie in [0, 1]")
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    exact = p * math.exp(a * (1 - p)) + (1 - p) * math.exp(-a * p)
    var = p * (1 - p)
    lower = 1 + a * a / 2 * var
    upper = math.exp(var * a * a * (0.5 + 4 * math.e**2 / 3 * a))
    return exact, lower, upper


def sandwich_violation_counts(grid: int = 200) -> tuple[int, int]:
    """(lower, upper) failures of the Bernoulli MGF sandwich on a ``grid x grid`` mesh of ``[0,1]^2``.

    The lower bound ``1 + a^2 p (1 - p) / 2`` fails for every ``a > 0`` once
    ``p > 1/2``: the third central moment ``p (1 - p) (1 - 2p)`` turns
    negative and drags the MGF below its quadratic part.
    """
    lower_bad = upper_bad = 0
    for a in np.linspace(0.0, 1.0, grid):
        for p in np.linspace(0.0, 1.0, grid):
            exact, lower, upper = bernoulli_mgf_bounds(float(a), float(p))
            lower_bad += lower > exact
            upper_bad += exact > upper
    return lower_bad, upper_bad


def sandwich_violations(grid: int = 200) -> int:
    """Grid points where either side of the sandwich fails."""
    bad = 0
    for a in np.linspace(0.0, 1.0, grid):
        for p in np.linspace(0.0, 1.0, grid):
            exact, lower, upper = bernoulli_mgf_bounds(float(a), float(p))
            bad += not (lower <= exact <= upper)
    return bad


@dataclass(frozen=True)
class TailCheck:
    check: str
    n: int
    u: float
    frequency: float
    bound: float
    threshold: float
    replicates: int

    @property
    def passed(self) -> bool:
        return self.frequency <= self.threshold


def concentration_check(strengths, u_values: Sequence[float], replicates: int, seed: int,
                        workers=1) -> list[TailCheck]:
    """Empirical tails of ``Z = max_i S_i`` and ``S_N`` against their exponential bounds.

    ``Z`` is centred at its Monte Carlo mean over the same replicates; the
    deviation radius is ``sqrt(N u / 2)``.
    """
    v = np.asarray(strengths, dtype=float)
    n = len(v)
    n_blocks = -(-replicates // BATCH_BLOCK)
    fn = partial(_concentration_block, v, seed, replicates)
    parts = streams.fan_out(fn, range(n_blocks), workers)
    z = np.concatenate([p[0] for p in parts])
    s_top = np.concatenate([p[1] for p in parts])
    z_hat = z.mean()
    out = []
    for u in u_values:
        bound, radius = math.exp(-u), math.sqrt(n * u / 2)
        thr = bound + 3 * math.sqrt(bound / replicates)
        s_low = hoeffding_score_bound(v, u)
        out.append(TailCheck("max_upper", n, u, float(np.mean(z >= z_hat + radius)), bound, thr, replicates))
        out.append(TailCheck("max_lower", n, u, float(np.mean(z <= z_hat - radius)), bound, thr, replicates))
        out.append(TailCheck("best_score_lower", n, u, float(np.mean(s_top < s_low)), bound, thr, replicates))
    return out


def _concentration_block(v, seed, total, b):
    size = min(BATCH_BLOCK, total - b * BATCH_BLOCK)
    scores, _ = play_batch(v, size, streams.stream(seed, streams.BATCH, b))
    return scores.max(axis=1), scores[:, -1]
