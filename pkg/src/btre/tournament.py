"""Bradley-Terry round-robin simulation and its exact enumeration oracle.

Strengths are always passed sorted ascending, so player ``N`` (the last
entry) is the strongest.  Player labels in winner sets are 1-based; the
tagged extra player, when present, is label ``N + 1``.

Matches ``i < j`` are drawn in lexicographic order, one uniform each, and
``i`` beats ``j`` when the uniform falls below ``V_i / (V_i + V_j)``.
Tagged matches are drawn after the whole ``N``-player tournament.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

MAX_ENUMERATED_MATCHES = 28
_ENUM_BLOCK = 1 << 16


def match_prob(v_i: float, v_j: float) -> float:
    """Probability that a player of strength ``v_i`` beats one of strength ``v_j``."""
    if not (v_i > 0 and v_j > 0):
        raise ValueError("strengths must be positive")
    return v_i / (v_i + v_j)


def winners(total_scores: Sequence[int]) -> frozenset[int]:
    """1-based labels of every player attaining the top score."""
    scores = np.asarray(total_scores)
    if scores.size == 0:
        raise ValueError("winners of an empty tournament")
    return frozenset(int(i) + 1 for i in np.flatnonzero(scores == scores.max()))


def _validate(strengths) -> np.ndarray:
    v = np.asarray(strengths, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("a tournament needs at least 2 players")
    if np.any(~(v > 0)) or np.any(~np.isfinite(v)):
        raise ValueError("strengths must be positive and finite")
    if np.any(np.diff(v) < 0):
        raise ValueError("strengths must be sorted ascending (order statistics)")
    return v


@dataclass(frozen=True)
class TaggedRecord:
    v_tagged: float
    s_tagged: int
    beat_flags: np.ndarray  # beat_flags[i] is X_{i,N+1}: player i+1 beat the tagged player


@dataclass(frozen=True)
class TournamentOutcome:
    strengths: np.ndarray
    scores: np.ndarray
    winner_set: frozenset[int]
    tagged: TaggedRecord | None = None

    @property
    def n_players(self) -> int:
        return len(self.scores)

    @property
    def total_scores(self) -> np.ndarray:
        """Scores including the tagged matches (tagged player last)."""
        if self.tagged is None:
            return self.scores
        return np.append(self.scores + self.tagged.beat_flags, self.tagged.s_tagged)

    @property
    def max_score(self) -> int:
        return int(self.scores.max())

    @property
    def best_strict_win(self) -> bool:
        return bool(self.scores[-1] > self.scores[:-1].max())

    @property
    def best_co_win(self) -> bool:
        return bool(self.scores[-1] == self.scores.max())

    @property
    def winner_rank_from_top(self) -> int:
        """Rank (1 = strongest) of the strongest player with the top ``S_i``."""
        top = int(np.flatnonzero(self.scores == self.scores.max())[-1])
        return self.n_players - top

    @property
    def winner_count(self) -> int:
        return len(self.winner_set)

    def _need_tagged(self) -> TaggedRecord:
        if self.tagged is None:
            raise AttributeError("outcome has no tagged player")
        return self.tagged

    @property
    def tagged_strict_win(self) -> bool:
        t = self._need_tagged()
        return bool(t.s_tagged > (self.scores + t.beat_flags).max())

    @property
    def tagged_sufficient_win(self) -> bool:
        t = self._need_tagged()
        return bool(t.s_tagged > 1 + self.scores.max())

    @property
    def tagged_sure_loss(self) -> bool:
        t = self._need_tagged()
        return bool(t.s_tagged < self.scores.max())


def play_scores(strengths: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Win counts of one tournament, streaming row by row (O(N) memory)."""
    v = strengths
    n = len(v)
    wins = np.zeros(n, dtype=np.int64)
    for i in range(n - 1):
        rest = v[i + 1:]
        beaten = rng.random(n - 1 - i) < v[i] / (v[i] + rest)
        wins[i] += np.count_nonzero(beaten)
        wins[i + 1:] += ~beaten
    return wins


def play(strengths, rng: np.random.Generator) -> TournamentOutcome:
    v = _validate(strengths)
    scores = play_scores(v, rng)
    return TournamentOutcome(v, scores, winners(scores))


def _tagged_outcomes(v, scores, v_list, rng) -> list[TournamentOutcome]:
    u = rng.random(len(v))
    out = []
    for v_tag in v_list:
        if not v_tag > 0:
            raise ValueError("tagged strength must be positive")
        beat = u < v / (v + v_tag)
        rec = TaggedRecord(float(v_tag), int(len(v) - beat.sum()), beat)
        total = np.append(scores + beat, rec.s_tagged)
        out.append(TournamentOutcome(v, scores, winners(total), rec))
    return out


def play_with_tagged(strengths, v_tagged: float, rng: np.random.Generator) -> TournamentOutcome:
    """Tournament plus one extra player of fixed strength ``v_tagged``.

    ``scores`` keeps the ``N``-player scores ``S_i``; the winner set is taken
    over the totals ``S_i + X_{i,N+1}`` and the tagged score.
    """
    return play_with_tagged_sweep(strengths, [v_tagged], rng)[0]


def play_with_tagged_sweep(strengths, v_list: Sequence[float],
                           rng: np.random.Generator) -> list[TournamentOutcome]:
    """Same tournament and tagged uniforms for several tagged strengths.

    Entry ``c`` equals ``play_with_tagged(strengths, v_list[c], rng)`` run on a
    copy of the stream, so a sweep uses common random numbers.
    """
    v = _validate(strengths)
    scores = play_scores(v, rng)
    return _tagged_outcomes(v, scores, v_list, rng)


# -- batched small-N simulation ------------------------------------------


def play_batch(strengths, replicates: int, rng: np.random.Generator,
               v_tagged: float | None = None):
    """``replicates`` independent tournaments on fixed strengths.

    Returns ``(scores, beat)`` with ``scores`` of shape ``(R, N)`` and
    ``beat`` the ``(R, N)`` tagged flags ``X_{i,N+1}`` (or ``None``).
    Uniforms are drawn row by row, each row for all replicates at once.
    """
    v = _validate(strengths)
    n = len(v)
    scores = np.zeros((replicates, n), dtype=np.int64)
    for i in range(n - 1):
        p = v[i] / (v[i] + v[i + 1:])
        beaten = rng.random((replicates, n - 1 - i)) < p
        scores[:, i] += beaten.sum(axis=1)
        scores[:, i + 1:] += ~beaten
    beat = None
    if v_tagged is not None:
        if not v_tagged > 0:
            raise ValueError("tagged strength must be positive")
        beat = rng.random((replicates, n)) < v / (v + v_tagged)
    return scores, beat


def event_indicators(scores: np.ndarray, beat: np.ndarray | None = None) -> dict[str, np.ndarray]:
    """Boolean indicator per named event for each row of a score matrix.

    Event names match :meth:`ExactProbabilities.as_dict`.
    """
    r, n = scores.shape
    ev: dict[str, np.ndarray] = {}
    if beat is None:
        total = scores
    else:
        s_tag = n - beat.sum(axis=1)
        total = np.column_stack([scores + beat, s_tag])
    top = total.max(axis=1, keepdims=True)
    at_top = total == top
    count = at_top.sum(axis=1)
    for i in range(total.shape[1]):
        ev[f"co_win[{i + 1}]"] = at_top[:, i]
        ev[f"unique_win[{i + 1}]"] = at_top[:, i] & (count == 1)
    for s in range(1, total.shape[1] + 1):
        ev[f"winner_count[{s}]"] = count == s
    for i in range(n):
        for a in range(n):
            ev[f"score_cdf[{i + 1}][{a}]"] = scores[:, i] <= a
    zmax = scores.max(axis=1)
    for a in range(n):
        ev[f"max_cdf[{a}]"] = zmax <= a
    # running maxima from the top (strongest) and bottom
    rev = scores[:, ::-1]
    top_max = np.maximum.accumulate(rev, axis=1)  # top_max[:, k-1] = max over the k best
    for k in range(1, n + 1):
        best_k = top_max[:, k - 1]
        ev[f"top_k_cowin[{k}]"] = best_k == zmax
        if k < n:
            rest = scores[:, : n - k].max(axis=1)
            ev[f"top_k_strict[{k}]"] = best_k > rest
        else:
            ev[f"top_k_strict[{k}]"] = np.ones(r, dtype=bool)
    if beat is not None:
        s_tag = total[:, -1]
        ev["tagged_strict_win"] = s_tag > total[:, :-1].max(axis=1)
        ev["tagged_sufficient_win"] = s_tag > 1 + zmax
        ev["tagged_sure_loss"] = s_tag < zmax
    return ev


# -- exact enumeration ----------------------------------------------------


@dataclass(frozen=True)
class ExactProbabilities:
    """Exact event probabilities for fixed strengths.

    Lists hold floats, or :class:`fractions.Fraction` in exact mode.
    ``unique_win``/``co_win``/``winner_count`` refer to the total scores
    (including the tagged player when present); ``score_cdf``, ``max_cdf``
    and the top-k events refer to the ``N``-player scores ``S_i``.
    """

    n_players: int
    unique_win: list
    co_win: list
    winner_count: list  # winner_count[s] = P(|winner set| = s), index 0 unused
    score_cdf: list  # score_cdf[i][a] = P(S_{i+1} <= a)
    max_cdf: list  # max_cdf[a] = P(max_i S_i <= a)
    top_k_cowin: list  # index k-1
    top_k_strict: list
    tagged_strict_win: object = None
    tagged_sufficient_win: object = None
    tagged_sure_loss: object = None

    def as_dict(self) -> dict[str, object]:
        out: dict[str, object] = {}
        for i, p in enumerate(self.unique_win):
            out[f"unique_win[{i + 1}]"] = p
        for i, p in enumerate(self.co_win):
            out[f"co_win[{i + 1}]"] = p
        for s in range(1, len(self.winner_count)):
            out[f"winner_count[{s}]"] = self.winner_count[s]
        for i, row in enumerate(self.score_cdf):
            for a, p in enumerate(row):
                out[f"score_cdf[{i + 1}][{a}]"] = p
        for a, p in enumerate(self.max_cdf):
            out[f"max_cdf[{a}]"] = p
        for k, p in enumerate(self.top_k_cowin, start=1):
            out[f"top_k_cowin[{k}]"] = p
        for k, p in enumerate(self.top_k_strict, start=1):
            out[f"top_k_strict[{k}]"] = p
        if self.tagged_strict_win is not None:
            out["tagged_strict_win"] = self.tagged_strict_win
            out["tagged_sufficient_win"] = self.tagged_sufficient_win
            out["tagged_sure_loss"] = self.tagged_sure_loss
        return out


def _match_list(n: int, tagged: bool):
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if tagged:
        pairs += [(i, n) for i in range(n)]
    return pairs


def enumerate_exact(strengths, v_tagged: float | None = None,
                    exact: bool = False) -> ExactProbabilities:
    """Sum over all ``2**M`` match outcomes.

    ``exact=True`` runs a plain loop in rational arithmetic (strengths are
    converted with :class:`~fractions.Fraction`, which is exact for floats);
    the default is a vectorized float64 pass over blocks of outcomes.
    """
    v = _validate(strengths)
    n = len(v)
    m = n * (n - 1) // 2 + (n if v_tagged is not None else 0)
    if m > MAX_ENUMERATED_MATCHES:
        raise ValueError(f"{m} matches exceed the enumeration budget of {MAX_ENUMERATED_MATCHES}")
    if v_tagged is not None and not v_tagged > 0:
        raise ValueError("tagged strength must be positive")
    if exact:
        return _enumerate_rational(v, v_tagged)
    return _enumerate_vectorized(v, v_tagged)


def _enumerate_rational(v: np.ndarray, v_tagged) -> ExactProbabilities:
    n = len(v)
    tagged = v_tagged is not None
    vals = [Fraction(float(x)) for x in v]
    if tagged:
        vals.append(Fraction(float(v_tagged)))
    pairs = _match_list(n, tagged)
    probs = [vals[i] / (vals[i] + vals[j]) for i, j in pairs]
    p_tot = n + 1 if tagged else n
    zero = Fraction(0)
    unique = [zero] * p_tot
    cowin = [zero] * p_tot
    wcount = [zero] * (p_tot + 1)
    score_pmf = [[zero] * n for _ in range(n)]
    max_pmf = [zero] * n
    topk_co = [zero] * n
    topk_st = [zero] * n
    t_strict = t_suff = t_loss = zero
    for outcome in itertools.product((1, 0), repeat=len(pairs)):
        w = Fraction(1)
        s = [0] * p_tot
        for (i, j), x, p in zip(pairs, outcome, probs):
            if x:
                w *= p
                s[i] += 1
            else:
                w *= 1 - p
                s[j] += 1
        base = s[:n]
        if tagged:
            # s[i] counts the tagged match for i < n; strip it for S_i
            base = [s[i] - (1 if outcome[len(pairs) - n + i] else 0) for i in range(n)]
        win = winners(s)
        for label in win:
            cowin[label - 1] += w
            if len(win) == 1:
                unique[label - 1] += w
        wcount[len(win)] += w
        for i in range(n):
            score_pmf[i][base[i]] += w
        zmax = max(base)
        max_pmf[zmax] += w
        for k in range(1, n + 1):
            best = max(base[n - k:])
            if best == zmax:
                topk_co[k - 1] += w
            if k == n or best > max(base[: n - k]):
                topk_st[k - 1] += w
        if tagged:
            st = s[n]
            if st > max(s[:n]):
                t_strict += w
            if st > 1 + zmax:
                t_suff += w
            if st < zmax:
                t_loss += w
    score_cdf = [list(itertools.accumulate(row)) for row in score_pmf]
    max_cdf = list(itertools.accumulate(max_pmf))
    extra = (t_strict, t_suff, t_loss) if tagged else (None, None, None)
    return ExactProbabilities(n, unique, cowin, wcount, score_cdf, max_cdf, topk_co, topk_st, *extra)


def _enumerate_vectorized(v: np.ndarray, v_tagged) -> ExactProbabilities:
    n = len(v)
    tagged = v_tagged is not None
    vals = np.append(v, v_tagged) if tagged else v
    pairs = _match_list(n, tagged)
    m = len(pairs)
    first = np.array([i for i, _ in pairs])
    second = np.array([j for _, j in pairs])
    p = vals[first] / (vals[first] + vals[second])
    n_base = n * (n - 1) // 2
    total_outcomes = 1 << m
    acc: dict[str, float] = {}
    shifts = np.arange(m, dtype=np.int64)
    for start in range(0, total_outcomes, _ENUM_BLOCK):
        codes = np.arange(start, min(start + _ENUM_BLOCK, total_outcomes), dtype=np.int64)
        x = ((codes[:, None] >> shifts) & 1).astype(bool)
        w = np.prod(np.where(x, p, 1.0 - p), axis=1)
        scores = np.zeros((len(codes), n), dtype=np.int64)
        xb = x[:, :n_base]
        np.add.at(scores.T, first[:n_base], xb.T)
        np.add.at(scores.T, second[:n_base], ~xb.T)
        beat = x[:, n_base:] if tagged else None
        for name, ind in event_indicators(scores, beat).items():
            acc[name] = acc.get(name, 0.0) + float(w[ind].sum())
    # sums of non-negative weights can only leave [0, 1] through rounding
    acc = {name: min(max(p, 0.0), 1.0) for name, p in acc.items()}
    p_tot = n + 1 if tagged else n
    return ExactProbabilities(
        n,
        [acc[f"unique_win[{i}]"] for i in range(1, p_tot + 1)],
        [acc[f"co_win[{i}]"] for i in range(1, p_tot + 1)],
        [0.0] + [acc[f"winner_count[{s}]"] for s in range(1, p_tot + 1)],
        [[acc[f"score_cdf[{i}][{a}]"] for a in range(n)] for i in range(1, n + 1)],
        [acc[f"max_cdf[{a}]"] for a in range(n)],
        [acc[f"top_k_cowin[{k}]"] for k in range(1, n + 1)],
        [acc[f"top_k_strict[{k}]"] for k in range(1, n + 1)],
        acc.get("tagged_strict_win"),
        acc.get("tagged_sufficient_win"),
        acc.get("tagged_sure_loss"),
    )
