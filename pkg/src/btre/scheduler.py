"""Round-robin pairing table.

Players are numbered 1..N throughout this module.  For even N the rotation
``sigma`` fixes player 1 and cycles 2 -> 3 -> ... -> N -> 2; round ``k``
pairs ``i`` with ``A(k, i) = sigma^-(k-1)(N + 1 - sigma^(k-1)(i))``.  Odd N
is handled by adding a ghost player N+1 whose matches become byes.
"""

from __future__ import annotations

from dataclasses import dataclass


def _check_even(n: int) -> None:
    if n < 2 or n % 2:
        raise ValueError(f"the rotation is only defined for even N >= 2, got N={n}")


def sigma_apply(n: int, power: int, i: int) -> int:
    """Return ``sigma**power(i)``; negative powers apply the inverse."""
    _check_even(n)
    if not 1 <= i <= n:
        raise ValueError(f"player index {i} outside 1..{n}")
    if i == 1:
        return 1
    return 2 + (i - 2 + power) % (n - 1)


def opponent(n: int, k: int, i: int) -> int:
    """Opponent of player ``i`` in round ``k`` (both 1-based)."""
    _check_even(n)
    if not 1 <= k <= n - 1:
        raise ValueError(f"round {k} outside 1..{n - 1}")
    if not 1 <= i <= n:
        raise ValueError(f"player index {i} outside 1..{n}")
    return sigma_apply(n, -(k - 1), n + 1 - sigma_apply(n, k - 1, i))


@dataclass(frozen=True)
class Schedule:
    n_players: int
    rounds: tuple[tuple[tuple[int, int], ...], ...]
    byes: tuple[int | None, ...]

    @property
    def n_rounds(self) -> int:
        return len(self.rounds)

    def pairs(self):
        for rnd in self.rounds:
            yield from rnd

    def csv_rows(self):
        """Rows ``(round, player_a, player_b)``; a bye has ``player_b = None``."""
        for k, (rnd, bye) in enumerate(zip(self.rounds, self.byes), start=1):
            for a, b in rnd:
                yield k, a, b
            if bye is not None:
                yield k, bye, None


def build_schedule(n: int) -> Schedule:
    if n < 2:
        raise ValueError(f"a tournament needs at least 2 players, got {n}")
    m = n if n % 2 == 0 else n + 1
    rounds = []
    byes = []
    for k in range(1, m):
        pairs = []
        bye = None
        for i in range(1, m + 1):
            j = opponent(m, k, i)
            if i > j:
                continue
            if j > n:
                bye = i
            else:
                pairs.append((i, j))
        rounds.append(tuple(pairs))
        byes.append(bye)
    return Schedule(n, tuple(rounds), tuple(byes))


def check_schedule(schedule: Schedule) -> list[str]:
    """Return a list of invariant violations (empty when the schedule is valid)."""
    n = schedule.n_players
    problems = []
    expected_rounds = n - 1 if n % 2 == 0 else n
    if schedule.n_rounds != expected_rounds:
        problems.append(f"{schedule.n_rounds} rounds, expected {expected_rounds}")
    seen: dict[frozenset, int] = {}
    for k, (rnd, bye) in enumerate(zip(schedule.rounds, schedule.byes), start=1):
        used = [p for pair in rnd for p in pair]
        if bye is not None:
            used.append(bye)
        if len(used) != len(set(used)):
            problems.append(f"round {k} is not a matching")
        for a, b in rnd:
            if a == b:
                problems.append(f"round {k} pairs player {a} with itself")
            key = frozenset((a, b))
            seen[key] = seen.get(key, 0) + 1
    for a in range(1, n + 1):
        for b in range(a + 1, n + 1):
            count = seen.get(frozenset((a, b)), 0)
            if count != 1:
                problems.append(f"pair ({a},{b}) played {count} times")
    if n % 2:
        bye_counts = [schedule.byes.count(p) for p in range(1, n + 1)]
        if any(c != 1 for c in bye_counts):
            problems.append("odd N: byes are not one per player")
    elif any(b is not None for b in schedule.byes):
        problems.append("even N with a bye")
    return problems
