"""Fitted winner-rank exponent against 1 - alpha/2 for beta(1, b) strengths.

For beta(1, b) with b < 2 the top tail exponent is alpha = b.

    python3 scripts/rank_exponent_by_alpha.py --b 0.5 1.0 1.5
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass

from btre.analysis import fit_rank_exponent, winner_rank_distribution
from btre.distributions import beta


@dataclass(frozen=True)
class ExponentScanConfig:
    b_values: tuple[float, ...] = (0.5, 1.0, 1.5)
    n_values: tuple[int, ...] = (200, 800, 3200)
    replicates: int = 300
    seed: int = 20261016
    workers: str = "auto"


def parse_args(argv=None) -> ExponentScanConfig:
    d = ExponentScanConfig()
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--b", type=float, nargs="+", default=list(d.b_values))
    p.add_argument("--n", type=int, nargs="+", default=list(d.n_values))
    p.add_argument("--replicates", type=int, default=d.replicates)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--workers", default=d.workers)
    a = p.parse_args(argv)
    return ExponentScanConfig(tuple(a.b), tuple(a.n), a.replicates, a.seed, a.workers)


def main(cfg: ExponentScanConfig) -> None:
    print("b,alpha,predicted,fitted,medians")
    for b in cfg.b_values:
        model = beta(1.0, b)
        medians = [winner_rank_distribution(model, n, cfg.replicates, cfg.seed, workers=cfg.workers).median
                   for n in cfg.n_values]
        fitted = fit_rank_exponent(cfg.n_values, medians)
        print(f"{b:g},{model.alpha:g},{1 - model.alpha / 2:.3f},{fitted:.3f},"
              f"{'/'.join(f'{m:g}' for m in medians)}")


if __name__ == "__main__":
    main(parse_args())
