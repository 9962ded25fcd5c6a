"""Tagged-player win probability on a fine c grid for several field sizes.

Writes one CSV row per (N, c).  The transition should sharpen around c = 1
as N grows.

    python3 scripts/cutoff_profile.py --n 250 1000 4000 --replicates 400
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass

import numpy as np

from btre.analysis import cutoff_sweep
from btre.cli import format_value
from btre.distributions import make_model


@dataclass(frozen=True)
class CutoffProfileConfig:
    kind: str = "pointmass"
    n_values: tuple[int, ...] = (250, 1000, 4000)
    c_values: tuple[float, ...] = tuple(np.round(np.arange(0.0, 2.01, 0.125), 3))
    replicates: int = 400
    seed: int = 20261016
    workers: str = "auto"


def parse_args(argv=None) -> CutoffProfileConfig:
    d = CutoffProfileConfig()
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--kind", default=d.kind, help="a model with support_max 1")
    p.add_argument("--n", type=int, nargs="+", default=list(d.n_values))
    p.add_argument("--replicates", type=int, default=d.replicates)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--workers", default=d.workers)
    a = p.parse_args(argv)
    return CutoffProfileConfig(a.kind, tuple(a.n), d.c_values, a.replicates, a.seed, a.workers)


def main(cfg: CutoffProfileConfig) -> None:
    model = make_model(cfg.kind)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["n", "c", "v_tagged", "win_prob", "win_ci_low", "win_ci_high", "loss_prob"])
    for n in cfg.n_values:
        for pt in cutoff_sweep(model, n, cfg.c_values, cfg.replicates, cfg.seed, workers=cfg.workers):
            w.writerow([format_value(x) for x in (n, pt.c, pt.v_tagged, pt.win_prob.value,
                                                   pt.win_prob.ci_low, pt.win_prob.ci_high,
                                                   pt.loss_prob.value)])


if __name__ == "__main__":
    main(parse_args())
