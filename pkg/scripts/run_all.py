"""Run every experiment config in a directory and print the verdict table.

    python3 scripts/run_all.py --config-dir configs --out results --workers auto
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

from btre.cli import run
from btre.config import parse_config


@dataclass(frozen=True)
class RunAllConfig:
    config_dir: Path = Path("configs")
    out: Path = Path("results")
    workers: str = "auto"
    only: tuple[str, ...] = ()


def parse_args(argv=None) -> RunAllConfig:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config-dir", type=Path, default=RunAllConfig.config_dir)
    p.add_argument("--out", type=Path, default=RunAllConfig.out)
    p.add_argument("--workers", default=RunAllConfig.workers)
    p.add_argument("--only", nargs="*", default=[], help="config stems to run, e.g. theorem3")
    a = p.parse_args(argv)
    return RunAllConfig(a.config_dir, a.out, a.workers, tuple(a.only))


def main(cfg: RunAllConfig) -> int:
    worst = 0
    for path in sorted(cfg.config_dir.glob("*.yaml")):
        if cfg.only and path.stem not in cfg.only:
            continue
        spec = parse_config(path.read_text())
        res = run(spec, cfg.out / path.stem, cfg.workers)
        worst = max(worst, res.exit_code)
        for name, ok in res.verdicts.items():
            print(f"{path.stem:10s} {'PASS' if ok else 'FAIL'}  {name}")
    return worst


if __name__ == "__main__":
    sys.exit(main(parse_args()))
