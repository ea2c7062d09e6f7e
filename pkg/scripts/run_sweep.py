#!/usr/bin/env python3
"""Sweep (w, d) and tabulate fixed points, discriminant and the structure verdict.

    python3 scripts/run_sweep.py --n 40 --out results/sweep.csv
"""

import argparse
import csv
from dataclasses import asdict, dataclass
from pathlib import Path

from wolbachia_algebra.cli import fmt, sweep_cell, sweep_grid


@dataclass
class SweepConfig:
    n: int = 20
    out: str = "results/sweep.csv"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for k, v in asdict(SweepConfig()).items():
        ap.add_argument(f"--{k}", type=type(v), default=v)
    cfg = SweepConfig(**vars(ap.parse_args()))

    rows = [sweep_cell((w, d)) for w in sweep_grid(cfg.n) for d in sweep_grid(cfg.n)]
    out = Path(cfg.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["w", "d", "n_fixed_points", "interior", "discriminant", "commutator_norm"])
        for r in rows:
            interior = [x for x in r["x2_roots"] if 0 < x < 1]
            writer.writerow([fmt(r["w"]), fmt(r["d"]), r["n_fixed_points"],
                             ";".join(fmt(x) for x in interior), fmt(r["discriminant"]),
                             fmt(r["commutator_norm"])])

    with_interior = sum(any(0 < x < 1 for x in r["x2_roots"]) for r in rows)
    print(f"{len(rows)} cells, {with_interior} with an interior fixed point -> {out}")


if __name__ == "__main__":
    main()
