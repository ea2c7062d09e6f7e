#!/usr/bin/env python3
"""Iterate V from seeded random starts and report where trajectories end.

Also prints the residual decay of one start above the tangent root at
(w, d) = (3/4, 3/4), where convergence is algebraic rather than geometric.

    python3 scripts/trajectories.py --w 0.75 --d 0.75 --starts 100
"""

import argparse
from collections import Counter
from dataclasses import asdict, dataclass

import numpy as np

from wolbachia_algebra import WolbachiaParams
from wolbachia_algebra.dynamics import StateVector, fixed_point_set, iterate, iterate_batch


@dataclass
class TrajectoryConfig:
    w: float = 0.75
    d: float = 0.75
    starts: int = 100
    max_steps: int = 100_000
    tol: float = 1e-10
    seed: int = 20240611


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for k, v in asdict(TrajectoryConfig()).items():
        ap.add_argument(f"--{k.replace('_', '-')}", dest=k, type=type(v), default=v)
    cfg = TrajectoryConfig(**vars(ap.parse_args()))
    p = WolbachiaParams(cfg.w, cfg.d)

    rng = np.random.default_rng(cfg.seed)
    starts = [StateVector.infected(x, y) for x, y in rng.uniform(0, 1, (cfg.starts, 2))]
    batch = iterate_batch(p, starts, cfg.max_steps, cfg.tol)
    targets = np.array(fixed_point_set(p).x2_values)
    print(f"fixed points x2: {targets.tolist()}")
    print("outcomes:", dict(Counter(o.value for o in batch.outcomes)))
    dist = np.min(np.abs(batch.final[:, [1]] - targets[None, :]), axis=1)
    print(f"max distance of endpoints to the fixed-point set: {np.nanmax(dist):.3g}")
    print(f"max steps used: {int(batch.steps.max())}")

    rec = iterate(p, StateVector.infected(0.9, 0.9), cfg.max_steps, cfg.tol)
    print("\nresidual decay from x2 = y2 = 0.9")
    print(f"{'step':>8} {'x2':>20} {'residual':>12} {'n^2 * res':>10}")
    for k in (10, 100, 1_000, 10_000, 100_000):
        if k < len(rec.steps):
            _, s, r = rec.steps[k]
            print(f"{k:8d} {s.x2:20.15f} {r:12.4e} {k * k * r:10.4f}")
    print(f"outcome: {rec.outcome.value} after {rec.steps[-1][0]} steps")


if __name__ == "__main__":
    main()
