"""Command-line frontend: ``wolb {check,fixed-points,nilpotents,simulate,sweep,mul}``.

Option precedence: built-in defaults < ``--config`` JSON file < command-line flags.
Exit codes: 0 ok, 2 bad parameters, 3 extinction, 4 numerical failure,
5 no convergence within ``--steps``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import algebra as alg
from .characters import baric_verdict, dibaric_solutions
from .dynamics import (Extinction, Outcome, StateVector, absolute_nilpotents, discriminant,
                       fixed_point_set, iterate, oracle_fixed_points)
from .model import (ParameterDomainError, WolbachiaParams, build_algebra, build_inheritance_table,
                    punnett_cross_check)
from .structure import NumericalAnalysisError, is_evolution_algebra, sexdiff_subalgebra_report

EXIT_OK, EXIT_PARAMS, EXIT_EXTINCTION, EXIT_NUMERICAL, EXIT_MAX_STEPS = 0, 2, 3, 4, 5
OUT_DIR_ENV = "WOLB_OUT_DIR"
ORACLE_AGREE_TOL = 1e-6


@dataclass
class RunConfig:
    w: Optional[float] = None
    d: Optional[float] = None
    seed: int = alg.DEFAULT_SEED
    samples: int = 1000
    x2: Optional[float] = None
    y2: Optional[float] = None
    state: Optional[list] = None
    steps: int = 100_000
    tol: float = 1e-10
    oracle: bool = False
    grid: int = 10_000
    w_grid: int = 10
    d_grid: int = 10
    jobs: int = 1
    format: str = "csv"
    out: Optional[str] = None

    def params(self) -> WolbachiaParams:
        if self.w is None or self.d is None:
            raise ParameterDomainError("both w and d are required (flags or --config)")
        return WolbachiaParams(self.w, self.d)


class UsageError(Exception):
    pass


def load_config(args: argparse.Namespace) -> RunConfig:
    merged = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        known = {f.name for f in fields(RunConfig)}
        unknown = set(file_cfg) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        merged.update(file_cfg)
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            merged[f.name] = value
    return RunConfig(**merged)


def fmt(x: float) -> str:
    """Locale-free float with 17 significant digits."""
    return format(float(x), ".17g")


def _vec(v) -> list:
    return [float(a) + 0.0 for a in v]


def _named(v) -> str:
    return alg.format_element(v)


# ---------------------------------------------------------------- commands


def cmd_check(cfg: RunConfig) -> tuple:
    p = cfg.params()
    t = build_algebra(p)
    table = build_inheritance_table(p)
    witness = alg.associativity_counterexample(t, seed=cfg.seed)
    z = alg.element(1, 0, 0, 1)
    gap, lhs, rhs = alg.power_associativity_gap(t, z)
    mass = {
        "cross_11": table.mass(1, 1), "cross_21": table.mass(2, 1),
        "cross_12": table.mass(1, 2), "cross_22": table.mass(2, 2),
        "expected_12": 1 - p.w, "expected_22": 1 - p.w + p.d * p.w,
    }
    mass["max_error"] = max(abs(mass["cross_11"] - 1), abs(mass["cross_21"] - 1),
                            abs(mass["cross_12"] - mass["expected_12"]),
                            abs(mass["cross_22"] - mass["expected_22"]))
    verdict = is_evolution_algebra(p)
    homs = dibaric_solutions(p)
    baric = baric_verdict(p, seed=cfg.seed).to_dict()
    report = {
        "command": "check",
        "w": p.w,
        "d": p.d,
        "seed": cfg.seed,
        "commutative": alg.check_commutative(t),
        "flexible": alg.probe_flexible(t, cfg.samples, seed=cfg.seed).to_dict(),
        "associativity_counterexample": None if witness is None else {
            "triple": [_named(v) for v in witness.triple],
            "left": _vec(witness.left),
            "right": _vec(witness.right),
            "deviation": witness.deviation,
        },
        "power_associativity": {"z": _vec(z), "gap": gap, "z2z2": _vec(lhs), "z2z_z": _vec(rhs)},
        "mass_loss": mass,
        "punnett_cross_check": punnett_cross_check(p),
        "structure": verdict.to_dict(p),
        "is_evolution_algebra": verdict.is_evolution_algebra,
        "baric": baric["baric"],
        "baric_report": baric,
        "dibaric": {
            "exists": bool(homs),
            "phi": homs[0].to_dict() if homs else None,
            "all": [h.to_dict() for h in homs],
        },
        "sexdiff_subalgebra": sexdiff_subalgebra_report(p).to_dict(),
    }
    return EXIT_OK, json_text(report)


def _oracle_agrees(closed: list, oracle: list) -> bool:
    if len(closed) != len(oracle):
        return False
    return all(abs(a - b) <= ORACLE_AGREE_TOL for a, b in zip(sorted(closed), sorted(oracle)))


def fixed_points_report(p: WolbachiaParams, with_oracle: bool, grid: int = 10_000) -> dict:
    fps = fixed_point_set(p)
    report = {
        "command": "fixed-points",
        "w": p.w,
        "d": p.d,
        "discriminant": discriminant(p),
        "x2": fps.x2_values,
        "fixed_points": [fp.to_dict() for fp in fps.points],
        "infeasible_roots": list(fps.infeasible_roots),
    }
    if with_oracle:
        oracle = [s.x2 for s in oracle_fixed_points(p, grid)]
        report["oracle"] = {"x2": oracle, "grid": grid, "agrees": _oracle_agrees(fps.x2_values, oracle)}
    return report


def cmd_fixed_points(cfg: RunConfig) -> tuple:
    report = fixed_points_report(cfg.params(), cfg.oracle, cfg.grid)
    report["seed"] = cfg.seed
    return EXIT_OK, json_text(report)


def cmd_nilpotents(cfg: RunConfig) -> tuple:
    report = absolute_nilpotents(cfg.params()).to_dict()
    report.update(command="nilpotents", seed=cfg.seed)
    return EXIT_OK, json_text(report)


def start_state(cfg: RunConfig) -> StateVector:
    if cfg.state is not None:
        v = np.asarray(cfg.state, dtype=float)
        if v.shape != (4,) or np.any(v < 0) or v[:2].sum() == 0 or v[2:].sum() == 0:
            raise ParameterDomainError("--state needs four nonnegative numbers x1 x2 y1 y2")
        x, y = v[:2] / v[:2].sum(), v[2:] / v[2:].sum()
        if not np.allclose(v, np.concatenate([x, y]), rtol=0, atol=1e-12):
            print(f"warning: start state normalized to {_vec(np.concatenate([x, y]))}", file=sys.stderr)
        return StateVector(x[0], x[1], y[0], y[1])
    if cfg.x2 is None or cfg.y2 is None:
        raise ParameterDomainError("simulate needs --x2 and --y2 (or --state)")
    for name in ("x2", "y2"):
        if not 0.0 <= getattr(cfg, name) <= 1.0:
            raise ParameterDomainError(f"{name}={getattr(cfg, name)!r} is outside [0, 1]")
    return StateVector.infected(cfg.x2, cfg.y2)


def cmd_simulate(cfg: RunConfig) -> tuple:
    p = cfg.params()
    rec = iterate(p, start_state(cfg), cfg.steps, cfg.tol)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["step", "x1", "x2", "y1", "y2", "residual"])
    for k, s, r in rec.steps:
        writer.writerow([k, fmt(s.x1), fmt(s.x2), fmt(s.y1), fmt(s.y2), fmt(r)])
    summary = rec.summary()
    summary.update(w=p.w, d=p.d, seed=cfg.seed)
    buf.write("# " + json.dumps(summary, sort_keys=True) + "\n")
    code = {Outcome.CONVERGED: EXIT_OK, Outcome.EXTINCTION: EXIT_EXTINCTION,
            Outcome.MAX_STEPS: EXIT_MAX_STEPS}[rec.outcome]
    return code, buf.getvalue()


SWEEP_HEADER = ["w", "d", "n_fixed_points", "x2_roots", "discriminant", "commutator_norm", "dibaric"]


def sweep_cell(wd: tuple) -> dict:
    p = WolbachiaParams(*wd)
    fps = fixed_point_set(p)
    return {
        "w": p.w,
        "d": p.d,
        "n_fixed_points": len(fps.points),
        "x2_roots": fps.x2_values,
        "discriminant": discriminant(p),
        "commutator_norm": is_evolution_algebra(p).commutator_norm,
        "dibaric": bool(dibaric_solutions(p)),
    }


def sweep_grid(n: int) -> list:
    """Grid values i/n for i = 1..n, i.e. n points in (0, 1] ending at exactly 1."""
    return [i / n for i in range(1, n + 1)]


def cmd_sweep(cfg: RunConfig) -> tuple:
    if cfg.w_grid < 2 or cfg.d_grid < 2:
        raise ParameterDomainError("--w-grid and --d-grid must be >= 2")
    if cfg.format not in ("csv", "json"):
        raise UsageError(f"unknown format {cfg.format!r}")
    cells = [(w, d) for w in sweep_grid(cfg.w_grid) for d in sweep_grid(cfg.d_grid)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(sweep_cell, cells, chunksize=8))
    else:
        rows = [sweep_cell(c) for c in cells]
    if cfg.format == "json":
        return EXIT_OK, json_text({"command": "sweep", "seed": cfg.seed, "rows": rows})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for r in rows:
        writer.writerow([fmt(r["w"]), fmt(r["d"]), r["n_fixed_points"],
                         ";".join(fmt(x) for x in r["x2_roots"]), fmt(r["discriminant"]),
                         fmt(r["commutator_norm"]), "true" if r["dibaric"] else "false"])
    return EXIT_OK, buf.getvalue()


def cmd_mul(cfg: RunConfig, operands: list) -> tuple:
    t = build_algebra(cfg.params())
    names = list(alg.BASIS_NAMES)
    for name in operands:
        if name not in names:
            raise UsageError(f"unknown basis element {name!r}; choose from {names}")
    if operands:
        if len(operands) != 2:
            raise UsageError("mul takes zero or two basis elements")
        pairs = [tuple(operands)]
    else:
        pairs = [(a, b) for i, a in enumerate(names) for b in names[i:]]
    lines = []
    for a, b in pairs:
        prod = alg.multiply(t.basis(names.index(a)), t.basis(names.index(b)), t)
        lines.append(f"{a}*{b} = {_named(prod)}")
    return EXIT_OK, "\n".join(lines) + "\n"


def json_text(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


# ---------------------------------------------------------------- parser


def _common(sp: argparse.ArgumentParser):
    sp.add_argument("--w", type=float, help="CI rate in (0, 1]")
    sp.add_argument("--d", type=float, help="maternal transmission rate in (0, 1]")
    sp.add_argument("--config", help="JSON file with option values (flags take precedence)")
    sp.add_argument("--seed", type=lambda s: int(s, 0), help="RNG seed (default 0xC0FFEE)")
    sp.add_argument("--out", help=f"output file (default: stdout, or ${OUT_DIR_ENV}/<command>.<ext>)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wolb", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("check", help="verify the algebraic properties of W(w, d)")
    _common(sp)
    sp.add_argument("--samples", type=int, help="random pairs for the flexibility probe")

    sp = sub.add_parser("fixed-points", help="idempotents (fixed points of V)")
    _common(sp)
    sp.add_argument("--oracle", action="store_true", default=None,
                    help="cross-check against the brute-force grid oracle")
    sp.add_argument("--grid", type=int, help="oracle grid resolution (default 10000)")

    sp = sub.add_parser("nilpotents", help="absolute nilpotent elements")
    _common(sp)

    sp = sub.add_parser("simulate", help="iterate V and stream the trajectory as CSV")
    _common(sp)
    sp.add_argument("--x2", type=float, help="initial infected female frequency")
    sp.add_argument("--y2", type=float, help="initial infected male frequency")
    sp.add_argument("--state", type=float, nargs=4, metavar=("X1", "X2", "Y1", "Y2"),
                    help="full start state; normalized per sex with a warning")
    sp.add_argument("--steps", type=int, help="maximum applications of V")
    sp.add_argument("--tol", type=float, help="convergence tolerance on ||V(s) - s||_inf")

    sp = sub.add_parser("sweep", help="fixed points and verdicts over a (w, d) grid")
    sp.add_argument("--w-grid", dest="w_grid", type=int, help="w values i/N, i = 1..N")
    sp.add_argument("--d-grid", dest="d_grid", type=int, help="d values i/M, i = 1..M")
    sp.add_argument("--jobs", type=int, help="worker processes")
    sp.add_argument("--format", choices=["csv", "json"])
    sp.add_argument("--config")
    sp.add_argument("--seed", type=lambda s: int(s, 0))
    sp.add_argument("--out")

    sp = sub.add_parser("mul", help="print basis products")
    _common(sp)
    sp.add_argument("operands", nargs="*", help="two basis names, e.g. f1 m2; none prints the table")
    return ap


COMMANDS = {
    "check": (cmd_check, "json"),
    "fixed-points": (cmd_fixed_points, "json"),
    "nilpotents": (cmd_nilpotents, "json"),
    "simulate": (cmd_simulate, "csv"),
    "sweep": (cmd_sweep, None),
    "mul": (cmd_mul, "txt"),
}


def _emit(text: str, cfg: RunConfig, command: str, ext: str):
    path = cfg.out
    if path is None and os.environ.get(OUT_DIR_ENV):
        path = str(Path(os.environ[OUT_DIR_ENV]) / f"{command}.{ext}")
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    func, ext = COMMANDS[args.command]
    try:
        cfg = load_config(args)
        if args.command == "mul":
            code, text = func(cfg, args.operands)
        else:
            code, text = func(cfg)
    except (ParameterDomainError, UsageError, OSError, json.JSONDecodeError, TypeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARAMS
    except (NumericalAnalysisError, ArithmeticError, np.linalg.LinAlgError) as err:
        if isinstance(err, Extinction):
            print(f"error: {err}", file=sys.stderr)
            return EXIT_EXTINCTION
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    _emit(text, cfg, args.command, ext or cfg.format)
    return code


if __name__ == "__main__":
    sys.exit(main())
