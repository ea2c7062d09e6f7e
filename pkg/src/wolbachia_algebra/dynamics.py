"""The normalized evolution operator V on S^1 x S^1, its fixed points and nilpotents.

A state (x1, x2, y1, y2) is the element x1 f1 + x2 f2 + y1 m1 + y2 m2, with
female (x) and male (y) type frequencies each summing to one. CI kills part of
the offspring, so ``z^2`` is renormalized by its surviving per-sex mass
``1 - w y2 + d w x2 y2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .algebra import F1, F2, M2, StructureTensor
from .model import WolbachiaParams, build_algebra

EXTINCTION_EPS = 1e-14
SIMPLEX_TOL = 1e-12
FIXED_POINT_TOL = 1e-9
DISC_TOL = 1e-14
FEMALES = [F1, F2]


class Extinction(ArithmeticError):
    """Surviving offspring mass is (numerically) zero: the population dies out."""

    def __init__(self, state, mass):
        super().__init__(f"no surviving offspring from {state} (mass {mass:.3g})")
        self.state = state
        self.mass = mass


@dataclass(frozen=True)
class StateVector:
    x1: float
    x2: float
    y1: float
    y2: float

    def __post_init__(self):
        v = self.as_array()
        if not np.all(np.isfinite(v)):
            raise ValueError("state has non-finite entries")
        if np.min(v) < -SIMPLEX_TOL:
            raise ValueError(f"state has negative frequencies: {tuple(v)}")
        if abs(self.x1 + self.x2 - 1) > SIMPLEX_TOL or abs(self.y1 + self.y2 - 1) > SIMPLEX_TOL:
            raise ValueError(f"female and male frequencies must each sum to 1: {tuple(v)}")

    @classmethod
    def infected(cls, x2: float, y2: float) -> "StateVector":
        """State with infected female frequency x2 and infected male frequency y2."""
        return cls(1.0 - x2, x2, 1.0 - y2, y2)

    @classmethod
    def from_array(cls, v) -> "StateVector":
        return cls(*(float(a) for a in v))

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.y1, self.y2])

    def to_dict(self) -> dict:
        return {"x1": self.x1, "x2": self.x2, "y1": self.y1, "y2": self.y2}


@lru_cache(maxsize=256)
def _algebra(p: WolbachiaParams) -> StructureTensor:
    return build_algebra(p)


def squares(c: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Row-wise ``z^2`` for a stack of elements ``Z`` of shape (n, 4)."""
    return np.einsum("ni,nj,ijk->nk", Z, Z, c)


def offspring_mass(t: StructureTensor, z) -> float:
    """Per-sex surviving mass of ``z^2``: the sum of its female coefficients."""
    z = np.asarray(z, dtype=float)
    return float(squares(t.c, z[None, :])[0, FEMALES].sum())


def norm1_of_square(p: WolbachiaParams, s: StateVector) -> float:
    return 1.0 - p.w * s.y2 + p.d * p.w * s.x2 * s.y2


def _apply(c: np.ndarray, Z: np.ndarray, eps: float):
    """Vectorized V. Returns (next states, masses); rows with mass <= eps are NaN."""
    Z2 = squares(c, Z)
    mass = Z2[:, FEMALES].sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = Z2 / mass[:, None]
    out[mass <= eps] = np.nan
    return out, mass


def apply_V(p: WolbachiaParams, s: StateVector, eps: float = EXTINCTION_EPS) -> StateVector:
    out, mass = _apply(_algebra(p).c, s.as_array()[None, :], eps)
    if mass[0] <= eps:
        raise Extinction(s, float(mass[0]))
    return StateVector.from_array(out[0])


# ---------------------------------------------------------------- fixed points


class FixedPointKind(str, enum.Enum):
    TRIVIAL_UNINFECTED = "trivial_uninfected"
    FULLY_INFECTED = "fully_infected"
    INTERIOR = "interior"


def classify(x2: float, tol: float = 1e-9) -> FixedPointKind:
    if abs(x2) <= tol:
        return FixedPointKind.TRIVIAL_UNINFECTED
    if abs(x2 - 1.0) <= tol:
        return FixedPointKind.FULLY_INFECTED
    return FixedPointKind.INTERIOR


@dataclass(frozen=True)
class FixedPoint:
    state: StateVector
    kind: FixedPointKind
    residual: float
    multiplicity: int = 1

    @property
    def x2(self) -> float:
        return self.state.x2

    def to_dict(self) -> dict:
        return {
            "x2": self.state.x2,
            "state": self.state.to_dict(),
            "kind": self.kind.value,
            "residual": self.residual,
            "multiplicity": self.multiplicity,
        }


@dataclass(frozen=True)
class FixedPointSet:
    points: tuple
    infeasible_roots: tuple
    discriminant: Optional[float]  # None on the d = 1 branch

    @property
    def x2_values(self) -> list:
        return [fp.x2 for fp in self.points]


def residual(p: WolbachiaParams, s: StateVector) -> float:
    return float(np.max(np.abs(apply_V(p, s).as_array() - s.as_array())))


def discriminant(p: WolbachiaParams) -> float:
    """Discriminant of ``d w x^2 - w x + (1 - d) = 0``, written as ``w (4d^2 - 4d + w)``."""
    return p.w * (4 * p.d ** 2 - 4 * p.d + p.w)


def _make_point(p: WolbachiaParams, x2: float, multiplicity: int = 1) -> FixedPoint:
    s = StateVector.infected(x2, x2)
    r = residual(p, s)
    if r > FIXED_POINT_TOL:
        raise ArithmeticError(f"closed-form fixed point x2={x2!r} has residual {r:.3g}")
    return FixedPoint(s, classify(x2), r, multiplicity)


def fixed_point_set(p: WolbachiaParams) -> FixedPointSet:
    """Closed-form idempotents: the uninfected point plus the feasible roots of
    ``d w x2^2 - w x2 + (1 - d) = 0`` (``x2 = 1`` when d = 1)."""
    points = [_make_point(p, 0.0)]
    infeasible = []
    if p.d == 1.0:
        points.append(_make_point(p, 1.0))
        return FixedPointSet(tuple(points), (), None)

    delta = discriminant(p)
    if abs(delta) <= DISC_TOL:
        roots, mult = [1.0 / (2 * p.d)], 2
    elif delta < 0:
        roots, mult = [], 1
    else:
        root = math.sqrt(delta) / p.w
        roots, mult = [(1 - root) / (2 * p.d), (1 + root) / (2 * p.d)], 1
    for x2 in roots:
        if -SIMPLEX_TOL <= x2 <= 1 + SIMPLEX_TOL:
            points.append(_make_point(p, min(max(x2, 0.0), 1.0), mult))
        else:
            infeasible.append(x2)
    return FixedPointSet(tuple(points), tuple(infeasible), delta)


def fixed_points(p: WolbachiaParams) -> list:
    return list(fixed_point_set(p).points)


def _diagonal_gap(c: np.ndarray, x2) -> np.ndarray:
    """``V(s)_x2 - x2`` along the diagonal x = y, via the structure tensor."""
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    Z = np.stack([1 - x2, x2, 1 - x2, x2], axis=1)
    out, _ = _apply(c, Z, EXTINCTION_EPS)
    return out[:, F2] - x2


def oracle_fixed_points(p: WolbachiaParams, grid_n: int = 10_000, newton_tol: float = 1e-13,
                        tangent_tol: float = 1e-13) -> list:
    """Brute-force fixed points on the diagonal x = y (V(s) always has x = y).

    Scans a uniform grid, keeps exact zeros, refines sign changes with Brent's
    method and polishes local minima of |gap| that touch zero without crossing
    (double roots). Independent of the closed-form root formula.
    """
    if grid_n < 100:
        raise ValueError("grid_n must be >= 100")
    c = _algebra(p).c
    xs = np.linspace(0.0, 1.0, grid_n + 1)
    g = _diagonal_gap(c, xs)

    def gap(x):
        return float(_diagonal_gap(c, x)[0])

    def absgap(x):
        return abs(gap(x))

    roots = list(xs[g == 0.0])
    for i in np.nonzero(g[:-1] * g[1:] < 0)[0]:
        roots.append(brentq(gap, xs[i], xs[i + 1], xtol=newton_tol))
    a = np.abs(g)
    for i in range(1, grid_n):
        if g[i] == 0.0 or g[i - 1] * g[i + 1] < 0 or g[i - 1] * g[i] < 0 or g[i] * g[i + 1] < 0:
            continue
        if a[i] <= a[i - 1] and a[i] <= a[i + 1] and a[i] < 1e-6:
            res = minimize_scalar(absgap, bounds=(xs[i - 1], xs[i + 1]), method="bounded",
                                  options={"xatol": 1e-12})
            if res.fun <= tangent_tol:
                roots.append(float(res.x))
    roots.sort()
    merged = []
    for r in roots:
        if not merged or r - merged[-1] > 1e-7:
            merged.append(float(r))
    return [StateVector.infected(x, x) for x in merged]


# ---------------------------------------------------------------- trajectories


class Outcome(str, enum.Enum):
    CONVERGED = "converged"
    EXTINCTION = "extinction"
    MAX_STEPS = "max_steps"


@dataclass
class TrajectoryRecord:
    steps: list = field(default_factory=list)  # (step, StateVector, residual)
    outcome: Outcome = Outcome.MAX_STEPS
    fixed_point: Optional[FixedPoint] = None

    @property
    def final_state(self) -> Optional[StateVector]:
        return self.steps[-1][1] if self.steps else None

    def summary(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "steps": len(self.steps),
            "fixed_point": None if self.fixed_point is None else self.fixed_point.to_dict(),
        }


def iterate(p: WolbachiaParams, s0: StateVector, max_steps: int = 100_000, tol: float = 1e-10,
            record: bool = True) -> TrajectoryRecord:
    """Apply V until ``||V(s) - s||_inf <= tol``, extinction, or ``max_steps`` applications.

    Step k holds the state after k applications and its residual. With
    ``record=False`` only the last step is kept.
    """
    if max_steps < 1 or tol <= 0:
        raise ValueError("need max_steps >= 1 and tol > 0")
    c = _algebra(p).c
    rec = TrajectoryRecord()
    z = s0.as_array()[None, :]
    for k in range(max_steps + 1):
        nxt, mass = _apply(c, z, EXTINCTION_EPS)
        state = StateVector.from_array(z[0])
        if mass[0] <= EXTINCTION_EPS:
            rec.steps.append((k, state, float("nan")))
            rec.outcome = Outcome.EXTINCTION
            return rec
        r = float(np.max(np.abs(nxt[0] - z[0])))
        if record or k == max_steps or r <= tol:
            rec.steps.append((k, state, r))
        if r <= tol:
            rec.outcome = Outcome.CONVERGED
            rec.fixed_point = FixedPoint(state, classify(state.x2, 1e-6), r)
            return rec
        if k < max_steps:
            z = nxt
    return rec


@dataclass(frozen=True)
class BatchResult:
    outcomes: tuple
    final: np.ndarray   # (n, 4)
    steps: np.ndarray   # applications performed per trajectory
    residuals: np.ndarray


def iterate_batch(p: WolbachiaParams, starts, max_steps: int = 100_000,
                  tol: float = 1e-10) -> BatchResult:
    """Vectorized ``iterate`` for many starting states, without step records."""
    c = _algebra(p).c
    Z = np.array([s.as_array() for s in starts], dtype=float)
    n = len(Z)
    done = np.zeros(n, dtype=bool)
    outcome = np.full(n, Outcome.MAX_STEPS.value, dtype=object)
    steps = np.full(n, max_steps)
    res = np.full(n, np.nan)
    for k in range(max_steps + 1):
        active = ~done
        if not active.any():
            break
        nxt, mass = _apply(c, Z[active], EXTINCTION_EPS)
        idx = np.nonzero(active)[0]
        dead = mass <= EXTINCTION_EPS
        r = np.max(np.abs(nxt - Z[active]), axis=1)
        r[dead] = np.nan
        res[idx] = r
        conv = ~dead & (r <= tol)
        outcome[idx[dead]] = Outcome.EXTINCTION.value
        outcome[idx[conv]] = Outcome.CONVERGED.value
        stop = dead | conv
        steps[idx[stop]] = k
        done[idx[stop]] = True
        if k < max_steps:
            move = idx[~stop]
            Z[move] = nxt[~stop]
    return BatchResult(tuple(Outcome(o) for o in outcome), Z, steps, res)


# ---------------------------------------------------------------- nilpotents


@dataclass(frozen=True)
class NilpotentReport:
    w: float
    d: float
    nontrivial: bool
    generator: Optional[np.ndarray]   # f1 + m2 when w = 1
    generator_square: Optional[np.ndarray]
    forced_y2: float                  # the chain x2 = 0 => y2 = 1/w
    grid_step: float
    grid_min_mass: float
    grid_argmin: tuple                # (x2, y2)

    def to_dict(self) -> dict:
        return {
            "w": self.w,
            "d": self.d,
            "nilpotents": "span(f1 + m2)" if self.nontrivial else "{0}",
            "generator": None if self.generator is None else self.generator.tolist(),
            "generator_square": None if self.generator_square is None else self.generator_square.tolist(),
            "forced_y2": self.forced_y2,
            "grid_step": self.grid_step,
            "grid_min_mass": self.grid_min_mass,
            "grid_argmin": {"x2": self.grid_argmin[0], "y2": self.grid_argmin[1]},
        }


def mass_grid(p: WolbachiaParams, n: int = 100):
    """Per-sex mass of z^2 via the tensor on the (x2, y2) grid with spacing 1/n."""
    g = np.linspace(0.0, 1.0, n + 1)
    X2, Y2 = np.meshgrid(g, g, indexing="ij")
    Z = np.stack([1 - X2, X2, 1 - Y2, Y2], axis=-1).reshape(-1, 4)
    mass = squares(_algebra(p).c, Z)[:, FEMALES].sum(axis=1).reshape(X2.shape)
    return g, mass


def absolute_nilpotents(p: WolbachiaParams, grid_n: int = 100) -> NilpotentReport:
    """Nonzero z in S^1 x S^1 with z^2 = 0.

    The infected-offspring coefficient d x2 forces x2 = 0; the uninfected one then
    reads 1 - w y2 = 0, so y2 = 1/w, feasible only for w = 1.
    """
    t = _algebra(p)
    forced_y2 = 1.0 / p.w
    nontrivial = forced_y2 <= 1.0
    gen = gen_sq = None
    if nontrivial:
        gen = np.zeros(4)
        gen[[F1, M2]] = 1.0
        gen_sq = squares(t.c, gen[None, :])[0]
        if np.any(gen_sq != 0.0):
            raise ArithmeticError("(f1 + m2)^2 should vanish at w = 1")
    g, mass = mass_grid(p, grid_n)
    i, j = np.unravel_index(np.argmin(mass), mass.shape)
    return NilpotentReport(p.w, p.d, nontrivial, gen, gen_sq, forced_y2, 1.0 / grid_n,
                           float(mass[i, j]), (float(g[i]), float(g[j])))
