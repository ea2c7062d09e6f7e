"""Characters (baric test) and homomorphisms onto the sex differentiation algebra.

The sex differentiation algebra U has basis (W, M) with W^2 = M^2 = 0 and
WM = (W + M) / 2. An element aW + a'M is stored as the pair (a, a').
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .algebra import BASIS_NAMES, DEFAULT_SEED, StructureTensor
from .model import WolbachiaParams, build_algebra, build_inheritance_table

NONZERO_TOL = 1e-6

SEXDIFF = StructureTensor([
    [[0.0, 0.0], [0.5, 0.5]],
    [[0.5, 0.5], [0.0, 0.0]],
])

AlgebraLike = Union[WolbachiaParams, StructureTensor]


def _tensor(a: AlgebraLike) -> StructureTensor:
    return build_algebra(a) if isinstance(a, WolbachiaParams) else a


def character_residuals(t: StructureTensor, sigma) -> np.ndarray:
    """``sigma(e_a e_b) - sigma(e_a) sigma(e_b)`` for all basis pairs."""
    sigma = np.asarray(sigma, dtype=float)
    return t.c @ sigma - np.outer(sigma, sigma)


def is_character(algebra: AlgebraLike, sigma, tol: float = 1e-12) -> bool:
    """Multiplicativity only; the zero form passes (baric-ness also needs nonzero)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return bool(np.max(np.abs(character_residuals(_tensor(algebra), sigma))) <= tol)


def newton_character(t: StructureTensor, sigma0, max_iter: int = 200, step_tol: float = 1e-15):
    """Gauss-Newton on the n^2 multiplicativity equations. Returns (sigma, residual, converged)."""
    sigma = np.asarray(sigma0, dtype=float).copy()
    n = t.dim
    eye = np.eye(n)
    for _ in range(max_iter):
        r = character_residuals(t, sigma).ravel()
        if np.max(np.abs(r)) <= 1e-15:
            break
        # d r_ab / d sigma_k = c[a,b,k] - delta_ak sigma_b - delta_bk sigma_a
        J = (t.c
             - eye[:, None, :] * sigma[None, :, None]
             - eye[None, :, :] * sigma[:, None, None]).reshape(n * n, n)
        step, *_ = np.linalg.lstsq(J, -r, rcond=None)
        sigma = sigma + step
        if not np.all(np.isfinite(sigma)) or np.max(np.abs(sigma)) > 1e8:
            return sigma, float("inf"), False
        if np.max(np.abs(step)) <= step_tol:
            break
    residual = float(np.max(np.abs(character_residuals(t, sigma))))
    return sigma, residual, residual < 1e-10


@dataclass(frozen=True)
class BaricReport:
    forced_zero: bool       # every basis square vanishes, so sigma(e)^2 = 0 for all e
    seeds: int
    converged_to_zero: int
    diverged: int
    nonzero_characters: tuple
    seed: int

    @property
    def baric(self) -> bool:
        return len(self.nonzero_characters) > 0

    def to_dict(self) -> dict:
        return {
            "baric": self.baric,
            "forced_zero": self.forced_zero,
            "newton_seeds": self.seeds,
            "converged_to_zero": self.converged_to_zero,
            "diverged": self.diverged,
            "nonzero_characters": [list(s) for s in self.nonzero_characters],
            "seed": self.seed,
        }


def baric_verdict(algebra: AlgebraLike, seeds: int = 100, seed: int = DEFAULT_SEED,
                  scale: float = 2.0) -> BaricReport:
    """Search for a nonzero character.

    The analytic route: if e_a e_a = 0 for every basis vector then a character
    satisfies sigma(e_a)^2 = sigma(0) = 0, so it is identically zero. The numeric
    route runs Newton from ``seeds`` random starting forms.
    """
    t = _tensor(algebra)
    forced = all(np.max(np.abs(t.c[a, a])) == 0.0 for a in range(t.dim))
    rng = np.random.default_rng(seed)
    zero = diverged = 0
    found = []
    for start in rng.uniform(-scale, scale, size=(seeds, t.dim)):
        sigma, _, ok = newton_character(t, start)
        if not ok:
            diverged += 1
        elif np.max(np.abs(sigma)) < NONZERO_TOL:
            zero += 1
        else:
            key = tuple(round(float(s), 9) + 0.0 for s in sigma)
            if key not in found:
                found.append(key)
    return BaricReport(forced, seeds, zero, diverged, tuple(found), seed)


# ---------------------------------------------------------------- dibaric


@dataclass(frozen=True)
class SexDiffHom:
    """Images of (f1, f2, m1, m2) in U, each as (W-coefficient, M-coefficient)."""

    images: tuple

    @property
    def matrix(self) -> np.ndarray:
        """2x4 matrix sending W-coordinates to U-coordinates."""
        return np.array(self.images, dtype=float).T

    def __call__(self, z) -> np.ndarray:
        return self.matrix @ np.asarray(z, dtype=float)

    def to_dict(self) -> dict:
        return {name: {"W": float(a), "M": float(b)} for name, (a, b) in zip(BASIS_NAMES, self.images)}

    def describe(self) -> dict:
        out = {}
        for name, (a, b) in zip(BASIS_NAMES, self.images):
            parts = [f"{c:g}{s}" if c != 1 else s for c, s in ((a, "W"), (b, "M")) if c != 0]
            out[name] = " + ".join(parts) if parts else "0"
        return out


@dataclass(frozen=True)
class HomPattern:
    """One shape of candidate homomorphism: which line the female and male
    images lie on, and which of them are nonzero."""

    female_line: str     # "W" or "M"
    female_support: tuple  # indices (0-based type) with nonzero image
    male_support: tuple

    @property
    def male_line(self) -> str:
        return "M" if self.female_line == "W" else "W"


_SUPPORTS = ((0,), (0, 1), (1,))


def hom_patterns() -> list:
    """The 18 shapes: both orientations x 3 female supports x 3 male supports.

    Female images share one line of U and male images the other; otherwise
    every product f_i m_k maps to zero and the map cannot be onto.
    """
    return [HomPattern(line, fs, ms)
            for line in ("W", "M") for fs in _SUPPORTS for ms in _SUPPORTS]


def _solve_scalar_system(P: np.ndarray, tol: float):
    """Solve ``P_ik1 a1 + P_ik2 a2 = a_i b_k = P_ik1 b1 + P_ik2 b2`` (i, k = 1, 2).

    The (1,1) cross has P = (1, 0), giving a1 = a1 b1 = b1, so a1 = b1 in {0, 1}.
    With a1 = b1 fixed, the (2,1) and (1,2) equations are linear in (a2, b2);
    the (2,2) equations are then checked. Returns all solutions (a1, a2, b1, b2).
    """
    if not np.allclose(P[0, 0], (1.0, 0.0), rtol=0, atol=tol):
        raise ValueError("solver assumes the uninfected cross breeds true")
    solutions = []
    for s in (0.0, 1.0):
        a1 = b1 = s
        rows, rhs = [], []
        # unknowns (a2, b2); a2*b1 and a1*b2 are linear once a1 = b1 is fixed
        for (i, k), prod in (((1, 0), np.array([b1, 0.0])), ((0, 1), np.array([0.0, a1]))):
            p1, p2 = P[i, k]
            rows.append(np.array([p2, 0.0]) - prod)  # p1 a1 + p2 a2 = a_i b_k
            rhs.append(-p1 * a1)
            rows.append(np.array([0.0, p2]) - prod)  # p1 b1 + p2 b2 = a_i b_k
            rhs.append(-p1 * b1)
        A, y = np.array(rows), np.array(rhs)
        x, *_ = np.linalg.lstsq(A, y, rcond=None)
        if np.linalg.matrix_rank(A, tol=tol) < 2:
            raise ValueError("degenerate linear subsystem (d = 0?)")
        if np.max(np.abs(A @ x - y)) > tol:
            continue
        a2, b2 = x
        p1, p2 = P[1, 1]
        r = max(abs(p1 * a1 + p2 * a2 - a2 * b2), abs(p1 * b1 + p2 * b2 - a2 * b2))
        if r <= tol:
            solutions.append(tuple(float(v) + 0.0 for v in (a1, a2, b1, b2)))
    return solutions


def _as_hom(pattern: HomPattern, a, b) -> SexDiffHom:
    def img(c, line):
        return (c, 0.0) if line == "W" else (0.0, c)

    fl, ml = pattern.female_line, pattern.male_line
    return SexDiffHom((img(a[0], fl), img(a[1], fl), img(b[0], ml), img(b[1], ml)))


def _matches(values, support, tol) -> bool:
    return all((abs(v) > tol) == (i in support) for i, v in enumerate(values))


def dibaric_solutions(p: WolbachiaParams, tol: float = 1e-12) -> list:
    """All onto homomorphisms W(w, d) -> U, female-on-W orientation first."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    P = build_inheritance_table(p).P
    solutions = _solve_scalar_system(P, tol)
    found = []
    for pattern in hom_patterns():
        for a1, a2, b1, b2 in solutions:
            if _matches((a1, a2), pattern.female_support, tol) and _matches((b1, b2), pattern.male_support, tol):
                found.append(_as_hom(pattern, (a1, a2), (b1, b2)))
    return found


def dibaric_solve(p: WolbachiaParams, tol: float = 1e-12) -> Optional[SexDiffHom]:
    found = dibaric_solutions(p, tol)
    return found[0] if found else None


def hom_deviation(t: StructureTensor, phi: SexDiffHom, z, u) -> float:
    from .algebra import multiply

    lhs = phi(multiply(z, u, t))
    rhs = multiply(phi(z), phi(u), SEXDIFF)
    return float(np.max(np.abs(lhs - rhs)))


def verify_hom(algebra: AlgebraLike, phi: SexDiffHom, samples: int = 1000, tol: float = 1e-12,
               seed: int = DEFAULT_SEED) -> bool:
    """Multiplicative on random pairs and on all basis pairs, and onto U."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    t = _tensor(algebra)
    if np.linalg.matrix_rank(phi.matrix) < 2:
        return False
    pairs = [(t.basis(i), t.basis(j)) for i, j in itertools.product(range(t.dim), repeat=2)]
    rng = np.random.default_rng(seed)
    pairs += list(rng.uniform(-1.0, 1.0, size=(samples, 2, t.dim)))
    return max(hom_deviation(t, phi, z, u) for z, u in pairs) <= tol
