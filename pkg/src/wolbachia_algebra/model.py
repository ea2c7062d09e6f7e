"""The algebra W(w, d) of a bisexual population carrying one Wolbachia strain.

Basis order is (f1, f2, m1, m2); type 1 is uninfected, type 2 infected.
Inheritance coefficients are indexed mother type ``i``, father type ``k``,
offspring type ``j`` and are shared by female and male offspring.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .algebra import F1, F2, M1, M2, StructureTensor


class ParameterDomainError(ValueError):
    """Raised when w or d falls outside (0, 1]."""


@dataclass(frozen=True)
class WolbachiaParams:
    w: float  # cytoplasmic incompatibility (paternal affection) rate
    d: float  # maternal transmission rate

    def __post_init__(self):
        for name in ("w", "d"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ParameterDomainError(f"{name} must be a number, got {value!r}")
            if not math.isfinite(value) or not 0.0 < value <= 1.0:
                raise ParameterDomainError(f"{name}={value!r} is outside the parameter domain (0, 1]")
            object.__setattr__(self, name, float(value))

    @classmethod
    def from_json(cls, path) -> "WolbachiaParams":
        with open(Path(path), encoding="utf-8") as fh:
            cfg = json.load(fh)
        try:
            return cls(cfg["w"], cfg["d"])
        except KeyError as err:
            raise ParameterDomainError(f"config is missing field {err.args[0]!r}") from None


@dataclass(frozen=True)
class InheritanceTable:
    """``P[i-1, k-1, j-1]``: probability a mother of type i and father of type k
    produce an offspring of type j (per sex)."""

    P: np.ndarray

    def __call__(self, i: int, k: int, j: int) -> float:
        return float(self.P[i - 1, k - 1, j - 1])

    def mass(self, i: int, k: int) -> float:
        """Surviving offspring mass of the cross i x k."""
        return float(self.P[i - 1, k - 1].sum())


def build_inheritance_table(p: WolbachiaParams) -> InheritanceTable:
    w, d = p.w, p.d
    P = np.zeros((2, 2, 2))
    P[0, 0] = (1.0, 0.0)
    P[0, 1] = (1.0 - w, 0.0)
    P[1, 0] = (1.0 - d, d)
    P[1, 1] = ((1.0 - d) * (1.0 - w), d)
    P.setflags(write=False)
    return InheritanceTable(P)


def _tensor_from_table(P: np.ndarray) -> StructureTensor:
    females, males = (F1, F2), (M1, M2)
    c = np.zeros((4, 4, 4))
    for i, f in enumerate(females):
        for k, m in enumerate(males):
            out = np.zeros(4)
            out[[F1, F2]] = 0.5 * P[i, k]
            out[[M1, M2]] = 0.5 * P[i, k]
            c[f, m] = out
            c[m, f] = out
    return StructureTensor(c)


def build_algebra(p: WolbachiaParams) -> StructureTensor:
    """Structure tensor of W(w, d); female-female and male-male products vanish."""
    return _tensor_from_table(build_inheritance_table(p).P)


# Gametes are (chromosome, infected) pairs.
def _egg_distribution(mother_type: int, d: float) -> dict:
    if mother_type == 1:
        return {("X", False): 1.0}
    return {("X", True): d, ("X", False): 1.0 - d}


def _sperm_distribution(father_type: int, w: float) -> dict:
    if father_type == 1:
        return {("X", False): 0.5, ("Y", False): 0.5}
    return {
        ("X", True): w / 2, ("Y", True): w / 2,
        ("X", False): (1.0 - w) / 2, ("Y", False): (1.0 - w) / 2,
    }


def punnett_zygotes(p: WolbachiaParams, mother_type: int, father_type: int) -> dict:
    """Zygote frequencies of one cross, keyed by basis name; dead zygotes are dropped.

    An uninfected egg fertilized by an infected sperm dies. Infection status of
    the offspring follows the egg.
    """
    out = defaultdict(float)
    for (_, egg_inf), pe in _egg_distribution(mother_type, p.d).items():
        for (chrom, sperm_inf), ps in _sperm_distribution(father_type, p.w).items():
            if sperm_inf and not egg_inf:
                continue
            sex = "f" if chrom == "X" else "m"
            out[f"{sex}{2 if egg_inf else 1}"] += pe * ps
    return dict(out)


def punnett_inheritance_table(p: WolbachiaParams) -> np.ndarray:
    """Per-sex inheritance coefficients derived from gametes (zygote frequencies doubled)."""
    P = np.zeros((2, 2, 2))
    for i in (1, 2):
        for k in (1, 2):
            z = punnett_zygotes(p, i, k)
            fem = np.array([z.get("f1", 0.0), z.get("f2", 0.0)])
            mal = np.array([z.get("m1", 0.0), z.get("m2", 0.0)])
            if not np.allclose(fem, mal, rtol=0, atol=1e-15):
                raise AssertionError(f"female and male offspring differ for cross {i}x{k}")
            P[i - 1, k - 1] = 2.0 * fem
    return P


def punnett_cross_check(p: WolbachiaParams, tol: float = 1e-14) -> bool:
    derived = punnett_inheritance_table(p)
    if np.max(np.abs(derived - build_inheritance_table(p).P)) > tol:
        return False
    # f_i m_k = (1/2) * (doubled zygote frequencies) = the zygote frequencies themselves
    c = build_algebra(p).c
    for i, f in ((1, F1), (2, F2)):
        for k, m in ((1, M1), (2, M2)):
            z = punnett_zygotes(p, i, k)
            expected = np.array([z.get(name, 0.0) for name in ("f1", "f2", "m1", "m2")])
            if np.max(np.abs(c[f, m] - expected)) > tol:
                return False
    return True
