"""Finite-dimensional commutative algebras given by structure constants.

An algebra is a dense ``(n, n, n)`` array ``c`` with ``e_i e_j = sum_k c[i, j, k] e_k``.
Elements are plain coefficient vectors of length ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

DEFAULT_SEED = 0xC0FFEE
PROBE_TOL = 1e-12

# Basis order of the Wolbachia algebra.
F1, F2, M1, M2 = 0, 1, 2, 3
BASIS_NAMES = ("f1", "f2", "m1", "m2")


class StructureTensor:
    """Structure constants of a commutative algebra, symmetrized in the first two indices."""

    def __init__(self, c, symmetrize: bool = True):
        c = np.array(c, dtype=float)
        if c.ndim != 3 or not (c.shape[0] == c.shape[1] == c.shape[2]):
            raise ValueError(f"structure tensor must be (n, n, n), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("structure tensor has non-finite entries")
        if symmetrize:
            c = 0.5 * (c + c.transpose(1, 0, 2))
        c.setflags(write=False)
        self._c = c
        self.symmetric = bool(np.array_equal(c, c.transpose(1, 0, 2)))

    @property
    def c(self) -> np.ndarray:
        return self._c

    @property
    def dim(self) -> int:
        return self._c.shape[0]

    def basis(self, i: int) -> np.ndarray:
        e = np.zeros(self.dim)
        e[i] = 1.0
        return e

    def __repr__(self):
        return f"StructureTensor(dim={self.dim})"


def element(*coeffs) -> np.ndarray:
    """``element(1, 0, 0, 1)`` -> f1 + m2."""
    if len(coeffs) == 1 and np.ndim(coeffs[0]) == 1:
        coeffs = coeffs[0]
    return np.asarray(coeffs, dtype=float)


def multiply(a, b, t: StructureTensor) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (t.dim,) or b.shape != (t.dim,):
        raise ValueError(f"elements must have length {t.dim}")
    if not t.symmetric:
        return np.einsum("i,j,ijk->k", a, b, t.c)
    # symmetrized outer product: swapping a and b gives bit-identical results
    ab = np.outer(a, b)
    return np.einsum("ij,ijk->k", 0.5 * (ab + ab.T), t.c)


def square(z, t: StructureTensor) -> np.ndarray:
    return multiply(z, z, t)


def associator(a, b, c, t: StructureTensor):
    """Return ``((ab)c, a(bc))``."""
    return multiply(multiply(a, b, t), c, t), multiply(a, multiply(b, c, t), t)


def check_commutative(t: StructureTensor) -> bool:
    return bool(np.array_equal(t.c, t.c.transpose(1, 0, 2)))


@dataclass(frozen=True)
class PropertyReport:
    name: str
    samples: int
    max_deviation: float
    tol: float
    seed: int
    passed: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "passed", bool(self.max_deviation <= self.tol))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "samples": self.samples,
            "max_deviation": self.max_deviation,
            "tol": self.tol,
            "seed": self.seed,
            "passed": self.passed,
        }


def flexibility_deviation(z, u, t: StructureTensor) -> float:
    """Sup-norm of ``(zu)z - z(uz)``."""
    left = multiply(multiply(z, u, t), z, t)
    right = multiply(z, multiply(u, z, t), t)
    return float(np.max(np.abs(left - right), initial=0.0))


def probe_flexible(t: StructureTensor, samples: int = 1000, tol: float = PROBE_TOL,
                   seed: int = DEFAULT_SEED) -> PropertyReport:
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    rng = np.random.default_rng(seed)
    pairs = rng.uniform(-1.0, 1.0, size=(samples, 2, t.dim))
    worst = max(flexibility_deviation(z, u, t) for z, u in pairs)
    return PropertyReport("flexible", samples, worst, tol, seed)


@dataclass(frozen=True)
class AssociativityWitness:
    triple: tuple
    left: np.ndarray   # (ab)c
    right: np.ndarray  # a(bc)
    deviation: float


def associativity_counterexample(t: StructureTensor, random_samples: int = 1000,
                                 seed: int = DEFAULT_SEED,
                                 threshold: float = 1e-9) -> Optional[AssociativityWitness]:
    """First triple with ``||(ab)c - a(bc)||_inf > threshold``.

    Basis triples are scanned in lexicographic order, then seeded random triples.
    """
    n = t.dim
    candidates = (
        (t.basis(i), t.basis(j), t.basis(k))
        for i in range(n) for j in range(n) for k in range(n)
    )
    rng = np.random.default_rng(seed)
    randoms = (tuple(rng.uniform(-1.0, 1.0, size=(3, n))) for _ in range(random_samples))
    for source in (candidates, randoms):
        for a, b, c in source:
            left, right = associator(a, b, c, t)
            dev = float(np.max(np.abs(left - right)))
            if dev > threshold:
                return AssociativityWitness((a, b, c), left, right, dev)
    return None


def power_associativity_gap(t: StructureTensor, z):
    """Return ``(gap, z^2 z^2, (z^2 z) z)`` with gap in the sup norm."""
    z2 = square(z, t)
    lhs = multiply(z2, z2, t)
    rhs = multiply(multiply(z2, z, t), z, t)
    return float(np.max(np.abs(lhs - rhs))), lhs, rhs


def format_element(z: Sequence[float], names: Sequence[str] = BASIS_NAMES, digits: int = 12) -> str:
    terms = []
    for a, n in zip(z, names):
        a = round(float(a), digits)
        if a != 0:
            terms.append(n if a == 1 else f"{a:g}*{n}")
    return " + ".join(terms) if terms else "0"
