"""Structure matrices of W(w, d) and the evolution-algebra test.

A genetic algebra is an evolution algebra exactly when its structure matrices
are simultaneously diagonalizable, i.e. each is diagonalizable and they commute.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import F1, F2, M1, M2, multiply, square
from .model import WolbachiaParams, build_algebra, build_inheritance_table

DIAG_TOL = 1e-9
COMMUTE_TOL = 1e-10


class NumericalAnalysisError(RuntimeError):
    """An eigen-decomposition or solver failed; never treated as a pass."""


@dataclass(frozen=True)
class StructureMatrixPair:
    M1: np.ndarray
    M2: np.ndarray


def build_structure_matrices(p: WolbachiaParams) -> StructureMatrixPair:
    """Block form ``[[0, B_k], [B_k, 0]]`` with ``B_k[i, j] = P_{ij,k} / 2``.

    Rows and columns follow (f1, f2, m1, m2). The lower-left block repeats the
    upper-right block (row index read as first parent), so M2 is not symmetric.
    """
    P = build_inheritance_table(p).P
    mats = []
    for k in range(2):
        B = 0.5 * P[:, :, k]
        M = np.zeros((4, 4))
        M[:2, 2:] = B
        M[2:, :2] = B
        mats.append(M)
    return StructureMatrixPair(*mats)


def commutator(pair: StructureMatrixPair) -> np.ndarray:
    return pair.M1 @ pair.M2 - pair.M2 @ pair.M1


def _eigvals(M: np.ndarray) -> np.ndarray:
    try:
        vals = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as err:
        raise NumericalAnalysisError(f"eigenvalue computation failed: {err}") from err
    if not np.all(np.isfinite(vals)):
        raise NumericalAnalysisError("non-finite eigenvalues")
    return vals


def _clusters(vals: np.ndarray, tol: float) -> list:
    """Group eigenvalues closer than ``tol``; returns (representative, multiplicity)."""
    groups = []
    for v in sorted(vals, key=lambda z: (z.real, z.imag)):
        for g in groups:
            if abs(v - g[0]) <= tol:
                g[1] += 1
                break
        else:
            groups.append([v, 1])
    return [(g[0], g[1]) for g in groups]


def numerical_rank(M: np.ndarray, tol: float = DIAG_TOL) -> int:
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > tol))


def is_diagonalizable(M: np.ndarray, tol: float = DIAG_TOL) -> bool:
    """Geometric multiplicity equals algebraic multiplicity for every eigenvalue."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    for lam, alg in _clusters(_eigvals(M), tol):
        shifted = M.astype(complex) - lam * np.eye(n)
        if n - numerical_rank(shifted, tol) != alg:
            return False
    return True


def sorted_spectrum(M: np.ndarray) -> np.ndarray:
    vals = _eigvals(M)
    if np.max(np.abs(vals.imag), initial=0.0) > DIAG_TOL:
        raise NumericalAnalysisError("unexpected complex spectrum")
    return np.sort(vals.real)


@dataclass(frozen=True)
class EvolutionAlgebraVerdict:
    commutator_norm: float
    m1_diagonalizable: bool
    m2_diagonalizable: bool
    tol: float
    eig_m1: tuple = ()
    eig_m2: tuple = ()

    @property
    def is_evolution_algebra(self) -> bool:
        return self.m1_diagonalizable and self.m2_diagonalizable and self.commutator_norm <= self.tol

    def to_dict(self, p: WolbachiaParams | None = None) -> dict:
        out = {} if p is None else {"w": p.w, "d": p.d}
        out.update(
            commutator_norm=self.commutator_norm,
            m1_diagonalizable=self.m1_diagonalizable,
            m2_diagonalizable=self.m2_diagonalizable,
            is_evolution_algebra=self.is_evolution_algebra,
            eig_m1=list(self.eig_m1),
            eig_m2=list(self.eig_m2),
        )
        return out


def evolution_verdict(pair: StructureMatrixPair, tol: float = COMMUTE_TOL) -> EvolutionAlgebraVerdict:
    if tol <= 0:
        raise ValueError("tol must be positive")
    norm = float(np.max(np.abs(commutator(pair))))
    return EvolutionAlgebraVerdict(
        commutator_norm=norm,
        m1_diagonalizable=is_diagonalizable(pair.M1),
        m2_diagonalizable=is_diagonalizable(pair.M2),
        tol=tol,
        eig_m1=tuple(float(v) for v in sorted_spectrum(pair.M1)),
        eig_m2=tuple(float(v) for v in sorted_spectrum(pair.M2)),
    )


def is_evolution_algebra(p: WolbachiaParams, tol: float = COMMUTE_TOL) -> EvolutionAlgebraVerdict:
    return evolution_verdict(build_structure_matrices(p), tol)


def closed_form_products(p: WolbachiaParams):
    """Hand-expanded ``M1 M2`` and ``M2 M1``, used as a reference for the matrix products."""
    w, d = p.w, p.d
    a = -d * (w - 1) / 4
    b = d * (d - 1) * (w - 1) / 4
    c = -d * (d - 2) / 4
    e = d * (d - 2) * (w - 1) / 4
    m1m2 = np.array([[a, a, 0, 0], [b, b, 0, 0], [0, 0, a, a], [0, 0, b, b]])
    m2m1 = np.array([[0, 0, 0, 0], [c, e, 0, 0], [0, 0, 0, 0], [0, 0, c, e]])
    return m1m2, m2m1


@dataclass(frozen=True)
class SubalgebraReport:
    closed: bool             # span{f1, m1} is closed under the product
    f1m1: np.ndarray
    escape_product: np.ndarray  # m1 * f2
    escape_coefficient: float   # its f2-coefficient
    is_ideal: bool
    square_generator: np.ndarray  # (f1 + m1)^2
    square_is_line: bool          # U^2 = span{f1 + m1}

    def to_dict(self) -> dict:
        return {
            "closed": self.closed,
            "f1m1": self.f1m1.tolist(),
            "m1f2": self.escape_product.tolist(),
            "m1f2_f2_coefficient": self.escape_coefficient,
            "is_ideal": self.is_ideal,
            "square_is_line": self.square_is_line,
        }


def sexdiff_subalgebra_report(p: WolbachiaParams, tol: float = 1e-14) -> SubalgebraReport:
    t = build_algebra(p)
    f1, f2, m1 = t.basis(F1), t.basis(F2), t.basis(M1)
    outside = [F2, M2]

    def in_u(z):
        return bool(np.all(np.abs(z[outside]) <= tol))

    f1m1 = multiply(f1, m1, t)
    products = [square(f1, t), square(m1, t), f1m1]
    closed = all(in_u(z) for z in products)
    matches_u = (
        np.max(np.abs(products[0])) <= tol
        and np.max(np.abs(products[1])) <= tol
        and np.allclose(f1m1, 0.5 * (f1 + m1), rtol=0, atol=tol)
    )
    escape = multiply(m1, f2, t)
    # U * W: products of f1, m1 with every basis element
    ideal = all(in_u(multiply(u, t.basis(j), t)) for u in (f1, m1) for j in range(4))
    gen = square(f1 + m1, t)
    return SubalgebraReport(
        closed=bool(closed and matches_u),
        f1m1=f1m1,
        escape_product=escape,
        escape_coefficient=float(escape[F2]),
        is_ideal=ideal,
        square_generator=gen,
        square_is_line=bool(np.allclose(gen, f1 + m1, rtol=0, atol=tol)),
    )
