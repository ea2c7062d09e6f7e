"""Acceptance criteria. Each test's first docstring line is the label printed
in the ``acceptance criteria`` section of the pytest summary."""

import subprocess
import sys
import time
from fractions import Fraction as Fr

import numpy as np
import pytest

from oracles import product
from wolbachia_algebra.algebra import associator, multiply, power_associativity_gap
from wolbachia_algebra.characters import baric_verdict, dibaric_solve, verify_hom
from wolbachia_algebra.dynamics import (Extinction, FixedPointKind, Outcome, StateVector,
                                        absolute_nilpotents, apply_V, fixed_point_set, fixed_points,
                                        iterate, iterate_batch, norm1_of_square,
                                        oracle_fixed_points, residual, squares, _algebra)
from wolbachia_algebra.model import (WolbachiaParams, build_algebra, build_inheritance_table,
                                     punnett_cross_check)
from wolbachia_algebra.structure import (build_structure_matrices, commutator, is_evolution_algebra,
                                         numerical_rank, closed_form_products, sorted_spectrum)

pytestmark = pytest.mark.acceptance

P = WolbachiaParams
f1, f2, m1, m2 = np.eye(4)
GRID10 = [i / 10 for i in range(1, 11)]
GRID20 = [i / 20 for i in range(1, 21)]


def test_01_multiplication_fidelity():
    """01 multiplication fidelity: 16 basis products on {0.25,..,1}^2 to 1e-14, < 1 s"""
    start = time.perf_counter()
    vals = [0.25, 0.5, 0.75, 1.0]
    worst = 0.0
    for w in vals:
        for d in vals:
            p = P(w, d)
            t = build_algebra(p)
            assert punnett_cross_check(p)
            for i in range(4):
                for j in range(4):
                    ref = product(tuple(Fr(int(k == i)) for k in range(4)),
                                  tuple(Fr(int(k == j)) for k in range(4)), Fr(w), Fr(d))
                    got = multiply(np.eye(4)[i], np.eye(4)[j], t)
                    worst = max(worst, float(np.max(np.abs(got - [float(x) for x in ref]))))
    assert worst <= 1e-14
    assert time.perf_counter() - start < 1.0


def test_02_mass_loss():
    """02 mass loss: cross sums 1-w and 1-w+dw to 1e-14 on a 20x20 grid"""
    for w in GRID20:
        for d in GRID20:
            T = build_inheritance_table(P(w, d))
            assert abs(T.mass(1, 2) - (1 - w)) <= 1e-14
            assert abs(T.mass(2, 2) - (1 - w + d * w)) <= 1e-14


def test_03_non_associativity():
    """03 non-associativity: (f1 m1) m2 = 0.125(f1+m1), f1(m1 m2) = 0 at w=0.5"""
    for d in GRID10:
        left, right = associator(f1, m1, m2, build_algebra(P(0.5, d)))
        assert left.tolist() == [0.125, 0.0, 0.125, 0.0]
        assert right.tolist() == [0.0, 0.0, 0.0, 0.0]
        assert float(np.max(np.abs(left - right))) == 0.125


def test_04_power_associativity_failure():
    """04 power-associativity failure: gap 0.03125 at w=0.5, z=f1+m2, to 1e-12"""
    for d in GRID10:
        gap, _, _ = power_associativity_gap(build_algebra(P(0.5, d)), f1 + m2)
        assert abs(gap - 0.03125) <= 1e-12


def test_05_not_an_evolution_algebra():
    """05 not an evolution algebra: closed-form products, ||[M1,M2]|| > 1e-6, rank 2, eig(M2)"""
    for w in GRID20:
        for d in GRID20:
            p = P(w, d)
            pair = build_structure_matrices(p)
            m1m2, m2m1 = closed_form_products(p)
            assert np.max(np.abs(pair.M1 @ pair.M2 - m1m2)) <= 1e-12
            assert np.max(np.abs(pair.M2 @ pair.M1 - m2m1)) <= 1e-12
            assert abs((pair.M1 @ pair.M2)[0, 0] - (-d * (w - 1) / 4)) <= 1e-12
            assert np.max(np.abs(commutator(pair))) > 1e-6
            v = is_evolution_algebra(p)
            assert v.m1_diagonalizable and v.m2_diagonalizable and not v.is_evolution_algebra
            for M in (pair.M1, pair.M2):
                assert numerical_rank(M) == 2 and 4 - numerical_rank(M) == 2
            assert np.max(np.abs(sorted_spectrum(pair.M2) - [-d / 2, 0, 0, d / 2])) <= 1e-10


def test_06_baric_and_dibaric():
    """06 baric/dibaric: no nonzero character on the grid; dibaric exactly at (1,1), verified"""
    for w in GRID10:
        for d in GRID10:
            p = P(w, d)
            assert not baric_verdict(p, seeds=100).baric
            phi = dibaric_solve(p)
            if (w, d) == (1.0, 1.0):
                assert phi is not None
                assert verify_hom(p, phi, samples=1000, tol=1e-12)
            else:
                assert phi is None


def test_07_fixed_point_examples():
    """07 fixed points: (3/4,3/4) -> 2/3; (1,2/3) -> {1/2,1}; (1,1/2) -> {1}; d=1 -> {0,1}"""
    cases = [
        (P(0.75, 0.75), [0.0, 2 / 3]),
        (P(1.0, 2 / 3), [0.0, 0.5, 1.0]),
        (P(1.0, 0.5), [0.0, 1.0]),
    ] + [(P(w, 1.0), [0.0, 1.0]) for w in GRID10]
    for p, expected in cases:
        fps = fixed_points(p)
        got = [fp.x2 for fp in fps]
        assert len(got) == len(expected)
        assert np.max(np.abs(np.array(got) - expected)) <= 1e-9
        for fp in fps:
            assert residual(p, fp.state) <= 1e-9


def test_08_oracle_equivalence():
    """08 oracle equivalence: closed form vs grid oracle within 1e-6 on a 10x10 grid, < 10 s"""
    start = time.perf_counter()
    for w in GRID10:
        for d in GRID10:
            p = P(w, d)
            closed = fixed_point_set(p).x2_values
            oracle = [s.x2 for s in oracle_fixed_points(p, grid_n=10_000)]
            assert len(closed) == len(oracle), (w, d, closed, oracle)
            assert np.max(np.abs(np.array(closed) - oracle)) <= 1e-6
    assert fixed_point_set(P(0.5, 0.5)).x2_values == [0.0]
    assert [s.x2 for s in oracle_fixed_points(P(0.5, 0.5))] == [0.0]
    assert time.perf_counter() - start < 10.0


def test_09_interior_norm_identity():
    """09 interior norm identity: surviving mass = d to 1e-10 at every interior fixed point"""
    seen = 0
    for w in GRID10:
        for d in GRID10:
            p = P(w, d)
            for fp in fixed_points(p):
                if fp.kind is FixedPointKind.INTERIOR:
                    seen += 1
                    assert abs(norm1_of_square(p, fp.state) - d) <= 1e-10
    assert seen > 0


def test_10_nilpotent_dichotomy():
    """10 nilpotent dichotomy: w=1 gives (f1+m2)^2 = 0 and extinction; w<1 keeps mass >= 1-w"""
    for d in GRID10:
        p = P(1.0, d)
        sq = squares(_algebra(p).c, (f1 + m2)[None, :])[0]
        assert np.sum(np.abs(sq)) == 0.0
        with pytest.raises(Extinction):
            apply_V(p, StateVector(1, 0, 0, 1))
    for w in (0.5, 0.9):
        for d in GRID10:
            r = absolute_nilpotents(P(w, d))
            assert r.grid_min_mass >= 1 - w - 1e-12 > 0


def test_11_dynamics_sanity():
    """11 dynamics: 100 random starts at (3/4,3/4) and (1,2/3) settle within 1e5 steps at tol 1e-10"""
    rng = np.random.default_rng(20240611)
    failures = []
    for p in (P(0.75, 0.75), P(1.0, 2 / 3)):
        xy = rng.uniform(0.0, 1.0, size=(100, 2))
        starts = [StateVector.infected(x, y) for x, y in xy]
        batch = iterate_batch(p, starts, max_steps=100_000, tol=1e-10)
        targets = np.array(fixed_point_set(p).x2_values)
        for i, outcome in enumerate(batch.outcomes):
            if outcome is Outcome.MAX_STEPS:
                failures.append((p, "max_steps", tuple(xy[i])))
            elif outcome is Outcome.CONVERGED:
                dist = np.min(np.abs(batch.final[i][1] - targets))
                dist = max(dist, np.min(np.abs(batch.final[i][3] - targets)))
                if dist > 1e-6:
                    failures.append((p, "far", tuple(xy[i]), dist))
        # the batch driver is the vectorized form of iterate(); spot-check one start directly
        rec = iterate(p, starts[0], max_steps=100_000, tol=1e-10, record=False)
        assert rec.outcome is batch.outcomes[0]
    assert not failures, f"{len(failures)} starts failed, first: {failures[0]}"


def test_12_sweep_determinism(tmp_path):
    """12 determinism: two sweep runs with identical config give byte-identical CSV"""
    outs = []
    for i in range(2):
        path = tmp_path / f"sweep{i}.csv"
        proc = subprocess.run([sys.executable, "-m", "wolbachia_algebra.cli", "sweep", "--w-grid", "10",
                               "--d-grid", "10", "--out", str(path)], capture_output=True, check=False)
        assert proc.returncode == 0, proc.stderr
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] and len(outs[0]) > 0
