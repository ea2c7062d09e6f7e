import numpy as np
import pytest

from wolbachia_algebra.algebra import StructureTensor
from wolbachia_algebra.characters import (SEXDIFF, SexDiffHom, baric_verdict, dibaric_solutions,
                                          dibaric_solve, hom_patterns, is_character,
                                          newton_character, verify_hom)
from wolbachia_algebra.model import WolbachiaParams

GRID = [i / 10 for i in range(1, 11)]
P = WolbachiaParams
W_, M_ = (1.0, 0.0), (0.0, 1.0)
ZERO = (0.0, 0.0)


def test_zero_form_is_multiplicative_but_not_baric():
    assert is_character(P(0.5, 0.5), np.zeros(4))
    assert not baric_verdict(P(0.5, 0.5), seeds=10).baric


@pytest.mark.parametrize("sigma", [[1, 0, 0, 0], [1, 1, 1, 1], [0.5, 0, 0.5, 0]])
def test_nonzero_forms_are_not_characters(sigma):
    assert not is_character(P(0.5, 0.5), sigma)


def test_is_character_rejects_bad_tol():
    with pytest.raises(ValueError):
        is_character(P(0.5, 0.5), np.zeros(4), tol=0)


@pytest.mark.parametrize("w", GRID[::3])
@pytest.mark.parametrize("d", GRID[::3])
def test_no_nonzero_character(w, d):
    r = baric_verdict(P(w, d), seeds=100)
    assert r.forced_zero
    assert not r.baric
    assert r.to_dict()["nonzero_characters"] == []


def test_baric_search_finds_idempotent_character():
    # one-dimensional algebra e^2 = e has the character sigma(e) = 1
    r = baric_verdict(StructureTensor([[[1.0]]]), seeds=20)
    assert r.baric and not r.forced_zero
    assert r.nonzero_characters == ((1.0,),)


def test_newton_reports_residual():
    sigma, res, ok = newton_character(StructureTensor([[[1.0]]]), [0.7])
    assert ok and res < 1e-12 and sigma[0] == pytest.approx(1.0)


def test_eighteen_patterns():
    pats = hom_patterns()
    assert len(pats) == 18
    assert len({(p.female_line, p.female_support, p.male_support) for p in pats}) == 18


@pytest.mark.parametrize("w", GRID)
@pytest.mark.parametrize("d", GRID)
def test_dibaric_exactly_at_full_ci_and_transmission(w, d):
    phi = dibaric_solve(P(w, d))
    if (w, d) == (1.0, 1.0):
        assert phi is not None
    else:
        assert phi is None


def test_dibaric_map_at_one_one():
    sols = dibaric_solutions(P(1, 1))
    assert [s.images for s in sols] == [(W_, ZERO, M_, ZERO), (M_, ZERO, W_, ZERO)]
    phi = sols[0]
    assert phi.describe() == {"f1": "W", "f2": "0", "m1": "M", "m2": "0"}
    assert not phi([0, 1, 0, 1]).any()
    assert verify_hom(P(1, 1), phi, samples=1000, tol=1e-12)
    assert verify_hom(P(1, 1), sols[1], samples=200)


def test_same_map_fails_off_the_corner():
    phi = SexDiffHom((W_, ZERO, M_, ZERO))
    assert not verify_hom(P(0.9, 0.9), phi, samples=100)


def test_zero_map_is_not_onto():
    assert not verify_hom(P(1, 1), SexDiffHom((ZERO,) * 4), samples=10)


def test_sexdiff_products():
    from wolbachia_algebra.algebra import multiply
    assert multiply([1, 0], [0, 1], SEXDIFF).tolist() == [0.5, 0.5]
    assert not multiply([1, 0], [1, 0], SEXDIFF).any()


def test_dibaric_rejects_bad_tol():
    with pytest.raises(ValueError):
        dibaric_solutions(P(1, 1), tol=0)
