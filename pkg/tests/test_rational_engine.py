import random
from fractions import Fraction as F

import pytest

from complexhyper.rational_engine import (
    RATIONAL_IDS,
    RationalInstance,
    VanishingDenominator,
    eval_middle,
    eval_right,
    finite_support_check,
    sample_rational_instance,
    verify_exact,
)


def test_cn_ex1_spot_value():
    inst = RationalInstance("RAT_CN_EX1", 1, (1, 2, 3, 4))
    assert eval_right(inst) == F(-1, 1260)
    assert eval_middle(inst) == F(-1, 1260)


def test_cn_ex1_residue_terms_by_hand():
    # four residue terms of the n=1 middle expression at a=(1,2,3,4)
    terms = [F(1, 360), F(-1, 90), F(3, 280), F(-1, 315)]
    assert sum(terms) == F(-1, 1260)
    # the right-hand side: -(1+2+3+4)/(3*4*5*5*6*7)
    assert F(-10, 3 * 4 * 5 * 5 * 6 * 7) == F(-1, 1260)


def test_an_ex2_rank_one_equals_cn_ex1():
    a, b = (F(3, 7), F(-5, 2)), (F(11, 3), F(1, 9))
    an = RationalInstance("RAT_AN_EX2", 1, a, b)
    cn = RationalInstance("RAT_CN_EX1", 1, a + b)
    assert eval_middle(an) == eval_middle(cn)
    assert eval_right(an) == eval_right(cn)


def test_an_ex1_rank_one_equals_cn_ex1():
    a, b = (F(3, 7),), (F(11, 3), F(1, 9), F(-4, 5))
    an = RationalInstance("RAT_AN_EX1", 1, a, b)
    cn = RationalInstance("RAT_CN_EX1", 1, a + b)
    assert eval_middle(an) == eval_middle(cn)
    assert eval_right(an) == eval_right(cn)


def test_an_ex3_rank_one_equals_cn_ex2():
    # at n = 1 the five parameters a1, a2, b1, b2, b3 of the third A_n example
    # reproduce the second C_n example with parameters (a1, a2, b1, b2, b3)
    a = (F(3, 7), F(-5, 2))
    b = (F(11, 3), F(1, 9), F(-4, 5))
    an = RationalInstance("RAT_AN_EX3", 1, a, b)
    cn = RationalInstance("RAT_CN_EX2", 1, a + b)
    assert eval_right(an) == eval_right(cn)
    assert eval_middle(an) == eval_middle(cn)


@pytest.mark.parametrize("identity", RATIONAL_IDS)
def test_permutation_invariance(identity):
    rng = random.Random(4)
    inst, _ = sample_rational_instance(identity, 2, rng)
    shuffled_a = list(inst.a)
    shuffled_b = list(inst.b)
    rng.shuffle(shuffled_a)
    rng.shuffle(shuffled_b)
    other = RationalInstance(identity, 2, tuple(shuffled_a), tuple(shuffled_b))
    assert eval_middle(other) == eval_middle(inst)


@pytest.mark.parametrize("identity,n", [("RAT_CN_EX1", 2), ("RAT_AN_EX1", 1)])
def test_verify_exact_examples(identity, n):
    assert verify_exact(identity, n, 100, seed=5).passed


def test_vanishing_denominator_is_an_error():
    inst = RationalInstance("RAT_CN_EX1", 1, (1, 1, 3, 4))
    with pytest.raises(VanishingDenominator, match="a2\\^2-a1\\^2|a1\\^2-a2\\^2"):
        eval_middle(inst)


def test_counterexample_reported(monkeypatch):
    import complexhyper.rational_engine as engine

    monkeypatch.setattr(engine, "eval_right", lambda inst: F(0))
    report = engine.verify_exact("RAT_CN_EX1", 1, 3, seed=1)
    assert not report.passed
    assert report.counterexample["id"] == "RAT_CN_EX1"
    assert report.to_json()["pass"] is False
    assert set(report.to_json()) == {"id", "n", "trials", "pass", "counterexample"}


def test_passing_report_omits_counterexample():
    assert set(verify_exact("RAT_CN_EX1", 1, 3).to_json()) == {"id", "n", "trials", "pass"}


def test_homogeneity_cn_ex1():
    n = 2
    inst = RationalInstance("RAT_CN_EX1", n, (F(1, 2), F(2, 3), F(-7, 5), F(9, 4), F(5, 11), F(13, 6)))
    scaled = RationalInstance("RAT_CN_EX1", n, tuple(3 * v for v in inst.a))
    degree = 1 - (2 * n + 2) * (2 * n + 1) // 2
    factor = F(3) ** degree
    assert eval_right(scaled) == factor * eval_right(inst)
    assert eval_middle(scaled) == factor * eval_middle(inst)


def _ratio_error(small, large):
    return abs(float(large / small) - 1)


def test_cn_ex2_reduces_to_cn_ex1():
    a = (F(1, 2), F(2, 3), F(-7, 5), F(9, 4))
    small = eval_right(RationalInstance("RAT_CN_EX1", 1, a))
    for big in (10**6, 10**12):
        err = _ratio_error(small, eval_right(RationalInstance("RAT_CN_EX2", 1, a + (F(big),))))
        assert err < 50 / big


def test_an_ex3_reduces_to_an_ex1_and_an_ex2():
    n = 2
    a = (F(1, 2), F(2, 3))
    b = (F(-7, 5), F(9, 4), F(5, 11), F(13, 6))
    ex1 = eval_right(RationalInstance("RAT_AN_EX1", n, a, b))
    ex2 = eval_right(RationalInstance("RAT_AN_EX2", n, a + (F(3, 8),), b[:3]))
    for big in (10**6, 10**12):
        third_a = eval_right(RationalInstance("RAT_AN_EX3", n, a + (F(big),), b))
        assert _ratio_error(ex1, third_a) < 100 / big
        third_b = eval_right(RationalInstance("RAT_AN_EX3", n, a + (F(3, 8),), b[:3] + (F(big),)))
        assert _ratio_error(ex2, third_b) < 100 / big


@pytest.mark.parametrize(
    "identity,a,b",
    [
        ("RAT_CN_EX1", (1, 2, 3, 4), ()),
        ("RAT_CN_EX2", (1, 2, 3, 4, 5), ()),
        ("RAT_AN_EX1", (1,), (2, 3, 4)),
        ("RAT_AN_EX2", (1, 2), (3, 4)),
        ("RAT_AN_EX3", (1, 2), (3, 4, 5)),
    ],
)
def test_closed_forms_match_integrals(identity, a, b):
    report = finite_support_check(RationalInstance(identity, 1, a, b))
    assert report.passed, report.to_json()
    assert report.rel_err <= 1e-6
    # only the m = 0 term survives
    assert report.off_centre <= 1e-12
