import math
from dataclasses import replace

import mpmath
import numpy as np
import pytest

from complexhyper.identity_registry import build_lhs, sample_params
from complexhyper.mb_engine import (
    ConditionallyConvergent,
    QuadConfig,
    bilateral_evaluate,
    binomial_check,
    bracket_power,
    cplane_integrate,
    integrate_1d,
    integrate_nd,
    oscillatory_tail,
    tail_cutoff,
    verify,
)


def test_quad_config_validation():
    with pytest.raises(ValueError):
        QuadConfig(tol_rel=0)
    with pytest.raises(ValueError):
        QuadConfig(x_max=5)
    with pytest.raises(ValueError):
        QuadConfig(tail_mode="nope")


def test_integrate_1d_rational_kernel():
    f = lambda x: x**2 / ((1 + x**2) * (4 + x**2) * (9 + x**2) * (16 + x**2))
    expected = float(mpmath.quad(lambda t: t**2 / ((1 + t**2) * (4 + t**2) * (9 + t**2) * (16 + t**2)), [-mpmath.inf, 0, mpmath.inf]))
    r = integrate_1d(f, 200.0, 1e-12, exponent=-6)
    assert abs(r.value - expected) <= 1e-11 * expected
    assert abs(r.value - expected) <= 3 * r.error + 1e-16


def test_integrate_1d_gaussian_and_odd():
    r = integrate_1d(lambda x: np.exp(-(x**2)), 40.0, 1e-12, exponent=-8)
    assert abs(r.value - math.sqrt(math.pi)) <= 1e-10
    odd = integrate_1d(lambda x: x / (1 + x**4), 40.0, 1e-10, exponent=-3)
    assert odd.value == 0


@pytest.mark.parametrize("s", [1.3 - 0.4j, 2.0 + 1.5j])
def test_integrate_1d_complex_power(s):
    # int_R (1 + x^2)^-s dx = sqrt(pi) Gamma(s - 1/2) / Gamma(s)
    expected = complex(mpmath.sqrt(mpmath.pi) * mpmath.gamma(s - 0.5) / mpmath.gamma(s))
    r = integrate_1d(lambda x: (1 + x**2) ** -s, 200.0, 1e-10, exponent=-2 * s)
    assert abs(r.value - expected) <= 1e-10 * abs(expected)


def test_integrate_1d_error_estimate_covers_short_window():
    # a short window leaves a visible tail-fit error, which the estimate must cover
    for X in (40.0, 100.0):
        r = integrate_1d(lambda x: (1 + x**2) ** -2, X, 1e-12, exponent=-4)
        assert abs(r.value - math.pi / 2) <= r.error


def test_integrate_1d_oscillatory_tail():
    # int_R e^{i w x} / (1 + x^2) dx = pi e^{-|w|}
    w = 0.7
    tail = oscillatory_tail(w, -2)
    r = integrate_1d(lambda x: np.exp(1j * w * x) / (1 + x**2), 60.0, 1e-10, exponent=-2, tail_mode=tail)
    assert abs(r.value - math.pi * math.exp(-w)) < 1e-8


def test_integrate_nd_separable_product():
    f = lambda p: np.prod((1 + p**2) ** -2, axis=1)
    r = integrate_nd(f, 2, QuadConfig(tol_rel=1e-9, x_max=200.0), exponent=-4)
    one = integrate_1d(lambda x: (1 + x**2) ** -2, 200.0, 1e-10, exponent=-4)
    assert abs(r.value - one.value**2) <= 2 * (r.error + 2 * abs(one.value) * one.error) + 1e-12
    assert r.value == pytest.approx((math.pi / 2) ** 2, rel=1e-8)


def test_integrate_nd_argument_order():
    f = lambda p: (1 + p[:, 0] ** 2) ** -2 * (4 + (p[:, 1] - 0.3 * p[:, 0]) ** 2) ** -1.5
    g = lambda p: f(p[:, ::-1])
    cfg = QuadConfig(tol_rel=1e-8, x_max=200.0)
    a, b = integrate_nd(f, 2, cfg, exponent=-3), integrate_nd(g, 2, cfg, exponent=-3)
    assert abs(a.value - b.value) <= a.error + b.error


def test_bilateral_refuses_slow_decay():
    lhs = build_lhs(sample_params("CN_BETA", 1, seed=0))
    slow = replace(lhs, exponent=-2 + 0j)
    with pytest.raises(ConditionallyConvergent):
        bilateral_evaluate(slow)


def test_shell_contributions_decrease():
    for seed in range(3):
        lhs = build_lhs(sample_params("CN_BETA", 1, seed=seed))
        sizes = []
        for K in range(3, 12):
            terms = [integrate_1d(lambda x, m=m: lhs.func((m,), x[:, None]), 200.0, 1e-10, exponent=-6).value
                     for m in (K, -K)]
            sizes.append(abs(sum(terms)))
        assert all(b < a for a, b in zip(sizes, sizes[1:]))


@pytest.mark.slow
def test_rank_two_term_against_monte_carlo():
    # importance sampling with a product of Cauchy densities of width 2
    lhs = build_lhs(sample_params("CN_BETA", 2, seed=0))
    quad = integrate_nd(lambda p: lhs.func((0, 0), p), 2, QuadConfig(tol_rel=1e-6), exponent=-6)
    rng = np.random.Generator(np.random.PCG64(2024))
    width, total, square, count = 2.0, 0j, 0.0, 0
    for _ in range(20):
        pts = width * np.tan(np.pi * (rng.random((500_000, 2)) - 0.5))
        density = np.prod(1 / (np.pi * width * (1 + (pts / width) ** 2)), axis=1)
        w = lhs.func((0, 0), pts) / density
        total += w.sum()
        square += float(np.sum(np.abs(w) ** 2))
        count += w.size
    mean = total / count
    sigma = math.sqrt(max(square / count - abs(mean) ** 2, 0.0) / count)
    assert abs(quad.value - mean) <= 3 * sigma + quad.error


def test_tail_cutoff_never_below_window():
    assert tail_cutoff(1.0, -6, 40.0) >= 40.0
    assert tail_cutoff(5.0, -2, 40.0) > tail_cutoff(5.0, -6, 40.0)


def test_bracket_power():
    z = 0.6 - 1.3j
    assert bracket_power(z, 1, 0) == pytest.approx(z, rel=1e-14)
    assert bracket_power(z, 0, 1) == pytest.approx(z.conjugate(), rel=1e-14)
    assert bracket_power(z, 1, 1) == pytest.approx(abs(z) ** 2, rel=1e-14)
    with pytest.raises(ValueError):
        bracket_power(z, 0.5, 0)


@pytest.mark.parametrize(
    "x,y,a,m",
    [
        (1.0, 0.3, 0.5 - 0.4j, 0),
        (1 + 0.5j, -0.4 + 0.2j, -0.3 - 0.6j, 1),
        (-1.0, 0.25 - 0.25j, -0.8 - 0.7j, -1),
        # slow decay with far terms integrated to |x| ~ 500, where the tail oscillates quickly
        (0.7j, 1.3, 1.1 - 0.5j, 3),
    ],
)
def test_binomial_check(x, y, a, m):
    report = binomial_check(x, y, a, m, QuadConfig(tol_rel=1e-6))
    assert report.passed
    assert report.rel_err <= 1e-6
    assert report.to_json()["m"] == m


def test_binomial_check_rejects_bad_input():
    with pytest.raises(ValueError):
        binomial_check(1.0, 0.3, 0.5 + 0.2j, 0)
    with pytest.raises(ConditionallyConvergent):
        binomial_check(1.0, 1j, 0.5 - 0.4j, 0)


def test_cplane_beta():
    report = cplane_integrate("CPLANE_BETA", (0, 1), ((0.4 + 0.1j, 0.4 + 0.1j), (0.45 - 0.2j, 0.45 - 0.2j)),
                              QuadConfig(tol_rel=1e-4))
    assert report.passed and report.rel_err < 1e-6


def test_cplane_beta_unequal_exponents():
    report = cplane_integrate("CPLANE_BETA", (0.3 - 0.2j, -1.1 + 0.8j),
                              ((0.9 + 0.3j, -0.1 + 0.3j), (0.25 - 0.1j, 0.25 - 0.1j)), QuadConfig(tol_rel=1e-4))
    assert report.passed


def test_cplane_beta_integer_gap():
    report = cplane_integrate("CPLANE_BETA", (1j, 2.0), ((0.3 + 0.2j, 0.3 + 0.2j), (0.95 + 0.1j, -0.05 + 0.1j)),
                              QuadConfig(tol_rel=1e-4))
    assert report.passed


def test_cplane_star_triangle():
    report = cplane_integrate("CPLANE_STR", (0, 1, 0.4 + 0.9j),
                              ((0.35 + 0.1j, 0.35 + 0.1j), (0.3 - 0.05j, 0.3 - 0.05j)), QuadConfig(tol_rel=1e-4))
    assert report.passed


def test_cplane_validator():
    with pytest.raises(ValueError, match="Re"):
        cplane_integrate("CPLANE_BETA", (0, 1), ((-0.2, -0.2), (0.5, 0.5)))
    with pytest.raises(ValueError, match="distinct"):
        cplane_integrate("CPLANE_BETA", (1, 1), ((0.4, 0.4), (0.4, 0.4)))
    with pytest.raises(ValueError, match="kernel"):
        cplane_integrate("CPLANE_X", (0, 1), ((0.4, 0.4), (0.4, 0.4)))
    with pytest.raises(ValueError, match="gamma"):
        cplane_integrate("CPLANE_BETA", (0, 1), ((0.6 + 0.1j, 0.6 + 0.1j), (0.7, 0.7)))


def test_verify_cn_beta_rank_one():
    report = verify(sample_params("CN_BETA", 1, seed=11), QuadConfig(tol_rel=1e-6))
    assert report.passed, report.diagnostics
    assert report.lhs_err <= 3e-6 * abs(report.rhs)


def test_determinism_and_parallel_equality():
    inst = sample_params("AN_BETA", 1, seed=4)
    cfg = QuadConfig(tol_rel=1e-5)
    a, b = verify(inst, cfg), verify(inst, cfg)
    c = verify(inst, replace(cfg, workers=3))
    for other in (b, c):
        assert (a.lhs, a.lhs_err, a.shells, a.evals) == (other.lhs, other.lhs_err, other.shells, other.evals)


def test_tolerance_monotonicity():
    inst = sample_params("CN_BETA", 1, seed=7)
    errs = [verify(inst, QuadConfig(tol_rel=t)).rel_err for t in (1e-4, 1e-6, 1e-8)]
    assert errs[0] >= errs[1] >= errs[2]


@pytest.mark.slow
def test_error_estimates_are_honest():
    within, total = 0, 0
    for identity in ("CN_BETA", "AN_BETA"):
        for seed in range(25):
            r = verify(sample_params(identity, 1, nu=seed % 2 / 2, seed=seed), QuadConfig(tol_rel=1e-5))
            true_err = abs(r.lhs - r.rhs)
            within += true_err <= 3 * r.lhs_err
            total += 1
    assert within >= 0.95 * total


def test_report_json_schema():
    report = verify(sample_params("CN_BETA", 1, seed=2), QuadConfig(tol_rel=1e-4)).to_json()
    required = {"identity", "ranks", "nu", "seed", "lhs", "lhs_err", "rhs", "rel_err", "pass", "shells", "evals", "seconds"}
    assert required <= set(report)
    assert len(report["lhs"]) == len(report["rhs"]) == 2
