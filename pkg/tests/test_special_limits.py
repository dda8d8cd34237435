import cmath
import json
import math

import mpmath
import numpy as np
import pytest

from complexhyper.special_limits import (
    DomainError,
    EllipticBases,
    QuasiPeriods,
    b22,
    ell_gamma,
    hyp_gamma,
    limit_scan,
    q_pochhammer_inf,
    richardson_limit,
)

W_TILTED = QuasiPeriods(1, cmath.exp(1j * math.pi / 4))


def test_b22_examples():
    w = QuasiPeriods(1, 1)
    assert b22(w.Q / 2, w) == pytest.approx(-1 / 6, abs=1e-16)
    assert b22(0, w) == pytest.approx(5 / 6, abs=1e-16)


@pytest.mark.parametrize("seed", range(5))
def test_b22_symmetries(seed):
    rng = np.random.default_rng(seed)
    u = complex(*rng.normal(size=2))
    w = QuasiPeriods(complex(rng.uniform(0.2, 2), rng.normal()), complex(rng.uniform(0.2, 2), rng.normal()))
    assert b22(u, w) == pytest.approx(b22(u, w.swapped()), rel=1e-14)
    assert b22(u, w) == pytest.approx(b22(w.Q - u, w), rel=1e-14)


def test_q_pochhammer_trivial_cases():
    assert q_pochhammer_inf(0, 0.7) == 1
    assert q_pochhammer_inf(0.3 + 0.2j, 0) == pytest.approx(0.7 - 0.2j)
    with pytest.raises(DomainError):
        q_pochhammer_inf(0.5, 1.0)


def test_q_pochhammer_half():
    assert q_pochhammer_inf(0.5, 0.5).real == pytest.approx(0.2887880951, abs=1e-10)


@pytest.mark.parametrize("t,q", [(0.5, 0.5), (0.3 - 0.9j, 0.95j), (2.5 + 1j, -0.8 + 0.1j), (-7, 0.9)])
def test_q_pochhammer_against_mpmath(t, q):
    expected = complex(mpmath.qp(t, q))
    assert abs(q_pochhammer_inf(t, q) - expected) <= 1e-13 * abs(expected)


def test_q_pochhammer_slow_base():
    # |q| close to 1, checked against a direct 30-digit product
    t, q = -7, 0.99
    with mpmath.workdps(30):
        expected = mpmath.mpf(1)
        term = mpmath.mpf(t)
        for _ in range(5000):
            expected *= 1 - term
            term *= q
    assert abs(q_pochhammer_inf(t, q) / complex(expected) - 1) <= 1e-12


def brute_ell_gamma(z, p, q, size=120):
    value = 1 + 0j
    for j in range(size):
        for k in range(size):
            value *= (1 - p ** (j + 1) * q ** (k + 1) / z) / (1 - z * p**j * q**k)
    return value


def test_ell_gamma_reduces_to_pochhammer_at_p_zero():
    z, q = 0.4 + 0.3j, 0.6 - 0.2j
    assert ell_gamma(z, (0, q)) == pytest.approx(1 / q_pochhammer_inf(z, q), rel=1e-13)


def test_ell_gamma_base_symmetry_and_truncation():
    z, p, q = 0.7 - 0.5j, 0.3 + 0.4j, -0.5 + 0.1j
    value = ell_gamma(z, EllipticBases(p, q))
    assert value == pytest.approx(ell_gamma(z, EllipticBases(q, p)), rel=1e-13)
    assert abs(ell_gamma(z, (p, q), extra_terms=8) - value) <= 1e-12 * abs(value)
    assert value == pytest.approx(brute_ell_gamma(z, p, q), rel=1e-12)


def test_ell_gamma_pole():
    with pytest.raises(DomainError):
        ell_gamma(1, (0.2, 0.3))


def test_hyp_gamma_cross_representation_example():
    u = 0.3 * W_TILTED.Q
    a = hyp_gamma(u, W_TILTED, "integral")
    b = hyp_gamma(u, W_TILTED, "product")
    assert abs(a - b) <= 1e-9 * abs(b)


@pytest.mark.parametrize("seed", range(20))
def test_hyp_gamma_cross_representation_random(seed):
    rng = np.random.default_rng(100 + seed)
    w = QuasiPeriods(complex(rng.uniform(0.5, 1.5), rng.uniform(-0.6, 0.6)), complex(rng.uniform(0.5, 1.5), rng.uniform(-0.6, 0.6)))
    if abs(w.tau.imag) < 0.05:
        w = QuasiPeriods(w.w1, w.w2 * cmath.exp(0.3j))
    u = complex(rng.uniform(0.1, 0.9) * w.Q.real, rng.uniform(-1, 1))
    a = hyp_gamma(u, w, "integral")
    b = hyp_gamma(u, w, "product")
    assert abs(a - b) <= 1e-9 * abs(b)


@pytest.mark.parametrize("u", [2.5 + 0.4j, -1.3 + 0.2j, -3.1 - 0.5j, 5.2 + 1j])
def test_shift_relation_validated_against_product(u):
    # points outside the strip need the shift relation in the integral route
    a = hyp_gamma(u, W_TILTED, "integral")
    b = hyp_gamma(u, W_TILTED, "product")
    assert abs(a - b) <= 1e-9 * abs(b)


def test_integral_needs_bounded_shift_count():
    with pytest.raises(DomainError):
        hyp_gamma(40, (1, 1), "integral")


def test_real_quasi_periods_integral_only():
    value = hyp_gamma(0.5, (1, 1), "integral")
    assert np.isfinite(value)
    # auto falls back to the integral when w1/w2 is real
    assert hyp_gamma(0.5, (1, 1)) == value
    with pytest.raises(DomainError):
        hyp_gamma(0.5, (1, 1), "product")


@pytest.mark.parametrize("lam", [2, 1 / 3, 1.7])
def test_homogeneity(lam):
    rng = np.random.default_rng(int(lam * 1000))
    for _ in range(50):
        u = complex(rng.uniform(-1.5, 3), rng.uniform(-1.5, 1.5))
        base = hyp_gamma(u, W_TILTED, "product")
        scaled = hyp_gamma(lam * u, W_TILTED.scaled(lam), "product")
        assert abs(scaled - base) <= 1e-10 * abs(base)


def test_homogeneity_integral_route():
    w = QuasiPeriods(1, 1.3)
    for u in (0.4, 1.1 + 0.3j, 2.0 - 0.5j):
        assert hyp_gamma(2 * u, w.scaled(2), "integral") == pytest.approx(hyp_gamma(u, w, "integral"), rel=1e-10)


def test_sector_asymptotics():
    w = W_TILTED
    errs_upper, errs_lower = [], []
    for radius in (4, 8, 12):
        y = radius * 1j
        errs_upper.append(abs(hyp_gamma(y, w) / cmath.exp(-0.5j * math.pi * b22(y, w)) - 1))
        y = -radius * 1j
        errs_lower.append(abs(hyp_gamma(y, w) / cmath.exp(0.5j * math.pi * b22(y, w)) - 1))
    assert errs_upper[-1] < 1e-9 and errs_lower[-1] < 1e-9
    assert errs_upper == sorted(errs_upper, reverse=True)


def test_limit_hyp_to_complex():
    table = limit_scan("hyp_to_complex", {"n": 1, "x": 0.4 + 0.1j}, [0.04, 0.02, 0.01])
    dev = [row.deviation for row in table.rows]
    assert dev[0] > dev[1] > dev[2]


def test_limit_hyp_to_rational():
    table = limit_scan("hyp_to_rational", {"n": 2, "y": 0.7}, [0.04, 0.02, 0.01])
    dev = [row.deviation for row in table.rows]
    assert dev[0] > dev[1] > dev[2]
    assert table.convergence_order() == pytest.approx(1, abs=0.1)


def test_limit_ell_to_hyp():
    table = limit_scan("ell_to_hyp", {"u": 0.3, "w1": 1, "w2": 1.2}, [0.1, 0.05, 0.025])
    dev = [row.deviation for row in table.rows]
    assert dev[0] > dev[1] > dev[2]
    assert abs(table.extrapolated() - 1) < 1e-6


def test_limit_table_outputs():
    table = limit_scan("hyp_to_rational", {"n": 1, "y": 0.3})
    header = table.to_csv().splitlines()[0]
    assert header == "delta,lhs,rhs,ratio_re,ratio_im,abs_ratio_minus_1"
    payload = json.loads(table.to_json())
    assert len(payload["rows"]) == 5
    assert set(payload["rows"][0]) == {"delta", "lhs", "rhs", "ratio_re", "ratio_im", "abs_ratio_minus_1"}


def test_richardson_with_log_terms_recovers_model():
    d = np.array([0.08 * 2.0**-k for k in range(5)])
    values = 1.5 + 0.3 * d * np.log(d) - 2 * d + 0.7 * d**2 * np.log(d) + 0.1 * d**2
    assert richardson_limit(d, values, order=2, log_terms=True) == pytest.approx(1.5, abs=1e-12)
    values = 1.5 - 2 * d + 0.1 * d**2
    assert richardson_limit(d, values, order=2) == pytest.approx(1.5, abs=1e-12)
