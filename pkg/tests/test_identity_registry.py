import math
from fractions import Fraction as F

import mpmath
import numpy as np
import pytest

from complexhyper.identity_registry import (
    LATTICE_IDS,
    IdentityInstance,
    InvalidInstance,
    ParamPoint,
    SamplingExhausted,
    build_lhs,
    build_rhs,
    decay_exponent,
    descriptor,
    instance_from_json,
    instance_to_json,
    phase_odd,
    phase_trafo,
    sample_params,
    trafo_phase_violations,
    type2_phase_violations,
    validate,
)


def sample(identity, n=1, nu=0, seed=0):
    m = 1 if descriptor(identity).uses_m else 0
    return sample_params(identity, n, m=m, nu=nu, seed=seed)


def with_first(inst, group, shift_a=0, shift_N=0):
    points = list(inst.params[group])
    points[0] = ParamPoint(points[0].a + shift_a, points[0].N + shift_N)
    params = dict(inst.params)
    params[group] = tuple(points)
    return IdentityInstance(inst.identity, inst.n, params, inst.nu, inst.m, inst.lattice_total, inst.seed)


def kinds(violations):
    return {v.kind for v in violations}


def test_symmetric_cn_beta_is_valid():
    inst = IdentityInstance("CN_BETA", 1, {"a": (ParamPoint(-1j / 3, 0),) * 6})
    assert validate(inst) == []


def test_cn_beta_continuous_balancing_violation():
    points = (ParamPoint(-1.9j / 6, 0),) * 6
    inst = IdentityInstance("CN_BETA", 1, {"a": points})
    assert "continuous balancing" in kinds(validate(inst))


def test_cn_trafo_degen_window_violation():
    # sum Im(a) = -2m - 3 lies below the two-sided window (-2m-2, -2m) at m = 1
    a = [ParamPoint(-5j / 6 + 0.1 * k, 0) for k in range(6)]
    inst = IdentityInstance("CN_TRAFO_DEGEN", 1, {"a": tuple(a)}, m=1)
    assert "convergence window" in kinds(validate(inst))


@pytest.mark.parametrize("identity", LATTICE_IDS)
def test_sampled_instances_validate(identity):
    for seed in range(3):
        assert validate(sample(identity, seed=seed)) == []


@pytest.mark.parametrize("identity", LATTICE_IDS)
def test_balancing_rejects_small_perturbations(identity):
    d = descriptor(identity)
    inst = sample(identity, seed=1)
    weights = d.balancing.weights(inst.n, inst.m) if d.balancing else {}
    group = next((g for g, w in weights.items() if w), None)
    if group is not None:
        assert "continuous balancing" in kinds(validate(with_first(inst, group, shift_a=1e-6)))
        assert "discrete balancing" in kinds(validate(with_first(inst, group, shift_N=1)))
    else:
        assert d.window is not None
        lo = with_first(inst, d.groups[0].name, shift_a=-10j)
        assert kinds(validate(lo)) & {"convergence window", "contour margin"}


def test_sampling_is_deterministic():
    assert sample_params("CN_BETA", 1, seed=1) == sample_params("CN_BETA", 1, seed=1)
    assert sample_params("CN_BETA", 1, seed=1) != sample_params("CN_BETA", 1, seed=2)


def test_even_rank_half_integer_is_rejected():
    with pytest.raises((InvalidInstance, SamplingExhausted, ValueError), match="parity inadmissible"):
        sample_params("AN_BETA", 2, nu=F(1, 2), seed=0)


def test_json_roundtrip():
    inst = sample("AN_TRAFO", nu=F(1, 2), seed=4)
    assert instance_from_json(instance_to_json(inst)) == inst


def test_symmetric_cn_beta_integrand_real_positive():
    inst = IdentityInstance("CN_BETA", 1, {"a": (ParamPoint(-1j / 3, 0),) * 6})
    # off the origin, where the measure weight x^2 + m^2 vanishes
    value = build_lhs(inst).func((0,), np.array([[0.5]]))[0]
    assert value.real > 0
    assert abs(value.imag) <= 1e-14 * value.real


def test_an_beta_integrand_symmetric_under_swaps():
    inst = sample("AN_BETA", n=2, seed=2)
    lhs = build_lhs(inst)
    x = np.array([[0.3, -1.1], [2.0, 0.4]])
    swapped = x[:, ::-1]
    for m in [(0, 1), (2, -1)]:
        np.testing.assert_allclose(lhs.func(m, x), lhs.func(m[::-1], swapped), rtol=1e-13)


def test_lattice_decay_matches_exponent():
    inst = sample("CN_BETA", seed=3)
    lhs = build_lhs(inst)
    p = decay_exponent(inst)
    for angle in (0.3, 1.2):
        ratios = []
        for r in (20.0, 40.0, 80.0, 160.0):
            m, x = round(2 * r * math.cos(angle)), 2 * r * math.sin(angle)
            z = abs(complex(m, x)) / 2
            ratios.append(abs(lhs.func((m,), np.array([[x]]))[0]) / z**p)
        # bounded above and below: the ratio settles to a constant
        assert max(ratios) / min(ratios) < 1.5


def test_decay_exponents():
    assert decay_exponent(sample("CN_BETA")) == pytest.approx(-6)
    assert decay_exponent(sample("STAR_TRIANGLE_MB")) == pytest.approx(-4)
    # Kono-type degeneration: exponent -sum Im(a+b) - 4, here with sum -1
    points = (ParamPoint(-0.25j, 0),) * 2
    kono = IdentityInstance("AN_DEGEN_KONO", 1, {"a": points, "b": points})
    assert validate(kono) == []
    assert decay_exponent(kono) == pytest.approx(-3)


def test_symmetric_star_triangle_rhs():
    point = ParamPoint(-1j / 3, 0)
    inst = IdentityInstance("STAR_TRIANGLE_MB", 1, {"b": (point,) * 3, "a": (point,) * 3})
    expected = (mpmath.gamma(mpmath.mpf(1) / 3) / mpmath.gamma(mpmath.mpf(2) / 3)) ** 9
    assert build_rhs(inst) == pytest.approx(complex(expected), rel=1e-13)


def test_degeneration_at_rank_one_coincides_with_star_triangle():
    mb = sample("STAR_TRIANGLE_MB", seed=3)
    degen = IdentityInstance("AN_DEGEN_FULL", 1, {"a": mb.params["b"], "b": mb.params["a"]})
    assert validate(degen) == []
    l1, l2 = build_lhs(mb), build_lhs(degen)
    x = np.array([[0.3], [-1.2], [4.0]])
    for m in (0, 1, -2):
        np.testing.assert_allclose(l2.prefactor * l2.func((m,), x), l1.prefactor * l1.func((m,), x), rtol=1e-13)
    assert build_rhs(degen) == pytest.approx(build_rhs(mb), rel=1e-13)


@pytest.mark.parametrize("identity,n", [("AN_DEGEN_FULL", 1), ("AN_DEGEN_FULL", 3), ("AN_DEGEN_KONO", 1)])
def test_half_integer_class_maps_to_integer_class(identity, n):
    half = sample(identity, n=n, nu=F(1, 2), seed=5)
    whole = IdentityInstance(
        identity,
        n,
        {
            "a": tuple(ParamPoint(p.a, p.N - F(1, 2)) for p in half.params["a"]),
            "b": tuple(ParamPoint(p.a, p.N + F(1, 2)) for p in half.params["b"]),
        },
    )
    assert validate(whole) == []
    lh, lw = build_lhs(half), build_lhs(whole)
    # distinct coordinates keep the Vandermonde factor away from zero
    x = np.array([[0.3, -0.7, 1.1][: lh.dim], [-1.2, 0.4, 2.5][: lh.dim]])
    rhs_ratio = build_rhs(whole) / build_rhs(half)
    assert abs(abs(rhs_ratio) - 1) < 1e-13
    for m in [(0.5,) * lh.dim, (-1.5, 0.5, 1.5)[: lh.dim]]:
        shifted = tuple(v + 0.5 for v in m)
        ratio = lw.prefactor * lw.func(shifted, x) / (lh.prefactor * lh.func(m, x))
        np.testing.assert_allclose(ratio, rhs_ratio, rtol=1e-12)


def test_odd_phase_example():
    assert phase_odd(3, 1, 1) == 12


@pytest.mark.parametrize("n", range(1, 7))
def test_type2_phase_even_integer_exhaustive(n):
    assert type2_phase_violations(n) == []


@pytest.mark.parametrize("n", [1, 3, 5, 7])
@pytest.mark.parametrize("m", range(6))
def test_trafo_half_phase_integer_for_odd_rank(n, m):
    assert trafo_phase_violations(n, m) == []


def test_trafo_phase_scan_detects_even_rank():
    # even n is excluded from the claim and indeed produces quarter phases
    assert trafo_phase_violations(2, 1)
    assert phase_trafo(2, 1, 0, F(1, 2)) == F(15, 4)


def test_parameter_file_schema():
    # complex as [re, im]; discrete parts as integers or "k/2" strings
    payload = {
        "id": "CN_BETA",
        "n": 1,
        "nu": "1/2",
        "params": {"a": [{"a": [0.1 * k, -1 / 3], "N": "1/2" if k % 2 else "-1/2"} for k in range(6)]},
    }
    inst = instance_from_json(payload)
    assert inst.nu == F(1, 2)
    assert inst.params["a"][1] == ParamPoint(0.1 - 1j / 3, F(1, 2))
    whole = instance_from_json({"id": "CN_BETA", "n": 1, "params": {"a": [{"a": [0, -1 / 3], "N": 0}] * 6}})
    assert whole.params["a"][0].N.as_int() == 0
    assert validate(whole) == []
