"""Catalog of complex-level identities between lattice sums of integrals.

An identity instance bundles the identity id, its rank(s), the parity class
``nu`` of the lattice and named groups of :class:`ParamPoint` values. Each
point pairs a continuous parameter ``a`` with a discrete one ``N``.

The registry knows, for every identity,

* the parameter schema, balancing conditions and convergence windows
  (:func:`validate`, :func:`sample_params`),
* the left-hand side as a vectorised lattice integrand (:func:`build_lhs`),
* the right-hand side: a closed-form value for evaluation identities, or a
  prefactor together with a partner instance for transformations
  (:func:`build_rhs`).

Discrete arithmetic is exact (``Fraction``); phases e^{i pi q} are applied
from exact rationals.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import special

from .gamma_core import HalfInt, complex_gamma

__all__ = [
    "IDENTITY_IDS",
    "LATTICE_IDS",
    "TRANSFORMATION_IDS",
    "ParamPoint",
    "IdentityInstance",
    "IdentityDescriptor",
    "Violation",
    "InvalidInstance",
    "SamplingExhausted",
    "RankBudgetExceeded",
    "LatticeIntegrand",
    "SeparableForm",
    "canonical_id",
    "descriptor",
    "validate",
    "sample_params",
    "build_lhs",
    "build_rhs",
    "decay_exponent",
    "check_rank_budget",
    "phase_pi",
    "phase_odd",
    "phase_even",
    "phase_trafo",
    "type2_phase_violations",
    "trafo_phase_violations",
    "instance_from_json",
    "instance_to_json",
    "load_instance",
]

DEFAULT_MARGIN = 0.1  # minimal distance of every continuous parameter from the real contour
SAMPLE_MARGIN = 0.2
IM_RANGE = (-0.8, -0.2)
RE_RANGE = (-1.0, 1.0)
DISCRETE_RANGE = 2
BALANCE_TOL = 1e-12
RANK_BUDGET = {"ci": 2, "nightly": 3}

LATTICE_IDS = (
    "STAR_TRIANGLE_MB",
    "CN_BETA",
    "AN_BETA",
    "SELBERG_MB",
    "AN_TYPE2",
    "AN_DEGEN_FULL",
    "AN_DEGEN_KONO",
    "CN_AW",
    "CN_TRAFO",
    "CN_TYPE2_TRAFO",
    "AN_TRAFO",
    "CN_TRAFO_DEGEN",
    "AN_TRAFO_DEGEN",
)
TRANSFORMATION_IDS = ("CN_TRAFO", "CN_TYPE2_TRAFO", "AN_TRAFO", "CN_TRAFO_DEGEN", "AN_TRAFO_DEGEN")
OTHER_IDS = (
    "BINOMIAL_MB",
    "CPLANE_BETA",
    "CPLANE_STR",
    "RAT_CN",
    "RAT_AN",
    "RAT_CN_EX1",
    "RAT_CN_EX2",
    "RAT_AN_EX1",
    "RAT_AN_EX2",
    "RAT_AN_EX3",
)
IDENTITY_IDS = LATTICE_IDS + OTHER_IDS

ALIASES = {"MB": "STAR_TRIANGLE_MB", "SELBERG": "SELBERG_MB"}


class InvalidInstance(ValueError):
    """An instance failed validation; ``violations`` lists every problem."""

    def __init__(self, violations: Sequence["Violation"]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class SamplingExhausted(RuntimeError):
    pass


class RankBudgetExceeded(ValueError):
    pass


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"


def canonical_id(identity: str) -> str:
    identity = ALIASES.get(identity, identity)
    if identity not in IDENTITY_IDS:
        raise KeyError(f"unknown identity {identity!r}")
    return identity


# ---------------------------------------------------------------------------
# exact phases


def phase_pi(q) -> complex:
    """exp(i pi q) for rational q; exact when q is a multiple of 1/2."""
    q = Fraction(q) % 2
    exact = {Fraction(0): 1, Fraction(1, 2): 1j, Fraction(1): -1, Fraction(3, 2): -1j}
    if q in exact:
        return complex(exact[q])
    return cmath.exp(1j * math.pi * float(q))


def _int(q) -> int:
    q = Fraction(q)
    if q.denominator != 1:
        raise ValueError(f"{q} is not an integer")
    return int(q)


def phase_odd(n: int, N, M) -> Fraction:
    """Phase exponent of the odd-rank type II closed form (times pi i / 2)."""
    return Fraction(n, 4) * (n * n - 1) * (Fraction(N) + Fraction(M))


def phase_even(n: int, N, M, Ns: Sequence, Ms: Sequence) -> Fraction:
    """Phase exponent of the even-rank type II closed form (times pi i / 2)."""
    N, M = Fraction(N), Fraction(M)
    Ns = [Fraction(v) for v in Ns]
    Ms = [Fraction(v) for v in Ms]
    sn, sm = sum(Ns), sum(Ms)
    return (
        (N * N + M * M) * (Fraction(-n * n, 4) + Fraction(n, 2) + 1)
        - 2 * N * sn
        - 2 * M * sm
        + sn * sn
        + sm * sm
        + n * sum(v * v for v in Ns + Ms)
    )


def phase_trafo(n: int, m: int, W, nu) -> Fraction:
    """Phase exponent (times pi i) of the A_n transformation."""
    W = Fraction(W)
    if Fraction(nu) == 0:
        return (n + m + 1) * W
    return Fraction((3 * m - n + 2) * (n + m + 2), 4) + W * W


def _half_sums(n: int, bound: int) -> dict:
    """Map s = (n-1) N + sum N_k to the set of phase contributions for |N|, |N_k| <= bound."""
    c = Fraction(-n * n, 4) + Fraction(n, 2) + 1
    out: dict = {}
    grid = range(-bound, bound + 1)
    for N in grid:
        for Ns in product(grid, repeat=3):
            total = sum(Ns)
            value = N * N * c - 2 * N * total + total * total + n * sum(v * v for v in Ns)
            out.setdefault((n - 1) * N + total, set()).add(value)
    return out


def type2_phase_violations(n: int, bound: int = 4) -> list:
    """Exhaustively confirm the type II phase is an even integer on the bounded discrete grid.

    Odd ranks use the closed form in N + M.  For even ranks the phase splits
    into an (N, N_k) part and an (M, M_k) part coupled only through the
    balancing condition, so the scan pairs the two halves by their share of
    that condition instead of enumerating all 9^8 points.  Returns the
    offending values (empty when the claim holds).
    """
    bad = []
    if n % 2:
        for N in range(-bound, bound + 1):
            for M in range(-bound, bound + 1):
                phi = phase_odd(n, N, M)
                if phi.denominator != 1 or phi.numerator % 2:
                    bad.append((N, M, phi))
        return bad
    halves = _half_sums(n, bound)
    for s, left in halves.items():
        for right in halves.get(-s, ()):
            for value in left:
                phi = value + right
                if phi.denominator != 1 or phi.numerator % 2:
                    bad.append((s, phi))
    return bad


def trafo_phase_violations(n: int, m: int, bound: int = 6) -> list:
    """Half-integer-class transformation phase values that are not integers, |W| <= bound.

    W ranges over Z + (m+1)/2, the possible sums of m+1 half-integers.
    """
    offset = Fraction(m + 1, 2) % 1
    bad = []
    W = -bound + offset
    while W <= bound:
        phi = phase_trafo(n, m, W, Fraction(1, 2))
        if phi.denominator != 1:
            bad.append((W, phi))
        W += 1
    return bad


# ---------------------------------------------------------------------------
# parameters and instances


def _complex_from_json(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"complex value must be [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.replace(" ", "").replace("i", "j"))
    return complex(value)


@dataclass(frozen=True)
class ParamPoint:
    """A continuous parameter ``a`` paired with a discrete one ``N``."""

    a: complex
    N: HalfInt = HalfInt(0)

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "N", HalfInt.of(self.N))

    @classmethod
    def from_json(cls, obj) -> "ParamPoint":
        if isinstance(obj, Mapping):
            return cls(_complex_from_json(obj["a"]), HalfInt.of(obj.get("N", 0)))
        a, N = obj
        return cls(_complex_from_json(a), HalfInt.of(N))

    def to_json(self) -> dict:
        return {"a": [self.a.real, self.a.imag], "N": str(self.N)}


@dataclass(frozen=True, eq=False)
class IdentityInstance:
    """One concrete parameter point of a catalog identity.

    ``lattice_total`` is the prescribed value of the eliminated lattice
    variable sum for the constrained A_n families (zero except for the
    partner side of the A_n transformation).
    """

    identity: str
    n: int
    params: Mapping[str, tuple[ParamPoint, ...]]
    nu: Fraction = Fraction(0)
    m: int = 0
    lattice_total: Fraction = Fraction(0)
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "identity", canonical_id(self.identity))
        object.__setattr__(self, "nu", Fraction(self.nu))
        object.__setattr__(self, "lattice_total", Fraction(self.lattice_total))
        object.__setattr__(
            self,
            "params",
            {k: tuple(p if isinstance(p, ParamPoint) else ParamPoint(*p) for p in v) for k, v in self.params.items()},
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, IdentityInstance):
            return NotImplemented
        return instance_to_json(self) == instance_to_json(other)

    def cont(self, group: str) -> np.ndarray:
        return np.array([p.a for p in self.params[group]], dtype=complex)

    def disc(self, group: str) -> list[Fraction]:
        return [p.N.as_fraction() for p in self.params[group]]

    @property
    def ranks(self) -> tuple[int, ...]:
        return (self.n, self.m) if descriptor(self.identity).uses_m else (self.n,)


def instance_to_json(inst: IdentityInstance) -> dict:
    out = {
        "id": inst.identity,
        "n": inst.n,
        "nu": str(inst.nu),
        "params": {k: [p.to_json() for p in v] for k, v in inst.params.items()},
    }
    if descriptor(inst.identity).uses_m:
        out["m"] = inst.m
    if inst.lattice_total:
        out["lattice_total"] = str(inst.lattice_total)
    if inst.seed is not None:
        out["seed"] = inst.seed
    return out


def instance_from_json(obj: Mapping) -> IdentityInstance:
    """Build an instance from the parameter-file schema.

    Complex numbers are ``[re, im]``; discrete values are integers or
    ``"k/2"`` strings.
    """
    params = {k: tuple(ParamPoint.from_json(p) for p in v) for k, v in obj["params"].items()}
    return IdentityInstance(
        obj["id"],
        int(obj["n"]),
        params,
        nu=Fraction(str(obj.get("nu", 0))),
        m=int(obj.get("m", 0)),
        lattice_total=Fraction(str(obj.get("lattice_total", 0))),
        seed=obj.get("seed"),
    )


def load_instance(path) -> IdentityInstance:
    with open(path) as fh:
        return instance_from_json(json.load(fh))


# ---------------------------------------------------------------------------
# descriptors


@dataclass(frozen=True)
class GroupSpec:
    name: str
    size: Callable[[int, int], int]
    parity: str = "nu"  # "nu": discrete parts in Z + nu; "int": integers


@dataclass(frozen=True)
class Balance:
    weights: Callable[[int, int], dict]
    target: Callable[[int, int], complex]
    discrete_target: int = 0


@dataclass(frozen=True)
class Window:
    """Open window lo < sum_g w_g Im(g) < hi on an imaginary-part sum."""

    weights: Callable[[int, int], dict]
    lo: Callable[[int, int], float | None]
    hi: Callable[[int, int], float | None]
    # sub-window used by the sampler so both sides decay at least like |z|^-3
    sample: Callable[[int, int], tuple[float, float]]


@dataclass(frozen=True)
class IdentityDescriptor:
    id: str
    summary: str
    kind: str
    groups: tuple[GroupSpec, ...]
    balancing: Balance | None
    window: Window | None
    constraint: str
    phase: str
    uses_m: bool = False
    fixed_rank: int | None = None
    a_type_constrained: bool = False

    def sizes(self, n: int, m: int = 0) -> dict:
        return {g.name: g.size(n, m) for g in self.groups}


def _const(v):
    return lambda n, m: v


_AB = lambda sa, sb: (GroupSpec("a", sa), GroupSpec("b", sb))  # noqa: E731

_CATALOG: dict[str, IdentityDescriptor] = {}


def _register(d: IdentityDescriptor):
    _CATALOG[d.id] = d


_register(
    IdentityDescriptor(
        "STAR_TRIANGLE_MB",
        "bilateral Mellin-Barnes form of the complex star-triangle relation",
        "evaluation",
        (GroupSpec("b", _const(3), "int"), GroupSpec("a", _const(3), "int")),
        Balance(lambda n, m: {"a": 1, "b": 1}, _const(-2j)),
        None,
        "one lattice variable n in Z, one contour variable y",
        "none",
        fixed_rank=1,
    )
)
_register(
    IdentityDescriptor(
        "CN_BETA",
        "C_n complex beta integral with 2n+4 parameters",
        "evaluation",
        (GroupSpec("a", lambda n, m: 2 * n + 4),),
        Balance(lambda n, m: {"a": 1}, _const(-2j)),
        None,
        "none",
        "(-1)^{(n-1)(n-2)nu}",
    )
)
_register(
    IdentityDescriptor(
        "AN_BETA",
        "A_n complex beta integral with n+2 pairs of parameters",
        "evaluation",
        _AB(lambda n, m: n + 2, lambda n, m: n + 2),
        Balance(lambda n, m: {"a": 1, "b": 1}, _const(-2j)),
        None,
        "x_{n+1} = -sum x_j, m_{n+1} = -sum m_j",
        "e^{i pi (n-1)(N^2-(n+2)nu^2)}",
        a_type_constrained=True,
    )
)
_register(
    IdentityDescriptor(
        "SELBERG_MB",
        "complex Selberg-type integral with exponent (gamma, r) and six parameters",
        "evaluation",
        (GroupSpec("gamma", _const(1), "int"), GroupSpec("g", _const(6))),
        Balance(lambda n, m: {"gamma": 2 * n - 2, "g": 1}, _const(-2j)),
        None,
        "none",
        "(-1)^{r n(n-1)/2}",
    )
)
_register(
    IdentityDescriptor(
        "AN_TYPE2",
        "type II A_n sum with pair parameters (a, N), (b, M) and three pairs (a_k, N_k), (b_k, M_k)",
        "evaluation",
        (
            GroupSpec("a0", _const(1), "int"),
            GroupSpec("b0", _const(1), "int"),
            GroupSpec("a", _const(3)),
            GroupSpec("b", _const(3)),
        ),
        Balance(lambda n, m: {"a0": n - 1, "b0": n - 1, "a": 1, "b": 1}, _const(-2j)),
        None,
        "x_{n+1} = -sum x_j, m_{n+1} = -sum m_j; real contours",
        "e^{(pi i/2) phi}, phi odd/even rank polynomial",
        a_type_constrained=True,
    )
)
_register(
    IdentityDescriptor(
        "AN_DEGEN_FULL",
        "A_n degeneration with n+2 pairs and the e^{i pi (n+2) sum m} weight",
        "evaluation",
        _AB(lambda n, m: n + 2, lambda n, m: n + 2),
        Balance(lambda n, m: {"a": 1, "b": 1}, _const(-2j)),
        None,
        "none",
        "e^{i pi M} e^{i pi ((n+1)n-2) nu}",
    )
)
_register(
    IdentityDescriptor(
        "AN_DEGEN_KONO",
        "A_n degeneration with n+1 pairs, no balancing",
        "evaluation",
        _AB(lambda n, m: n + 1, lambda n, m: n + 1),
        None,
        Window(lambda n, m: {"a": 1, "b": 1}, _const(-2.0), _const(None), _const((-0.95, 0.0))),
        "none",
        "e^{i pi n(n+1) nu}",
    )
)
_register(
    IdentityDescriptor(
        "CN_AW",
        "C_n degeneration with 2n+2 parameters, no balancing",
        "evaluation",
        (GroupSpec("a", lambda n, m: 2 * n + 2),),
        None,
        Window(lambda n, m: {"a": 1}, _const(-2.0), _const(None), _const((-1.25, 0.0))),
        "none",
        "e^{-i pi n(n+1) nu}",
    )
)
_register(
    IdentityDescriptor(
        "CN_TRAFO",
        "C_n symmetry transformation R_n^(m) -> R_m^(n) with 2n+2m+4 parameters",
        "transformation",
        (GroupSpec("a", lambda n, m: 2 * n + 2 * m + 4),),
        Balance(lambda n, m: {"a": 1}, lambda n, m: -2j * (m + 1)),
        None,
        "none",
        "(-1)^{(n+m-1)(n+m-2)nu}",
        uses_m=True,
    )
)
_register(
    IdentityDescriptor(
        "CN_TYPE2_TRAFO",
        "type II C_n transformation with exponent (gamma, L) and eight parameters",
        "transformation",
        (GroupSpec("gamma", _const(1), "int"), GroupSpec("a", _const(8))),
        Balance(lambda n, m: {"gamma": 2 * n - 2, "a": 1}, _const(-4j)),
        None,
        "none",
        "e^{i pi n sum_{j<=4} N_j}",
    )
)
_register(
    IdentityDescriptor(
        "AN_TRAFO",
        "A_n symmetry transformation R_n^(m) -> R_m^(n) with n+m+2 pairs",
        "transformation",
        _AB(lambda n, m: n + m + 2, lambda n, m: n + m + 2),
        Balance(lambda n, m: {"a": 1, "b": 1}, lambda n, m: -2j * (m + 1)),
        None,
        "x_{n+1} = -sum x_j, m_{n+1} = lattice_total - sum m_j",
        "e^{i pi phi(nu)}",
        uses_m=True,
        a_type_constrained=True,
    )
)
_register(
    IdentityDescriptor(
        "CN_TRAFO_DEGEN",
        "degenerate C_n transformation with 2n+2m+2 parameters and a two-sided window",
        "transformation",
        (GroupSpec("a", lambda n, m: 2 * n + 2 * m + 2),),
        None,
        Window(
            lambda n, m: {"a": 1},
            lambda n, m: -2.0 * m - 2,
            lambda n, m: -2.0 * m,
            lambda n, m: (-2.0 * m - 1.3, -2.0 * m - 0.7),
        ),
        "none",
        "e^{i pi (n+m)(n+m+1) nu}",
        uses_m=True,
    )
)
_register(
    IdentityDescriptor(
        "AN_TRAFO_DEGEN",
        "degenerate A_n transformation with n+m+1 pairs and a two-sided window",
        "transformation",
        _AB(lambda n, m: n + m + 1, lambda n, m: n + m + 1),
        None,
        Window(
            lambda n, m: {"a": 1, "b": 1},
            lambda n, m: -2.0 * m - 2,
            lambda n, m: -2.0 * m,
            lambda n, m: (-2.0 * m - 1, -2.0 * m - 1),
        ),
        "none",
        "e^{i pi (n+m)(n+m+1) nu} e^{i pi m sum(N-M)}",
        uses_m=True,
    )
)
for _rid, _summary in (
    ("BINOMIAL_MB", "complex binomial theorem in bilateral Mellin-Barnes form"),
    ("CPLANE_BETA", "complex-plane beta integral"),
    ("CPLANE_STR", "complex-plane star-triangle relation"),
    ("RAT_CN", "rational C_n integral with Pochhammer integrand"),
    ("RAT_AN", "rational A_n integral with Pochhammer integrand"),
    ("RAT_CN_EX1", "rational C_n residue identity, first example"),
    ("RAT_CN_EX2", "rational C_n residue identity, second example"),
    ("RAT_AN_EX1", "rational A_n residue identity, first example"),
    ("RAT_AN_EX2", "rational A_n residue identity, second example"),
    ("RAT_AN_EX3", "rational A_n residue identity, third example"),
):
    _register(IdentityDescriptor(_rid, _summary, "special", (), None, None, "n/a", "n/a"))


def descriptor(identity: str) -> IdentityDescriptor:
    return _CATALOG[canonical_id(identity)]


def _require_lattice(identity: str) -> IdentityDescriptor:
    d = descriptor(identity)
    if d.id not in LATTICE_IDS:
        raise ValueError(f"{d.id} is not a lattice-integral identity")
    return d


# ---------------------------------------------------------------------------
# validation


def _weighted_sum(inst: IdentityInstance, weights: Mapping[str, int]):
    cont = 0j
    disc = Fraction(0)
    for g, w in weights.items():
        for p in inst.params[g]:
            cont += w * p.a
            disc += w * p.N.as_fraction()
    return cont, disc


def _parity_violations(inst: IdentityInstance, d: IdentityDescriptor) -> list[Violation]:
    out = []
    nu = inst.nu
    if nu not in (0, Fraction(1, 2)):
        return [Violation("parity", f"nu must be 0 or 1/2, got {nu}")]
    if d.id == "STAR_TRIANGLE_MB" and nu != 0:
        out.append(Violation("parity", "the star-triangle sum runs over integers only (nu = 0)"))
    if d.a_type_constrained:
        # n+1 lattice variables in Z + nu must add up to the prescribed total
        if ((inst.n + 1) * nu - inst.lattice_total) % 1:
            if inst.n % 2 == 0 and inst.lattice_total == 0:
                out.append(Violation("parity", "parity inadmissible for even n: nu must be 0"))
            else:
                out.append(Violation("parity", "lattice total incompatible with nu"))
    for g in d.groups:
        want = nu if g.parity == "nu" else Fraction(0)
        for k, p in enumerate(inst.params[g.name]):
            if p.N.as_fraction() % 1 != want:
                out.append(Violation("parity", f"{g.name}[{k}].N = {p.N} is not in Z + {want}"))
    return out


def _window_sum(inst: IdentityInstance, w: Window) -> float:
    return _weighted_sum(inst, w.weights(inst.n, inst.m))[0].imag


def validate(instance: IdentityInstance, margin: float = DEFAULT_MARGIN, check_partner: bool = True) -> list[Violation]:
    """Return every violated condition of ``instance``; an empty list means valid."""
    try:
        d = _require_lattice(instance.identity)
    except (KeyError, ValueError) as exc:
        return [Violation("schema", str(exc))]
    n, m = instance.n, instance.m
    out: list[Violation] = []
    min_rank = 0 if instance.lattice_total or check_partner is None else 1
    if n < min_rank or (d.fixed_rank is not None and n != d.fixed_rank):
        want = d.fixed_rank if d.fixed_rank is not None else ">= 1"
        return [Violation("rank", f"rank n={n} not allowed (expected {want})")]
    if m < 0 or (m and not d.uses_m):
        return [Violation("rank", f"rank m={m} not allowed for {d.id}")]
    sizes = d.sizes(n, m)
    if set(instance.params) != set(sizes):
        return [Violation("schema", f"parameter groups {sorted(instance.params)} != {sorted(sizes)}")]
    for g, size in sizes.items():
        if len(instance.params[g]) != size:
            out.append(Violation("schema", f"group {g} needs {size} entries, got {len(instance.params[g])}"))
    if out:
        return out
    out += _parity_violations(instance, d)
    if d.balancing is not None:
        cont, disc = _weighted_sum(instance, d.balancing.weights(n, m))
        if disc != d.balancing.discrete_target:
            out.append(Violation("discrete balancing", f"sum = {disc}, expected {d.balancing.discrete_target}"))
        target = d.balancing.target(n, m)
        if abs(cont - target) > BALANCE_TOL:
            out.append(Violation("continuous balancing", f"sum = {cont:.15g}, expected {target}"))
    for g in d.groups:
        for k, p in enumerate(instance.params[g.name]):
            if p.a.imag > -margin:
                out.append(Violation("contour margin", f"Im {g.name}[{k}] = {p.a.imag:.6g} > -{margin}"))
    if d.window is not None:
        s = _window_sum(instance, d.window)
        lo, hi = d.window.lo(n, m), d.window.hi(n, m)
        if (lo is not None and s <= lo) or (hi is not None and s >= hi):
            out.append(Violation("convergence window", f"imaginary sum {s:.6g} outside ({lo}, {hi})"))
    if not out and check_partner and d.kind == "transformation":
        try:
            _, partner = build_rhs(instance, validated=True)
        except (ValueError, ArithmeticError) as exc:
            out.append(Violation("partner", str(exc)))
        else:
            for v in validate(partner, margin, check_partner=None):
                out.append(Violation("partner " + v.kind, v.message))
    return out


def _ensure_valid(instance: IdentityInstance):
    problems = validate(instance)
    if problems:
        raise InvalidInstance(problems)


def check_rank_budget(instance: IdentityInstance, nightly: bool = False):
    budget = RANK_BUDGET["nightly" if nightly else "ci"]
    size = instance.n + (instance.m if descriptor(instance.identity).uses_m else 0)
    if size > budget:
        raise RankBudgetExceeded(f"rank budget exceeded: {size} > {budget}")


# ---------------------------------------------------------------------------
# sampling


def _shift_to_target(values: np.ndarray, weights: np.ndarray, target: float) -> np.ndarray:
    total = float(weights.sum())
    return values + (target - float(weights @ values)) / total * (weights > 0)


def _scale_to_target(values: np.ndarray, weights: np.ndarray, target: float, margin: float):
    """Rescale the depths below -margin so the weighted sum hits ``target``.

    The entries keep their relative spacing and all stay at or below -margin.
    Returns None when the target lies above the margin for these weights.
    """
    depth = np.maximum(-values - margin, 0.0)
    room = -target - margin * float(weights.sum())
    spread = float(weights @ depth)
    if room < 0 or spread <= 0:
        return None
    return np.where(weights > 0, -margin - depth * (room / spread), values)


def sample_params(
    identity: str,
    n: int,
    m: int = 0,
    nu=0,
    seed: int = 0,
    margin: float = SAMPLE_MARGIN,
    max_rejections: int = 10_000,
) -> IdentityInstance:
    """Draw a valid instance deterministically from ``seed``.

    Continuous parts start with Re in [-1, 1] and Im in [-0.8, -0.2]; the
    weighted group that carries a balancing condition (or a window target)
    is moved onto the constraint: real parts by a common shift, imaginary
    parts by rescaling their depth below the margin.
    Discrete parts come from {-2+nu, ..., 2+nu}; the last one is solved from
    the discrete balancing condition.
    """
    d = _require_lattice(identity)
    nu = Fraction(nu)
    if d.fixed_rank is not None and n != d.fixed_rank:
        raise ValueError(f"{d.id} has fixed rank {d.fixed_rank}")
    probe = IdentityInstance(
        d.id,
        n,
        {g.name: tuple(ParamPoint(-0.5j, HalfInt.of(nu if g.parity == "nu" else 0)) for _ in range(s)) for g, s in
         zip(d.groups, d.sizes(n, m).values())},
        nu=nu,
        m=m,
    )
    parity = _parity_violations(probe, d)
    if parity:
        raise ValueError(parity[0].message)
    rng = np.random.default_rng(seed)
    names = [g.name for g in d.groups]
    sizes = d.sizes(n, m)
    for _ in range(max_rejections):
        cont = {}
        disc = {}
        for g in d.groups:
            k = sizes[g.name]
            cont[g.name] = rng.uniform(*RE_RANGE, k) + 1j * rng.uniform(*IM_RANGE, k)
            shift = nu if g.parity == "nu" else Fraction(0)
            disc[g.name] = [Fraction(int(v)) + shift for v in rng.integers(-DISCRETE_RANGE, DISCRETE_RANGE + 1, k)]
        if d.balancing is not None:
            weights = d.balancing.weights(n, m)
            target = d.balancing.target(n, m)
        elif d.window is not None:
            weights = d.window.weights(n, m)
            lo, hi = d.window.sample(n, m)
            count = sum(w * sizes[g] for g, w in weights.items())
            if lo > -margin * count:
                # few entries cannot all keep the default distance from the contour
                margin = max(DEFAULT_MARGIN, -0.95 * lo / count)
            hi = min(hi, -margin * count)
            if lo > hi:
                raise ValueError(f"no admissible window for {d.id} at n={n}, m={m}")
            target = 1j * (lo if lo == hi else rng.uniform(lo, hi))
        else:
            weights, target = {}, 0j
        if weights:
            count = sum(w * sizes[g] for g, w in weights.items())
            if target.imag > -margin * count:
                margin = max(DEFAULT_MARGIN, -0.95 * target.imag / count)
            order = [g for g in names if weights.get(g, 0)]
            flat = np.concatenate([cont[g] for g in order])
            w = np.concatenate([np.full(sizes[g], float(weights[g])) for g in order])
            re = _shift_to_target(flat.real, w, target.real)
            im = _scale_to_target(flat.imag, w, target.imag, margin)
            if im is None:
                continue
            pos = 0
            for g in order:
                cont[g] = re[pos:pos + sizes[g]] + 1j * im[pos:pos + sizes[g]]
                pos += sizes[g]
        if d.balancing is not None:
            weights = d.balancing.weights(n, m)
            last = [g for g in names if weights.get(g, 0) == 1][-1]
            total = sum(weights.get(g, 0) * sum(disc[g]) for g in names) - disc[last][-1]
            value = Fraction(d.balancing.discrete_target) - total
            offset = nu if d.groups[names.index(last)].parity == "nu" else 0
            if abs(value - offset) > DISCRETE_RANGE:
                continue
            disc[last][-1] = value
        params = {g: tuple(ParamPoint(a, HalfInt.of(N)) for a, N in zip(cont[g], disc[g])) for g in names}
        inst = IdentityInstance(d.id, n, params, nu=nu, m=m, seed=seed)
        if not validate(inst, min(margin, DEFAULT_MARGIN)):
            return inst
    raise SamplingExhausted(f"sampling exhausted after {max_rejections} rejections for {d.id}")



# ---------------------------------------------------------------------------
# vectorised gamma logs


def _log_cg(x, n):
    """log Gamma(x, n) for arrays; the sign (-1)^n of negative odd n is folded in as i pi."""
    n = np.asarray(n, dtype=float)
    k = np.abs(n)
    out = special.loggamma((k + 1j * x) / 2) - special.loggamma(1 + (k - 1j * x) / 2)
    odd_negative = (n < 0) & (np.mod(k, 2) == 1)
    if np.any(odd_negative):
        out = out + 1j * np.pi * odd_negative
    return out


def _cg(x, n) -> complex:
    return complex_gamma(complex(x), _int(n))


def _float(values) -> np.ndarray:
    return np.array([float(v) for v in values])


# ---------------------------------------------------------------------------
# polynomials in (x_1..x_d, m_1..m_d) for the Vandermonde-type factors


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for (xp, mp), c in p.items():
        for (xq, mq), d in q.items():
            key = (tuple(a + b for a, b in zip(xp, xq)), tuple(a + b for a, b in zip(mp, mq)))
            out[key] = out.get(key, 0) + c * d
    return {k: v for k, v in out.items() if v}


def _sq_pair(dim: int, j: int, k: int, sign: int) -> dict:
    """(x_j + s x_k)^2 + (m_j + s m_k)^2 as a polynomial."""
    zero = (0,) * dim

    def mono(**powers):
        return tuple(powers.get(f"p{i}", 0) for i in range(dim))

    quad = {
        mono(**{f"p{j}": 2}): 1,
        mono(**{f"p{k}": 2}): 1,
        mono(**{f"p{j}": 1, f"p{k}": 1}): 2 * sign,
    }
    out = {}
    for key, c in quad.items():
        out[(key, zero)] = c
        out[(zero, key)] = c
    return out


def _vandermonde_poly(dim: int, c_type: bool) -> dict:
    poly = {((0,) * dim, (0,) * dim): 1}
    for j, k in combinations(range(dim), 2):
        poly = _poly_mul(poly, _sq_pair(dim, j, k, -1))
        if c_type:
            poly = _poly_mul(poly, _sq_pair(dim, j, k, +1))
    return poly


def _vandermonde(x: np.ndarray, m: Sequence[float], c_type: bool) -> np.ndarray:
    out = np.ones(x.shape[0])
    for j, k in combinations(range(x.shape[1]), 2):
        out = out * ((x[:, j] - x[:, k]) ** 2 + (m[j] - m[k]) ** 2)
        if c_type:
            out = out * ((x[:, j] + x[:, k]) ** 2 + (m[j] + m[k]) ** 2)
    return out


# ---------------------------------------------------------------------------
# lattice integrands


@dataclass
class SeparableForm:
    """Integrand = prod_j factor(m_j, x_j) * poly(x, m).

    ``poly`` maps (x powers, m powers) to coefficients; ``exponent`` is the
    complex power law of ``factor`` alone at large |(m + ix)/2|.
    """

    factor: Callable[[float, np.ndarray], np.ndarray]
    poly: dict
    exponent: complex


@dataclass
class LatticeIntegrand:
    """Pure function (lattice point, contour points) -> integrand values.

    ``func(m, x)`` takes a tuple of ``dim`` lattice coordinates in Z + nu and
    an array of shape (points, dim); it returns the integrand without
    ``prefactor``. ``exponent`` is the complex power law of the integrand in
    any single variable z_j = (m_j + i x_j)/2 at large |z_j|.
    """

    identity: str
    dim: int
    nu: Fraction
    prefactor: complex
    exponent: complex
    func: Callable[[Sequence[float], np.ndarray], np.ndarray]
    separable: SeparableForm | None = None
    # maps a lattice point to a fixed representative of its orbit under the
    # symmetries of the integrated term; None when no symmetry is used
    canonical: Callable[[tuple], tuple] | None = None

    @property
    def decay(self) -> float:
        return float(np.real(self.exponent))

    def __call__(self, m: Sequence[float], x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        x = x.reshape(-1, self.dim) if self.dim else np.zeros((1, 0))
        return self.prefactor * self.func(tuple(float(v) for v in m), x)


def _on_unique(fn, x: np.ndarray) -> np.ndarray:
    """Evaluate fn once per distinct entry of x.

    Nested quadrature repeats every outer coordinate for each inner node.
    """
    if x.size < 256:
        return fn(x)
    values, inverse = np.unique(x, return_inverse=True)
    if 2 * values.size > x.size:
        return fn(x)
    return fn(values)[inverse.reshape(x.shape)]


def _log_ab(a: np.ndarray, N, b: np.ndarray, M):
    """Return log_f(m, x) = sum_l log[Gamma(a_l + x, N_l + m) Gamma(b_l - x, M_l - m)]."""
    N, M = _float(N), _float(M)

    def direct(m: float, x: np.ndarray) -> np.ndarray:
        xs = x[:, None]
        return np.sum(_log_cg(a + xs, N + m), axis=1) + np.sum(_log_cg(b - xs, M - m), axis=1)

    def log_f(m: float, x: np.ndarray) -> np.ndarray:
        return _on_unique(lambda u: direct(m, u), x)

    return log_f


def _canon_perm(m: tuple) -> tuple:
    return tuple(sorted(m))


def _canon_signed(m: tuple) -> tuple:
    return tuple(sorted(abs(v) for v in m))


def _canon_full(total):
    """Orbit representative under permutations of all n+1 coordinates, m_{n+1} = total - sum m."""
    total = float(total)

    def canonical(m: tuple) -> tuple:
        return tuple(sorted(m + (total - sum(m),))[:-1])

    return canonical


def _c_factor(a: np.ndarray, N):
    log_f = _log_ab(a, N, a, N)

    def factor(m: float, x: np.ndarray) -> np.ndarray:
        return (x * x + m * m) * np.exp(log_f(m, x))

    return factor


def _c_type(inst: IdentityInstance, group: str = "a") -> LatticeIntegrand:
    """Sum of integrals with the C_n Vandermonde and the 2K-fold gamma product."""
    n = inst.n
    a = inst.cont(group)
    factor = _c_factor(a, inst.disc(group))

    def func(mv, X):
        out = _vandermonde(X, mv, c_type=True).astype(complex)
        for j in range(X.shape[1]):
            out = out * factor(mv[j], X[:, j])
        return out

    prefactor = 1 / ((2 ** (2 * n + 1) * math.pi) ** n * math.factorial(n))
    K = len(a)
    c_f = 2j * a.sum() - 2 * K + 2
    sep = SeparableForm(factor, _vandermonde_poly(n, c_type=True), c_f)
    return LatticeIntegrand(inst.identity, n, inst.nu, prefactor, c_f + 4 * (n - 1), func, sep, _canon_signed)


def _a_unconstrained(inst: IdentityInstance, weight: int, prefactor: float) -> LatticeIntegrand:
    """A_n sum without the root constraint; each variable carries e^{i pi weight m_j}."""
    n = inst.n
    a, b = inst.cont("a"), inst.cont("b")
    log_f = _log_ab(a, inst.disc("a"), b, inst.disc("b"))

    def factor(m: float, x: np.ndarray) -> np.ndarray:
        return phase_pi(weight * Fraction(m)) * np.exp(log_f(m, x))

    def func(mv, X):
        out = _vandermonde(X, mv, c_type=False).astype(complex)
        for j in range(X.shape[1]):
            out = out * factor(mv[j], X[:, j])
        return out

    c_f = 1j * (a.sum() + b.sum()) - 2 * len(a)
    sep = SeparableForm(factor, _vandermonde_poly(n, c_type=False), c_f)
    return LatticeIntegrand(inst.identity, n, inst.nu, prefactor, c_f + 2 * (n - 1), func, sep, _canon_perm)


def _full_lattice(mv, X, total):
    """Append the eliminated variable x_{n+1} = -sum x, m_{n+1} = total - sum m."""
    x_all = np.concatenate([X, -X.sum(axis=1, keepdims=True)], axis=1)
    m_all = tuple(mv) + (float(total) - sum(mv),)
    return m_all, x_all


def _a_constrained(inst: IdentityInstance) -> LatticeIntegrand:
    n = inst.n
    a, b = inst.cont("a"), inst.cont("b")
    log_f = _log_ab(a, inst.disc("a"), b, inst.disc("b"))
    total = inst.lattice_total

    def func(mv, X):
        m_all, x_all = _full_lattice(mv, X, total)
        log = np.zeros(X.shape[0], dtype=complex)
        for j in range(n + 1):
            log = log + log_f(m_all[j], x_all[:, j])
        return _vandermonde(x_all, m_all, c_type=False) * np.exp(log)

    prefactor = 1 / ((2 ** (n + 3) * math.pi) ** n * math.factorial(n + 1))
    exponent = 2j * (a.sum() + b.sum()) - 4 * len(a) + 4 * n - 2
    return LatticeIntegrand(inst.identity, n, inst.nu, prefactor, exponent, func, canonical=_canon_full(total))


def _star_triangle(inst: IdentityInstance) -> LatticeIntegrand:
    b, a = inst.cont("b"), inst.cont("a")
    nb, ma = _float(inst.disc("b")), _float(inst.disc("a"))

    def factor(m: float, x: np.ndarray) -> np.ndarray:
        xs = x[:, None]
        log = np.sum(_log_cg(b + xs, nb + m), axis=1) + np.sum(_log_cg(a - xs, m - ma), axis=1)
        return np.exp(log)

    def func(mv, X):
        return factor(mv[0], X[:, 0])

    c_f = 1j * (a.sum() + b.sum()) - 6
    sep = SeparableForm(factor, {((0,), (0,)): 1}, c_f)
    return LatticeIntegrand(inst.identity, 1, inst.nu, 1 / (4 * math.pi), c_f, func, sep)


def _pair_recip(X, mv, j, k):
    """Reciprocal of prod Gamma(+-u_j +- u_k, +-m_j +- m_k)."""
    sign = -1.0 if (2 * mv[j]) % 2 else 1.0
    return sign * ((X[:, j] + X[:, k]) ** 2 + (mv[j] + mv[k]) ** 2) * ((X[:, j] - X[:, k]) ** 2 + (mv[j] - mv[k]) ** 2) / 16


def _type2_c(inst: IdentityInstance, group: str, prefactor: float) -> LatticeIntegrand:
    """C_n sums with the pair weight Gamma(g +- u_j +- u_k) / Gamma(+- u_j +- u_k)."""
    n = inst.n
    (gamma,) = inst.cont("gamma")
    (r,) = inst.disc("gamma")
    r = float(r)
    a = inst.cont(group)
    factor = _c_factor(a, inst.disc(group))

    def func(mv, X):
        out = np.ones(X.shape[0], dtype=complex)
        for j in range(X.shape[1]):
            out = out * factor(mv[j], X[:, j])
        for j, k in combinations(range(X.shape[1]), 2):
            log = np.zeros(X.shape[0], dtype=complex)
            for s1 in (1, -1):
                for s2 in (1, -1):
                    log = log + _log_cg(gamma + s1 * X[:, j] + s2 * X[:, k], r + s1 * mv[j] + s2 * mv[k])
            out = out * np.exp(log) * _pair_recip(X, mv, j, k)
        return out

    exponent = 4j * gamma * (n - 1) + 2j * a.sum() - 2 * len(a) + 2
    return LatticeIntegrand(inst.identity, n, inst.nu, prefactor, exponent, func, canonical=_canon_signed)


def _type2_a(inst: IdentityInstance) -> LatticeIntegrand:
    n = inst.n
    (a0,), (b0,) = inst.cont("a0"), inst.cont("b0")
    (N0,), (M0,) = (float(v) for v in inst.disc("a0")), (float(v) for v in inst.disc("b0"))
    a, b = inst.cont("a"), inst.cont("b")
    log_f = _log_ab(a, inst.disc("a"), b, inst.disc("b"))

    def func(mv, X):
        m_all, x_all = _full_lattice(mv, X, 0)
        log = np.zeros(X.shape[0], dtype=complex)
        for j in range(n + 1):
            log = log + log_f(m_all[j], x_all[:, j])
        for i, j in combinations(range(n + 1), 2):
            xs = x_all[:, i] + x_all[:, j]
            ms = m_all[i] + m_all[j]
            log = log + _log_cg(a0 + xs, N0 + ms) + _log_cg(b0 - xs, M0 - ms)
        return _vandermonde(x_all, m_all, c_type=False) * np.exp(log)

    prefactor = 1 / ((2 ** (n + 3) * math.pi) ** n * math.factorial(n + 1))
    exponent = 2j * (a.sum() + b.sum()) + 2 * (n - 1) * (1j * (a0 + b0) - 2) - 12 + 4 * n - 2
    return LatticeIntegrand(inst.identity, n, inst.nu, prefactor, exponent, func, canonical=_canon_full(0))


def build_lhs(instance: IdentityInstance, validated: bool = False) -> LatticeIntegrand:
    """Integrand of the left-hand side (or of any side of a transformation)."""
    d = _require_lattice(instance.identity)
    if not validated:
        _ensure_valid(instance)
    n = instance.n
    a_prefactor = 1 / ((2 ** (n + 1) * math.pi) ** n * math.factorial(n))
    if d.id == "STAR_TRIANGLE_MB":
        return _star_triangle(instance)
    if d.id in ("CN_BETA", "CN_AW", "CN_TRAFO", "CN_TRAFO_DEGEN"):
        return _c_type(instance)
    if d.id in ("AN_BETA", "AN_TRAFO"):
        return _a_constrained(instance)
    if d.id == "AN_DEGEN_FULL":
        return _a_unconstrained(instance, n + 2, a_prefactor)
    if d.id == "AN_DEGEN_KONO":
        return _a_unconstrained(instance, n + 1, a_prefactor)
    if d.id == "AN_TRAFO_DEGEN":
        return _a_unconstrained(instance, n + instance.m + 1, a_prefactor)
    if d.id == "SELBERG_MB":
        return _type2_c(instance, "g", 1 / ((8 * math.pi) ** n * math.factorial(n)))
    if d.id == "CN_TYPE2_TRAFO":
        return _type2_c(instance, "a", 1.0)
    return _type2_a(instance)


def decay_exponent(instance: IdentityInstance) -> float:
    """Real power of the integrand modulus in one variable z_j = (m_j + i x_j)/2."""
    d = _require_lattice(instance.identity)
    if d.kind == "transformation" and instance.n == 0:
        return -math.inf
    return build_lhs(instance, validated=True).decay


# ---------------------------------------------------------------------------
# right-hand sides


def _prod_gamma(args) -> complex:
    out = 1 + 0j
    for x, N in args:
        out *= _cg(x, N)
    return out


def _pairs(a, N):
    return [(a[i] + a[j], N[i] + N[j]) for i, j in combinations(range(len(a)), 2)]


def _cross(a, N, b, M):
    return [(a[i] + b[j], N[i] + M[j]) for i in range(len(a)) for j in range(len(b))]


def _type2_a_rhs(inst: IdentityInstance) -> complex:
    n = inst.n
    (a,), (b,) = inst.cont("a0"), inst.cont("b0")
    (N,), (M,) = inst.disc("a0"), inst.disc("b0")
    ak, bk = inst.cont("a"), inst.cont("b")
    Nk, Mk = inst.disc("a"), inst.disc("b")
    three = range(3)
    args = []

    def same_side(j):
        # Gamma((j-1)a + jb + a_i + a_k) Gamma(ja + (j-1)b + b_i + b_k) over i < k
        for i, k in combinations(three, 2):
            args.append(((j - 1) * a + j * b + ak[i] + ak[k], (j - 1) * N + j * M + Nk[i] + Nk[k]))
            args.append((j * a + (j - 1) * b + bk[i] + bk[k], j * N + (j - 1) * M + Mk[i] + Mk[k]))

    def cross(j):
        for i in three:
            for k in three:
                args.append(((j - 1) * (a + b) + ak[i] + bk[k], (j - 1) * (N + M) + Nk[i] + Mk[k]))

    if n % 2:
        h, g = (n + 1) // 2, (n - 1) // 2
        phase = phase_odd(n, N, M)
        args += [(h * a, h * N), (h * b, h * M)]
        for i, k in combinations(three, 2):
            args.append((g * a + ak[i] + ak[k], g * N + Nk[i] + Nk[k]))
            args.append((g * b + bk[i] + bk[k], g * M + Mk[i] + Mk[k]))
        for j in range(1, h + 1):
            cross(j)
        for j in range(1, g + 1):
            same_side(j)
            args.append((j * (a + b), j * (N + M)))
    else:
        h = n // 2
        phase = phase_even(n, N, M, Nk, Mk)
        for i in three:
            args.append((h * a + ak[i], h * N + Nk[i]))
            args.append((h * b + bk[i], h * M + Mk[i]))
        args.append(((h - 1) * a + ak.sum(), (h - 1) * N + sum(Nk)))
        args.append(((h - 1) * b + bk.sum(), (h - 1) * M + sum(Mk)))
        for j in range(1, h + 1):
            cross(j)
            same_side(j)
            args.append((j * (a + b), j * (N + M)))
    return phase_pi(phase / 2) * _prod_gamma(args)


def _selberg_rhs(inst: IdentityInstance) -> complex:
    n = inst.n
    (gamma,) = inst.cont("gamma")
    (r,) = inst.disc("gamma")
    g, R = inst.cont("g"), inst.disc("g")
    value = phase_pi(r * n * (n - 1) / 2) + 0j
    base = _cg(gamma, r)
    for j in range(1, n + 1):
        value *= _cg(j * gamma, j * r) / base
        value *= _prod_gamma(((j - 1) * gamma + x, (j - 1) * r + N) for x, N in _pairs(g, R))
    return value


def _type2_c_partner(inst: IdentityInstance) -> tuple[complex, IdentityInstance]:
    n = inst.n
    (gamma,) = inst.cont("gamma")
    (L,) = inst.disc("gamma")
    a, N = inst.cont("a"), inst.disc("a")
    X = ((1 - n) * gamma - a[:4].sum()) / 2
    K = ((1 - n) * L - sum(N[:4])) / 2
    prefactor = phase_pi(n * sum(N[:4])) + 0j
    for ell in range(n):
        for lo in (0, 4):
            prefactor *= _prod_gamma((ell * gamma + x, ell * L + s) for x, s in _pairs(a[lo:lo + 4], N[lo:lo + 4]))
    b = [a[j] - 1j + X for j in range(4)] + [a[j] + 1j - X for j in range(4, 8)]
    M = [N[j] + K for j in range(4)] + [N[j] - K for j in range(4, 8)]
    mu = inst.nu if K.denominator == 1 else (Fraction(1, 2) - inst.nu) % 1
    partner = IdentityInstance(
        inst.identity,
        n,
        {"gamma": inst.params["gamma"], "a": tuple(ParamPoint(x, HalfInt.of(s)) for x, s in zip(b, M))},
        nu=mu,
    )
    return prefactor, partner


def _points(cont, disc) -> tuple[ParamPoint, ...]:
    return tuple(ParamPoint(x, HalfInt.of(s)) for x, s in zip(cont, disc))


def build_rhs(instance: IdentityInstance, validated: bool = False):
    """Closed-form value, or ``(prefactor, partner)`` for a transformation.

    The partner is again an :class:`IdentityInstance`; its own left-hand side
    times ``prefactor`` equals the left-hand side of ``instance``.
    """
    d = _require_lattice(instance.identity)
    if not validated:
        _ensure_valid(instance)
    inst = instance
    n, m, nu = inst.n, inst.m, inst.nu
    if d.id == "STAR_TRIANGLE_MB":
        return _prod_gamma(_cross(inst.cont("b"), inst.disc("b"), inst.cont("a"), inst.disc("a")))
    if d.id in ("CN_BETA", "CN_AW", "CN_TRAFO", "CN_TRAFO_DEGEN"):
        a, N = inst.cont("a"), inst.disc("a")
        value = _prod_gamma(_pairs(a, N))
        if d.id == "CN_BETA":
            return phase_pi((n - 1) * (n - 2) * nu) * value
        if d.id == "CN_AW":
            return phase_pi(-n * (n + 1) * nu) * value / _cg(a.sum(), sum(N))
        partner_params = {"a": _points(-1j - a, [-v for v in N])}
        partner = IdentityInstance(d.id, m, partner_params, nu=nu, m=n)
        if d.id == "CN_TRAFO":
            return phase_pi((n + m - 1) * (n + m - 2) * nu) * value, partner
        value /= _cg(a.sum() + 2j * m, sum(N))
        return phase_pi((n + m) * (n + m + 1) * nu) * value, partner
    a, N = (inst.cont("a"), inst.disc("a")) if "a" in inst.params else (None, None)
    if d.id in ("AN_BETA", "AN_DEGEN_FULL", "AN_DEGEN_KONO", "AN_TRAFO", "AN_TRAFO_DEGEN"):
        b, M = inst.cont("b"), inst.disc("b")
        cross = _prod_gamma(_cross(a, N, b, M))
        A, B, SN, SM = a.sum(), b.sum(), sum(N), sum(M)
        if d.id == "AN_BETA":
            outer = _prod_gamma([(A - x, SN - s) for x, s in zip(a, N)] + [(B - x, SM - s) for x, s in zip(b, M)])
            return phase_pi((n - 1) * (SN * SN - (n + 2) * nu * nu)) * outer * cross
        if d.id == "AN_DEGEN_FULL":
            return phase_pi(SM) * phase_pi(((n + 1) * n - 2) * nu) * cross
        if d.id == "AN_DEGEN_KONO":
            return phase_pi(n * (n + 1) * nu) * cross / _cg(A + B, SN + SM)
        if d.id == "AN_TRAFO":
            W = SN
            partner = IdentityInstance(
                d.id,
                m,
                {"a": _points(A / (m + 1) - a, [-v for v in N]), "b": _points(B / (m + 1) - b, [-v for v in M])},
                nu=nu,
                m=n,
                lattice_total=W,
            )
            return phase_pi(phase_trafo(n, m, W, nu)) * cross, partner
        partner = IdentityInstance(
            d.id,
            m,
            {"a": _points(-1j - b, [-v for v in M]), "b": _points(-1j - a, [-v for v in N])},
            nu=nu,
            m=n,
        )
        # (n+m) rather than (n-m): only this sign agrees with the nu = 0 case
        # after the half-integer shift of m_j, N and M
        value = phase_pi((n + m) * (n + m + 1) * nu) * phase_pi(m * (SN - SM)) * cross
        return value / _cg(A + B + 2j * m, SN + SM), partner
    if d.id == "SELBERG_MB":
        return _selberg_rhs(inst)
    if d.id == "CN_TYPE2_TRAFO":
        return _type2_c_partner(inst)
    return _type2_a_rhs(inst)
