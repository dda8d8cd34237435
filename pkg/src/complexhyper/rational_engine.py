"""Exact checks of the rational hypergeometric residue identities.

Five rational identities are covered. Each one equates a finite residue sum
(the "middle" expression) with a closed-form rational function (the "right"
expression). Both sides are evaluated with :class:`fractions.Fraction`, so a
check either holds exactly or yields a counterexample.

A numerical bridge, :func:`finite_support_check`, ties the closed forms to
the bilateral lattice sums of Pochhammer-symbol integrands they come from.

Identity ids and parameter layouts:

``RAT_CN_EX1``  ``a`` has 2n+2 entries
``RAT_CN_EX2``  ``a`` has 2n+3 entries, A = sum(a)
``RAT_AN_EX1``  ``a`` has n entries, ``b`` has n+2
``RAT_AN_EX2``  ``a`` and ``b`` have n+1 entries each
``RAT_AN_EX3``  ``a`` has n+1 entries, ``b`` has n+2
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

__all__ = [
    "RATIONAL_IDS",
    "VanishingDenominator",
    "RationalInstance",
    "RationalReport",
    "eval_middle",
    "eval_right",
    "sample_rational_instance",
    "verify_exact",
    "parameter_counts",
    "SupportReport",
    "pochhammer_lattice_term",
    "separating_shift",
    "finite_support_check",
]

RATIONAL_IDS = ("RAT_CN_EX1", "RAT_CN_EX2", "RAT_AN_EX1", "RAT_AN_EX2", "RAT_AN_EX3")

class VanishingDenominator(ZeroDivisionError):
    """A denominator factor of a rational expression is exactly zero."""


def canonical_id(identity: str) -> str:
    identity = identity.upper()
    if identity not in RATIONAL_IDS:
        raise KeyError(f"unknown rational identity {identity!r}")
    return identity


def parameter_counts(identity: str, n: int) -> tuple[int, int]:
    """Number of ``a`` and ``b`` parameters for an identity at rank ``n``."""
    identity = canonical_id(identity)
    return {
        "RAT_CN_EX1": (2 * n + 2, 0),
        "RAT_CN_EX2": (2 * n + 3, 0),
        "RAT_AN_EX1": (n, n + 2),
        "RAT_AN_EX2": (n + 1, n + 1),
        "RAT_AN_EX3": (n + 1, n + 2),
    }[identity]


@dataclass(frozen=True)
class RationalInstance:
    identity: str
    n: int
    a: tuple[Fraction, ...]
    b: tuple[Fraction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "identity", canonical_id(self.identity))
        object.__setattr__(self, "a", tuple(Fraction(v) for v in self.a))
        object.__setattr__(self, "b", tuple(Fraction(v) for v in self.b))
        if self.n < 1:
            raise ValueError("rank must be at least 1")
        expected = parameter_counts(self.identity, self.n)
        if (len(self.a), len(self.b)) != expected:
            raise ValueError(
                f"{self.identity} at n={self.n} takes {expected[0]} a's and {expected[1]} b's, "
                f"got {len(self.a)} and {len(self.b)}"
            )

    def to_json(self) -> dict:
        return {
            "id": self.identity,
            "n": self.n,
            "a": [str(v) for v in self.a],
            "b": [str(v) for v in self.b],
        }


@dataclass
class RationalReport:
    identity: str
    n: int
    trials: int
    passed: bool
    resampled: int = 0
    counterexample: dict | None = field(default=None)

    def to_json(self) -> dict:
        out = {"id": self.identity, "n": self.n, "trials": self.trials, "pass": self.passed}
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample
        return out


class _Product:
    """Exact running product that names the first vanishing denominator factor."""

    def __init__(self):
        self.num = Fraction(1)
        self.den = Fraction(1)

    def times(self, value: Fraction):
        self.num *= value

    def over(self, value: Fraction, label: str):
        if value == 0:
            raise VanishingDenominator(f"denominator factor {label} vanishes")
        self.den *= value

    def value(self) -> Fraction:
        return self.num / self.den


def _sign(k: int) -> int:
    return -1 if k % 2 else 1


def _cn_middle(a: Sequence[Fraction], n: int, numerator) -> Fraction:
    total = Fraction(0)
    indices = range(len(a))
    for chosen in combinations(indices, n):
        rest = [i for i in indices if i not in chosen]
        term = _Product()
        for j in chosen:
            term.times(numerator(a[j]))
            for ell in rest:
                term.over(a[ell] ** 2 - a[j] ** 2, f"a{ell + 1}^2-a{j + 1}^2")
        total += term.value()
    return _sign(n * (n - 1) // 2) * total


def _pairwise_sums(values: Sequence[Fraction], p: _Product, name: str):
    for i, j in combinations(range(len(values)), 2):
        p.over(values[i] + values[j], f"{name}{i + 1}+{name}{j + 1}")


def _an_middle(a: Sequence[Fraction], b: Sequence[Fraction], n: int, extra=None) -> Fraction:
    """Residue sum shared by the three A_n examples.

    ``extra`` is the constant C = B + sum(a) of the third example, which adds
    the factors (C + B_s - A_s), (C - b_r) and (C + a_l).
    """
    total = Fraction(0)
    nb, na = len(b), len(a)
    for s in range(n + 1):
        weight = Fraction(math.factorial(s) * math.factorial(n - s), math.factorial(n + 1))
        sign = _sign(s * (s - 1) // 2 + (n - s) * (n - s - 1) // 2)
        for rs in combinations(range(nb), s):
            r_rest = [r for r in range(nb) if r not in rs]
            b_s = sum((b[r] for r in rs), Fraction(0))
            for ls in combinations(range(na), n - s):
                l_rest = [ell for ell in range(na) if ell not in ls]
                a_s = sum((a[ell] for ell in ls), Fraction(0))
                shift = b_s - a_s
                term = _Product()
                for r in rs:
                    for q in r_rest:
                        term.over(b[q] - b[r], f"b{q + 1}-b{r + 1}")
                for ell in ls:
                    for q in l_rest:
                        term.over(a[q] - a[ell], f"a{q + 1}-a{ell + 1}")
                for r in rs:
                    term.times(b[r] + shift)
                for ell in ls:
                    term.times(a[ell] - shift)
                for q in r_rest:
                    term.over(b[q] + shift, f"b{q + 1}+B_s-A_s")
                for q in l_rest:
                    term.over(a[q] - shift, f"a{q + 1}+A_s-B_s")
                for r in rs:
                    for ell in ls:
                        term.times((b[r] + a[ell]) ** 2)
                for r in rs:
                    for q in range(na):
                        term.over(b[r] + a[q], f"b{r + 1}+a{q + 1}")
                for ell in ls:
                    for q in range(nb):
                        term.over(b[q] + a[ell], f"b{q + 1}+a{ell + 1}")
                if extra is not None:
                    term.times(extra + shift)
                    for r in rs:
                        term.times(extra - b[r])
                    for ell in ls:
                        term.times(extra + a[ell])
                total += sign * weight * term.value()
    return total


def eval_middle(instance: RationalInstance) -> Fraction:
    """Exact value of the residue-sum expression."""
    a, b, n = instance.a, instance.b, instance.n
    if instance.identity == "RAT_CN_EX1":
        return _cn_middle(a, n, lambda v: v)
    if instance.identity == "RAT_CN_EX2":
        big_a = sum(a, Fraction(0))
        return _cn_middle(a, n, lambda v: v * (big_a**2 - v**2))
    if instance.identity in ("RAT_AN_EX1", "RAT_AN_EX2"):
        return _an_middle(a, b, n)
    return _an_middle(a, b, n, extra=sum(b, Fraction(0)) + sum(a, Fraction(0)))


def eval_right(instance: RationalInstance) -> Fraction:
    """Exact value of the closed-form rational expression."""
    return _right(instance.identity, instance.n, instance.a, instance.b)


def _right(identity: str, n: int, a: Sequence, b: Sequence):
    """Closed form for any field of parameters (Fraction or complex)."""
    p = _Product()
    if identity == "RAT_CN_EX1":
        p.times(_sign(n) * sum(a, Fraction(0)))
        _pairwise_sums(a, p, "a")
        return p.value()
    if identity == "RAT_CN_EX2":
        big_a = sum(a, Fraction(0))
        p.times(_sign(n))
        for v in a:
            p.times(big_a - v)
        _pairwise_sums(a, p, "a")
        return p.value()
    big_b = sum(b, Fraction(0))
    p.times(_sign(n * (n + 1) // 2))
    if identity == "RAT_AN_EX1":
        for v in a:
            p.times(big_b + v)
        for k, v in enumerate(b):
            p.over(big_b - v, f"B-b{k + 1}")
    elif identity == "RAT_AN_EX2":
        big_a = sum(a, Fraction(0))
        p.times(big_a + big_b)
        p.over(big_a, "sum(a)")
        p.over(big_b, "sum(b)")
    else:
        big_a = sum(a, Fraction(0))
        for v in a:
            p.times(v + big_b)
        for v in b:
            p.times(big_a + big_b - v)
        p.over(big_a, "sum(a)")
        for k, v in enumerate(b):
            p.over(big_b - v, f"B-b{k + 1}")
    for i, u in enumerate(a):
        for k, v in enumerate(b):
            p.over(u + v, f"a{i + 1}+b{k + 1}")
    return p.value()


def _random_fraction(rng: random.Random, bound: int = 100) -> Fraction:
    while True:
        num = rng.randint(-bound, bound)
        if num:
            return Fraction(num, rng.randint(1, bound))


def sample_rational_instance(identity: str, n: int, rng: random.Random, max_tries: int = 10_000):
    """Draw a random instance whose two expressions have no vanishing denominator.

    Returns ``(instance, rejected)`` where ``rejected`` counts discarded draws.
    """
    na, nb = parameter_counts(identity, n)
    for attempt in range(max_tries):
        inst = RationalInstance(
            identity,
            n,
            tuple(_random_fraction(rng) for _ in range(na)),
            tuple(_random_fraction(rng) for _ in range(nb)),
        )
        try:
            eval_right(inst)
            eval_middle(inst)
        except VanishingDenominator:
            continue
        return inst, attempt
    raise RuntimeError(f"sampling exhausted after {max_tries} rejections")


def verify_exact(identity: str, n: int, trials: int = 100, seed: int = 0) -> RationalReport:
    """Compare both expressions exactly at ``trials`` random rational points."""
    identity = canonical_id(identity)
    if not 1 <= n <= 3:
        raise ValueError("exact verification is budgeted for 1 <= n <= 3")
    if trials < 1:
        raise ValueError("trials must be positive")
    rng = random.Random(seed)
    rejected = 0
    for _ in range(trials):
        inst, skipped = sample_rational_instance(identity, n, rng)
        rejected += skipped
        middle, right = eval_middle(inst), eval_right(inst)
        if middle != right:
            example = inst.to_json()
            example["middle"] = str(middle)
            example["right"] = str(right)
            return RationalReport(identity, n, trials, False, rejected, example)
    return RationalReport(identity, n, trials, True, rejected)


# ---------------------------------------------------------------------------
# lattice sums of Pochhammer integrands behind the closed forms


def _poch_array(z: np.ndarray, k: int) -> np.ndarray:
    """Signed Pochhammer (z)_k on arrays for an integer index k."""
    out = np.ones_like(z)
    if k > 0:
        for i in range(k):
            out = out * (z + i)
    elif k < 0:
        for i in range(1, -k + 1):
            out = out / (z - i)
    return out


# discrete data of the five specializations: (N for a, M for b); the entries
# beyond the rational parameters are the balancing partners
def _discrete_data(identity: str, n: int):
    if identity == "RAT_CN_EX1":
        return [0] * (2 * n + 2) + [1, 1], []
    if identity == "RAT_CN_EX2":
        return [0] * (2 * n + 3) + [2], []
    if identity == "RAT_AN_EX1":
        return [0] * n + [1, 1], [0] * (n + 2)
    if identity == "RAT_AN_EX2":
        return [0] * (n + 1) + [1], [0] * (n + 1) + [1]
    return [0] * (n + 1) + [2], [0] * (n + 2)


def _complete(identity: str, n: int, a: Sequence[complex], b: Sequence[complex]):
    """Append the partner parameters fixed by sum(a) + sum(b) = 0."""
    a, b = list(a), list(b)
    rest = -(sum(a) + sum(b))
    if identity in ("RAT_CN_EX1", "RAT_AN_EX1"):
        a += [rest / 2, rest / 2]
    elif identity == "RAT_AN_EX2":
        a.append(rest / 2)
        b.append(rest / 2)
    else:
        a.append(rest)
    return np.array(a, dtype=complex), np.array(b, dtype=complex)


def _dropped_power(identity: str, n: int) -> int:
    return 2 * n * n + 3 * n if identity.startswith("RAT_CN") else n * n + 2 * n + 2


def pochhammer_lattice_term(identity: str, n: int, a: Sequence[complex], b: Sequence[complex]):
    """Integrand f(m, X) of the lattice sum behind a rational identity, prefactor included.

    ``a`` and ``b`` are the rational parameters of the identity (complex, with
    negative imaginary parts); the balancing partners are appended here.  The
    C-type form has n free variables; the A-type form has x_{n+1} = -sum x
    and m_{n+1} = -sum m.  Contours are the real lines.
    """
    identity = canonical_id(identity)
    N, M = _discrete_data(identity, n)
    a, b = _complete(identity, n, a, b)
    N, M = np.array(N, dtype=float), np.array(M, dtype=float)
    if identity.startswith("RAT_CN"):
        prefactor = 1 / ((2 ** (2 * n + 1) * math.pi * 1j) ** n * math.factorial(n))

        def func(m, X):
            out = np.ones(X.shape[0], dtype=complex)
            for j in range(n):
                x, mj = X[:, j], m[j]
                out = out * (x * x - mj * mj)
                for al, Nl in zip(a, N):
                    out = out * _poch_array(1 + (al - Nl + (x - mj)) / 2, int(Nl + mj - 1))
                    out = out * _poch_array(1 + (al - Nl - (x - mj)) / 2, int(Nl - mj - 1))
                for k in range(j + 1, n):
                    for s in (1, -1):
                        out = out * ((x + s * X[:, k]) ** 2 - (mj + s * m[k]) ** 2)
            return prefactor * out

        return func
    prefactor = 1 / ((2 ** (n + 3) * math.pi * 1j) ** n * math.factorial(n + 1))

    def func(m, X):
        x_all = np.concatenate([X, -X.sum(axis=1, keepdims=True)], axis=1)
        m_all = tuple(m) + (-sum(m),)
        out = np.ones(X.shape[0], dtype=complex)
        for j in range(n + 1):
            x, mj = x_all[:, j], m_all[j]
            for al, Nl in zip(a, N):
                out = out * _poch_array(1 + (al + x - Nl - mj) / 2, int(Nl + mj - 1))
            for bl, Ml in zip(b, M):
                out = out * _poch_array(1 + (bl - x - Ml + mj) / 2, int(Ml - mj - 1))
            for k in range(j + 1, n + 1):
                out = out * ((x - x_all[:, k]) ** 2 - (mj - m_all[k]) ** 2)
        return prefactor * out

    return func


def _window(lower: list[float], upper: list[float]) -> tuple[float, float]:
    """Open interval (max lower, min upper); infinite when a side is empty."""
    return max(lower, default=-math.inf), min(upper, default=math.inf)


def _pick(lo: float, hi: float) -> float:
    if lo >= hi:
        raise ValueError("no straight contour separates the two pole families")
    if math.isinf(lo) and math.isinf(hi):
        return 0.0
    if math.isinf(lo):
        return hi - 1
    if math.isinf(hi):
        return lo + 1
    return (lo + hi) / 2


def separating_shift(identity: str, n: int, a: Sequence[complex], b: Sequence[complex], m: Sequence[float]):
    """Heights h_j of straight contours R + i h_j that separate the pole families of term m.

    The poles of Pochhammer symbols indexed by N + m - 1 (and, for A-type,
    M - m_{n+1} - 1 through x_{n+1} = -sum x) must lie above the contours,
    the others below.  Raises ValueError when no such straight lines exist.
    """
    identity = canonical_id(identity)
    N, M = _discrete_data(identity, n)
    a, b = _complete(identity, n, a, b)
    if identity.startswith("RAT_CN"):
        heights = []
        for mj in m:
            lo = [al.imag for al, Nl in zip(a, N) if Nl - mj - 1 < 0]
            hi = [-al.imag for al, Nl in zip(a, N) if Nl + mj - 1 < 0]
            heights.append(_pick(*_window(lo, hi)))
        return np.array(heights)
    m_all = list(m) + [-sum(m)]
    boxes = []
    for mj in m_all:
        lo = [bl.imag for bl, Ml in zip(b, M) if Ml - mj - 1 < 0]
        hi = [-al.imag for al, Nl in zip(a, N) if Nl + mj - 1 < 0]
        boxes.append(_window(lo, hi))
    # Im x_{n+1} = -sum h_j must sit in the last box
    last_lo, last_hi = boxes[-1]
    total_lo = sum(lo for lo, _ in boxes[:-1])
    total_hi = sum(hi for _, hi in boxes[:-1])
    target = _pick(max(-last_hi, total_lo), min(-last_lo, total_hi))
    heights = np.array([_pick(lo, hi) for lo, hi in boxes[:-1]])
    # move the free heights towards the target sum without leaving their boxes
    for j, (lo, hi) in enumerate(boxes[:-1]):
        gap = target - heights.sum()
        room_lo = lo - heights[j] if not math.isinf(lo) else -math.inf
        room_hi = hi - heights[j] if not math.isinf(hi) else math.inf
        step = min(max(gap, room_lo * 0.999), room_hi * 0.999) if gap else 0.0
        heights[j] += step
    if not abs(heights.sum() - target) < 1e-9 * (1 + abs(target)):
        # fall back to the interior of the slab nearest the current sum
        raise ValueError("no straight contour separates the two pole families")
    return heights


@dataclass
class SupportReport:
    identity: str
    n: int
    eps: tuple[float, ...]
    centre: tuple[complex, ...]
    shifted_exact: tuple[complex, ...]
    off_centre: float
    extrapolated: complex
    expected: Fraction
    rel_err: float
    passed: bool
    seconds: float

    def to_json(self) -> dict:
        return {
            "id": self.identity,
            "n": self.n,
            "eps": list(self.eps),
            "centre": [[v.real, v.imag] for v in self.centre],
            "shifted_exact": [[v.real, v.imag] for v in self.shifted_exact],
            "off_centre": self.off_centre,
            "extrapolated": [self.extrapolated.real, self.extrapolated.imag],
            "expected": str(self.expected),
            "rel_err": self.rel_err,
            "pass": self.passed,
            "seconds": self.seconds,
        }


def _lagrange_at_zero(nodes: Sequence[float]) -> list[float]:
    weights = []
    for i, e in enumerate(nodes):
        w = 1.0
        for j, f in enumerate(nodes):
            if j != i:
                w *= f / (f - e)
        weights.append(w)
    return weights


def finite_support_check(
    instance: RationalInstance,
    eps: Sequence[float] = (0.1, 0.05, 0.025),
    shells: int | None = None,
    tol: float = 1e-6,
) -> SupportReport:
    """Evaluate the lattice sum behind a rational identity near its real parameters.

    Every rational parameter is moved to a - i eps.  At each eps the m = 0
    integral is compared with 2^k times the closed form at the same shifted
    point (k is the power of two dropped in passing to the rational form), and
    the lattice terms with 0 < |m|_inf <= ``shells`` are computed to confirm
    they vanish (``off_centre`` is their largest modulus in the normalisation
    of the closed form).  The deviations are extrapolated polynomially to eps = 0 and
    added to the exact value at the real point.
    """
    from .mb_engine import QuadConfig, integrate_1d, integrate_nd

    start = time.perf_counter()
    n, identity = instance.n, instance.identity
    shells = (2 if n == 1 else 1) if shells is None else shells
    expected = eval_right(instance)
    scale = float(2 ** _dropped_power(identity, n))
    centre, exact, off = [], [], 0.0
    # the power-law tail fit needs |x| well beyond the largest pole
    x_max = 40.0 * (max(abs(float(v)) for v in instance.a + instance.b) + shells + 2)

    def integrate(func, m, h, atol=0.0):
        if n == 1:
            res = integrate_1d(lambda x: func(m, x[:, None] + 1j * h), x_max, tol / 100, atol=atol, exponent=-6.0)
            return res.value
        cfg = QuadConfig(tol_rel=tol / 10, x_max=x_max)
        return integrate_nd(lambda pts: func(m, pts + 1j * h), n, cfg, exponent=-6.0).value

    for e in eps:
        a = [complex(v) - 1j * e for v in instance.a]
        b = [complex(v) - 1j * e for v in instance.b]
        func = pochhammer_lattice_term(identity, n, a, b)
        origin = (0.0,) * n
        value = integrate(func, origin, separating_shift(identity, n, a, b, origin))
        centre.append(complex(value))
        exact.append(scale * complex(_right(identity, n, a, b)))
        if e == eps[0]:
            rng = range(-shells, shells + 1)
            for m in np.array(np.meshgrid(*[rng] * n)).reshape(n, -1).T:
                if np.any(m):
                    m = tuple(float(v) for v in m)
                    h = separating_shift(identity, n, a, b, m)
                    term = integrate(func, m, h, atol=1e-13 * scale)
                    off = max(off, abs(term) / scale)
    weights = _lagrange_at_zero(eps)
    deviation = sum(w * (c - x) for w, c, x in zip(weights, centre, exact))
    target = scale * float(expected)
    extrapolated = target + deviation
    rel = abs(deviation) / abs(target)
    return SupportReport(
        identity, n, tuple(eps), tuple(centre), tuple(exact), off,
        extrapolated / scale, expected, rel, rel <= tol and off <= 1e-10,
        time.perf_counter() - start,
    )
