"""Hyperbolic and elliptic gamma functions and their degeneration limits.

The hyperbolic gamma function (Faddeev's modular quantum dilogarithm) is

    gamma2(u; w1, w2) = exp(-pi i B22(u; w) / 2) * gamma(u; w)

with two representations of ``gamma``: a ratio of infinite q-products, valid
when Im(w1/w2) != 0, and an exponential of a contour integral, valid in the
strip 0 < Re u < Re(w1 + w2). Outside the strip the integral route uses the
shift relation gamma2(u + w1) = 2 sin(pi u / w2) gamma2(u), applied at most
eight times. That relation is checked against the product form in the tests.

``limit_scan`` tabulates three degenerations: elliptic to hyperbolic, hyperbolic
to the complex gamma function (b -> i), and hyperbolic to Pochhammer symbols
(b -> 1).
"""

from __future__ import annotations

import cmath
import csv
import io
import json
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate

from .gamma_core import complex_gamma, pochhammer

__all__ = [
    "DomainError",
    "QuasiPeriods",
    "EllipticBases",
    "b22",
    "q_pochhammer_inf",
    "ell_gamma",
    "hyp_gamma",
    "LimitRow",
    "LimitTable",
    "limit_scan",
    "richardson_limit",
    "DEFAULT_GRID",
]

MAX_SHIFTS = 8
DEFAULT_GRID = tuple(0.08 * 2.0**-k for k in range(5))


class DomainError(ValueError):
    """The requested point is outside every available representation."""


@dataclass(frozen=True)
class QuasiPeriods:
    w1: complex
    w2: complex

    def __post_init__(self):
        object.__setattr__(self, "w1", complex(self.w1))
        object.__setattr__(self, "w2", complex(self.w2))
        if self.w1.real <= 0 or self.w2.real <= 0:
            raise DomainError("quasi-periods need positive real parts")

    @property
    def Q(self) -> complex:
        return self.w1 + self.w2

    @property
    def b(self) -> complex:
        return cmath.sqrt(self.w1 / self.w2)

    @property
    def tau(self) -> complex:
        return self.w1 / self.w2

    def swapped(self) -> "QuasiPeriods":
        return QuasiPeriods(self.w2, self.w1)

    def scaled(self, lam: complex) -> "QuasiPeriods":
        return QuasiPeriods(lam * self.w1, lam * self.w2)

    @classmethod
    def from_b(cls, b: complex, scale: complex = 1.0) -> "QuasiPeriods":
        """Quasi-periods with sqrt(w1/w2) = b and sqrt(w1 w2) = scale."""
        return cls(b * scale, scale / b)


@dataclass(frozen=True)
class EllipticBases:
    p: complex
    q: complex

    def __post_init__(self):
        if abs(self.p) >= 1 or abs(self.q) >= 1:
            raise DomainError("elliptic bases must lie inside the unit disc")


def b22(u: complex, w: QuasiPeriods) -> complex:
    """Second-order multiple Bernoulli polynomial B_{2,2}(u; w1, w2)."""
    half = (w.w1 + w.w2) / 2
    return ((u - half) ** 2 - (w.w1**2 + w.w2**2) / 12) / (w.w1 * w.w2)


def _log_qp(t: complex, q: complex, chunk: int = 256, max_terms: int = 10_000_000):
    """Sum of log(1 - t q^k); returns None when a factor vanishes exactly."""
    total = 0j
    quiet = 0
    start = 0
    log_q = cmath.log(q) if q != 0 else None
    while start < max_terms:
        if q == 0:
            powers = np.array([1.0 + 0j])
        else:
            powers = np.exp(log_q * np.arange(start, start + chunk))
        terms = t * powers
        if np.any(terms == 1):
            return None
        logs = np.log1p(-terms)
        # stop once the increments stay below 1e-16 three times in a row
        small = np.abs(logs) < 1e-16
        for i, flag in enumerate(small):
            quiet = quiet + 1 if flag else 0
            if quiet == 3:
                return total + complex(np.sum(logs[: i + 1]))
        total += complex(np.sum(logs))
        if q == 0:
            return total
        start += chunk
    raise RuntimeError("q-Pochhammer product did not converge")


def q_pochhammer_inf(t: complex, q: complex) -> complex:
    """Infinite product (t; q)_inf = prod_{k>=0} (1 - t q^k) for |q| < 1."""
    t, q = complex(t), complex(q)
    if abs(q) >= 1:
        raise DomainError("(t; q)_inf diverges for |q| >= 1")
    log_value = _log_qp(t, q)
    if log_value is None:
        return 0j
    return cmath.exp(log_value)


def _truncation(base: complex, scale: float) -> int:
    """Number of powers of ``base`` needed before scale*|base|^k < 1e-17."""
    mod = abs(base)
    if mod == 0:
        return 1
    return max(1, int(math.ceil((math.log(1e-17) - math.log(max(scale, 1.0))) / math.log(mod))) + 1)


def ell_gamma(z: complex, bases: EllipticBases | tuple, extra_terms: int = 0) -> complex:
    """Elliptic gamma function Gamma(z; p, q) as a truncated double product."""
    if not isinstance(bases, EllipticBases):
        bases = EllipticBases(*bases)
    z = complex(z)
    p, q = complex(bases.p), complex(bases.q)
    if z == 0:
        raise DomainError("elliptic gamma needs z != 0")
    scale = max(abs(z), 1 / abs(z))
    J = _truncation(p, scale) + extra_terms if p != 0 else 1
    K = _truncation(q, scale) + extra_terms if q != 0 else 1
    pj = p ** np.arange(J) if p != 0 else np.array([1.0 + 0j])
    qk = q ** np.arange(K) if q != 0 else np.array([1.0 + 0j])
    grid = np.multiply.outer(pj, qk)
    lower = z * grid
    if np.any(lower == 1):
        raise DomainError(f"elliptic gamma has a pole at z={z}")
    log_value = np.sum(np.log1p(-(p * q / z) * grid)) - np.sum(np.log1p(-lower))
    return complex(np.exp(log_value))


# ----------------------------------------------------------------------------
# hyperbolic gamma


def _log_gamma_product(u: complex, w: QuasiPeriods) -> complex | None:
    """log gamma(u; w) from the q-products; None at a zero of gamma."""
    if w.tau.imag == 0:
        raise DomainError("product representation needs Im(w1/w2) != 0")
    if w.tau.imag < 0:
        w = w.swapped()
    q = cmath.exp(2j * math.pi * w.w1 / w.w2)
    q_dual = cmath.exp(-2j * math.pi * w.w2 / w.w1)
    top = _log_qp(q_dual * cmath.exp(2j * math.pi * u / w.w1), q_dual)
    bottom = _log_qp(cmath.exp(2j * math.pi * u / w.w2), q)
    if bottom is None:
        raise DomainError(f"hyperbolic gamma has a pole at u={u}")
    if top is None:
        return None
    return top - bottom


def _contour_height(w: QuasiPeriods) -> float:
    """Half the height of the nearest pole 2 pi i k / w_j above the real axis."""
    heights = []
    for wj in (w.w1, w.w2):
        for k in (1, -1):
            pole = 2j * math.pi * k / wj
            if pole.imag > 0:
                heights.append(pole.imag)
    return 0.5 * min(heights)


def _gamma_integral(u: complex, w: QuasiPeriods) -> complex:
    if not (0 < u.real < w.Q.real):
        raise DomainError("integral representation needs 0 < Re u < Re(w1 + w2)")
    height = _contour_height(w)
    w1, w2, Q = w.w1, w.w2, w.Q

    def integrand(t: float) -> complex:
        x = t + 1j * height
        if t > 0:
            value = cmath.exp((u - Q) * x) / ((cmath.exp(-w1 * x) - 1) * (cmath.exp(-w2 * x) - 1))
        else:
            value = cmath.exp(u * x) / ((1 - cmath.exp(w1 * x)) * (1 - cmath.exp(w2 * x)))
        return value / x

    # decay rates on both sides decide the integration window
    rate = min(u.real, (Q - u).real)
    span = (40.0 + abs(u) + abs(Q)) / rate
    pieces = [(-span, -1.0), (-1.0, 0.0), (0.0, 1.0), (1.0, span)]
    total = 0j
    with warnings.catch_warnings():
        # quad flags roundoff once the requested 1e-13 is reached at the noise floor
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in pieces:
            value, _ = integrate.quad(
                integrand, lo, hi, complex_func=True, epsabs=1e-15, epsrel=1e-13, limit=400
            )
            total += value
    return cmath.exp(-total)


def _hyp_integral(u: complex, w: QuasiPeriods) -> complex:
    """gamma2 through the integral, shifting u into the strip when necessary."""
    # move along the quasi-period with the larger real part
    if w.w1.real >= w.w2.real:
        step, other = w.w1, w.w2
    else:
        step, other = w.w2, w.w1
    target = w.Q.real / 2
    shifts = round((target - u.real) / step.real)
    if abs(shifts) > MAX_SHIFTS:
        raise DomainError(f"u={u} needs {abs(shifts)} shifts, more than {MAX_SHIFTS}")
    v = u + shifts * step
    if not (0 < v.real < w.Q.real):
        raise DomainError(f"cannot bring u={u} into the integral strip")
    value = cmath.exp(-0.5j * math.pi * b22(v, w)) * _gamma_integral(v, w)
    # gamma2(y + step) = 2 sin(pi y / other) gamma2(y)
    if shifts > 0:
        for k in range(shifts):
            value /= 2 * cmath.sin(math.pi * (u + k * step) / other)
    else:
        for k in range(-shifts):
            value *= 2 * cmath.sin(math.pi * (v + k * step) / other)
    return value


def hyp_gamma(u: complex, w: QuasiPeriods | tuple, rep: str = "auto") -> complex:
    """Hyperbolic gamma function gamma2(u; w1, w2).

    ``rep`` is ``"product"``, ``"integral"`` or ``"auto"``. Auto uses the product
    when Im(w1/w2) is not too small and falls back to the integral otherwise.
    """
    if not isinstance(w, QuasiPeriods):
        w = QuasiPeriods(*w)
    u = complex(u)
    if rep == "product":
        log_value = _log_gamma_product(u, w)
        if log_value is None:
            return 0j
        return cmath.exp(-0.5j * math.pi * b22(u, w) + log_value)
    if rep == "integral":
        return _hyp_integral(u, w)
    if rep != "auto":
        raise ValueError(f"unknown representation {rep!r}")
    if abs(w.tau.imag) > 1e-3:
        return hyp_gamma(u, w, "product")
    return _hyp_integral(u, w)


# ----------------------------------------------------------------------------
# limit scans


@dataclass(frozen=True)
class LimitRow:
    delta: float
    lhs: complex
    rhs: complex

    @property
    def ratio(self) -> complex:
        return self.lhs / self.rhs

    @property
    def deviation(self) -> float:
        return abs(self.ratio - 1)

    def as_dict(self) -> dict:
        r = self.ratio
        return {
            "delta": self.delta,
            "lhs": [self.lhs.real, self.lhs.imag],
            "rhs": [self.rhs.real, self.rhs.imag],
            "ratio_re": r.real,
            "ratio_im": r.imag,
            "abs_ratio_minus_1": self.deviation,
        }


@dataclass
class LimitTable:
    mode: str
    point: dict
    rows: list

    def ratios(self) -> np.ndarray:
        return np.array([row.ratio for row in self.rows])

    def convergence_order(self) -> float:
        """Slope of log|ratio - 1| against log(delta) over the grid."""
        d = np.array([row.delta for row in self.rows])
        e = np.array([row.deviation for row in self.rows])
        keep = e > 0
        if keep.sum() < 2:
            return float("inf")
        return float(np.polyfit(np.log(d[keep]), np.log(e[keep]), 1)[0])

    def extrapolated(self, order: int | None = None, log_terms: bool | None = None) -> complex:
        """Limit of the ratio column, by default with the model suited to the mode."""
        settings = dict(EXTRAPOLATION[self.mode])
        if order is not None:
            settings["order"] = order
        if log_terms is not None:
            settings["log_terms"] = log_terms
        size = 1 + settings["order"] * (2 if settings["log_terms"] else 1)
        while size > len(self.rows) and settings["order"] > 1:
            settings["order"] -= 1
            size = 1 + settings["order"] * (2 if settings["log_terms"] else 1)
        return richardson_limit([row.delta for row in self.rows], self.ratios(), **settings)

    def monotone_tail(self, points: int = 3) -> bool:
        dev = [row.deviation for row in self.rows[-points:]]
        return all(b < a for a, b in zip(dev, dev[1:]))

    def to_json(self) -> str:
        return json.dumps(
            {
                "mode": self.mode,
                "point": self.point,
                "order": self.convergence_order(),
                "extrapolated": [self.extrapolated().real, self.extrapolated().imag],
                "rows": [row.as_dict() for row in self.rows],
            },
            indent=2,
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["delta", "lhs", "rhs", "ratio_re", "ratio_im", "abs_ratio_minus_1"])
        for row in self.rows:
            r = row.ratio
            writer.writerow([row.delta, row.lhs, row.rhs, r.real, r.imag, row.deviation])
        return buf.getvalue()


def richardson_limit(
    deltas: Sequence[float], values: Sequence[complex], order: int = 1, log_terms: bool = False
) -> complex:
    """Extrapolate ``values`` to delta = 0.

    The model is c0 + sum_k c_k delta^k for k = 1..order, with an extra
    delta^k log(delta) term per order when ``log_terms`` is set. The last
    points of the grid (as many as there are unknowns) fix the coefficients.
    """
    size = 1 + order * (2 if log_terms else 1)
    d = np.asarray(deltas, dtype=float)
    v = np.asarray(values, dtype=complex)
    if len(d) < size:
        raise ValueError(f"need {size} grid points, have {len(d)}")
    d, v = d[-size:], v[-size:]
    columns = [np.ones_like(d)]
    for k in range(1, order + 1):
        if log_terms:
            columns.append(d**k * np.log(d))
        columns.append(d**k)
    basis = np.column_stack(columns).astype(complex)
    return complex(np.linalg.solve(basis, v)[0])


# the b -> i limit carries a delta*log(delta) correction from the (4 pi delta)^(ix-1) normalisation
EXTRAPOLATION = {
    "ell_to_hyp": {"order": 2, "log_terms": False},
    "hyp_to_complex": {"order": 2, "log_terms": True},
    "hyp_to_rational": {"order": 2, "log_terms": False},
}


def _ell_to_hyp_row(v: float, u: complex, w: QuasiPeriods) -> LimitRow:
    z = cmath.exp(-2 * math.pi * v * u)
    p = cmath.exp(-2 * math.pi * v * w.w1)
    q = cmath.exp(-2 * math.pi * v * w.w2)
    lhs = ell_gamma(z, EllipticBases(p, q))
    prefactor = cmath.exp(-math.pi * (2 * u - w.w1 - w.w2) / (12 * v * w.w1 * w.w2))
    return LimitRow(v, lhs, prefactor * hyp_gamma(u, w))


def _hyp_to_complex_row(delta: float, n: int, x: complex, scale: float) -> LimitRow:
    w = QuasiPeriods.from_b(1j + delta, scale)
    root = cmath.sqrt(w.w1 * w.w2)
    lhs = hyp_gamma(1j * root * (n + x * delta), w, "product")
    rhs = (
        cmath.exp(0.5j * math.pi * n * n)
        * cmath.exp((1j * x - 1) * math.log(4 * math.pi * delta))
        * complex_gamma(x, n)
    )
    return LimitRow(delta, lhs, rhs)


def _hyp_to_rational_row(delta: float, n: int, y: complex, scale: float) -> LimitRow:
    w = QuasiPeriods.from_b(1 + 1j * delta, scale)
    root = cmath.sqrt(w.w1 * w.w2)
    lhs = hyp_gamma(root * (n + y * delta), w, "product")
    rhs = (
        cmath.exp(-0.5j * math.pi * (n - 1) ** 2)
        * (4 * math.pi * delta) ** (n - 1)
        * pochhammer(1 - (n + 1j * y) / 2, n - 1)
    )
    return LimitRow(delta, lhs, rhs)


def limit_scan(mode: str, point: dict, grid: Iterable[float] | None = None) -> LimitTable:
    """Tabulate LHS/RHS of a degeneration limit over a decreasing grid.

    Modes and point keys:

    * ``ell_to_hyp``: ``u``, ``w1``, ``w2``; the grid holds v.
    * ``hyp_to_complex``: ``n``, ``x`` and optional ``scale`` = sqrt(w1 w2).
    * ``hyp_to_rational``: ``n``, ``y`` and optional ``scale``.
    """
    grid = list(DEFAULT_GRID if grid is None else grid)
    if any(g <= 0 for g in grid):
        raise DomainError("grid values must be positive")
    rows = []
    if mode == "ell_to_hyp":
        w = QuasiPeriods(point["w1"], point["w2"])
        u = complex(point["u"])
        rows = [_ell_to_hyp_row(v, u, w) for v in grid]
    elif mode == "hyp_to_complex":
        n, x = int(point["n"]), complex(point["x"])
        scale = float(point.get("scale", 1.0))
        rows = [_hyp_to_complex_row(d, n, x, scale) for d in grid]
    elif mode == "hyp_to_rational":
        n, y = int(point["n"]), complex(point["y"])
        scale = float(point.get("scale", 1.0))
        rows = [_hyp_to_rational_row(d, n, y, scale) for d in grid]
    else:
        raise ValueError(f"unknown limit mode {mode!r}")
    return LimitTable(mode, {k: str(v) for k, v in point.items()}, rows)
