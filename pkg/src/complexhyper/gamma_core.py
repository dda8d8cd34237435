"""Complex gamma function over the field of complex numbers and its helpers.

The complex gamma function is indexed by a pair ``(x, n)`` with ``x`` complex
and ``n`` an integer::

    Gamma(x, n) = Gamma((n + i x)/2) / Gamma(1 + (n - i x)/2)

An equivalent two-slot notation uses ``alpha = (n + i x)/2`` and
``alpha' = (-n + i x)/2``, in which ``Gamma(alpha|alpha') = Gamma(alpha)/Gamma(1 - alpha')``.

Everything is computed in log space so that large imaginary arguments do not
overflow. Integer sign factors are tracked as integers and applied at the end.
"""

from __future__ import annotations

import cmath
import contextlib
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np
from scipy import special

__all__ = [
    "GammaPoleError",
    "GammaArg",
    "HalfInt",
    "log_gamma",
    "complex_gamma",
    "complex_gamma_ab",
    "complex_gamma_array",
    "pochhammer",
    "gamma_pair_asymptotic",
    "decay_exponent",
    "sign_power",
    "extended_precision",
]


class GammaPoleError(ArithmeticError):
    """Raised when a gamma evaluation lands on an uncancelled pole."""


# Digits used when extended precision is switched on; ``None`` means binary64.
_EXTENDED_DPS: int | None = None


@contextlib.contextmanager
def extended_precision(dps: int = 30):
    """Evaluate the scalar functions of this module with mpmath at ``dps`` digits."""
    global _EXTENDED_DPS
    if dps < 30:
        raise ValueError("extended precision needs at least 30 digits")
    previous = _EXTENDED_DPS
    _EXTENDED_DPS = dps
    try:
        with mpmath.workdps(dps):
            yield
    finally:
        _EXTENDED_DPS = previous


def _nonpositive_integer(z: complex) -> bool:
    return z.imag == 0 and z.real <= 0 and float(z.real).is_integer()


def sign_power(k: int) -> int:
    """Return (-1)**k for an integer k as an exact integer."""
    return -1 if k % 2 else 1


@dataclass(frozen=True, order=True)
class HalfInt:
    """An element of Z or Z + 1/2 stored as twice its value."""

    twice_value: int

    @classmethod
    def of(cls, value) -> "HalfInt":
        if isinstance(value, HalfInt):
            return value
        if isinstance(value, str):
            value = Fraction(value.strip())
        frac = Fraction(value)
        doubled = 2 * frac
        if doubled.denominator != 1:
            raise ValueError(f"{value!r} is not an integer or half-integer")
        return cls(int(doubled))

    @property
    def nu(self) -> Fraction:
        return Fraction(self.twice_value % 2, 2)

    @property
    def is_integer(self) -> bool:
        return self.twice_value % 2 == 0

    def as_fraction(self) -> Fraction:
        return Fraction(self.twice_value, 2)

    def as_int(self) -> int:
        if self.twice_value % 2:
            raise ValueError(f"{self} is a half-integer")
        return self.twice_value // 2

    def __float__(self) -> float:
        return self.twice_value / 2

    def __add__(self, other) -> "HalfInt":
        return HalfInt(self.twice_value + HalfInt.of(other).twice_value)

    __radd__ = __add__

    def __sub__(self, other) -> "HalfInt":
        return HalfInt(self.twice_value - HalfInt.of(other).twice_value)

    def __rsub__(self, other) -> "HalfInt":
        return HalfInt.of(other) - self

    def __neg__(self) -> "HalfInt":
        return HalfInt(-self.twice_value)

    def __mul__(self, k: int) -> "HalfInt":
        if not isinstance(k, int):
            return NotImplemented
        return HalfInt(self.twice_value * k)

    __rmul__ = __mul__

    def __str__(self) -> str:
        if self.twice_value % 2 == 0:
            return str(self.twice_value // 2)
        return f"{self.twice_value}/2"


@dataclass(frozen=True)
class GammaArg:
    """The index (x, n) of the complex gamma function."""

    x: complex
    n: int

    @property
    def alpha(self) -> complex:
        return (self.n + 1j * self.x) / 2

    @property
    def alpha_prime(self) -> complex:
        return (-self.n + 1j * self.x) / 2

    @classmethod
    def from_alpha(cls, alpha: complex, alpha_prime: complex, n: int | None = None) -> "GammaArg":
        """Convert from the two-slot notation.

        ``n`` may be passed explicitly to keep the integer difference exact;
        otherwise ``alpha - alpha'`` must be within 1e-12 of an integer.
        """
        if n is None:
            diff = complex(alpha) - complex(alpha_prime)
            n = round(diff.real)
            if abs(diff - n) > 1e-12:
                raise ValueError(f"alpha - alpha' = {diff} is not an integer")
        x = -1j * (complex(alpha) + complex(alpha_prime))
        return cls(x, int(n))


def log_gamma(z: complex) -> complex:
    """Principal-branch logarithm of the Euler gamma function."""
    z = complex(z)
    if _nonpositive_integer(z):
        raise GammaPoleError(f"gamma has a pole at {z}")
    if _EXTENDED_DPS is not None:
        return mpmath.loggamma(mpmath.mpc(z))
    return complex(special.loggamma(z))


def complex_gamma(x: complex, n: int) -> complex:
    """Evaluate Gamma((n+ix)/2) / Gamma(1+(n-ix)/2).

    For negative ``n`` the reflection Gamma(x, -n) = (-1)^n Gamma(x, n) is used
    first, which also resolves the points where a pole of the numerator meets
    a pole of the denominator.
    """
    n = int(n)
    sign = 1
    if n < 0:
        sign = sign_power(n)
        n = -n
    if _EXTENDED_DPS is not None:
        x = mpmath.mpc(x)
        top = (n + 1j * x) / 2
        bottom = 1 + (n - 1j * x) / 2
    else:
        x = complex(x)
        top = (n + 1j * x) / 2
        bottom = 1 + (n - 1j * x) / 2
    if _nonpositive_integer(complex(top)):
        raise GammaPoleError(f"complex gamma has an uncancelled pole at x={x}, n={n}")
    if _nonpositive_integer(complex(bottom)):
        return 0j
    if _EXTENDED_DPS is not None:
        return sign * mpmath.exp(mpmath.loggamma(top) - mpmath.loggamma(bottom))
    return sign * cmath.exp(special.loggamma(top) - special.loggamma(bottom))


def complex_gamma_ab(alpha: complex, alpha_prime: complex, n: int | None = None) -> complex:
    """Evaluate Gamma(alpha|alpha') = Gamma(alpha) / Gamma(1 - alpha')."""
    arg = GammaArg.from_alpha(alpha, alpha_prime, n)
    return complex_gamma(arg.x, arg.n)


def complex_gamma_array(x, n) -> np.ndarray:
    """Vectorised complex gamma for arrays of x and integer n (broadcast).

    Poles come back as ``inf``/``nan`` instead of raising; callers on a valid
    contour never hit them.
    """
    x = np.asarray(x, dtype=complex)
    n = np.asarray(n)
    if n.dtype.kind == "f":
        rounded = np.rint(n)
        if np.any(rounded != n):
            raise ValueError("discrete index of the complex gamma must be an integer")
        n = rounded
    n = n.astype(np.int64)
    sign = np.where(n % 2 == 0, 1.0, np.where(n < 0, -1.0, 1.0))
    m = np.abs(n)
    top = (m + 1j * x) / 2
    bottom = 1 + (m - 1j * x) / 2
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        value = sign * np.exp(special.loggamma(top) - special.loggamma(bottom))
    zero = (bottom.imag == 0) & (bottom.real <= 0) & (bottom.real == np.round(bottom.real))
    if np.any(zero):
        value = np.where(zero, 0j, value)
    return value


def pochhammer(a: complex, n: int) -> complex:
    """Signed Pochhammer symbol (a)_n.

    For n > 0 it is a(a+1)...(a+n-1); for n < 0 it is 1/((a-1)(a-2)...(a+n)).
    """
    n = int(n)
    if n == 0:
        return 1
    if n > 0:
        value = 1
        for k in range(n):
            value *= a + k
        return value
    denom = 1
    for k in range(1, -n + 1):
        factor = a - k
        if factor == 0:
            raise ZeroDivisionError(f"pochhammer({a}, {n}) has a vanishing factor a-{k}")
        denom *= factor
    return 1 / denom


def gamma_pair_asymptotic(x: complex, y: complex, n: int, m: int, N: int, z: complex) -> complex:
    """Leading large-|z| estimate of Gamma(x+R, n+N) Gamma(y-R, m-N), z = (N+iR)/2.

    Valid heuristically for |z| >= 5, where the O(1/|z|) correction stays below
    about 20%.
    """
    z = complex(z)
    modulus = abs(z)
    power = cmath.exp((1j * (x + y) - 2) * math.log(modulus))
    if z.imag == 0:
        if z.real > 0:
            return power * sign_power(N - m)
        return power * sign_power(N - n)
    # The same phase law holds on both sides of the real axis with the
    # principal argument; shifting the lower-half argument by pi would flip
    # the sign whenever n + m is odd.
    phase_angle = cmath.phase(z)
    return power * cmath.exp(1j * (phase_angle * (n + m) + math.pi * (N - m)))


def decay_exponent(instance) -> float:
    """Power of the integrand modulus in z_j = (m_j + i x_j)/2 for a lattice identity instance."""
    from .identity_registry import decay_exponent as from_registry

    return from_registry(instance)
