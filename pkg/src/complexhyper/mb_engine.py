"""Numerical engine for bilateral lattice sums of contour integrals.

The central object is a sum over a lattice (Z + nu)^d of integrals over R^d
whose integrand decays like a power of |z_j| = |m_j + i x_j| / 2.  Each
lattice term is integrated with an adaptive Gauss-Kronrod rule, lattice
shells |m|_inf = K are accumulated with compensated summation and the
truncation tail is removed by a least-squares fit in powers of the shell
radius.

Also here: the Mellin-Barnes check of the complex binomial theorem and a
polar-patch quadrature over the complex plane.
"""

from __future__ import annotations

import cmath
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Callable, Sequence

import mpmath
import numpy as np

from . import identity_registry as reg
from .gamma_core import complex_gamma, complex_gamma_ab, complex_gamma_array

__all__ = [
    "QuadConfig",
    "Quad1D",
    "LatticeSum",
    "VerificationReport",
    "SubdivisionLimitExceeded",
    "TruncationNotConverged",
    "ConditionallyConvergent",
    "integrate_1d",
    "tail_cutoff",
    "integrate_nd",
    "oscillatory_tail",
    "bilateral_evaluate",
    "verify",
    "binomial_check",
    "BinomialReport",
    "cplane_integrate",
    "CPlaneReport",
    "CPLANE_KERNELS",
    "bracket_power",
]


class SubdivisionLimitExceeded(RuntimeError):
    """The adaptive rule ran out of panels; ``best`` holds (value, error)."""

    def __init__(self, message: str, best):
        super().__init__(message)
        self.best = best


class TruncationNotConverged(RuntimeError):
    """The lattice sum missed its tolerance at the largest allowed shell."""

    def __init__(self, message: str, partial):
        super().__init__(message)
        self.partial = partial


class ConditionallyConvergent(ValueError):
    pass


TAIL_MODES = ("power_law", "drop")


@dataclass(frozen=True)
class QuadConfig:
    tol_rel: float = 1e-6
    x_max: float = 40.0
    n_lattice_max: int = 192
    subdivision_limit: int = 4000
    tail_mode: str = "power_law"
    workers: int = 1
    separable: bool = True
    n_lattice_min: int = 16

    def __post_init__(self):
        if not self.tol_rel > 0:
            raise ValueError("tol_rel must be positive")
        if self.x_max < 10:
            raise ValueError("x_max must be at least 10")
        if self.n_lattice_max < 4:
            raise ValueError("n_lattice_max must be at least 4")
        if self.tail_mode not in TAIL_MODES:
            raise ValueError(f"tail_mode must be one of {TAIL_MODES}")
        if self.workers < 1:
            raise ValueError("workers must be positive")


# ---------------------------------------------------------------------------
# Gauss-Kronrod (10, 21) rule on [-1, 1]

_XK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
])
_WK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG_HALF = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])
NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WK[:-1], _WK[::-1]])
GAUSS_WEIGHTS = np.zeros(21)
_gauss_positions = [1, 3, 5, 7, 9]
for _w, _p in zip(_WG_HALF, _gauss_positions):
    GAUSS_WEIGHTS[_p] = _w
    GAUSS_WEIGHTS[20 - _p] = _w


@dataclass
class Quad1D:
    value: complex | np.ndarray
    error: float | np.ndarray
    evals: int
    panels: int
    converged: bool = True


def _as_2d(values, npts: int) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    return values.reshape(npts, -1)


def _gk_batch(g, lo: np.ndarray, hi: np.ndarray):
    """Kronrod estimates and |Kronrod - Gauss| errors for many panels at once."""
    half = (hi - lo) / 2
    mid = (hi + lo) / 2
    x = (mid[:, None] + half[:, None] * NODES[None, :]).ravel()
    vals = _as_2d(g(x), x.size).reshape(lo.size, 21, -1)
    kron = np.einsum("pnk,n->pk", vals, KRONROD_WEIGHTS) * half[:, None]
    gauss = np.einsum("pnk,n->pk", vals, GAUSS_WEIGHTS) * half[:, None]
    return kron, np.abs(kron - gauss), x.size


def _fsum(values: np.ndarray) -> np.ndarray:
    """Compensated column sums of a complex (rows, k) array."""
    values = np.asarray(values)
    return np.array([complex(math.fsum(col.real), math.fsum(col.imag)) for col in values.T])


def _adaptive(g, breaks: Sequence[float], rtol: float, atol: float, limit: int, norm: str):
    """Adaptive Gauss-Kronrod over consecutive breakpoints; g may be vector valued.

    ``norm='each'`` asks every component for its own relative accuracy;
    ``norm='max'`` measures all components against the largest one.
    """
    lo = np.asarray(breaks[:-1], dtype=float)
    hi = np.asarray(breaks[1:], dtype=float)
    est, err, evals = _gk_batch(g, lo, hi)
    while True:
        total = _fsum(est)
        err_tot = err.sum(axis=0)
        if norm == "max":
            target = np.full(total.shape, max(rtol * np.max(np.abs(total)), atol))
        else:
            target = np.maximum(rtol * np.abs(total), atol)
        target = np.where(target > 0, target, np.finfo(float).tiny)
        if np.all(err_tot <= target):
            return total, err_tot, evals, lo.size, True
        if lo.size >= limit:
            return total, err_tot, evals, lo.size, False
        scaled = np.max(err / target, axis=1)
        worst = max(1, min(lo.size // 4 + 1, limit - lo.size))
        # ties broken by position so the refinement order is reproducible
        order = sorted(range(lo.size), key=lambda p: (-scaled[p], p))[:worst]
        split = np.zeros(lo.size, dtype=bool)
        split[order] = True
        mids = (lo[split] + hi[split]) / 2
        new_lo = np.concatenate([lo[split], mids])
        new_hi = np.concatenate([mids, hi[split]])
        n_est, n_err, n_ev = _gk_batch(g, new_lo, new_hi)
        evals += n_ev
        keep = ~split
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        est = np.concatenate([est[keep], n_est])
        err = np.concatenate([err[keep], n_err])
        order = np.argsort(lo, kind="stable")
        lo, hi, est, err = lo[order], hi[order], est[order], err[order]


def _geometric_breaks(x_max: float, start: float = 0.25) -> list[float]:
    breaks = [0.0]
    x = start
    while x < x_max:
        breaks.append(x)
        x *= 2
    breaks.append(float(x_max))
    return breaks


def _power_tail(g, X: float, exponent, nterms: int = 4):
    """Fit g ~ sum_j c_j x^(p-j) on [X/4, X] and integrate it over [X, inf).

    Returns (tail, error, evals); vector valued g gives one tail per component.
    """
    x = X * np.geomspace(0.25, 1.0, 16)
    vals = _as_2d(g(x), x.size)
    k = vals.shape[1]
    if exponent is None:
        # slope of log|g| over the last octave, per component
        probe = np.abs(vals[[-8, -1]])
        with np.errstate(divide="ignore", invalid="ignore"):
            slope = np.log(probe[1] / probe[0]) / math.log(x[-1] / x[-8])
        exponent = np.where(np.isfinite(slope), slope, -10.0)
    exps = np.broadcast_to(np.asarray(exponent, dtype=complex), (k,))
    tails = np.zeros(k, dtype=complex)
    errs = np.zeros(k)
    for c in range(k):
        p = exps[c]
        if not p.real < -1:
            raise ConditionallyConvergent(f"tail exponent {p.real:.3g} is not integrable")
        fits = []
        for terms in (nterms, nterms - 1):
            powers = p - np.arange(terms)
            basis = (x[:, None] / X) ** powers[None, :]
            coef = np.linalg.lstsq(basis, vals[:, c], rcond=None)[0]
            # integral of (x/X)^q over [X, inf) is -X/(q+1)
            fits.append(complex(np.sum(coef * (-X / (powers + 1)))))
        tails[c] = fits[0]
        errs[c] = abs(fits[0] - fits[1])
    return tails, errs, x.size


def oscillatory_tail(omega: float, exponent: complex, nterms: int = 4):
    """Tail rule for symmetric integrands ~ x^p (A e^{i omega x} + B e^{-i omega x}).

    Each basis term x^q e^{i k x} is integrated over [X, inf) with the upper
    incomplete gamma function.
    """
    omega = abs(float(omega))
    if omega == 0:
        raise ValueError("oscillatory tail needs a non-zero frequency")

    def exact(q: complex, k: float, X: float) -> complex:
        # int_X^inf x^q e^{ikx} dx = (-ik)^{-(q+1)} Gamma(q+1, -ikX)
        s = mpmath.mpc(q) + 1
        z = mpmath.mpc(0, -k) * X
        return complex(mpmath.power(mpmath.mpc(0, -k), -s) * mpmath.gammainc(s, z))

    def tail(g, X: float):
        # at least eight samples per period on [X/2, X], or the fit aliases
        count = max(48, math.ceil(2 * omega * X / math.pi))
        x = X * np.linspace(0.5, 1.0, count)
        vals = _as_2d(g(x), x.size)
        k = vals.shape[1]
        tails = np.zeros(k, dtype=complex)
        errs = np.zeros(k)
        for c in range(k):
            fits = []
            for terms in (nterms, nterms - 1):
                cols, integrals = [], []
                for j in range(terms):
                    q = exponent - j
                    for sign in (1, -1):
                        cols.append((x / X) ** q * np.exp(1j * sign * omega * x))
                        integrals.append(exact(q, sign * omega, X) / X**q)
                coef = np.linalg.lstsq(np.array(cols).T, vals[:, c], rcond=None)[0]
                fits.append(complex(np.sum(coef * np.array(integrals))))
            tails[c] = fits[0]
            errs[c] = abs(fits[0] - fits[1])
        return tails, errs, x.size

    return tail


def tail_cutoff(scale: float, exponent, x_max: float, ratio: float = 1e-4) -> float:
    """Cutoff beyond which an integrand of the given power decays below ``ratio`` of its core."""
    p = float(np.max(np.real(np.atleast_1d(exponent))))
    reach = ratio ** (1 / (p + 1)) if p < -1 else 1e3
    return max(x_max, scale * max(30.0, min(reach, 1e4)))


def integrate_1d(
    f: Callable[[np.ndarray], np.ndarray],
    x_max: float = 40.0,
    tol: float = 1e-10,
    *,
    atol: float = 0.0,
    exponent=None,
    tail_mode="power_law",
    limit: int = 4000,
    norm: str = "each",
    strict: bool = True,
    start: float = 0.25,
) -> Quad1D:
    """Integrate a vectorised f over the real line.

    The line is folded onto [0, x_max] by pairing f(x) + f(-x), so odd
    integrands give exactly zero.  Beyond x_max the tail is handled by
    ``tail_mode``: ``'power_law'`` fits c_0 x^p + c_1 x^(p-1) + ... on the last
    decade (``exponent`` = p when known) and integrates it analytically,
    ``'drop'`` ignores it, and a callable ``tail(g, X) -> (value, err, evals)``
    supplies its own rule.
    """
    shape = {}

    def g(x):
        x = np.asarray(x, dtype=float)
        raw = f(np.concatenate([x, -x]))
        shape["vector"] = np.ndim(raw) > 1
        both = _as_2d(raw, 2 * x.size)
        return both[: x.size] + both[x.size:]

    total, err, evals, panels, ok = _adaptive(g, _geometric_breaks(x_max, start), tol, atol, limit, norm)
    if tail_mode == "power_law":
        tail, tail_err, n = _power_tail(g, x_max, exponent)
    elif tail_mode == "drop":
        tail, tail_err, n = np.zeros_like(total), np.zeros(total.shape), 0
    elif callable(tail_mode):
        tail, tail_err, n = tail_mode(g, x_max)
    else:
        raise ValueError(f"unknown tail mode {tail_mode!r}")
    value = total + tail
    error = err + tail_err
    scalar = not shape["vector"]
    out = Quad1D(value[0] if scalar else value, float(error[0]) if scalar else error, evals + n, panels, ok)
    if not ok and strict:
        raise SubdivisionLimitExceeded(f"subdivision limit {limit} reached", (out.value, out.error))
    return out


def integrate_nd(
    f: Callable[[np.ndarray], np.ndarray],
    n: int,
    config: QuadConfig | None = None,
    *,
    exponent=None,
    x_max: float | None = None,
    strict: bool = True,
) -> Quad1D:
    """Nested adaptive integration over R^n of f(points with shape (k, n)).

    The innermost variable is integrated for a whole batch of outer nodes at
    once, with panels shared across the batch.  Each level works to
    tol/(2n).
    """
    config = config or QuadConfig()
    if not 1 <= n <= 3:
        raise ValueError("integrate_nd supports 1 <= n <= 3")
    tol = config.tol_rel / (2 * n)
    X = x_max or config.x_max
    counter = {"evals": 0, "ok": True}

    def level(prefix: np.ndarray, depth: int):
        """Integrate over variables depth..n-1 for each row of ``prefix``."""
        rows = prefix.shape[0]

        def inner(x):
            x = np.asarray(x, dtype=float)
            if depth == n - 1:
                pts = np.concatenate(
                    [np.repeat(prefix, x.size, axis=0), np.tile(x, rows)[:, None]], axis=1
                )
                vals = np.asarray(f(pts), dtype=complex).reshape(rows, x.size)
                counter["evals"] += pts.shape[0]
                return vals.T
            grid = np.concatenate([np.repeat(prefix, x.size, axis=0), np.tile(x, rows)[:, None]], axis=1)
            return level(grid, depth + 1)[0].reshape(rows, x.size).T

        res = integrate_1d(
            inner,
            X,
            tol,
            exponent=exponent,
            tail_mode=config.tail_mode,
            limit=config.subdivision_limit,
            norm="max",
            strict=False,
        )
        counter["ok"] &= res.converged
        return np.atleast_1d(res.value), np.atleast_1d(res.error)

    value, error = level(np.zeros((1, 0)), 0)
    out = Quad1D(complex(value[0]), float(error[0]), counter["evals"], 0, counter["ok"])
    if strict and not out.converged:
        raise SubdivisionLimitExceeded("subdivision limit reached in a nested level", (out.value, out.error))
    return out


# ---------------------------------------------------------------------------
# lattice sums


@dataclass
class LatticeSum:
    value: complex
    error: float
    shells: int
    evals: int
    converged: bool
    diagnostics: list = field(default_factory=list)


def _shell_points(K: int, dim: int, nu: float) -> list[tuple[float, ...]]:
    """Lattice points of (Z + nu)^dim with max_j (|m_j| - nu) == K, sorted."""
    def coords(k):
        v = k + nu
        return [v] if v == 0 else [-v, v]

    inner = [c for k in range(K) for c in coords(k)]
    outer = coords(K)
    pts = set()
    for axis in range(dim):
        for tup in product(*[outer if j == axis else inner + outer for j in range(dim)]):
            pts.add(tup)
    return sorted(pts)


def _extrapolate(partials: np.ndarray, ts: np.ndarray, q: complex, window: int = 10):
    """Limit of S(t) = S + c_0 t^q + c_1 t^(q-1) + ... from the tail of a sequence.

    Uses even shells only, so contributions alternating with the shell
    index fold into the same power basis.  The error is the spread of three
    fits (different basis sizes and windows).
    """
    idx = np.arange(partials.size)
    even = idx[(idx % 2 == 0) & (idx >= 2)]
    if even.size < 6:
        return partials[-1], abs(partials[-1] - partials[-2]) if partials.size > 1 else abs(partials[-1])
    pick = even[-window:]
    estimates = []
    for terms, shift in ((4, 0), (3, 0), (4, 1)):
        use = pick[: pick.size - shift] if shift else pick
        if use.size < terms + 2:
            continue
        t = ts[use] / ts[use[-1]]
        basis = np.column_stack([np.ones(use.size)] + [t ** (q - j) for j in range(terms - 1)])
        coef = np.linalg.lstsq(basis, partials[use], rcond=None)[0]
        estimates.append(coef[0])
    value = estimates[0]
    err = max(abs(e - value) for e in estimates[1:])
    return value, err


class _TermCache:
    """Lattice-term evaluator with memoisation and ordered (optionally threaded) maps."""

    def __init__(self, term, workers: int, canonical=None):
        self.term = term
        self.workers = workers
        self.canonical = canonical
        self.cache: dict = {}
        self.evals = 0
        self.unconverged = 0

    def values(self, points):
        if self.canonical is not None:
            points = [self.canonical(p) for p in points]
        missing = list(dict.fromkeys(p for p in points if p not in self.cache))
        if missing:
            if self.workers > 1:
                with ThreadPoolExecutor(self.workers) as pool:
                    results = list(pool.map(self.term, missing))
            else:
                results = [self.term(p) for p in missing]
            for p, r in zip(missing, results):
                self.cache[p] = r
                self.evals += r.evals
                self.unconverged += not r.converged
        return [self.cache[p] for p in points]


def _lattice_sum(term, dim: int, nu: float, exps: np.ndarray, combine, config: QuadConfig, canonical=None) -> LatticeSum:
    """Shell-by-shell summation of vector-valued lattice terms.

    ``exps`` holds, per component, the complex power of a single integrated
    term in the shell radius; ``combine(values, errors)`` maps the component
    limits to the reported (value, error).  Points with the same
    ``canonical(point)`` share one evaluation.
    """
    cache = _TermCache(term, config.workers, canonical)
    shells: list[np.ndarray] = []
    shell_err: list[np.ndarray] = []
    K_target = min(config.n_lattice_min, config.n_lattice_max)
    diagnostics = []
    while True:
        for K in range(len(shells), K_target + 1):
            res = cache.values(_shell_points(K, dim, nu))
            vals = np.array([np.atleast_1d(r.value) for r in res])
            errs = np.array([np.atleast_1d(r.error) for r in res])
            shells.append(_fsum(vals))
            shell_err.append(np.array([math.fsum(c) for c in errs.T]))
        partials = np.cumsum(np.array(shells), axis=0)
        ts = np.arange(len(shells)) + nu + 0.5
        quad_err = np.sum(np.array(shell_err), axis=0)
        limits = np.zeros(partials.shape[1], dtype=complex)
        trunc = np.zeros(partials.shape[1])
        for c in range(partials.shape[1]):
            if config.tail_mode == "drop":
                limits[c] = partials[-1, c]
                trunc[c] = abs(partials[-1, c] - partials[-3, c])
            else:
                limits[c], trunc[c] = _extrapolate(partials[:, c], ts, exps[c] + 1)
        value, error = combine(limits, trunc + quad_err)
        if error <= config.tol_rel / 4 * abs(value) or error == 0:
            return LatticeSum(value, error, K_target, cache.evals, True, diagnostics)
        if K_target >= config.n_lattice_max:
            if cache.unconverged:
                diagnostics.append(f"{cache.unconverged} lattice terms missed the quadrature tolerance")
            diagnostics.append(f"truncation not converged at shell {K_target}")
            return LatticeSum(value, error, K_target, cache.evals, False, diagnostics)
        K_target = min(config.n_lattice_max, int(K_target * 1.5) + 2)


def _scalar_combine(values, errors):
    return complex(values[0]), float(errors[0])


def _separable_combine(poly: dict, index: dict, dim: int):
    """Combine 1D moments T[a, b] into sum_poly c * prod_j T[a_j, b_j]."""

    def combine(values, errors):
        total = []
        err = 0.0
        for (xp, mp), coef in sorted(poly.items()):
            factors = [values[index[(xp[j], mp[j])]] for j in range(dim)]
            ferrs = [errors[index[(xp[j], mp[j])]] for j in range(dim)]
            term = coef * np.prod(factors)
            total.append(term)
            for j in range(dim):
                others = np.prod([abs(factors[i]) for i in range(dim) if i != j]) if dim > 1 else 1.0
                err += abs(coef) * ferrs[j] * others
        return complex(math.fsum(t.real for t in total), math.fsum(t.imag for t in total)), err

    return combine


def bilateral_evaluate(integrand, n: int | None = None, decay_exp: float | None = None, config: QuadConfig | None = None) -> LatticeSum:
    """Sum over m in (Z + nu)^n of the integral over R^n of ``integrand``.

    ``integrand`` is a :class:`~complexhyper.identity_registry.LatticeIntegrand`.
    Separable integrands (a product of one-variable factors times a
    polynomial) are reduced to one-dimensional moment sums.
    """
    config = config or QuadConfig()
    n = integrand.dim if n is None else n
    if n != integrand.dim:
        raise ValueError(f"integrand has dimension {integrand.dim}, not {n}")
    decay = integrand.decay if decay_exp is None else float(decay_exp)
    if n == 0:
        value = complex(integrand((), np.zeros((1, 0)))[0])
        return LatticeSum(value, 0.0, 0, 1, True)
    if decay > -3 + 1e-9:
        raise ConditionallyConvergent(f"decay exponent {decay:.4g} > -3: the lattice sum is only conditionally convergent")
    nu = float(integrand.nu)
    c = complex(integrand.exponent)
    tol = config.tol_rel / 20

    if integrand.separable is not None and config.separable:
        sep = integrand.separable
        keys = sorted({(xp[j], mp[j]) for (xp, mp) in sep.poly for j in range(n)})
        index = {k: i for i, k in enumerate(keys)}
        xpow = np.array([k[0] for k in keys])
        mpow = np.array([k[1] for k in keys])
        x_exps = sep.exponent + xpow

        def term(m):
            (mv,) = m
            scale = 1.0 + abs(mv)
            f = lambda x: sep.factor(mv, x)[:, None] * x[:, None] ** xpow[None, :]  # noqa: E731
            res = integrate_1d(f, tail_cutoff(scale, x_exps, config.x_max), tol, exponent=x_exps, tail_mode=config.tail_mode,
                               limit=config.subdivision_limit, norm="max", strict=False)
            weights = mv ** mpow
            return Quad1D(res.value * weights, res.error * np.abs(weights), res.evals, res.panels, res.converged)

        out = _lattice_sum(term, 1, nu, x_exps + mpow + 1, _separable_combine(sep.poly, index, n), config)
        out.value *= integrand.prefactor
        out.error *= abs(integrand.prefactor)
        return out

    def term(m):
        scale = 1.0 + max(abs(v) for v in m)
        X = tail_cutoff(scale, c, config.x_max)
        if n == 1:
            return integrate_1d(lambda x: integrand.func(m, x[:, None]), X, tol, exponent=c,
                                tail_mode=config.tail_mode, limit=config.subdivision_limit, strict=False)
        cfg = replace(config, tol_rel=config.tol_rel / 5)
        return integrate_nd(lambda pts: integrand.func(m, pts), n, cfg, exponent=c, x_max=X, strict=False)

    out = _lattice_sum(term, n, nu, np.array([c + 1]), _scalar_combine, config, integrand.canonical)
    out.value *= integrand.prefactor
    out.error *= abs(integrand.prefactor)
    return out


# ---------------------------------------------------------------------------
# verification


@dataclass
class VerificationReport:
    identity: str
    ranks: tuple
    nu: str
    seed: int | None
    lhs: complex
    lhs_err: float
    rhs: complex
    rel_err: float
    passed: bool
    tol: float
    shells: int = 0
    evals: int = 0
    seconds: float = 0.0
    diagnostics: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "identity": self.identity,
            "ranks": list(self.ranks),
            "nu": self.nu,
            "seed": self.seed,
            "lhs": [self.lhs.real, self.lhs.imag],
            "lhs_err": self.lhs_err,
            "rhs": [self.rhs.real, self.rhs.imag],
            "rel_err": self.rel_err,
            "pass": self.passed,
            "tol": self.tol,
            "shells": self.shells,
            "evals": self.evals,
            "seconds": self.seconds,
            "diagnostics": list(self.diagnostics),
        }


def _passes(rel_err: float, err: float, rhs: complex, tol: float) -> bool:
    return bool(rel_err <= tol and err <= 3 * tol * abs(rhs))


def verify(instance, config: QuadConfig | None = None) -> VerificationReport:
    """Evaluate both sides of a catalog identity and compare them.

    Engine failures become a failed report with diagnostics; invalid
    instances raise :class:`~complexhyper.identity_registry.InvalidInstance`.
    """
    config = config or QuadConfig()
    problems = reg.validate(instance)
    if problems:
        raise reg.InvalidInstance(problems)
    start = time.perf_counter()
    report = VerificationReport(
        instance.identity, instance.ranks, str(instance.nu), instance.seed, complex("nan"), math.inf,
        complex("nan"), math.inf, False, config.tol_rel,
    )
    try:
        lhs = bilateral_evaluate(reg.build_lhs(instance, validated=True), config=config)
        rhs = reg.build_rhs(instance, validated=True)
        err = lhs.error
        shells, evals, diag = lhs.shells, lhs.evals, list(lhs.diagnostics)
        if isinstance(rhs, tuple):
            prefactor, partner = rhs
            side = bilateral_evaluate(reg.build_lhs(partner, validated=True), config=config)
            rhs = prefactor * side.value
            err += abs(prefactor) * side.error
            shells, evals = max(shells, side.shells), evals + side.evals
            diag += [f"partner: {d}" for d in side.diagnostics]
        rel = abs(lhs.value - rhs) / abs(rhs)
        report = replace(
            report,
            lhs=lhs.value,
            lhs_err=float(err),
            rhs=complex(rhs),
            rel_err=rel,
            passed=_passes(rel, err, rhs, config.tol_rel),
            shells=shells,
            evals=evals,
            diagnostics=diag,
        )
    except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        report.diagnostics.append(f"{type(exc).__name__}: {exc}")
    report.seconds = time.perf_counter() - start
    return report


# ---------------------------------------------------------------------------
# complex binomial theorem in bilateral Mellin-Barnes form


def bracket_power(z: complex, alpha: complex, alpha_prime: complex) -> complex:
    """[z]^alpha = z^alpha zbar^alpha' = |z|^(alpha+alpha') e^{i (alpha-alpha') arg z}.

    ``alpha - alpha'`` must be an integer; integer exponents follow 1' = 1,
    i.e. the caller passes both slots explicitly.
    """
    diff = complex(alpha) - complex(alpha_prime)
    k = round(diff.real)
    if abs(diff - k) > 1e-12:
        raise ValueError(f"alpha - alpha' = {diff} is not an integer")
    z = complex(z)
    if z == 0:
        raise ZeroDivisionError("[0]^alpha is not defined here")
    return cmath.exp((alpha + alpha_prime) * math.log(abs(z)) + 1j * k * cmath.phase(z))


@dataclass
class BinomialReport:
    x: complex
    y: complex
    a: complex
    m: int
    value: complex
    error: float
    expected: complex
    rel_err: float
    passed: bool
    terms: int
    evals: int
    seconds: float

    def to_json(self) -> dict:
        return {
            "x": [self.x.real, self.x.imag],
            "y": [self.y.real, self.y.imag],
            "a": [self.a.real, self.a.imag],
            "m": self.m,
            "value": [self.value.real, self.value.imag],
            "error": self.error,
            "expected": [self.expected.real, self.expected.imag],
            "rel_err": self.rel_err,
            "pass": self.passed,
            "terms": self.terms,
            "evals": self.evals,
            "seconds": self.seconds,
        }


def binomial_check(x: complex, y: complex, a: complex, m: int, config: QuadConfig | None = None) -> BinomialReport:
    """Sum the Mellin-Barnes form of 1/[x+y]^alpha and compare with the direct power.

    alpha = (m + i a)/2 and alpha' = (-m + i a)/2.  Every term is an integral
    over nu on the line Im nu = Im(a)/2, which separates the two pole families
    when -1 < Im(a) < 0.  The N-terms decay like min(|y/x|, |x/y|)^|N|, so
    |x| = |y| is rejected as only conditionally convergent.
    """
    config = config or QuadConfig()
    start = time.perf_counter()
    x, y, a, m = complex(x), complex(y), complex(a), int(m)
    if x + y == 0:
        raise ValueError("x + y = 0 is excluded")
    if x == 0 or y == 0:
        raise ValueError("x and y must be non-zero")
    if not -1 < a.imag < 0:
        raise ValueError(f"Im(a) = {a.imag} outside (-1, 0)")
    ratio = abs(y / x)
    if abs(math.log(ratio)) < 1e-3:
        raise ConditionallyConvergent("|x| = |y|: the sum over N does not converge absolutely")
    c = a.imag / 2
    omega = math.log(ratio)
    lx, ly = math.log(abs(x)), math.log(abs(y))
    px, py = cmath.phase(x), cmath.phase(y)
    tail = oscillatory_tail(omega, 1j * a - 2)
    rate = min(ratio, 1 / ratio)

    def term(N: int, atol: float = 0.0):
        def f(t):
            nu = t + 1j * c
            g = complex_gamma_array(nu, N) * complex_gamma_array(a - nu, m - N)
            # 1/([x]^{alpha-s} [y]^s)
            return g * np.exp(-1j * (a - nu) * lx - 1j * (m - N) * px - 1j * nu * ly - 1j * N * py)

        X = max(config.x_max, 100.0, 20.0 * abs(N))
        return integrate_1d(f, X, config.tol_rel / 50, atol=atol, exponent=1j * a - 2, tail_mode=tail)

    # the terms peak around N = m when |y| < |x| and around N = 0 otherwise
    centre = m if ratio < 1 else 0
    lead = term(centre)
    floor = config.tol_rel * abs(lead.value) / 50
    values, errors, evals = [lead.value], [lead.error], lead.evals
    # far terms cancel down to quadrature noise, so the cut-off is set a priori
    reach = max(2, math.ceil(math.log(config.tol_rel / 1000) / math.log(rate)) + 2)
    for side in (1, -1):
        for k in range(1, reach + 1):
            res = term(centre + side * k, floor)
            values.append(res.value)
            errors.append(res.error)
            evals += res.evals
        errors.append(abs(res.value) * rate / (1 - rate))
    s = complex(math.fsum(v.real for v in values), math.fsum(v.imag for v in values))
    value = s / (4 * math.pi * complex_gamma(a, m))
    error = math.fsum(errors) / abs(4 * math.pi * complex_gamma(a, m))
    alpha = (m + 1j * a) / 2
    expected = 1 / bracket_power(x + y, alpha, alpha - m)
    rel = abs(value - expected) / abs(expected)
    return BinomialReport(
        x, y, a, m, value, error, expected, rel, rel <= config.tol_rel, len(values), evals,
        time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# integrals over the complex plane

CPLANE_KERNELS = ("CPLANE_BETA", "CPLANE_STR")


@dataclass
class CPlaneReport:
    kernel: str
    value: complex
    error: float
    expected: complex
    rel_err: float
    passed: bool
    evals: int
    seconds: float

    def to_json(self) -> dict:
        return {
            "kernel": self.kernel,
            "value": [self.value.real, self.value.imag],
            "error": self.error,
            "expected": [self.expected.real, self.expected.imag],
            "rel_err": self.rel_err,
            "pass": self.passed,
            "evals": self.evals,
            "seconds": self.seconds,
        }


def _bracket_array(z: np.ndarray, p: complex, k: int) -> np.ndarray:
    """[z]^(p | p - k) for arrays, k = p - p' an integer."""
    return np.exp((2 * p - k) * np.log(np.abs(z)) + 1j * k * np.angle(z))


def _integer_gap(pair) -> int:
    alpha, alpha_prime = complex(pair[0]), complex(pair[1])
    diff = alpha - alpha_prime
    k = round(diff.real)
    if abs(diff - k) > 1e-12:
        raise ValueError(f"alpha - alpha' = {diff} is not an integer")
    return k


def _plane_integral(points: Sequence[complex], factors, strengths, decay: float, tol: float):
    """Integrate prod_k [s_k (w - z_k)]^(p_k - 1) over C, divided by pi.

    The plane is split by a smooth partition of unity
    chi_k = |w - z_k|^-4 / sum_j |w - z_j|^-4 into one patch per singular
    point.  Each patch is integrated in log-polar coordinates u = log r around
    its point: the local singularity becomes e^{s_k u} decay at u -> -inf and
    the behaviour at infinity becomes e^{-decay u}.  Both ends beyond the
    truncation are added as exponential tails.
    """
    pts = np.asarray(points, dtype=complex)
    dists = [abs(p - q) for i, p in enumerate(pts) for q in pts[i + 1:]]
    lo_scale, hi_scale = math.log(min(dists)), math.log(max(dists))

    def integrand(offsets):
        value = np.ones(offsets[0].shape, dtype=complex)
        for d, (sign, p, k) in zip(offsets, factors):
            value *= _bracket_array(sign * d, p - 1, k)
        return value / math.pi

    total, err_total, evals = 0j, 0.0, 0
    for idx, (z, s) in enumerate(zip(pts, strengths)):
        others = [cmath.phase(q - z) for j, q in enumerate(pts) if j != idx]
        t0 = others[0]
        theta_breaks = sorted({t0, t0 + 2 * math.pi, *[t0 + (t - t0) % (2 * math.pi) for t in others]})

        def radial(u, z=z, idx=idx):
            u = np.asarray(u, dtype=float)
            r = np.exp(u)

            def angular(theta):
                step = r[None, :] * np.exp(1j * np.asarray(theta))[:, None]
                # w - z_j built from the patch centre so that w - z_idx is exact
                offsets = [step + (z - q) for q in pts]
                offsets[idx] = step
                with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                    inv = np.stack([np.abs(d) ** -4.0 for d in offsets])
                    out = integrand(offsets) * (inv[idx] / inv.sum(axis=0)) * (r**2)[None, :]
                # a node on another singular point: the weight's fourth-order zero wins
                return np.where(np.isfinite(out), out, 0)

            val, _, ev, _, _ = _adaptive(angular, theta_breaks, tol / 10, 0.0, 2000, "max")
            counter[0] += ev
            return val

        counter = [0]
        u_lo = lo_scale - 1 + math.log(tol / 100) / s
        u_hi = hi_scale + 1 - math.log(tol / 100) / decay
        breaks = list(np.linspace(u_lo, lo_scale - 1, 8)) + list(np.linspace(lo_scale, hi_scale + 1, 9))
        breaks += list(np.linspace(hi_scale + 2, u_hi, 8))
        breaks = sorted(set(breaks))
        val, err, ev, _, _ = _adaptive(radial, breaks, tol / 4, 0.0, 4000, "max")
        ends = _as_2d(radial(np.array([u_lo, u_hi])), 2)[:, 0]
        # exponential end caps: int_{-inf}^{u_lo} C e^{s u} and int_{u_hi}^{inf} C e^{-decay u}
        caps = ends[0] / s + ends[1] / decay
        total += complex(val[0]) + caps
        err_total += float(err[0]) + 0.1 * abs(caps)
        evals += ev + counter[0]
    return total, err_total, evals


def cplane_integrate(kernel: str, points: Sequence[complex], exponents, config: QuadConfig | None = None) -> CPlaneReport:
    """Integrate a product of complex powers over the plane and compare with its gamma evaluation.

    ``CPLANE_BETA``: points (z1, z2), exponents ((alpha, alpha'), (beta, beta')) for
    int [w - z1]^(alpha-1) [z2 - w]^(beta-1) d^2w / pi.

    ``CPLANE_STR``: points (z1, z2, z3), same two exponent pairs; gamma and gamma'
    are fixed by alpha + beta + gamma = alpha' + beta' + gamma' = 1, and the
    integrand is [z1 - w]^(alpha-1) [z2 - w]^(beta-1) [z3 - w]^(gamma-1).

    Exponent shifts by -1 keep the integer gap, i.e. 1' = 1.
    """
    config = config or QuadConfig()
    start = time.perf_counter()
    if kernel not in CPLANE_KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}; expected one of {CPLANE_KERNELS}")
    pairs = [tuple(complex(v) for v in pair) for pair in exponents]
    if len(pairs) != 2:
        raise ValueError("two exponent pairs (alpha, alpha'), (beta, beta') are expected")
    (al, alp), (be, bep) = pairs
    ka, kb = _integer_gap(pairs[0]), _integer_gap(pairs[1])
    ga, gap = 1 - al - be, 1 - alp - bep
    kg = -ka - kb
    strengths = {"alpha": (al + alp).real, "beta": (be + bep).real, "gamma": (ga + gap).real}
    bad = [name for name, v in strengths.items() if v <= 0]
    if bad:
        raise ValueError("convergence needs Re(p + p') > 0, violated for " + ", ".join(bad))
    pts = [complex(z) for z in points]
    expected_points = 2 if kernel == "CPLANE_BETA" else 3
    if len(pts) != expected_points:
        raise ValueError(f"{kernel} takes {expected_points} points")
    if len(set(pts)) != len(pts):
        raise ValueError("the points must be distinct")

    def cgamma(p, k):
        return complex_gamma_ab(p, p - k, k)

    if kernel == "CPLANE_BETA":
        z1, z2 = pts
        factors = [(1, al, ka), (-1, be, kb)]
        local = [strengths["alpha"], strengths["beta"]]
        expected = cgamma(al, ka) * cgamma(be, kb) / cgamma(al + be, ka + kb)
        expected *= bracket_power(z2 - z1, al + be - 1, alp + bep - 1)
    else:
        z1, z2, z3 = pts
        factors = [(-1, al, ka), (-1, be, kb), (-1, ga, kg)]
        local = [strengths["alpha"], strengths["beta"], strengths["gamma"]]
        expected = cgamma(al, ka) * cgamma(be, kb) * cgamma(ga, kg)
        expected /= bracket_power(z3 - z2, al, alp) * bracket_power(z1 - z3, be, bep) * bracket_power(z2 - z1, ga, gap)
    # total power at infinity is |w|^(sum of (p + p' - 2)); the measure adds 2
    decay = 2 * len(factors) - 2 - sum(2 * f[1].real - f[2] for f in factors)
    value, error, evals = _plane_integral(pts, factors, local, decay, config.tol_rel)
    rel = abs(value - expected) / abs(expected)
    return CPlaneReport(kernel, value, error, expected, rel, rel <= config.tol_rel, evals, time.perf_counter() - start)
