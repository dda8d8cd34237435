"""Batch front end: single verifications, fixed suites and gamma function values.

Exit codes are the machine contract: 0 when everything requested passes,
1 when a check fails, 2 for invalid input (unknown identity, rank budget,
balancing violations, poles and other domain errors).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import gamma_core as gc
from . import identity_registry as reg
from . import mb_engine as mb
from . import rational_engine as rat
from . import special_limits as sl

__all__ = [
    "EXIT_OK",
    "EXIT_FAIL",
    "EXIT_INVALID",
    "CheckResult",
    "Check",
    "SUITES",
    "build_catalog",
    "suite_checks",
    "run_checks",
    "cmd_verify",
    "cmd_suite",
    "cmd_gamma",
    "main",
]

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2

SUITES = ("ci", "full", "nightly", "rational", "limits", "appendix")


@dataclass
class CheckResult:
    """Outcome of one suite check; ``measured`` is the discrepancy compared against ``tol``."""

    name: str
    passed: bool
    measured: float
    tol: float
    seconds: float
    seed: int | None = None
    detail: dict = field(default_factory=dict)

    def row(self) -> dict:
        return {
            "name": self.name,
            "pass": self.passed,
            "measured": self.measured,
            "tol": self.tol,
            "seconds": round(self.seconds, 3),
            "seed": self.seed,
            "detail": self.detail,
        }


@dataclass
class Check:
    criterion: int
    name: str
    run: Callable[[], CheckResult]
    quick: bool = False
    nightly: bool = False


# ---------------------------------------------------------------------------
# parsing helpers


def parse_complex(text: str) -> complex:
    """Accept ``re,im`` pairs as well as Python complex literals."""
    text = text.strip()
    if "," in text:
        re_part, im_part = text.split(",")
        return complex(float(re_part), float(im_part))
    return complex(text.replace(" ", ""))


def _parse_nu(text: str) -> Fraction:
    nu = Fraction(text)
    if nu not in (0, Fraction(1, 2)):
        raise ValueError("--nu must be 0 or 1/2")
    return nu


def _fmt(value: float) -> str:
    if isinstance(value, float) and (math.isnan(value) or math.isinf(value)):
        return str(value)
    return f"{value:.3e}"


def _json_ready(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    return obj


def _write(path: str | None, text: str) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)


def _rows_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["name", "pass", "measured", "tol", "seconds", "seed"])
    for r in rows:
        writer.writerow([r["name"], r["pass"], r["measured"], r["tol"], r["seconds"], r["seed"]])
    return buf.getvalue()


def _rows_md(rows: Sequence[dict]) -> str:
    lines = ["| check | pass | measured | tol | seconds |", "|---|---|---|---|---|"]
    for r in rows:
        mark = "yes" if r["pass"] else "NO"
        lines.append(f"| {r['name']} | {mark} | {_fmt(r['measured'])} | {_fmt(r['tol'])} | {r['seconds']:.1f} |")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# check builders


def _timed(name: str, tol: float, seed, body: Callable[[], tuple]) -> CheckResult:
    """Run ``body`` returning (passed, measured, detail) and time it; errors become failures."""
    start = time.perf_counter()
    try:
        passed, measured, detail = body()
    except Exception as exc:  # a broken check is reported, not fatal for the suite
        passed, measured, detail = False, math.inf, {"error": f"{type(exc).__name__}: {exc}"}
    return CheckResult(name, bool(passed), float(measured), tol, time.perf_counter() - start, seed, detail)


def _verify_check(instance, tol: float, budget: float | None = None, extra=None) -> Callable[[], tuple]:
    def body():
        report = mb.verify(instance, mb.QuadConfig(tol_rel=tol))
        detail = report.to_json()
        passed = report.passed
        if budget is not None and report.seconds > budget:
            passed = False
            detail["budget_exceeded"] = budget
        if extra is not None:
            ok, info = extra(instance, report)
            passed = passed and ok
            detail.update(info)
        return passed, report.rel_err, detail

    return body


def symmetric_star_triangle() -> reg.IdentityInstance:
    """All six continuous parameters equal to -i/3 with zero discrete parts."""
    point = reg.ParamPoint(-1j / 3, 0)
    return reg.IdentityInstance("STAR_TRIANGLE_MB", 1, {"b": (point,) * 3, "a": (point,) * 3})


def _star_triangle_value(instance, report):
    expected = (math.gamma(1 / 3) / math.gamma(2 / 3)) ** 9
    gap = abs(report.rhs - expected) / expected
    return gap <= 1e-12, {"closed_form_gap": gap}


def _has_nonzero_discrete(instance, report):
    nonzero = any(p.N != gc.HalfInt(0) for group in instance.params.values() for p in group)
    return nonzero, {"nonzero_discrete": nonzero}


def _type2_k(instance) -> Fraction:
    N = [p.N.as_fraction() for p in instance.params["a"]]
    L = instance.params["gamma"][0].N.as_fraction()
    return ((1 - instance.n) * L - sum(N[:4])) / 2


class _SeedStream:
    """The single 64-bit generator feeding every sampled instance of a catalog."""

    def __init__(self, master: int):
        self.master = master
        self._rng = np.random.Generator(np.random.PCG64(master))

    def next(self) -> int:
        return int(self._rng.integers(0, 2**63 - 1))


def _sample(identity: str, n: int, seeds: _SeedStream, m: int = 0, nu=0):
    seed = seeds.next()
    return reg.sample_params(identity, n, m=m, nu=nu, seed=seed), seed


def _lattice_checks(seeds: _SeedStream) -> list[Check]:
    checks: list[Check] = []

    def add(criterion, name, instance, tol, seed, quick=False, nightly=False, budget=None, extra=None):
        body = _verify_check(instance, tol, budget, extra)
        checks.append(Check(criterion, name, lambda: _timed(name, tol, seed, body), quick, nightly))

    # 1: star-triangle relation
    add(1, "STAR_TRIANGLE_MB symmetric n=1", symmetric_star_triangle(), 1e-6, None, quick=True,
        budget=60.0, extra=_star_triangle_value)
    for k in range(10):
        inst, seed = _sample("STAR_TRIANGLE_MB", 1, seeds)
        add(1, f"STAR_TRIANGLE_MB random #{k}", inst, 1e-5, seed)

    # 2: C_n beta integral
    for k in range(10):
        nu = Fraction(k % 2, 2)
        inst, seed = _sample("CN_BETA", 1, seeds, nu=nu)
        add(2, f"CN_BETA n=1 nu={nu} #{k // 2}", inst, 1e-5, seed, quick=k < 2, budget=120.0)
    for k in range(2):
        inst, seed = _sample("CN_BETA", 2, seeds)
        add(2, f"CN_BETA n=2 #{k}", inst, 1e-3, seed, nightly=True, budget=1800.0)

    # 3: A_n beta integral, discrete parameters must be exercised
    for k in range(4):
        nu = Fraction(k % 2, 2)
        inst, seed = _sample("AN_BETA", 1, seeds, nu=nu)
        add(3, f"AN_BETA n=1 nu={nu} #{k // 2}", inst, 1e-5, seed, quick=k < 2, extra=_has_nonzero_discrete)
    inst, seed = _sample("AN_BETA", 2, seeds)
    add(3, "AN_BETA n=2", inst, 1e-3, seed, nightly=True, budget=1800.0, extra=_has_nonzero_discrete)

    # 4: degenerations
    for ident, n, nightly in (("AN_DEGEN_FULL", 1, False), ("AN_DEGEN_FULL", 2, False),
                              ("AN_DEGEN_KONO", 1, False), ("CN_AW", 1, False)):
        for nu in (0, Fraction(1, 2)) if n == 1 else (0,):
            inst, seed = _sample(ident, n, seeds, nu=nu)
            add(4, f"{ident} n={n} nu={nu}", inst, 1e-4, seed, quick=n == 1 and nu == 0, nightly=nightly)

    # 5: transformations at (n, m) = (1, 1)
    for ident in ("CN_TRAFO", "AN_TRAFO", "CN_TRAFO_DEGEN", "AN_TRAFO_DEGEN"):
        for nu in (0, Fraction(1, 2)):
            inst, seed = _sample(ident, 1, seeds, m=1, nu=nu)
            add(5, f"{ident} (1,1) nu={nu}", inst, 1e-4, seed, quick=nu == 0)
    wanted = {True: None, False: None}  # keyed by "K is an integer"
    while any(v is None for v in wanted.values()):
        inst, seed = _sample("CN_TYPE2_TRAFO", 1, seeds)
        key = _type2_k(inst).denominator == 1
        if wanted[key] is None:
            wanted[key] = (inst, seed)
    for key, (inst, seed) in wanted.items():
        label = "integer" if key else "half-integer"
        add(5, f"CN_TYPE2_TRAFO n=1 {label} K", inst, 1e-4, seed, quick=key)

    # 6: type II integrals
    for nu in (0, Fraction(1, 2)):
        inst, seed = _sample("AN_TYPE2", 1, seeds, nu=nu)
        add(6, f"AN_TYPE2 n=1 nu={nu}", inst, 1e-5, seed, quick=nu == 0)
        inst, seed = _sample("SELBERG_MB", 1, seeds, nu=nu)
        add(6, f"SELBERG_MB n=1 nu={nu}", inst, 1e-5, seed, quick=nu == 0)
    inst, seed = _sample("AN_TYPE2", 2, seeds)
    add(6, "AN_TYPE2 n=2", inst, 1e-3, seed, nightly=True, budget=1800.0)
    inst, seed = _sample("SELBERG_MB", 2, seeds)
    add(6, "SELBERG_MB n=2", inst, 1e-3, seed, nightly=True, budget=1800.0)

    def phases():
        bad = {f"type2 n={n}": len(reg.type2_phase_violations(n)) for n in range(1, 7)}
        bad.update({f"trafo n={n} m={m}": len(reg.trafo_phase_violations(n, m)) for n in (1, 3, 5) for m in range(6)})
        total = sum(bad.values())
        return total == 0, float(total), {"violations": bad}

    checks.append(Check(6, "type II and transformation phase parity (exhaustive)",
                        lambda: _timed("type II and transformation phase parity (exhaustive)", 0.0, None, phases), True))
    return checks


def _rational_checks() -> list[Check]:
    checks: list[Check] = []
    state = {"elapsed": 0.0}

    def exact(ident, n, last):
        name = f"verify_exact {ident} n={n}"

        def body():
            start = time.perf_counter()
            report = rat.verify_exact(ident, n, trials=100, seed=n)
            state["elapsed"] += time.perf_counter() - start
            detail = report.to_json()
            passed = report.passed
            if last:
                detail["suite_seconds"] = state["elapsed"]
                passed = passed and state["elapsed"] <= 300.0
            return passed, 0.0 if report.passed else 1.0, detail

        return Check(7, name, lambda: _timed(name, 0.0, n, body), quick=n == 1)

    pairs = [(ident, n) for ident in rat.RATIONAL_IDS for n in (1, 2, 3)]
    checks += [exact(ident, n, k == len(pairs) - 1) for k, (ident, n) in enumerate(pairs)]

    def spot():
        value = rat.eval_right(rat.RationalInstance("RAT_CN_EX1", 1, (1, 2, 3, 4)))
        middle = rat.eval_middle(rat.RationalInstance("RAT_CN_EX1", 1, (1, 2, 3, 4)))
        ok = value == Fraction(-1, 1260) and middle == value
        return ok, 0.0 if ok else 1.0, {"right": str(value), "middle": str(middle)}

    checks.append(Check(7, "RAT_CN_EX1(1,2,3,4) = -1/1260", lambda: _timed("RAT_CN_EX1(1,2,3,4) = -1/1260", 0.0, None, spot), True))

    for ident, a, b in (("RAT_CN_EX1", (1, 2, 3, 4), ()), ("RAT_AN_EX1", (1,), (2, 3, 4))):
        name = f"finite_support_check {ident} n=1"

        def body(ident=ident, a=a, b=b):
            report = rat.finite_support_check(rat.RationalInstance(ident, 1, a, b))
            return report.passed, report.rel_err, report.to_json()

        checks.append(Check(7, name, lambda name=name, body=body: _timed(name, 1e-6, None, body), quick=True))
    return checks


LIMIT_POINTS = (
    ("ell_to_hyp", {"u": 0.3, "w1": 1.0, "w2": 1.2}),
    ("hyp_to_complex", {"n": 1, "x": 0.4 + 0.1j}),
    ("hyp_to_rational", {"n": 2, "y": 0.7}),
)


def _limit_checks() -> list[Check]:
    checks = []
    for mode, point in LIMIT_POINTS:
        name = f"limit_scan {mode}"

        def body(mode=mode, point=point):
            table = sl.limit_scan(mode, point)
            limit = table.extrapolated()
            gap = abs(limit - 1)
            ok = gap <= 1e-3 and table.monotone_tail()
            detail = {"order": table.convergence_order(), "extrapolated": limit,
                      "ratios": list(table.ratios()), "monotone_tail": table.monotone_tail()}
            return ok, gap, detail

        checks.append(Check(8, name, lambda name=name, body=body: _timed(name, 1e-3, None, body), quick=mode == "hyp_to_rational"))
    return checks


BINOMIAL_POINTS = (
    (1.0, 0.3, 0.5 - 0.4j, 0),
    (1 + 0.5j, -0.4 + 0.2j, -0.3 - 0.6j, 1),
    (2 - 1j, 0.5 + 1.5j, 0.2 - 0.3j, -2),
    (0.7j, 1.3, 1.1 - 0.5j, 3),
    (-1.0, 0.25 - 0.25j, -0.8 - 0.7j, -1),
)

# convergence at infinity needs Re(alpha + alpha' + beta + beta') < 2
BETA_POINTS = (
    ((0.0, 1.0), ((0.4 + 0.1j, 0.4 + 0.1j), (0.45 - 0.2j, 0.45 - 0.2j))),
    ((0.3 - 0.2j, -1.1 + 0.8j), ((0.9 + 0.3j, -0.1 + 0.3j), (0.25 - 0.1j, 0.25 - 0.1j))),
    ((1j, 2.0), ((0.3 + 0.2j, 0.3 + 0.2j), (0.95 + 0.1j, -0.05 + 0.1j))),
)


def _appendix_checks() -> list[Check]:
    checks = []
    for k, (x, y, a, m) in enumerate(BINOMIAL_POINTS):
        name = f"binomial_check point {k}"

        def body(x=x, y=y, a=a, m=m):
            report = mb.binomial_check(x, y, a, m, mb.QuadConfig(tol_rel=1e-6))
            return report.passed, report.rel_err, report.to_json()

        checks.append(Check(9, name, lambda name=name, body=body: _timed(name, 1e-6, None, body), quick=k == 0))
    for k, (points, exponents) in enumerate(BETA_POINTS):
        name = f"cplane_integrate CPLANE_BETA point {k}"

        def body(points=points, exponents=exponents):
            report = mb.cplane_integrate("CPLANE_BETA", points, exponents, mb.QuadConfig(tol_rel=1e-4))
            return report.passed, report.rel_err, report.to_json()

        checks.append(Check(9, name, lambda name=name, body=body: _timed(name, 1e-4, None, body), quick=k == 0))
    return checks


def _property_checks(seeds: _SeedStream) -> list[Check]:
    rng = np.random.Generator(np.random.PCG64(seeds.next()))
    checks = []

    def reflection():
        xs = rng.uniform(-6, 6, 200) + 1j * rng.uniform(-0.9, 0.9, 200)
        ns = rng.integers(-12, 13, 200)
        worst = max(abs(gc.complex_gamma(x, -n) - gc.sign_power(n) * gc.complex_gamma(x, n)) / abs(gc.complex_gamma(x, n))
                    for x, n in zip(xs, ns))
        return worst <= 1e-12, worst, {}

    def inversion():
        xs = rng.uniform(-6, 6, 200) + 1j * rng.uniform(-1.9, -0.1, 200)
        ns = rng.integers(-12, 13, 200)
        worst = max(abs(gc.complex_gamma(x, n) * gc.complex_gamma(-x - 2j, n) - 1) for x, n in zip(xs, ns))
        return worst <= 1e-11, worst, {}

    def homogeneity():
        worst = 0.0
        for lam in (2.0, 1 / 3, 1.7):
            for _ in range(50):
                u = complex(rng.uniform(0.2, 1.8), rng.uniform(-0.5, 0.5))
                w = (complex(1.0, 0.3), complex(0.8, -0.2))
                base = sl.hyp_gamma(u, w)
                scaled = sl.hyp_gamma(lam * u, (lam * w[0], lam * w[1]))
                worst = max(worst, abs(scaled / base - 1))
        return worst <= 1e-10, worst, {}

    def determinism():
        inst = reg.sample_params("CN_BETA", 1, seed=seeds.master)
        cfg = mb.QuadConfig(tol_rel=1e-5)
        first, second = mb.verify(inst, cfg), mb.verify(inst, cfg)
        parallel = mb.verify(inst, replace(cfg, workers=2))
        same = first.lhs == second.lhs and first.lhs_err == second.lhs_err
        same_parallel = first.lhs == parallel.lhs and first.lhs_err == parallel.lhs_err
        ok = same and same_parallel
        return ok, 0.0 if ok else 1.0, {"repeat": same, "parallel": same_parallel}

    for name, fn, tol in (("complex gamma reflection", reflection, 1e-12),
                          ("complex gamma inversion", inversion, 1e-11),
                          ("hyperbolic gamma homogeneity", homogeneity, 1e-10),
                          ("determinism and parallel/serial equality", determinism, 0.0)):
        checks.append(Check(10, name, lambda name=name, fn=fn, tol=tol: _timed(name, tol, None, fn), quick=True))
    return checks


def build_catalog(master_seed: int = 0) -> list[Check]:
    """Every acceptance check, in a fixed order so that seeds are pinned by ``master_seed``."""
    seeds = _SeedStream(master_seed)
    return (_lattice_checks(seeds) + _rational_checks() + _limit_checks() + _appendix_checks()
            + _property_checks(seeds))


def suite_checks(name: str, master_seed: int = 0) -> list[Check]:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; expected one of {SUITES}")
    catalog = build_catalog(master_seed)
    if name == "ci":
        return [c for c in catalog if c.quick and not c.nightly]
    if name == "full":
        return [c for c in catalog if not c.nightly]
    if name == "nightly":
        return [c for c in catalog if c.nightly]
    criterion = {"rational": 7, "limits": 8, "appendix": 9}[name]
    return [c for c in catalog if c.criterion == criterion]


def run_checks(checks: Sequence[Check], echo=None) -> list[CheckResult]:
    results = []
    for check in checks:
        result = check.run()
        results.append(result)
        if echo is not None:
            mark = "PASS" if result.passed else "FAIL"
            print(f"[{mark}] {result.name}: {_fmt(result.measured)} (tol {_fmt(result.tol)}, {result.seconds:.1f} s)",
                  file=echo, flush=True)
    return results


# ---------------------------------------------------------------------------
# commands


def _config(args) -> mb.QuadConfig:
    cfg = mb.QuadConfig()
    changes = {}
    if args.tol is not None:
        changes["tol_rel"] = args.tol
    if args.xmax is not None:
        changes["x_max"] = args.xmax
    if args.nmax is not None:
        changes["n_lattice_max"] = args.nmax
    return replace(cfg, **changes)


def _invalid(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_INVALID


def _emit(args, payload: dict, rows: Sequence[dict]) -> None:
    _write(args.json, json.dumps(_json_ready(payload), indent=2) + "\n")
    _write(args.csv, _rows_csv(rows))
    _write(args.md, _rows_md(rows))


def _verify_rational(args) -> int:
    trials = 100
    report = rat.verify_exact(args.identity, args.n, trials=trials, seed=args.seed)
    row = {"name": f"{report.identity} n={report.n}", "pass": report.passed, "measured": 0.0 if report.passed else 1.0,
           "tol": 0.0, "seconds": 0.0, "seed": args.seed}
    _emit(args, report.to_json(), [row])
    status = "pass" if report.passed else "FAIL"
    print(f"{report.identity} n={report.n}: {report.trials} exact trials, {status}")
    if report.counterexample is not None:
        print(f"counterexample: {report.counterexample}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_verify(args) -> int:
    """Verify one catalog identity on a sampled or user-supplied instance."""
    try:
        cfg = _config(args)
        nu = _parse_nu(args.nu)
    except ValueError as exc:
        return _invalid(str(exc))
    if args.identity.upper() in rat.RATIONAL_IDS:
        try:
            return _verify_rational(args)
        except (KeyError, ValueError) as exc:
            return _invalid(str(exc))
    try:
        if args.params:
            instance = reg.load_instance(args.params)
            if args.identity and reg.canonical_id(args.identity) != reg.canonical_id(instance.identity):
                return _invalid(f"parameter file is for {instance.identity}, not {args.identity}")
        else:
            identity = reg.canonical_id(args.identity)
            if identity not in reg.LATTICE_IDS:
                return _invalid(f"{identity} is not a lattice identity; use the appendix or rational suites")
            uses_m = reg.descriptor(identity).uses_m
            reg.check_rank_budget(reg.IdentityInstance(identity, args.n, {}, m=args.m if uses_m else 0),
                                  nightly=args.nightly)
            instance = reg.sample_params(identity, args.n, m=args.m if uses_m else 0, nu=nu, seed=args.seed)
        reg.check_rank_budget(instance, nightly=args.nightly)
        report = mb.verify(instance, cfg)
    except reg.InvalidInstance as exc:
        lines = "\n".join(f"  {v.kind}: {v.message}" for v in exc.violations)
        return _invalid(f"invalid instance\n{lines}")
    except KeyError as exc:
        return _invalid(str(exc.args[0]))
    except (reg.RankBudgetExceeded, reg.SamplingExhausted, ValueError, OSError) as exc:
        return _invalid(str(exc))
    row = {"name": f"{report.identity} {report.ranks}", "pass": report.passed, "measured": report.rel_err,
           "tol": report.tol, "seconds": report.seconds, "seed": report.seed}
    _emit(args, report.to_json(), [row])
    status = "pass" if report.passed else "FAIL"
    print(f"{report.identity} ranks={list(report.ranks)} nu={report.nu} seed={report.seed}")
    print(f"  lhs = {report.lhs:.12g} +- {report.lhs_err:.2e}")
    print(f"  rhs = {report.rhs:.12g}")
    print(f"  rel_err = {report.rel_err:.3e} (tol {report.tol:.1e}), {report.shells} shells, {report.seconds:.1f} s: {status}")
    for line in report.diagnostics:
        print(f"  note: {line}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_suite(args) -> int:
    """Run a fixed suite with seeds pinned by ``--seed``."""
    if args.name == "nightly" and not args.nightly:
        print("note: the nightly suite runs rank-2 checks of up to 30 minutes each", file=sys.stderr)
    checks = suite_checks(args.name, args.seed)
    results = run_checks(checks, echo=sys.stdout)
    rows = [r.row() for r in results]
    failed = [r for r in results if not r.passed]
    payload = {"suite": args.name, "master_seed": args.seed, "passed": not failed, "checks": rows}
    _emit(args, payload, rows)
    print()
    print(_rows_md(rows), end="")
    print(f"\n{len(results) - len(failed)}/{len(results)} checks passed")
    for r in failed:
        reason = r.detail.get("error") or f"measured {_fmt(r.measured)} against tol {_fmt(r.tol)}"
        print(f"failed: {r.name}: {reason}", file=sys.stderr)
    return EXIT_OK if not failed else EXIT_FAIL


def _gamma_value(args) -> complex:
    if args.function == "cgamma":
        if args.x is None or args.n is None:
            raise ValueError("cgamma needs --x and --n")
        return gc.complex_gamma(parse_complex(args.x), int(args.n))
    if args.function == "hyp":
        if args.u is None:
            raise ValueError("hyp needs --u")
        return sl.hyp_gamma(parse_complex(args.u), (parse_complex(args.w1), parse_complex(args.w2)), args.rep)
    if args.z is None or args.p is None or args.q is None:
        raise ValueError("ell needs --z, --p and --q")
    return sl.ell_gamma(parse_complex(args.z), (parse_complex(args.p), parse_complex(args.q)))


def _grid_table(args) -> list[dict]:
    lo, hi, count = args.grid.split(":")
    key = {"cgamma": "x", "hyp": "u", "ell": "z"}[args.function]
    # the grid runs over the real part; the imaginary part comes from the argument, if given
    base = parse_complex(getattr(args, key) or "0")
    rows = []
    for t in np.linspace(float(lo), float(hi), int(count)):
        shifted = argparse.Namespace(**vars(args))
        setattr(shifted, key, repr(complex(t, base.imag)))
        try:
            value = _gamma_value(shifted)
            rows.append({"t": float(t), "re": value.real, "im": value.imag, "abs": abs(value)})
        except (ArithmeticError, ValueError):
            rows.append({"t": float(t), "re": math.nan, "im": math.nan, "abs": math.nan})
    return rows


def cmd_gamma(args) -> int:
    """Print one value of the complex, hyperbolic or elliptic gamma function, or a grid table."""
    try:
        if args.grid:
            rows = _grid_table(args)
            buf = io.StringIO()
            writer = csv.DictWriter(buf, fieldnames=["t", "re", "im", "abs"])
            writer.writeheader()
            writer.writerows(rows)
            sys.stdout.write(buf.getvalue())
            _write(args.csv, buf.getvalue())
            _write(args.json, json.dumps(rows, indent=2) + "\n")
            return EXIT_OK
        value = _gamma_value(args)
    except (ArithmeticError, ValueError) as exc:
        return _invalid(str(exc))
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        return _invalid("value is not finite at this argument")
    print(f"{value.real:.15g} {value.imag:+.15g}i")
    _write(args.json, json.dumps({"function": args.function, "value": [value.real, value.imag]}) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _add_outputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--json", metavar="PATH", help="write a JSON report")
    p.add_argument("--csv", metavar="PATH", help="write a CSV table")
    p.add_argument("--md", metavar="PATH", help="write a Markdown table")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="complexhyper", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    ids = ", ".join([*reg.LATTICE_IDS, *rat.RATIONAL_IDS])
    aliases = ", ".join(f"{k}={v}" for k, v in reg.ALIASES.items())
    v = sub.add_parser("verify", help="verify one identity",
                       epilog=f"identities: {ids}. aliases: {aliases}.")
    v.add_argument("identity", nargs="?", default="", help="identity id or alias (optional with --params)")
    v.add_argument("--n", type=int, default=1)
    v.add_argument("--m", type=int, default=1, help="second rank, used by transformations")
    v.add_argument("--nu", default="0", help="0 or 1/2")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--tol", type=float)
    v.add_argument("--xmax", type=float)
    v.add_argument("--nmax", type=int)
    v.add_argument("--params", metavar="FILE", help="parameter file instead of sampling")
    v.add_argument("--nightly", action="store_true", help="allow the larger nightly rank budget")
    _add_outputs(v)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("suite", help="run a fixed suite")
    s.add_argument("name", choices=SUITES)
    s.add_argument("--seed", type=int, default=0, help="master seed of the instance generator")
    s.add_argument("--nightly", action="store_true", help="acknowledge long rank-2 runs")
    _add_outputs(s)
    s.set_defaults(func=cmd_suite)

    g = sub.add_parser("gamma", help="evaluate a gamma function")
    g.add_argument("function", choices=("cgamma", "hyp", "ell"))
    g.add_argument("--x", help="complex argument of cgamma (re,im)")
    g.add_argument("--n", type=int, help="discrete index of cgamma")
    g.add_argument("--u", help="argument of the hyperbolic gamma")
    g.add_argument("--w1", default="1")
    g.add_argument("--w2", default="1")
    g.add_argument("--rep", default="auto", choices=("auto", "integral", "product"))
    g.add_argument("--z", help="argument of the elliptic gamma")
    g.add_argument("--p")
    g.add_argument("--q")
    g.add_argument("--grid", metavar="LO:HI:COUNT", help="tabulate over the real part of the argument")
    _add_outputs(g)
    g.set_defaults(func=cmd_gamma)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    return args.func(args)
