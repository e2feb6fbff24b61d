"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run under pytest (the lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""

import contextlib
import csv
import io
import math
import os
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from near_misses.bootstrap import beta_step, exponent_sequence
from near_misses.cli import dispatch
from near_misses.counting import CountQuery, count_coprime, count_near
from near_misses.duality import dual_residuals
from near_misses.experiments import (
    DeltaRule,
    SweepSpec,
    asymptotic_sweep,
    dimension_growth_sweep,
    example2_lower_bound,
    get_manifold,
    robert_sargos_brute,
    robert_sargos_count,
)
from near_misses.kernels import fejer_eval, selberg_pair
from near_misses.oscillatory import poisson_check, stationary_phase_sweep
from near_misses.surfaces import catalog, get_surface

import conftest
from oracles import reference_counts

CURVES = ["parabola", "paraboloid2", "sphere2", "fermat4"]
SURFACES = ["paraboloid3", "sphere3", "rs"]


@contextlib.contextmanager
def criterion(n, title):
    """Record a PASS/FAIL line for criterion ``n``; the body sets ``state['ok']``."""
    state = {"ok": False, "detail": ""}
    t0 = time.perf_counter()
    try:
        yield state
    except Exception as exc:
        state["ok"] = False
        state["detail"] = f"{type(exc).__name__}: {exc}"
        raise
    finally:
        wall = time.perf_counter() - t0
        line = (f"[{'PASS' if state['ok'] else 'FAIL'}] {n:2d}. {title}: {state['detail']} "
                f"({wall:.1f} s)")
        conftest.ACCEPTANCE[n] = line
        print(line)


def cli(argv, threads=None):
    old = os.environ.get("NEAR_MISSES_THREADS")
    if threads is not None:
        os.environ["NEAR_MISSES_THREADS"] = str(threads)
    buf = io.StringIO()
    try:
        with contextlib.redirect_stdout(buf):
            code = dispatch(argv)
    finally:
        if old is None:
            os.environ.pop("NEAR_MISSES_THREADS", None)
        else:
            os.environ["NEAR_MISSES_THREADS"] = old
    assert code == 0, (argv, code)
    return buf.getvalue()


# ---------------------------------------------------------------------------


def test_01_bootstrap_closed_form():
    with criterion(1, "bootstrap closed form and contraction") as st:
        t0 = time.perf_counter()
        rows = list(csv.DictReader(io.StringIO(cli(["bootstrap", "--n", "3", "--imax", "10000"]))))
        closed = len(rows) == 10_000 and all(
            Fraction(r["beta"]) == 2 + Fraction(1, int(r["i"])) for r in rows
        )
        contract = all(exponent_sequence(n, 3000).contraction_holds() for n in range(4, 9))
        wall = time.perf_counter() - t0
        # untimed: the same contraction over the full 10^4 steps
        full = all(exponent_sequence(n, 10_000).contraction_holds() for n in range(4, 9))
        st["ok"] = closed and contract and full and wall < 1.0
        st["detail"] = (f"n=3 closed form to 10^4 {closed}; contraction n=4..8 to 3000 {contract} "
                        f"in {wall:.2f} s (< 1 s); to 10^4 {full}")
    assert st["ok"]


def test_02_first_iteration_exponent():
    with criterion(2, "first-iteration exponent") as st:
        bad = [n for n in range(2, 11) if beta_step(n, n) != n - 1 + Fraction(2, n + 1)]
        st["ok"] = not bad
        st["detail"] = "beta_step(n, n) = n-1+2/(n+1) for n=2..10" if not bad else f"fails for {bad}"
    assert st["ok"]


def test_03_duality_suite():
    with criterion(3, "duality suite") as st:
        t0 = time.perf_counter()
        worst = {"involution": 0.0, "round_trip": 0.0, "reciprocity": 0.0}
        pts = []
        for name in ["paraboloid2", "paraboloid3", "parabola", "sphere2", "sphere3", "rs"]:
            r = dual_residuals(get_surface(name))
            pts.append(r.n_points)
            worst["involution"] = max(worst["involution"], r.involution)
            worst["round_trip"] = max(worst["round_trip"], r.round_trip)
            worst["reciprocity"] = max(worst["reciprocity"], r.hessian_reciprocity)
        wall = time.perf_counter() - t0
        st["ok"] = (worst["involution"] <= 1e-9 and worst["round_trip"] <= 1e-9
                    and worst["reciprocity"] <= 1e-6 and min(pts) >= 100 and wall < 10)
        st["detail"] = (f"involution {worst['involution']:.1e}, round trip {worst['round_trip']:.1e}, "
                        f"reciprocity {worst['reciprocity']:.1e}, min grid {min(pts)}")
    assert st["ok"]


def test_04_kernel_contracts():
    with criterion(4, "kernel contracts") as st:
        t0 = time.perf_counter()
        rng = np.random.default_rng(4)
        delta = rng.uniform(1e-3, 0.499, 100_000)
        theta = rng.uniform(-1, 1, 100_000) * delta + rng.integers(-5, 6, 100_000)
        J = np.floor(1 / (2 * delta)).astype(int)
        F = np.empty_like(theta)
        for Jv in np.unique(J):
            sel = J == Jv
            F[sel] = fejer_eval(int(Jv), theta[sel])
        fejer_ok = bool(np.all(np.pi**2 / 4 * F >= 1.0))
        zero_err = viol = 0.0
        for Jv in (4, 9, 50, 200):
            for a, b in [(-0.1, 0.1), (0.2, 0.55), (-0.37, 0.4), (0.05, 0.95)]:
                p = selberg_pair(Jv, a, b)
                zero_err = max(zero_err, abs(p.coefficient(0, 1) - (b - a + 1 / (Jv + 1))),
                               abs(p.coefficient(0, -1) - (b - a - 1 / (Jv + 1))))
                viol = max(viol, p.sandwich_violation(10_000)[0])
        wall = time.perf_counter() - t0
        st["ok"] = fejer_ok and zero_err <= 1e-12 and viol <= 1e-12 and wall < 10
        st["detail"] = (f"Fejer majorization on 1e5 samples {fejer_ok}; |S(0) error| {zero_err:.1e}; "
                        f"sandwich violation {viol:.1e}")
    assert st["ok"]


def test_05_poisson_identity():
    with criterion(5, "Poisson identity") as st:
        t0 = time.perf_counter()
        worst, where = 0.0, None
        for name in CURVES + SURFACES:
            ch = get_surface(name)
            for j in (1, 2, 4, 8):
                for q in (1, 3, 7, 15, 30):
                    r = poisson_check(ch, j, q)
                    if r.residual > worst:
                        worst, where = r.residual, (name, j, q)
        wall = time.perf_counter() - t0
        st["ok"] = worst <= 1e-6 and wall < 300
        st["detail"] = f"max residual {worst:.1e} at {where} over 7 charts, j in 1..8, q in 1..30"
    assert st["ok"]


def test_06_stationary_phase_slope():
    with criterion(6, "stationary-phase error slope") as st:
        t0 = time.perf_counter()
        qs = [round(10**e) for e in (2, 2.5, 3, 3.5, 4)]
        cases = [("parabola", 1, (1,)), ("paraboloid2", 2, (1,)), ("sphere2", 1, (0,)),
                 ("paraboloid3", 2, (1, 1)), ("sphere3", 1, (0, 0))]
        slopes, ok = [], True
        for name, j, k in cases:
            rep = stationary_phase_sweep(get_surface(name), j, k, [max(1, q // j) for q in qs])
            slopes.append(f"{name} {rep.slope:.3f} (target {rep.expected})")
            ok &= rep.within
        wall = time.perf_counter() - t0
        st["ok"] = ok and wall < 300
        st["detail"] = "; ".join(slopes)
    assert st["ok"]


def test_07_main_term():
    with criterion(7, "weighted main term on the paraboloid") as st:
        t0 = time.perf_counter()
        spec = SweepSpec(get_surface("paraboloid3"), "weighted", [100, 200, 400, 800], DeltaRule("power", 0.5))
        tab = asymptotic_sweep(spec)
        ratios = tab.ratios()
        wall = time.perf_counter() - t0
        st["ok"] = abs(ratios[-1] - 1) <= 0.15 and tab.ratio_monotone() and wall < 600
        st["detail"] = "ratios " + ", ".join(f"{r:.4f}" for r in ratios)
    assert st["ok"]


def test_08_example2_lower_bound():
    with criterion(8, "parabola exact-count lower bound") as st:
        t0 = time.perf_counter()
        ok, first, cum = example2_lower_bound(10_000)
        wall = time.perf_counter() - t0
        st["ok"] = ok and wall < 60
        st["detail"] = f"holds for every Q <= 10^4 (count at 10^4: {int(cum[-1])})" if ok else f"fails at Q={first}"
    assert st["ok"]


def test_09_oracle_equivalences():
    with criterion(9, "brute-force oracle equivalences") as st:
        t0 = time.perf_counter()
        mismatches = []
        deltas = (0.0731, 0.2)
        for name in sorted(catalog()):
            ch = get_surface(name)
            ref = reference_counts(name, 50, deltas)
            for dl in deltas:
                strict, nonstrict, _ = ref[dl]
                a = count_near(ch, CountQuery(50, dl, strict=True)).total
                b = count_near(ch, CountQuery(50, dl, strict=False)).total
                if (a, b) != (strict, nonstrict):
                    mismatches.append((name, dl, a, b, strict, nonstrict))
        rs_cases = [(1.5, 0.1), (1.5, 1.0), (0.5, 0.05), (2.0, 0.0)]
        for alpha, dl in rs_cases:
            for M in range(2, 61):
                if robert_sargos_count(M, dl, alpha) != robert_sargos_brute(M, dl, alpha):
                    mismatches.append(("rs", M, alpha, dl))
        for name in sorted(catalog()):
            for Q in (37, 100):
                r = count_coprime(get_surface(name), CountQuery(Q, 0.05), check=True)
                if r.mobius_total != r.total:
                    mismatches.append(("coprime", name, Q))
        wall = time.perf_counter() - t0
        st["ok"] = not mismatches and wall < 300
        st["detail"] = ("count_near = reference at Q=50 on all charts, both modes; RS = brute for M<=60; "
                        "coprime = Moebius for Q<=100") if not mismatches else f"mismatches {mismatches[:3]}"
    assert st["ok"]


def test_10_dimension_growth():
    with criterion(10, "dimension growth") as st:
        t0 = time.perf_counter()
        parts, ok = [], True
        for name in ("parabola", "circle", "twisted_cubic"):
            m = get_manifold(name)
            rows, fit = dimension_growth_sweep(m, [125, 250, 500, 1000, 2000])
            ok &= all(r.dominated for r in rows) and fit.slope <= m.dim + 0.2
            parts.append(f"{name} slope {fit.slope:.3f}")
        wall = time.perf_counter() - t0
        st["ok"] = ok and wall < 600
        st["detail"] = "N_X <= N_S(rB, 0) everywhere; " + ", ".join(parts)
    assert st["ok"]


# the CLI form of each criterion above, rerun at several thread counts
DETERMINISM_RUNS = {
    1: [["bootstrap", "--n", "3", "--imax", "10000"]]
       + [["bootstrap", "--n", str(n), "--imax", "300"] for n in range(4, 9)],
    2: [["bootstrap", "--n", str(n), "--imax", "2"] for n in range(2, 11)],
    3: [["dual", "--surface", s, "--report", "csv"]
        for s in ["paraboloid2", "paraboloid3", "parabola", "sphere2", "sphere3", "rs"]],
    4: [["kernels", "--J", str(J), "--alpha", "-0.1", "--beta", "0.1"] for J in (4, 9, 50, 200)],
    5: [["poisson-check", "--surface", s, "--j", "8", "--q", "30"] for s in CURVES + SURFACES],
    6: [["oscint", "--surface", "paraboloid2", "--j", "2", "--k", "1", "--q", str(q)] for q in (50, 1581, 5000)]
       + [["oscint", "--surface", "paraboloid3", "--j", "2", "--k", "1,1", "--q", "158"]],
    7: [["sweep", "--surface", "paraboloid3", "--mode", "weighted", "--Q", "100,200,400,800",
         "--delta-rule", "power:0.5"]],
    8: [["sweep", "--surface", "parabola", "--mode", "unweighted", "--Q", "100,1000,3000",
         "--delta-rule", "fixed:0", "--nonstrict"]],
    9: [["count", "--surface", s, "--Q", "50", "--delta", "0.0731", flag]
        for s in sorted(catalog()) for flag in ("--strict", "--nonstrict")]
       + [["count", "--surface", s, "--Q", "100", "--delta", "0.05", "--coprime"] for s in sorted(catalog())]
       + [["rs", "--M", "20,40,60", "--delta", "0.1", "--alpha", "1.5"]],
    10: [["dimgrowth", "--manifold", m, "--B", "125,250,500,1000,2000"]
         for m in ("parabola", "circle", "twisted_cubic")],
}


def test_11_determinism():
    with criterion(11, "determinism across thread counts") as st:
        differ = []
        n_runs = 0
        for crit, runs in DETERMINISM_RUNS.items():
            for argv in runs:
                outs = {cli(argv, threads=t) for t in (1, 4, 8)}
                n_runs += 1
                if len(outs) != 1:
                    differ.append((crit, argv))
        st["ok"] = not differ
        st["detail"] = (f"{n_runs} CLI runs covering criteria 1-10 byte-identical for threads 1, 4, 8"
                        if not differ else f"differs: {differ[:3]}")
    assert st["ok"]


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_")):
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
