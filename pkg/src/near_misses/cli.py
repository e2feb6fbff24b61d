"""Command-line front end.

Every subcommand writes CSV (or JSON) to stdout or ``--out``.  When an
output file is written, a ``<out>.manifest.json`` sidecar records how it was
produced.  Floats are printed with 17 significant digits, so reruns with the
same manifest are byte-identical regardless of the thread count.

Exit codes: 0 success, 1 invalid input, 2 numerical budget exceeded,
3 contract violation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__
from ._parallel import resolve_threads
from .errors import (
    AccuracyError,
    BudgetError,
    ConstructionError,
    CurvatureError,
    DegenerateGeometryError,
    NearMissesError,
    OutsideDualDomain,
    PropertyPWitnessError,
)

EXIT_OK, EXIT_INPUT, EXIT_BUDGET, EXIT_CONTRACT = 0, 1, 2, 3

SUBCOMMANDS = ("count", "dual", "oscint", "poisson-check", "kernels", "bootstrap",
               "sweep", "rs", "dimgrowth", "da-check")


class UsageError(Exception):
    """Raised instead of argparse's own exit so that bad input maps to exit code 1."""


class ContractViolation(NearMissesError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# ---------------------------------------------------------------------------
# Formatting


def fmt(v) -> str:
    """Deterministic text form: ``%.17g`` floats, exact fractions, ``a+bj`` complexes."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (complex, np.complexfloating)):
        v = complex(v)
        if v.imag == 0:
            return fmt(v.real)
        return f"{fmt(v.real)}{'+' if v.imag >= 0 else '-'}{fmt(abs(v.imag))}j"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    if v is None:
        return ""
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        # JSON has no nan/inf; keep them as strings rather than emit invalid JSON
        return v if math.isfinite(v) else fmt(v)
    if isinstance(v, (complex, np.complexfloating)):
        return {"re": _jsonable(complex(v).real), "im": _jsonable(complex(v).imag)}
    if isinstance(v, Fraction):
        return str(v)
    return v


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def json_text(payload) -> str:
    # repr of a Python float round-trips exactly, so JSON stays deterministic
    return json.dumps(_jsonable(payload), indent=2, sort_keys=False) + "\n"


# ---------------------------------------------------------------------------
# Manifest


def surface_hash(chart) -> str:
    doc = chart.spec if getattr(chart, "spec", None) else {"name": chart.name}
    doc = dict(doc, domain=chart.domain.to_dict())
    blob = json.dumps(doc, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def run_manifest(argv, args, chart, tolerances, wall):
    return {
        "command_line": list(argv),
        "subcommand": args.command,
        "surface_config_hash": surface_hash(chart) if chart is not None else None,
        "seed": getattr(args, "seed", None),
        "threads": args.threads,
        "tolerances": tolerances,
        "version": __version__,
        "wall_time_s": wall,
    }


# ---------------------------------------------------------------------------
# Argument helpers


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _box(text):
    """``lo1,lo2:hi1,hi2`` as a closed box."""
    from .surfaces import Domain

    lo, sep, hi = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError("box must be written lo1,..:hi1,..")
    return Domain.box([Fraction(v) for v in lo.split(",")], [Fraction(v) for v in hi.split(",")],
                      closed=True)


def _weight(args, chart):
    from .counting import BumpWeight
    from .oscillatory import default_weight

    if args.weight_center is None and args.weight_radius is None:
        return default_weight(chart)
    if args.weight_center is None or args.weight_radius is None:
        raise UsageError("--weight-center and --weight-radius go together")
    return BumpWeight(tuple(args.weight_center), args.weight_radius)


def _add_common(p, surface=True):
    if surface:
        p.add_argument("--surface", required=True, help="catalog name or JSON surface file")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="write the table here instead of stdout")
    p.add_argument("--json", action="store_true", help="emit one JSON document")


def _add_weight(p):
    p.add_argument("--weight-center", type=_float_list, default=None)
    p.add_argument("--weight-radius", type=float, default=None)


def build_parser():
    parser = _Parser(prog="near-misses", description="Rational points near manifolds.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="{" + ",".join(SUBCOMMANDS) + "}")

    p = sub.add_parser("count", help="count rational points near a surface")
    _add_common(p)
    p.add_argument("--Q", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--mode", choices=("weighted", "indicator", "unweighted"), default="unweighted")
    p.add_argument("--coprime", action="store_true")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--strict", dest="strict", action="store_true", default=True)
    g.add_argument("--nonstrict", dest="strict", action="store_false")
    p.add_argument("--K", type=_box, help="indicator box lo1,..:hi1,..")
    p.add_argument("--tie-epsilon", type=float, default=0.0)
    p.add_argument("--per-q-out", help="CSV of q,subtotal,ambiguous")
    _add_weight(p)

    p = sub.add_parser("dual", help="Legendre dual residual statistics")
    _add_common(p)
    p.add_argument("--grid", type=int, default=10)
    p.add_argument("--report", choices=("json", "csv"), default="json")

    p = sub.add_parser("oscint", help="one oscillatory integral and its stationary-phase term")
    _add_common(p)
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--k", type=_int_list, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    _add_weight(p)

    p = sub.add_parser("poisson-check", help="lattice exponential sum against its Poisson dual")
    _add_common(p)
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--trunc", type=float, default=None)
    _add_weight(p)

    p = sub.add_parser("kernels", help="Selberg majorant/minorant coefficients")
    _add_common(p, surface=False)
    p.add_argument("--J", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--grid", type=int, default=10_000)

    p = sub.add_parser("bootstrap", help="exact bootstrap exponents")
    _add_common(p, surface=False)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--imax", type=int, required=True)
    p.add_argument("--Q", type=float, default=None)

    p = sub.add_parser("sweep", help="counts against the predicted main term")
    _add_common(p)
    p.add_argument("--mode", choices=("weighted", "indicator", "unweighted"), default="weighted")
    p.add_argument("--Q", type=_int_list, required=True, help="comma-separated heights")
    p.add_argument("--delta-rule", default="power:0.5", help="fixed:v, power:v or floor:eps")
    p.add_argument("--K", type=_box)
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nonstrict", dest="strict", action="store_false", default=True)
    _add_weight(p)

    p = sub.add_parser("rs", help="Robert-Sargos quadruple counts")
    _add_common(p, surface=False)
    p.add_argument("--M", type=_int_list, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--alpha", type=float, default=1.5)

    p = sub.add_parser("dimgrowth", help="rational points on property-P manifolds")
    _add_common(p, surface=False)
    p.add_argument("--manifold", default="circle")
    p.add_argument("--B", type=_int_list, required=True)

    p = sub.add_parser("da-check", help="convergence sum for simultaneous approximation")
    _add_common(p, surface=False)
    p.add_argument("--family", choices=("power", "log"), default="power")
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=0.0)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q-max", type=int, default=10**6)
    return parser


# ---------------------------------------------------------------------------
# Subcommands; each returns (text, chart or None, tolerances)


def _cmd_count(args):
    from .counting import CountQuery, count_coprime, count_near
    from .surfaces import load_surface

    chart = load_surface(args.surface)
    w = _weight(args, chart) if args.mode == "weighted" else None
    query = CountQuery(args.Q, args.delta, mode=args.mode, weight=w, K=args.K,
                       strict=args.strict, tie_epsilon=args.tie_epsilon).validate(chart)
    res = count_coprime(chart, query, args.threads) if args.coprime else count_near(chart, query, args.threads)
    if args.per_q_out:
        with open(args.per_q_out, "w", newline="") as fh:
            fh.write(csv_text(["q", "subtotal", "ambiguous"], res.to_csv_rows()))
    header = ["Q", "delta", "mode", "coprime", "strict", "total", "ambiguous", "candidates"]
    row = [args.Q, args.delta, args.mode, args.coprime, args.strict, res.total, res.ambiguous,
           res.candidates_scanned]
    if args.json:
        return json_text(dict(zip(header, row))), chart, {"tie_epsilon": args.tie_epsilon}
    return csv_text(header, [row]), chart, {"tie_epsilon": args.tie_epsilon}


_DUAL_LIMITS = {"involution": 1e-9, "round_trip": 1e-9, "hessian_reciprocity": 1e-6}


def _cmd_dual(args):
    from .duality import dual_residuals
    from .surfaces import load_surface

    chart = load_surface(args.surface)
    r = dual_residuals(chart, args.grid)
    payload = {
        "surface": chart.name,
        "n_points": r.n_points,
        "involution": r.involution,
        "round_trip": r.round_trip,
        "legendre_identity": r.legendre_identity,
        "hessian_reciprocity": r.hessian_reciprocity,
        "signature_constant": r.signature_constant,
    }
    bad = [k for k, lim in _DUAL_LIMITS.items() if not payload[k] <= lim]
    if not r.signature_constant:
        bad.append("signature_constant")
    payload["ok"] = not bad
    if args.report == "json" or args.json:
        text = json_text(payload)
    else:
        text = csv_text(list(payload), [list(payload.values())])
    if bad:
        _emit(args, text)
        raise ContractViolation(f"dual residuals out of tolerance: {', '.join(bad)}")
    return text, chart, dict(_DUAL_LIMITS, newton_tol=1e-12)


def _cmd_oscint(args):
    from .duality import dual_geometry
    from .oscillatory import (KClass, OscillatoryQuery, classify_k, quadrature_report,
                              stationary_phase_approx)
    from .surfaces import load_surface

    chart = load_surface(args.surface)
    w = _weight(args, chart)
    query = OscillatoryQuery(chart, args.j, tuple(args.k), args.q, weight=w, quad_tol=args.tol)
    query.validate()
    quad = quadrature_report(query)
    k_class = classify_k(args.j, tuple(args.k), dual_geometry(chart, w))
    if k_class is KClass.K2:
        # no critical point in the support: only the quadrature is meaningful
        leading = sigma = Delta = None
    else:
        sp = stationary_phase_approx(query, quadrature=False)
        leading = {"re": sp.leading.real, "im": sp.leading.imag}
        sigma, Delta = sp.sigma, sp.Delta
    payload = {
        "quadrature": {"re": quad.value.real, "im": quad.value.imag},
        "quad_error": quad.error,
        "leading": leading,
        "class": k_class.name,
        "sigma": sigma,
        "delta": Delta,
    }
    return json_text(payload), chart, {"quad_tol": args.tol}


def _cmd_poisson(args):
    from .oscillatory import poisson_check
    from .surfaces import load_surface

    chart = load_surface(args.surface)
    w = _weight(args, chart)
    r = poisson_check(chart, args.j, args.q, weight=w, trunc=args.trunc)
    payload = {
        "j": r.j,
        "q": r.q,
        "lattice_sum": {"re": r.lattice_sum.real, "im": r.lattice_sum.imag},
        "dual_sum": {"re": r.dual_sum.real, "im": r.dual_sum.imag},
        "residual": r.residual,
        "truncation": r.truncation,
        "n_frequencies": r.n_frequencies,
        "tail_estimate": r.tail_estimate,
        "quad_error": r.quad_error,
    }
    return json_text(payload), chart, {"trunc": r.truncation, "tail_tol": 1e-8}


def _cmd_kernels(args):
    from .kernels import selberg_pair

    # a broken sandwich raises ConstructionError, reported as exit code 3
    pair = selberg_pair(args.J, args.alpha, args.beta, n_grid=args.grid)
    viol, where = pair.sandwich_violation(args.grid)
    rows = [(m, pair.coefficient(m, +1), pair.coefficient(m, -1)) for m in range(-args.J, args.J + 1)]
    report = {"J": args.J, "alpha": args.alpha, "beta": args.beta,
              "sandwich_violation": viol, "worst_x": where, "ok": viol <= 1e-12}
    if args.json:
        payload = dict(report, coefficients=[{"j": m, "s_plus": p, "s_minus": q} for m, p, q in rows])
        return json_text(payload), None, {"sandwich_tol": 1e-12}
    sys.stderr.write("sandwich_violation=%s worst_x=%s\n" % (fmt(viol), fmt(where)))
    return csv_text(["j", "s_plus", "s_minus"], rows), None, {"sandwich_tol": 1e-12}


def _cmd_bootstrap(args):
    from .bootstrap import exponent_sequence

    seq = exponent_sequence(args.n, args.imax)
    rows = seq.rows(args.Q)
    header = ["i", "beta", "beta_decimal", "scheduled_i"]
    if args.json:
        return json_text([dict(zip(header, r)) for r in rows]), None, {}
    return csv_text(header, rows), None, {}


def _cmd_sweep(args):
    from .experiments import DeltaRule, SweepSpec, asymptotic_sweep
    from .surfaces import load_surface

    chart = load_surface(args.surface)
    w = _weight(args, chart) if args.mode == "weighted" else None
    spec = SweepSpec(chart, args.mode, args.Q, DeltaRule.parse(args.delta_rule), weight=w, K=args.K,
                     repetitions=args.repetitions, seed=args.seed, strict=args.strict)
    table = asymptotic_sweep(spec, args.threads)
    header = ["Q", "delta", "count", "main_term", "ratio", "residual"]
    rows = [(r.Q, r.delta, r.count, r.main_term, r.ratio, r.residual) for r in table.rows]
    if args.json:
        return json_text({"rows": [dict(zip(header, r)) for r in rows],
                          "residual_exponent": table.residual_exponent}), chart, {}
    return csv_text(header, rows), chart, {}


def _cmd_rs(args):
    from .experiments import rs_sweep

    table, _ = rs_sweep(args.M, args.delta, args.alpha)
    rows = [(r.M, r.delta, r.alpha, r.count) for r in table]
    header = ["M", "delta", "alpha", "count"]
    if args.json:
        return json_text([dict(zip(header, r)) for r in rows]), None, {}
    return csv_text(header, rows), None, {}


def _cmd_dimgrowth(args):
    from .experiments import dimension_growth_sweep, get_manifold

    rows, fit = dimension_growth_sweep(get_manifold(args.manifold), args.B, args.threads)
    header = ["B", "count", "bound_count"]
    data = [(r.B, r.count, r.bound_count) for r in rows]
    text = (json_text({"rows": [dict(zip(header, r)) for r in data],
                       "slope": fit.slope if fit else None}) if args.json else csv_text(header, data))
    bad = [r.B for r in rows if not r.dominated]
    if bad:
        _emit(args, text)
        raise ContractViolation(f"projection bound violated at B = {bad}")
    return text, None, {}


def _cmd_da(args):
    from .experiments import ApproxFunction, da_convergence_check

    psi = ApproxFunction(args.family, nu=args.nu, lam=args.lam)
    r = da_convergence_check(psi, args.s, args.n, q_max=args.q_max)
    header = ["q_max", "partial_sum", "verdict"]
    rows = [(q, v, r.verdict) for q, v in r.checkpoints]
    if args.json:
        return json_text({"rows": [dict(zip(header, x)) for x in rows], "tail": r.tail,
                          "exponent": r.exponent, "log_exponent": r.log_exponent}), None, {}
    return csv_text(header, rows), None, {}


_COMMANDS = {
    "count": _cmd_count,
    "dual": _cmd_dual,
    "oscint": _cmd_oscint,
    "poisson-check": _cmd_poisson,
    "kernels": _cmd_kernels,
    "bootstrap": _cmd_bootstrap,
    "sweep": _cmd_sweep,
    "rs": _cmd_rs,
    "dimgrowth": _cmd_dimgrowth,
    "da-check": _cmd_da,
}


def _emit(args, text):
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def dispatch(argv) -> int:
    """Run one subcommand and return its exit code."""
    argv = list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage() + "near-misses: error: a subcommand is required")
    except UsageError as exc:
        sys.stderr.write(str(exc) + "\n")
        return EXIT_INPUT
    t0 = time.perf_counter()
    try:
        args.threads = resolve_threads(args.threads)
        text, chart, tolerances = _COMMANDS[args.command](args)
    except (BudgetError, AccuracyError, DegenerateGeometryError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_BUDGET
    except (ConstructionError, ContractViolation) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONTRACT
    except (UsageError, ValueError, KeyError, OSError, CurvatureError, OutsideDualDomain,
            PropertyPWitnessError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except NearMissesError as exc:
        # remaining library errors signal a broken internal contract
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONTRACT
    _emit(args, text)
    if args.out:
        man = run_manifest(argv, args, chart, tolerances, time.perf_counter() - t0)
        with open(args.out + ".manifest.json", "w") as fh:
            fh.write(json_text(man))
    return EXIT_OK


def main(argv=None) -> int:
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
