"""Command-line interface.

Exit codes: 0 success (or the inequality holds), 1 an inequality or
construction check was violated, 2 input error, 3 the admissibility
hypothesis fails.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys

import numpy as np

from . import documents as docs
from ._quadrature import log_quad
from .construct import construct_psi
from .embedding import verify_embedding
from .functionals import ConstructedPsi, PiecewisePowerPsi, condition3_integral, lorentz_functional, orlicz_modular
from .monotone import StepFunction, TailedDecreasingFunction, make_exponents
from .rearrange import WeightedSamples, rearrange_samples

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_HYPOTHESIS = 0, 1, 2, 3
DEMO_INTERVAL_END = 0.5


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers


def _num(x):
    """JSON-safe number: infinities become the string ``"divergent"``."""
    x = float(x)
    return "divergent" if math.isinf(x) else x


def _put(report, key, fv):
    report[key] = _num(fv.value)
    if not fv.finite:
        report[f"{key}_end"] = fv.end
    report[f"{key}_breakdown"] = {label: _num(v) for label, v in fv.breakdown}


def _emit(text, path=None):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _exponents(args, psi=None):
    p, r = args.p, args.r
    if isinstance(psi, ConstructedPsi):
        p = psi.exponents.p if p is None else p
        r = psi.exponents.r if r is None else r
    if p is None or r is None:
        raise InputError("--p and --r are required")
    try:
        return make_exponents(p, r)
    except ValueError as exc:
        raise InputError(f"invalid exponents: {exc}") from exc


def _load(path, want):
    try:
        obj = docs.load(path)
    except docs.DocumentError as exc:
        raise InputError(str(exc)) from exc
    if want == "function" and not isinstance(obj, (StepFunction, TailedDecreasingFunction)):
        raise InputError(f"{path}: expected a step or tailed function document")
    if want == "psi" and not isinstance(obj, (PiecewisePowerPsi, ConstructedPsi)):
        raise InputError(f"{path}: expected an Orlicz function document")
    return obj


# ---------------------------------------------------------------------------
# commands


def read_samples(path):
    """``value,measure`` rows with an optional header; errors name the line."""
    rows = []
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    with fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            cells = [c.strip() for c in row]
            if lineno == 1 and [c.lower() for c in cells] == ["value", "measure"]:
                continue
            if len(cells) != 2:
                raise InputError(f"line {lineno}: expected 'value,measure', got {','.join(row)!r}")
            try:
                v, m = float(cells[0]), float(cells[1])
            except ValueError:
                raise InputError(f"line {lineno}: not a number in {','.join(row)!r}") from None
            if not (math.isfinite(v) and math.isfinite(m)):
                raise InputError(f"line {lineno}: values must be finite")
            if not m > 0.0:
                raise InputError(f"line {lineno}: measure must be positive, got {cells[1]}")
            rows.append((v, m))
    return WeightedSamples(tuple(rows))


def cmd_rearrange(args):
    f = rearrange_samples(read_samples(args.inp))
    _emit(docs.dumps(docs.to_document(f)), args.out)
    return EXIT_OK


def cmd_functionals(args):
    f = _load(args.f, "function")
    psi = _load(args.psi, "psi") if args.psi else None
    e = _exponents(args, psi)
    report = {}
    _put(report, "J", lorentz_functional(f, e))
    if psi is not None:
        _put(report, "M", orlicz_modular(psi, f))
        _put(report, "K", condition3_integral(psi, e))
    ends = [report[k + "_end"] for k in ("J", "M", "K") if k + "_end" in report]
    if len(ends) == 1:
        report["end"] = ends[0]
    _emit(docs.dumps(report), args.out)
    return EXIT_OK


def cmd_construct(args):
    f = _load(args.f, "function")
    if not isinstance(f, StepFunction):
        raise InputError("construct needs a step function document")
    if f.is_zero:
        raise InputError("construct needs a nonzero step function")
    e = _exponents(args)
    res = construct_psi(f, e)
    if args.out:
        _emit(docs.dumps(docs.to_document(res.psi)), args.out)
    c = res.cushion
    report = {
        "exponents": {"p": e.p, "r": e.r, "q": e.q},
        "cushion": {"a": c.a, "b": c.b, "delta": c.delta},
        "window": {"k_min": res.window[0], "k_max": res.window[1]},
        "J_f": _num(res.J_f),
        "J_g0": _num(res.J_g0),
        "J_g": _num(res.J_g),
        "K": _num(res.K),
        "M_f": _num(res.M_f),
        "M_g": _num(res.M_g),
        "M_half_g0": _num(res.M_half),
        "identity_K_residual": _num(res.identity_K_residual),
        "identity_M_residual": _num(res.identity_M_residual),
        "identity_K_abs_residual": _num(abs(res.K - res.J_g / e.p)),
        "identity_M_abs_residual": _num(abs(res.M_g - res.J_g)),
        "checks": [
            {"name": ch.name, "passed": ch.passed, "measured": _num(ch.measured), "detail": ch.detail}
            for ch in res.diagnostics
        ],
        "all_passed": res.passed,
    }
    if res.K_end:
        report["K_end"] = res.K_end
    _emit(docs.dumps(report), args.report)
    return EXIT_OK if res.passed else EXIT_VIOLATION


def cmd_verify(args):
    f = _load(args.f, "function")
    if not isinstance(f, StepFunction):
        raise InputError("verify needs a step function document")
    if f.is_zero:
        raise InputError("verify needs a nonzero step function")
    psi = _load(args.psi, "psi")
    e = _exponents(args, psi)
    rep = verify_embedding(f, psi, e)
    report = {
        "J": _num(rep.J),
        "K": _num(rep.K),
        "M": _num(rep.M),
        "c": rep.c,
        "c8": rep.c8 if math.isfinite(rep.c8) else None,
        "log_c8": rep.log_c8,
        "bound": _num(rep.bound),
        "chain": {k: _num(v) for k, v in rep.chain.items()},
        "H1": _num(rep.H1),
        "links": rep.links,
        "holds": rep.holds,
        "hypothesis_failed": rep.hypothesis_failed,
    }
    if rep.K_end:
        report["K_end"] = rep.K_end
    if rep.M_end:
        report["M_end"] = rep.M_end
    _emit(docs.dumps(report), args.out)
    if rep.hypothesis_failed:
        return EXIT_HYPOTHESIS
    return EXIT_OK if rep.holds else EXIT_VIOLATION


def truncated_integral(exponent, p, eps):
    """``int_eps^(1/2) f^exponent dx`` for ``f = x^(-1/p) ln(1/x)^(-2/p)``.

    With ``u = ln(1/x)`` the integrand becomes
    ``exp((exponent/p - 1) u) * u^(-2 exponent/p)`` on ``[ln 2, ln(1/eps)]``.
    """
    a, b = math.log(1.0 / DEMO_INTERVAL_END), math.log(1.0 / eps)
    if not b > a:
        return 0.0
    k = exponent / p

    def logf(u):
        return (k - 1.0) * u - 2.0 * k * np.log(u)

    # split at doublings of u so each piece is smooth on a moderate range
    edges = [a]
    while edges[-1] * 2.0 < b:
        edges.append(edges[-1] * 2.0)
    edges.append(b)
    return float(np.sum(log_quad(logf, edges[:-1], edges[1:])))


def counterexample_table(p, qs, epss):
    """The truncated ``p`` and ``q`` integrals of the counterexample, one row per ``eps``."""
    epss = sorted(epss, reverse=True)
    rows = []
    for eps in epss:
        row = {
            "eps": eps,
            "p_integral": truncated_integral(p, p, eps),
            "p_closed_form": 1.0 / math.log(2.0) - 1.0 / math.log(1.0 / eps),
            "q_integrals": {repr(float(q)): truncated_integral(q, p, eps) for q in qs},
        }
        rows.append(row)
    pvals = [r["p_integral"] for r in rows]
    p_diffs = [b - a for a, b in zip(pvals, pvals[1:])]
    q_summary = {}
    for q in qs:
        key = repr(float(q))
        vals = [r["q_integrals"][key] for r in rows]
        incs = [b - a for a, b in zip(vals, vals[1:])]
        q_summary[key] = {
            "increments": incs,
            "increasing": all(d > 0 for d in incs),
            "increments_growing": all(b > a for a, b in zip(incs, incs[1:])),
        }
    return {
        "function": "x^(-1/p) * ln(1/x)^(-2/p) on (0, 1/2]",
        "p": p,
        "rows": rows,
        "p_limit": 1.0 / math.log(2.0),
        "p_differences": p_diffs,
        "p_differences_shrinking": all(b < a for a, b in zip(p_diffs, p_diffs[1:])),
        "q": q_summary,
    }


def cmd_demo(args):
    p = args.p if args.p is not None else 2.0
    if not p > 1.0:
        raise InputError(f"p > 1 violated: p = {p!r}")
    qs = args.q if args.q else [3.0]
    for q in qs:
        if not q > p:
            raise InputError(f"each q must exceed p: q = {q!r}, p = {p!r}")
    epss = args.eps if args.eps else [1e-2, 1e-4, 1e-6, 1e-8]
    for eps in epss:
        if not 0.0 < eps <= DEMO_INTERVAL_END:
            raise InputError(f"eps must lie in (0, 1/2]: eps = {eps!r}")
    _emit(docs.dumps(counterexample_table(p, qs, epss)), args.out)
    return EXIT_OK


def parse_grid(text):
    parts = text.split(":")
    if len(parts) != 4 or parts[0] != "log":
        raise InputError(f"grid must look like log:lo:hi:n, got {text!r}")
    try:
        lo, hi, n = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError:
        raise InputError(f"grid must look like log:lo:hi:n, got {text!r}") from None
    if not (0.0 < lo < hi and math.isfinite(hi)) or n < 2:
        raise InputError(f"grid needs 0 < lo < hi and n >= 2, got {text!r}")
    return np.geomspace(lo, hi, n)


def cmd_plot(args):
    if bool(args.f) == bool(args.psi):
        raise InputError("plot needs exactly one of --f and --psi")
    t = parse_grid(args.grid)
    obj = _load(args.f, "function") if args.f else _load(args.psi, "psi")
    cols = [t, np.asarray(obj(t), dtype=float)]
    header = ["t", "value"]
    if isinstance(obj, ConstructedPsi):
        cols.append(np.exp(obj.log(np.log(t)) - obj.exponents.r * np.log(t)))
        header.append("psi_over_t_r")
    lines = [",".join(header)]
    lines += [",".join(repr(float(c[i])) for c in cols) for i in range(len(t))]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser():
    ap = argparse.ArgumentParser(prog="lorentz-orlicz", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def exps(sp):
        sp.add_argument("--p", type=float)
        sp.add_argument("--r", type=float)

    sp = sub.add_parser("rearrange", help="nonincreasing rearrangement of value,measure samples")
    sp.add_argument("--in", dest="inp", required=True)
    sp.add_argument("--out")
    sp.set_defaults(run=cmd_rearrange)

    sp = sub.add_parser("functionals", help="J, and with --psi also M and K")
    sp.add_argument("--f", required=True)
    sp.add_argument("--psi")
    sp.add_argument("--out")
    exps(sp)
    sp.set_defaults(run=cmd_functionals)

    sp = sub.add_parser("construct", help="build an admissible Psi with finite modular for f")
    sp.add_argument("--f", required=True)
    sp.add_argument("--out", help="where to write the constructed Psi document")
    sp.add_argument("--report", help="where to write the diagnostics report (default stdout)")
    exps(sp)
    sp.set_defaults(run=cmd_construct)

    sp = sub.add_parser("verify", help="check J <= c K^(r/q) M^(r/p)")
    sp.add_argument("--f", required=True)
    sp.add_argument("--psi", required=True)
    sp.add_argument("--out")
    exps(sp)
    sp.set_defaults(run=cmd_verify)

    sp = sub.add_parser("demo", help="truncated integrals of the counterexample function")
    sp.add_argument("--p", type=float)
    sp.add_argument("--q", type=float, nargs="+")
    sp.add_argument("--eps", type=float, nargs="+")
    sp.add_argument("--out")
    sp.set_defaults(run=cmd_demo)

    sp = sub.add_parser("plot", help="tabulate a function on a log grid as CSV")
    sp.add_argument("--f")
    sp.add_argument("--psi")
    sp.add_argument("--grid", default="log:1e-6:1e6:121")
    sp.add_argument("--out")
    sp.set_defaults(run=cmd_plot)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
