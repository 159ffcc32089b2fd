"""Command-line front end.

Every subcommand prints a JSON report
``{command, seed, params, results, summary: {pass, min_slack, max_error}, elapsed_s}``
and exits with 0 (all checks passed), 1 (a mathematical check failed; the worst
instance is serialised under ``summary.argmin``) or 2 (usage or input error).
Randomised commands draw trial ``i`` from ``numpy.random.default_rng(seed + i)``.

CSV output (``--csv PATH``) has one row per instance with the columns
``index, seed, n, value, error, slack, pass``; cells a command does not
produce are left empty.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import embed_l3, even_moments, trace_deriv
from .divdiff import ScalarFunction
from .errors import SchattenError
from .io import matrix_to_json, parse_matrix, to_jsonable
from .matrix_core import as_hermitian, op_norm, schatten_norm
from .sampling import invertible_hermitian, random_hermitian, random_psd

CSV_COLUMNS = ["index", "seed", "n", "value", "error", "slack", "pass"]
FUNCTIONS = {
    "x3": lambda: ScalarFunction.monomial(3),
    "x4": lambda: ScalarFunction.monomial(4),
    "abs3": ScalarFunction.abs_pow3,
}


class UsageError(Exception):
    pass


def _load_pair(args):
    if args.a is None and args.b is None:
        return None
    if args.a is None or args.b is None:
        raise UsageError("--a and --b must be given together")
    A = parse_matrix(args.a).matrix
    B = parse_matrix(args.b).matrix
    if A.shape != B.shape:
        raise UsageError(f"--a is {A.shape[0]}x{A.shape[0]} but --b is {B.shape[0]}x{B.shape[0]}")
    return A, B


def _dim(args, rng) -> int:
    return int(args.n) if args.n is not None else int(rng.integers(2, 5))


def _instance(A, B):
    return {"A": json.loads(matrix_to_json(A)), "B": json.loads(matrix_to_json(B))}


# --------------------------------------------------------------------------
# subcommands: each returns a list of (result, instance) pairs


def _pairs(args, draw):
    pair = _load_pair(args)
    if pair is not None:
        yield 0, args.seed, pair
        return
    for i in range(args.trials):
        rng = np.random.default_rng(args.seed + i)
        yield i, args.seed + i, draw(rng)


def cmd_embed(args):
    tol = 1e-4 if args.tol is None else args.tol

    def draw(rng):
        n = _dim(args, rng)
        return random_hermitian(rng, n), random_hermitian(rng, n)

    out = []
    for i, seed, (A, B) in _pairs(args, draw):
        emb = embed_l3.embed_plane(A, B, directions=args.directions)
        err = emb.report["max_isometry_error"]
        res = {"index": i, "seed": seed, "n": int(A.shape[0]), "error": err, "pass": err <= tol}
        res.update({k: emb.report[k] for k in ("atoms", "total_mass", "residual_mass", "dilated", "regularized")})
        if args.a is not None:
            res["measure"] = emb.measure.to_dict()
        out.append((res, _instance(A, B)))
    return out


def cmd_verify(args):
    tol = 1e-4 if args.tol is None else args.tol
    pair = _load_pair(args)
    if pair is None or args.measure is None:
        raise UsageError("verify needs --a, --b and --measure")
    A, B = pair
    try:
        nu = embed_l3.CircleMeasure.from_dict(json.loads(Path(args.measure).read_text(encoding="utf-8")))
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read measure: {exc}") from exc
    err = embed_l3.verify_isometry(nu, A, B, args.directions)
    return [({"index": 0, "seed": args.seed, "n": int(A.shape[0]), "error": err, "pass": err <= tol}, _instance(A, B))]


def cmd_hanner(args):
    p = 3.0 if args.p is None else float(args.p)
    tol = 1e-9 if args.tol is None else args.tol

    def draw(rng):
        n = _dim(args, rng)
        return random_hermitian(rng, n), random_hermitian(rng, n)

    out = []
    for i, seed, (A, B) in _pairs(args, draw):
        slack = embed_l3.hanner_check(A, B, p)
        scale = (schatten_norm(A, p) + schatten_norm(B, p)) ** p
        res = {"index": i, "seed": seed, "n": int(A.shape[0]), "slack": slack / scale, "pass": slack >= -tol * scale}
        out.append((res, _instance(A, B)))
    return out


def cmd_deriv_check(args):
    k = 4 if args.k is None else int(args.k)
    tol = 1e-6 if args.tol is None else args.tol
    f = FUNCTIONS[args.f]()

    def draw(rng):
        n = _dim(args, rng)
        # keep the spectrum of A clear of the kink at 0 for |x|^3
        A = invertible_hermitian(rng, n) if f.kinks else random_hermitian(rng, n)
        return A, random_hermitian(rng, n)

    out = []
    for i, seed, (A, B) in _pairs(args, draw):
        A, B = as_hermitian(A), as_hermitian(B)
        h, dps = trace_deriv.oracle_settings(f, A, B, k)
        exact = trace_deriv.trace_fun_derivative(f, A, B, k) * math.factorial(k)
        approx = trace_deriv.fd_oracle(f, A, B, k, h=h, dps=dps)
        diff = abs(exact - approx)
        err = diff / abs(exact) if exact else diff
        ok = diff <= max(tol * abs(exact), 1e-8)
        res = {"index": i, "seed": seed, "n": int(A.shape[0]), "value": exact, "error": err, "pass": ok}
        out.append((res, _instance(A, B)))
    return out


def cmd_pattern_sums(args):
    k = 4 if args.k is None else int(args.k)
    if k not in (3, 4):
        raise UsageError("pattern-sums supports --k 3 or --k 4")
    tol = 1e-10 if args.tol is None else args.tol

    def draw(rng):
        n = _dim(args, rng)
        A = random_hermitian(rng, n)
        return A, (random_psd(rng, n) if k == 3 else random_hermitian(rng, n))

    out = []
    for i, seed, (A, B) in _pairs(args, draw):
        if k == 4:
            ps = trace_deriv.pattern_sums4(A, B)
            f1, f2 = trace_deriv.sos_form_values(A, B)
            slack = min(f1.value, f2.value) / ps.scale
            enum = trace_deriv.enumerate_quartic(A, B)
            err = abs(ps.total - enum) / ps.scale
            res = {"value": ps.total, "form1": f1.value, "form2": f2.value, "error": err}
            ok = slack >= -tol and err <= 1e-9
        else:
            cert = trace_deriv.pattern_sums3(A, B)
            scale = trace_deriv.cubic_scale(A, B)
            slack = cert.value / scale
            res = {"value": cert.value}
            ok = slack >= -tol
        res.update({"index": i, "seed": seed, "n": int(np.shape(A)[0]), "slack": slack, "pass": bool(ok)})
        out.append((res, _instance(A, B)))
    return out


def cmd_even_p(args):
    p = 4 if args.p is None else int(args.p)
    if p not in (2, 4):
        raise UsageError("even-p supports --p 2 or --p 4")
    tol = 1e-8 if args.tol is None else args.tol

    def draw(rng):
        n = _dim(args, rng)
        return random_hermitian(rng, n), random_hermitian(rng, n)

    out = []
    for i, seed, (A, B) in _pairs(args, draw):
        if p == 2:
            m0, m1, feasible, nu = even_moments.p2_moments(A, B)
            phi = np.arange(args.directions) * math.pi / args.directions
            exact = np.array([schatten_norm(math.cos(t) * A + math.sin(t) * B, 2) ** 2 for t in phi])
            approx = np.array([nu.moment(math.cos(t), math.sin(t), 2) for t in phi])
            err = float(np.max(np.abs(exact - approx)) / max(m0, 1e-300))
            res = {"m0": m0, "m1": m1, "slack": (m0 - abs(m1)) / max(m0, 1e-300), "error": err}
            ok = feasible and err <= tol
        else:
            m = even_moments.p4_moments(A, B)
            rep = even_moments.toeplitz_check(m)
            method = "nnls" if args.grid else "exact"
            nu = even_moments.recover_trig_measure(m, method=method, grid=args.grid or even_moments.NNLS_GRID)
            err = even_moments.p4_verify(A, B, nu, args.directions)
            res = {"m0": m.m0, "m1": m.m1, "m2": m.m2, "slack": rep.min_eigenvalue / m.m0, "error": err}
            res["atoms"] = {"angles": nu.angles, "masses": nu.masses}
            ok = rep.psd and err <= tol
        res.update({"index": i, "seed": seed, "n": int(np.shape(A)[0]), "pass": bool(ok)})
        out.append((res, _instance(A, B)))
    return out


def cmd_refute_3d(args):
    p = 4 if args.p is None else args.p
    if float(p) != int(p):
        raise UsageError("--p must be an even integer")
    mu_p, mu_mid, mu_low, combo = even_moments.refute_3d_moments(int(p))
    resid, _ = even_moments.refute_3d_nnls(int(p), args.grid or 2000)
    res = {
        "index": 0,
        "seed": args.seed,
        "mu_p": str(mu_p),
        "mu_mid": str(mu_mid),
        "mu_low": str(mu_low),
        "combo": str(combo),
        "value": float(combo),
        "nnls_residual": resid,
        "slack": -float(combo),
        "pass": combo < 0 and resid >= 0.01,
    }
    print(f"{mu_p} {mu_mid} {mu_low} {combo}", file=sys.stderr)
    return [(res, None)]


def cmd_probe(args):
    k = 4 if args.k is None else int(args.k)
    tol = 1e-6 if args.tol is None else args.tol
    rep = trace_deriv.conjecture_probe(k, args.trials, args.seed, family=args.family, n_max=args.n or 3)
    out = []
    for i, v in enumerate(rep.values):
        out.append(({"index": i, "seed": args.seed + i, "value": v, "slack": v, "pass": v >= -tol}, None))
    if out and rep.argmin is not None:
        worst = rep.argmin["trial"]
        out[worst] = (out[worst][0], _instance(rep.argmin["A"], rep.argmin["B"]) | {"function": rep.argmin["function"]})
    return out


COMMANDS = {
    "embed": cmd_embed,
    "verify": cmd_verify,
    "hanner": cmd_hanner,
    "deriv-check": cmd_deriv_check,
    "pattern-sums": cmd_pattern_sums,
    "even-p": cmd_even_p,
    "refute-3d": cmd_refute_3d,
    "probe-conjecture": cmd_probe,
}


# --------------------------------------------------------------------------
# driver


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="schatten-embed",
        description=__doc__.split("\n\n")[0],
        epilog="CSV columns: " + ", ".join(CSV_COLUMNS),
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--a", help="matrix file for A (JSON)")
    parser.add_argument("--b", help="matrix file for B (JSON)")
    parser.add_argument("--measure", help="circle measure JSON for 'verify'")
    parser.add_argument("--p", type=float, help="Schatten exponent")
    parser.add_argument("--k", type=int, help="derivative order")
    parser.add_argument("--n", type=int, help="matrix dimension (default: random in 2..4)")
    parser.add_argument("--f", choices=sorted(FUNCTIONS), default="abs3", help="function for deriv-check")
    parser.add_argument("--family", choices=["spline", "exp"], default="spline", help="probe-conjecture family")
    parser.add_argument("--trials", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--tol", type=float, help="pass threshold (command-specific default)")
    parser.add_argument("--directions", type=int, default=embed_l3.DIRECTIONS)
    parser.add_argument("--grid", type=int, help="grid size (NNLS angles for even-p, sphere points for refute-3d)")
    parser.add_argument("--csv", help="write one CSV row per instance")
    parser.add_argument("--out", help="write the JSON report here instead of stdout")
    return parser


def run_command(argv=None):
    """Run one command; returns ``(exit_code, report)``."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.trials < 0 or args.directions < 1:
        parser.error("--trials must be >= 0 and --directions >= 1")
    if args.p is not None and args.p == int(args.p):
        args.p = int(args.p)
    start = time.perf_counter()
    try:
        pairs = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2, None
    except SchattenError as exc:
        if args.a is None:
            raise
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2, None

    results = [r for r, _ in pairs]
    errors = [r["error"] for r in results if r.get("error") is not None]
    slacks = [r["slack"] for r in results if r.get("slack") is not None]
    passed = all(r["pass"] for r in results)
    summary = {
        "pass": passed,
        "min_slack": min(slacks) if slacks else None,
        "max_error": max(errors) if errors else None,
        "instances": len(results),
    }
    if not passed:
        failing = [i for i, r in enumerate(results) if not r["pass"]]
        if errors:
            worst = max(failing, key=lambda i: results[i].get("error") or -math.inf)
        else:
            worst = min(failing, key=lambda i: results[i].get("slack", math.inf))
        summary["argmin"] = {"index": results[worst]["index"], "instance": pairs[worst][1]}
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "seed", "out", "csv")}
    report = {
        "command": args.command,
        "seed": args.seed,
        "params": params,
        "results": results,
        "summary": summary,
        "elapsed_s": time.perf_counter() - start,
    }
    report = to_jsonable(report)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, extrasaction="ignore")
            writer.writeheader()
            for r in report["results"]:
                writer.writerow({c: r.get(c, "") for c in CSV_COLUMNS})
    return (0 if passed else 1), report


def main(argv=None) -> int:
    try:
        code, _ = run_command(argv)
    except SchattenError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return code


if __name__ == "__main__":
    sys.exit(main())
