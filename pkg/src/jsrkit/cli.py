"""Joint spectral radius bounds, certificates and closed forms for matrix families.

Exit codes: 0 ok or Stable, 1 Unstable, 2 Undecided, 3 no closed form,
64 usage or malformed input, 65 failed precondition.
"""

from __future__ import annotations

import argparse
import io as _stdio
import json
import sys

import numpy as np

from . import gallery, io
from .bounds import (
    DECIDE_K_MAX,
    DEFAULT_BUDGET,
    DEFAULT_K_MAX,
    Status,
    bracket,
    certify_candidate,
    decide_stability,
    norm_label,
    smp_candidates,
)
from .errors import JSRError, PreconditionError
from .inclusion import Cyclic, Greedy, RandomSwitching, robustness_search, simulate_trajectory
from .matrix_core import DEFAULT_NORMS, parse_norm
from .special import try_closed_form
from .structure import defectivity_probe, invariant_subspace_search

EXIT_OK, EXIT_UNSTABLE, EXIT_UNDECIDED, EXIT_NO_RULE = 0, 1, 2, 3
EXIT_USAGE, EXIT_PRECONDITION = 64, 65


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _budget(text):
    value = float(text)
    if not value > 0 or value != int(value):
        raise argparse.ArgumentTypeError(f"budget must be a positive integer, got {text}")
    return int(value)


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return value


def _norms(text):
    try:
        return tuple(parse_norm(t) for t in text.split(",") if t.strip())
    except JSRError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _read_input(path):
    if path == "-":
        data = sys.stdin.buffer.read()
    else:
        with open(path, "rb") as fh:
            data = fh.read()
    return data, io.digest(data)


def _load_family(path):
    data, sha = _read_input(path)
    return io.parse_family(data.decode("utf-8")), sha


def _emit(report, out=None):
    text = report.dumps()
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


# ---------------------------------------------------------------- commands

def cmd_bounds(args):
    F, sha = _load_family(args.file)
    norms = args.norms or DEFAULT_NORMS
    br = bracket(F, k_max=args.kmax, norms=norms, budget=args.budget)
    labels = [norm_label(kind) for kind in norms]
    report = io.RunReport("bounds", sha, {"kmax": args.kmax, "norms": labels, "budget": args.budget}, args.seed)
    report.result = {"bracket": br.as_dict(with_records=True)}
    if args.csv == "-":
        io.bounds_csv(br.records, labels, sys.stdout)
        if args.out:
            _emit(report, args.out)
        return EXIT_OK
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            io.bounds_csv(br.records, labels, fh)
    _emit(report, args.out)
    return EXIT_OK


def cmd_decide(args):
    F, sha = _load_family(args.file)
    verdict = decide_stability(F, budget=args.budget, k_max=args.kmax)
    report = io.RunReport("decide", sha, {"budget": args.budget, "kmax": args.kmax}, args.seed)
    report.result = {"verdict": verdict.as_dict()}
    _emit(report, args.out)
    return {Status.STABLE: EXIT_OK, Status.UNSTABLE: EXIT_UNSTABLE}.get(verdict.status, EXIT_UNDECIDED)


def cmd_special(args):
    F, sha = _load_family(args.file)
    res = try_closed_form(F, tol=args.tol)
    report = io.RunReport("special", sha, {"tol": args.tol}, args.seed)
    report.result = {"closed_form": res.as_dict() if res else None}
    _emit(report, args.out)
    if res is None:
        print("no rule", file=sys.stderr)
        return EXIT_NO_RULE
    return EXIT_OK


def cmd_smp(args):
    F, sha = _load_family(args.file)
    cands = smp_candidates(F, k_max=args.kmax)
    rows = []
    for c in cands:
        row = c.as_dict()
        if args.certify and c.minimal:
            c2, cert = certify_candidate(F, c)
            row = c2.as_dict()
            row["certification"] = cert.as_dict()
        rows.append(row)
    report = io.RunReport("smp", sha, {"kmax": args.kmax, "certify": args.certify}, args.seed)
    report.result = {"candidates": rows}
    _emit(report, args.out)
    return EXIT_OK


def cmd_robustness(args):
    data, sha = _read_input(args.file)
    system = io.parse_system(data.decode("utf-8"))
    try:
        res = robustness_search(system, alpha_hi=args.alpha_hi, tol_alpha=args.tol,
                                per_alpha_budget=args.budget)
    except PreconditionError as exc:
        print(f"jsrkit robustness: precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    report = io.RunReport("robustness", sha, {"alpha_hi": args.alpha_hi, "tol": args.tol,
                                              "budget": args.budget, "delta_norm": system.delta_norm}, args.seed)
    report.result = res.as_dict()
    _emit(report, args.out)
    return EXIT_OK


def cmd_structure(args):
    F, sha = _load_family(args.file)
    cert = invariant_subspace_search(F, seed=args.seed)
    rho = args.rho or bracket(F, k_max=min(args.kmax, DEFAULT_K_MAX), budget=args.budget).best_upper
    report = io.RunReport("structure", sha, {"rho": rho, "K": args.K}, args.seed)
    report.result = {
        "reducibility": cert.as_dict() if cert else None,
        "defectivity": defectivity_probe(F, rho, K=args.K, seed=args.seed).as_dict() if rho > 0 else None,
    }
    _emit(report, args.out)
    return EXIT_OK


def cmd_gallery(args):
    params = {k: v for k, v in vars(args).items()
              if k in ("alpha", "k", "a", "b", "c", "d", "n", "lam") and v is not None}
    print(io.emit_family(gallery.get(args.name, **params)))
    return EXIT_OK


def _policy(text, seed):
    if text == "greedy":
        return Greedy()
    if text == "random":
        return RandomSwitching(seed)
    if text.startswith("cyclic:"):
        return Cyclic(tuple(int(t) for t in text[len("cyclic:"):].split("-")))
    raise JSRError(f"unknown policy {text!r}; use greedy, random or cyclic:0-1-...")


def cmd_trajectory(args):
    F, sha = _load_family(args.file)
    if args.x0:
        x0 = np.array([complex(t) for t in args.x0.split(",")])
    else:
        x0 = np.ones(F.n)
    t = simulate_trajectory(F, x0, _policy(args.policy, args.seed), args.K, args.norm)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            t.to_csv(fh)
    else:
        buf = _stdio.StringIO()
        t.to_csv(buf)
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser():
    p = _Parser(prog="jsrkit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_, file_help="family JSON file ('-' for stdin)"):
        s = sub.add_parser(name, help=help_)
        if file_help:
            s.add_argument("file", help=file_help)
        s.add_argument("--seed", type=int, default=0, help="root RNG seed (echoed in the report)")
        s.add_argument("--out", help="write the JSON report here instead of stdout")
        s.set_defaults(func=func)
        return s

    s = add("bounds", cmd_bounds, "lower/upper bounds for k = 1..kmax")
    s.add_argument("--kmax", type=_positive_int, default=DEFAULT_K_MAX)
    s.add_argument("--norms", type=_norms, default=None, help="comma list of rowsum, spectral, colsum")
    s.add_argument("--budget", type=_budget, default=DEFAULT_BUDGET, help="matrix multiplications")
    s.add_argument("--csv", help="write the bounds table here ('-' for stdout)")

    s = add("decide", cmd_decide, "stability verdict (exit 0 stable, 1 unstable, 2 undecided)")
    s.add_argument("--budget", type=_budget, default=DEFAULT_BUDGET)
    s.add_argument("--kmax", type=_positive_int, default=DECIDE_K_MAX)

    s = add("special", cmd_special, "closed-form value when a structural rule applies (exit 3 if none)")
    s.add_argument("--tol", type=float, default=1e-10)

    s = add("smp", cmd_smp, "spectrum-maximizing product candidates")
    s.add_argument("--kmax", type=_positive_int, default=8)
    s.add_argument("--certify", action="store_true", help="search for an extremal ellipsoidal norm")

    s = add("robustness", cmd_robustness, "largest certified-stable uncertainty level",
            file_help="system JSON file")
    s.add_argument("--alpha-hi", type=float, default=1.0)
    s.add_argument("--tol", type=float, default=0.01)
    s.add_argument("--budget", type=_budget, default=DEFAULT_BUDGET, help="multiplications per probed alpha")

    s = add("structure", cmd_structure, "reducibility search and defectivity probe")
    s.add_argument("--rho", type=float, default=None, help="normalization (default: bracket upper bound)")
    s.add_argument("--K", type=_positive_int, default=64)
    s.add_argument("--kmax", type=_positive_int, default=8)
    s.add_argument("--budget", type=_budget, default=DEFAULT_BUDGET)

    s = sub.add_parser("gallery", help="print a named reference family as a family file")
    s.add_argument("name", choices=sorted([*gallery.GALLERY, *gallery.ALIASES]))
    for flag in ("alpha", "a", "b", "c", "d", "lam"):
        s.add_argument(f"--{flag}", type=float)
    s.add_argument("--k", type=int)
    s.add_argument("--n", type=int)
    s.set_defaults(func=cmd_gallery)

    s = add("trajectory", cmd_trajectory, "simulate x(k+1) = A_(i_k) x(k) and print CSV")
    s.add_argument("--policy", default="greedy", help="greedy, random or cyclic:0-1-...")
    s.add_argument("--K", type=int, default=100)
    s.add_argument("--x0", help="comma-separated initial state (default all ones)")
    s.add_argument("--norm", default="inf", choices=["inf", "2", "1"])
    s.add_argument("--csv", help="write the CSV here instead of stdout")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except io.FamilyFileError as exc:
        print(f"jsrkit {args.command}: malformed input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PreconditionError as exc:
        print(f"jsrkit {args.command}: precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (JSRError, OSError, UnicodeDecodeError) as exc:
        print(f"jsrkit {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
