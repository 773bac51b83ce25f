"""Command-line entry point: ``permprod {table,single,product,verify,sweep}``.

Exit codes: 0 success, 1 verification mismatch, 2 optimiser non-convergence,
3 invalid arguments.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from fractions import Fraction

from .brute import brute_product
from .exact import exact_product
from .optimize import SEED_ENV, RateOptions, rate_product, seed_from_env, sweep_r
from .rate import rate_single

EXIT_OK, EXIT_MISMATCH, EXIT_NONCONVERGED, EXIT_USAGE = 0, 1, 2, 3

TABLE_GRID = ((0.4, 5), (0.4, 50), (0.8, 5), (0.8, 50))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _common(suppress: bool) -> argparse.ArgumentParser:
    # subcommands repeat the global flags; SUPPRESS keeps them from clobbering
    # values given before the subcommand name
    def d(value):
        return argparse.SUPPRESS if suppress else value

    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("tsv", "json"), default=d("tsv"))
    common.add_argument("--precision", type=int, default=d(4))
    common.add_argument("--seed", type=int, default=d(None),
                        help=f"optimiser seed (default: ${SEED_ENV} or a fixed constant)")
    common.add_argument("--workers", type=int, default=d(1),
                        help="processes used for multi-start searches")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="permprod", description="Exact and asymptotic expectations of permanental minors of Bernoulli 0-1 matrices.",
                     parents=[_common(False)])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub_common = _common(True)

    def add(name, help_):
        return sub.add_parser(name, help=help_, parents=[sub_common])

    p = add("table", "LS and RS at s in {.4, .8}, r in {5, 50}")
    p.add_argument("--starts", type=int, default=64)
    p.add_argument("--tol", type=float, default=1e-10)

    p = add("single", "rate of E perm_{sn}")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--r", type=float, required=True)

    p = add("product", "rate of E(perm_{sn} perm_{tn})")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--starts", type=int, default=64)
    p.add_argument("--tol", type=float, default=1e-10)

    p = add("verify", "exact profile sum against brute force for all small cells")
    p.add_argument("--max-n", type=int, default=5)
    p.add_argument("--approx-t6", action="store_true", help=argparse.SUPPRESS)

    p = add("sweep", "LS - RS gap along increasing r")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--r-list", type=_float_list, required=True)
    p.add_argument("--starts", type=int, default=64)
    p.add_argument("--tol", type=float, default=1e-10)
    return parser


def _validate(args) -> None:
    if args.precision < 0:
        raise UsageError("--precision must be non-negative")
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    if getattr(args, "starts", 1) < 1:
        raise UsageError("--starts must be >= 1")
    if getattr(args, "tol", 1.0) <= 0:
        raise UsageError("--tol must be positive")
    for name in ("s", "t"):
        v = getattr(args, name, None)
        if v is not None and not 0 < v <= 1:
            raise UsageError(f"--{name} must lie in (0, 1], got {v}")
    if getattr(args, "r", None) is not None and args.r <= 0:
        raise UsageError(f"--r must be positive, got {args.r}")
    if args.command == "sweep":
        rl = args.r_list
        if not rl:
            raise UsageError("--r-list must be non-empty")
        if any(r <= 0 for r in rl):
            raise UsageError("--r-list values must be positive")
        if any(b <= a for a, b in zip(rl, rl[1:])):
            raise UsageError("--r-list must be strictly ascending")
    if args.command == "verify" and args.max_n < 0:
        raise UsageError("--max-n must be non-negative")


def _options(args) -> RateOptions:
    seed = args.seed if args.seed is not None else seed_from_env()
    return RateOptions(starts=args.starts, seed=seed, tol=args.tol, workers=args.workers)


def _label(s: float, r: float) -> str:
    s_txt = f"{s:g}"
    if s_txt.startswith("0."):
        s_txt = s_txt[1:]
    return f"s={s_txt}, r={r:g}"


PARAM_COLUMNS = frozenset({"s", "t", "r"})


def _fmt(v, precision: int, column: str = "") -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float) and column in PARAM_COLUMNS:
        return repr(v) if v != int(v) else str(int(v))
    if isinstance(v, float):
        return f"{v:.{precision}f}"
    return str(v)


class Report:
    """Rows plus diagnostics, rendered as TSV or JSON."""

    def __init__(self, command: str, params: dict, columns: list[str]):
        self.command = command
        self.params = params
        self.columns = columns
        self.rows: list[dict] = []
        self.diagnostics: list[dict] = []
        self.summary: list[str] = []

    def render(self, fmt: str, precision: int) -> str:
        if fmt == "json":
            return json.dumps({"command": self.command, "params": self.params, "rows": self.rows,
                               "diagnostics": self.diagnostics, "summary": self.summary},
                              indent=2) + "\n"
        out = io.StringIO()
        out.write("\t".join(self.columns) + "\n")
        for row in self.rows:
            out.write("\t".join(_fmt(row[c], precision, c) for c in self.columns) + "\n")
        for line in self.summary:
            out.write(f"# {line}\n")
        return out.getvalue()


def _diag(res) -> dict:
    d = res.to_dict()
    del d["value"]
    return d


def run_table(args) -> tuple[Report, int]:
    opts = _options(args)
    rep = Report("table", {"seed": opts.seed, "starts": opts.starts, "tol": opts.tol},
                 ["row", "s", "r", "LS", "RS", "converged"])
    code = EXIT_OK
    for s, r in TABLE_GRID:
        res = rate_product(s, s, r, opts)
        rep.rows.append({"row": _label(s, r), "s": s, "r": float(r), "LS": res.value,
                         "RS": 2 * rate_single(s, r), "converged": res.converged})
        rep.diagnostics.append(_diag(res))
        if not res.converged:
            code = EXIT_NONCONVERGED
    return rep, code


def run_single(args) -> tuple[Report, int]:
    rep = Report("single", {"s": args.s, "r": args.r}, ["s", "r", "rate", "twice_rate"])
    v = rate_single(args.s, args.r)
    rep.rows.append({"s": args.s, "r": args.r, "rate": v, "twice_rate": 2 * v})
    return rep, EXIT_OK


def run_product(args) -> tuple[Report, int]:
    opts = _options(args)
    rep = Report("product", {"s": args.s, "t": args.t, "r": args.r, "seed": opts.seed,
                             "starts": opts.starts, "tol": opts.tol},
                 ["s", "t", "r", "rate", "converged"])
    res = rate_product(args.s, args.t, args.r, opts)
    rep.rows.append({"s": args.s, "t": args.t, "r": args.r, "rate": res.value,
                     "converged": res.converged})
    rep.diagnostics.append(_diag(res))
    return rep, EXIT_OK if res.converged else EXIT_NONCONVERGED


def verify_cells(max_n: int):
    """Every (n, m, m', r) with n <= max_n, m <= m' <= n, 1 <= r <= n (r = 0 for n = 0)."""
    for n in range(max_n + 1):
        for m in range(n + 1):
            for mp in range(m, n + 1):
                for r in (range(1, n + 1) if n else (0,)):
                    yield n, m, mp, r


def _frac(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def run_verify(args) -> tuple[Report, int]:
    rep = Report("verify", {"max_n": args.max_n, "approx_t6": bool(args.approx_t6)},
                 ["n", "m", "m_prime", "r", "exact", "brute", "status"])
    failures = []
    for n, m, mp, r in verify_cells(args.max_n):
        a = exact_product(n, m, mp, r, approximate_t6=args.approx_t6)
        b = brute_product(n, m, mp, r)
        ok = a == b
        rep.rows.append({"n": n, "m": m, "m_prime": mp, "r": r, "exact": _frac(a),
                         "brute": _frac(b), "status": "PASS" if ok else "FAIL"})
        if not ok:
            failures.append((n, m, mp, r))
    rep.summary.append(f"{len(rep.rows) - len(failures)}/{len(rep.rows)} cells exact-equal")
    for cell in failures:
        rep.summary.append("mismatch at (n, m, m', r) = ({}, {}, {}, {})".format(*cell))
    return rep, EXIT_MISMATCH if failures else EXIT_OK


def run_sweep(args) -> tuple[Report, int]:
    opts = _options(args)
    rep = Report("sweep", {"s": args.s, "r_list": args.r_list, "seed": opts.seed,
                           "starts": opts.starts, "tol": opts.tol},
                 ["r", "LS", "RS", "gap", "converged"])
    rows = sweep_r(args.s, args.r_list, opts)
    for row in rows:
        rep.rows.append({"r": row.r, "LS": row.ls, "RS": row.rs, "gap": row.gap,
                         "converged": row.converged})
        rep.diagnostics.append(_diag(row.result))
    gaps = [row.gap for row in rows]
    decreasing = all(b < a for a, b in zip(gaps, gaps[1:]))
    rep.summary.append(f"gap strictly decreasing in r: {'yes' if decreasing else 'no'}")
    failed = [row.r for row in rows if not row.converged]
    if failed:
        rep.summary.append("not converged at r = " + ", ".join(f"{r:g}" for r in failed))
    return rep, EXIT_NONCONVERGED if failed else EXIT_OK


COMMANDS = {"table": run_table, "single": run_single, "product": run_product,
            "verify": run_verify, "sweep": run_sweep}


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        _validate(args)
    except UsageError as exc:
        print(f"permprod: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report, code = COMMANDS[args.command](args)
    stdout.write(report.render(args.format, args.precision))
    return code


if __name__ == "__main__":
    sys.exit(main())
