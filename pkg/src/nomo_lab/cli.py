"""
Command-line front end.

Exit codes: 0 ok, 1 verify failure, 2 parse error, 3 invalid model,
4 non-convergence, 5 I/O error, 6 unsupported request.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ModelError, NomoError
from .gaussian import marginalize, reexpress
from .model import load_model_config, make_lambda_model
from .sweep import ALL_VARIANTS, SweepSpec, rows_to_csv, rows_to_json, run_sweep
from .transforms import heavy_center_transform
from .variational import AnsatzFamily, FamilyKind, MinimizeOptions, Variant, run_variants
from .verify import format_report, run_checks

EXIT_OK, EXIT_VERIFY, EXIT_PARSE, EXIT_MODEL, EXIT_CONVERGENCE, EXIT_IO, EXIT_UNSUPPORTED = range(7)


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(f"{self.prog}: {message}", EXIT_PARSE)


def _variants(text: str) -> tuple:
    names = tuple(v.strip() for v in text.split(",") if v.strip())
    for name in names:
        if name not in ALL_VARIANTS:
            raise argparse.ArgumentTypeError(f"unknown variant {name!r}; choose from {', '.join(ALL_VARIANTS)}")
    if not names:
        raise argparse.ArgumentTypeError("empty variant list")
    return names


def _add_model_args(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--lambda", dest="lam", type=float, help="K23/K of the three-particle family")
    g.add_argument("--config", type=Path, help="JSON model config")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nomo-lab", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="single-point report")
    _add_model_args(p)
    p.add_argument("--variant", type=_variants, default=ALL_VARIANTS)
    p.add_argument("--family", choices=[k.value for k in FamilyKind if k is not FamilyKind.UNCORRELATED_RELATIVE],
                   default="product", help="ansatz for tf/tc/ctc, 'full' also applies to rel-unc")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--dump-transform", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--multistart", type=int, default=0)

    p = sub.add_parser("sweep", help="lambda sweep to CSV/JSON")
    p.add_argument("--lambda-min", type=float, default=0.0)
    p.add_argument("--lambda-max", type=float, default=5.0)
    p.add_argument("--steps", type=int, default=101)
    p.add_argument("--variant", type=_variants, default=ALL_VARIANTS)
    p.add_argument("--grid-check", action="store_true", help="append a grid-oracle energy column")
    p.add_argument("--output", type=Path, default=None)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("marginal", help="internal-coordinate density of an absolute-frame state")
    _add_model_args(p)
    p.add_argument("--variant", default="tf", choices=list(ALL_VARIANTS))
    p.add_argument("--dump", type=Path, default=None, help="write intermediate exponents as JSON")
    p.add_argument("--dump-transform", action="store_true")

    p = sub.add_parser("verify", help="closed-form and oracle self-checks")
    p.add_argument("--level", choices=["quick", "full"], default="quick")
    return parser


def _load_model(args):
    try:
        if args.config is not None:
            model = load_model_config(args.config)
        else:
            model = make_lambda_model(1.0 if args.lam is None else args.lam)
    except ModelError as exc:
        raise CliError(f"invalid model: {exc}", EXIT_MODEL) from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot parse config: {exc}", EXIT_PARSE) from exc
    return model, heavy_center_transform(model)


def _num(x) -> str:
    return "-" if x is None else f"{x:.9g}"


def cmd_solve(args, out) -> int:
    model, transform = _load_model(args)
    family = AnsatzFamily(FamilyKind(args.family))
    options = MinimizeOptions(seed=args.seed, multistart=args.multistart)
    results = run_variants(
        model, transform, args.variant, family=family,
        relative_family=family if args.family == "full" else None, options=options,
    )
    doc = {"model": model.to_config(), "results": [r.to_dict() for r in results.values()]}
    if args.dump_transform:
        doc["transform"] = transform.to_dict()
    if args.format == "json":
        out.write(json.dumps(doc, indent=2) + "\n")
    else:
        out.write(f"{'variant':<8} {'energy':>14} {'<T_CM>':>14} {'alpha':>14} {'beta':>14}  params\n")
        for r in results.values():
            ab = r.marginal
            params = " ".join(f"{p:.9g}" for p in np.asarray(r.params))
            out.write(
                f"{r.variant.value:<8} {_num(r.energy):>14} {_num(r.tcm_expectation):>14} "
                f"{_num(ab and ab.alpha):>14} {_num(ab and ab.beta):>14}  {params}"
                f"{'' if r.converged else '  (not converged)'}\n"
            )
        if args.dump_transform:
            out.write("transform:\n" + json.dumps(transform.to_dict(), indent=2) + "\n")
    if not all(r.converged for r in results.values()):
        return EXIT_CONVERGENCE
    return EXIT_OK


def cmd_sweep(args, out) -> int:
    try:
        spec = SweepSpec(args.lambda_min, args.lambda_max, args.steps, args.variant, args.grid_check)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_PARSE) from exc
    rows = run_sweep(spec, MinimizeOptions(seed=args.seed))
    text = rows_to_csv(rows, spec.columns) if args.format == "csv" else rows_to_json(rows, spec.columns)
    if args.output is None:
        out.write(text)
    else:
        try:
            args.output.write_text(text)
        except OSError as exc:
            raise CliError(f"cannot write {args.output}: {exc}", EXIT_IO) from exc
    return EXIT_OK


def cmd_marginal(args, out) -> int:
    if args.variant not in ("tf", "tc"):
        raise CliError(f"variant {args.variant!r} has no redundant coordinate to integrate out", EXIT_UNSUPPORTED)
    model, transform = _load_model(args)
    res = run_variants(model, transform, [args.variant])[Variant(args.variant)]
    absolute = res.state.density()
    cm = reexpress(absolute, transform, transform.cm_frame)
    marginal = marginalize(cm, [0])
    out.write(f"variant: {args.variant}\nparams: {' '.join(f'{p:.9g}' for p in res.params)}\nmarginal exponent:\n")
    for row in marginal.exponent:
        out.write("  " + " ".join(f"{v:>14.9g}" for v in row) + "\n")
    if res.marginal is not None:
        out.write(f"alpha: {res.marginal.alpha:.9g}\nbeta: {res.marginal.beta:.9g}\n")
    if args.dump is not None:
        doc = {
            "variant": args.variant,
            "absolute": absolute.to_dict(),
            "reexpressed": cm.to_dict(),
            "marginal": marginal.to_dict(),
            "alpha": None if res.marginal is None else res.marginal.alpha,
            "beta": None if res.marginal is None else res.marginal.beta,
        }
        if args.dump_transform:
            doc["transform"] = transform.to_dict()
        try:
            args.dump.write_text(json.dumps(doc, indent=2) + "\n")
        except OSError as exc:
            raise CliError(f"cannot write {args.dump}: {exc}", EXIT_IO) from exc
    return EXIT_OK if res.converged else EXIT_CONVERGENCE


def cmd_verify(args, out) -> int:
    checks = run_checks(args.level)
    out.write(format_report(checks) + "\n")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VERIFY


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "marginal": cmd_marginal, "verify": cmd_verify}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except CliError as exc:
        print(exc, file=sys.stderr)
        return exc.code
    except ModelError as exc:
        print(f"invalid model: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except NomoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
