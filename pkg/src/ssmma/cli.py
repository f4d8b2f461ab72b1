"""Command-line front end: ``ssmma {classify,decompose,simulate,verify}``.

Exit codes: 0 success, 1 usage or parameter error, 2 completed with warnings
or failed checks.
"""

import argparse
from pathlib import Path
import sys

from . import __version__
from ._validation import ParameterError
from .classifier import Thresholds, classify_kernel
from .decomposer import additivity_check, decompose, random_combinations, write_summary_csv
from .io import load_piecewise_kernel, read_config, read_report_csv
from .kernels import (REGISTRY, GridSpec, broken_rotation_flow, identity_flow,
                      make_dissipative_synthetic, make_fourth_kind, make_lfsm_periodic_concat,
                      make_mixed_lfsm, make_periodic_example, rotation_flow)
from .quadrature import LinearCombination
from .simulator import parse_times, sample_paths, write_binary, write_csv
from .verifier import (flow_axioms_check, generation_identity_check, self_similarity_check,
                       support_check, write_checks_csv)
from .wpaths import WProcessSpec

EXIT_OK, EXIT_USAGE, EXIT_WARN = 0, 1, 2
KERNEL_NAMES = tuple(REGISTRY) + ("piecewise",)
FLOWS = {"attached": None, "identity": identity_flow, "rotation": rotation_flow,
         "broken-demo": broken_rotation_flow}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _common(p):
    k = p.add_argument_group("kernel")
    k.add_argument("--kernel", help=f"one of: {', '.join(KERNEL_NAMES)}")
    k.add_argument("--kernel-file", help="table for --kernel piecewise")
    k.add_argument("--alpha", type=float, default=1.5)
    k.add_argument("--hurst", type=float, default=None,
                   help="default 0.3 for fourth-kind, 0.5 otherwise")
    k.add_argument("--F1", type=float, default=1.0, help="mixed-lfsm right coefficient")
    k.add_argument("--F2", type=float, default=2.0, help="mixed-lfsm left coefficient")
    k.add_argument("--w-paths", type=int, default=200, help="fourth-kind path count")
    k.add_argument("--mean-reversion", type=float, default=1.0)
    k.add_argument("--w-std", type=float, default=1.0)
    g = p.add_argument_group("grid")
    g.add_argument("--x-nodes", type=int, default=64)
    g.add_argument("--u-window", type=float, default=50.0)
    g.add_argument("--u-step", type=float, default=0.05)
    g.add_argument("--refinement-max", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="output path")
    p.add_argument("--config", help="key = value file; command-line flags override it")


def build_parser():
    parser = _Parser(prog="ssmma", description="Classify, decompose, simulate and verify "
                     "kernels of self-similar stable mixed moving averages.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("classify", help="label x-nodes dissipative/fixed/cyclic/conservative")
    _common(p)
    p.add_argument("--summary", help="JSON summary path (default: <out>.json)")
    p.add_argument("--pfsm-tol", type=float, default=1e-6)
    p.add_argument("--cf-tol", type=float, default=1e-6)
    p.add_argument("--hopf-octaves", type=int, default=8)

    p = sub.add_parser("decompose", help="four-part decomposition and additivity check")
    _common(p)
    p.add_argument("--report", help="classification CSV (computed when omitted)")
    p.add_argument("--check-additivity", type=int, default=0, metavar="N",
                   help="test N random linear combinations")
    p.add_argument("--tolerance", type=float, default=1e-6)

    p = sub.add_parser("simulate", help="Monte-Carlo sample paths")
    _common(p)
    p.add_argument("--paths", type=int, default=1000)
    p.add_argument("--times", default="0:0.1:2", help="start:step:end or comma list")
    p.add_argument("--binary", help="also write an FSM1 binary dump here")

    p = sub.add_parser("verify", help="flow axioms, generation identity, self-similarity")
    _common(p)
    p.add_argument("--all", action="store_true", help="include quadrature self-similarity")
    p.add_argument("--flow", choices=tuple(FLOWS), default="attached")
    p.add_argument("--c-samples", default="0.5,1.6487212707001282,2,2.718281828459045,5")
    p.add_argument("--samples", type=int, default=10_000)
    return parser


def _subparser(parser, command):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def _apply_config(parser, command, argv):
    """Re-parse with config-file values installed as defaults."""
    first = parser.parse_args(argv)
    if not getattr(first, "config", None):
        return first
    sub = _subparser(parser, command)
    dests = {a.dest: a for a in sub._actions}
    values = {}
    try:
        config = read_config(first.config)
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}")
    except ValueError as exc:
        raise UsageError(str(exc))
    for key, text in config.items():
        dest = key.replace("-", "_")
        if dest not in dests or dest in ("help", "config"):
            raise UsageError(f"unknown config key {key!r}")
        action = dests[dest]
        if isinstance(action, argparse._StoreTrueAction):
            values[dest] = text.lower() in ("1", "true", "yes", "on")
        else:
            try:
                values[dest] = action.type(text) if action.type else text
            except ValueError:
                raise UsageError(f"bad value for {key}: {text!r}")
    sub.set_defaults(**values)
    return parser.parse_args(argv)


def _echo(args):
    skip = {"command"}
    lines = [f"ssmma {args.command} {__version__}"]
    for key, value in sorted(vars(args).items()):
        if key not in skip:
            lines.append(f"{key.replace('_', '-')} = {value}")
    return lines


def make_kernel(args):
    name = args.kernel
    if name is None:
        raise UsageError(f"--kernel is required; registry: {', '.join(KERNEL_NAMES)}")
    if args.hurst is None and name != "piecewise":
        args.hurst = 0.3 if name == "fourth-kind" else 0.5
    if name == "mixed-lfsm":
        return make_mixed_lfsm(args.F1, args.F2, args.alpha, args.hurst)
    if name == "periodic-example":
        return make_periodic_example(args.alpha, args.hurst)
    if name == "fourth-kind":
        w = WProcessSpec(mean_reversion=args.mean_reversion, stationary_std=args.w_std)
        return make_fourth_kind(w, args.alpha, args.hurst, args.w_paths, args.seed)
    if name == "dissipative-synthetic":
        return make_dissipative_synthetic(args.alpha, args.hurst)
    if name == "lfsm-periodic-concat":
        return make_lfsm_periodic_concat(args.alpha, args.hurst, args.F1, args.F2)
    if name == "piecewise":
        if not args.kernel_file:
            raise UsageError("--kernel piecewise needs --kernel-file")
        return load_piecewise_kernel(args.kernel_file, hurst=args.hurst)
    raise UsageError(f"unknown kernel {name!r}; registry: {', '.join(KERNEL_NAMES)}")


def make_grid(args, kernel):
    return GridSpec.for_kernel(kernel, args.x_nodes, u_window=args.u_window,
                               u_step=args.u_step, refinement_max=args.refinement_max)


def _out(args, default):
    return Path(args.out or default)


def _thresholds(args):
    return Thresholds(pfsm_tol=getattr(args, "pfsm_tol", 1e-6),
                      cf_tol=getattr(args, "cf_tol", 1e-6),
                      hopf_octaves=getattr(args, "hopf_octaves", 8))


def cmd_classify(args):
    kernel = make_kernel(args)
    grid = make_grid(args, kernel)
    report = classify_kernel(kernel, grid, _thresholds(args), n_jobs=args.threads)
    out = _out(args, "classify.csv")
    report.write_csv(out, _echo(args))
    summary = Path(args.summary) if args.summary else out.with_suffix(".json")
    report.write_summary(summary)
    for label, frac in report.fractions.items():
        print(f"{label:26s} {frac:.4f}")
    print(f"report: {out}  summary: {summary}")
    problems = report.n_warnings + len(report.errors) + report.summary()["contradictions"]
    if problems:
        print(f"{problems} node(s) with warnings", file=sys.stderr)
        return EXIT_WARN
    return EXIT_OK


def cmd_decompose(args):
    kernel = make_kernel(args)
    grid = make_grid(args, kernel)
    if args.report:
        if not Path(args.report).is_file():
            raise UsageError(f"report file not found: {args.report}")
        try:
            report = read_report_csv(args.report, grid, kernel.label)
        except (KeyError, ValueError) as exc:
            raise UsageError(f"cannot use report: {exc}")
    else:
        report = classify_kernel(kernel, grid, _thresholds(args), n_jobs=args.threads)
    dec = decompose(kernel, report)
    combs = random_combinations(args.check_additivity, args.seed) if args.check_additivity else []
    out = _out(args, "decompose.csv")
    write_summary_csv(dec, combs, out, header_lines=_echo(args))
    for label in dec.components:
        n = dec.node_count(label)
        print(f"{label:26s} nodes={n:5d}{'  (empty)' if n == 0 else ''}")
    status = EXIT_OK
    if combs:
        check = additivity_check(dec, combs, tolerance=args.tolerance)
        print(f"additivity: max relative deviation {check.max_deviation:.3e} over "
              f"{len(combs)} combinations (tol {args.tolerance:g}) "
              f"{'PASS' if check.passed else 'FAIL'}")
        for row in check.failures:
            print(f"  failed: theta={row['theta']} t={row['times']} "
                  f"deviation={row['deviation']:.3e}", file=sys.stderr)
        if not check.passed:
            status = EXIT_WARN
    print(f"summary: {out}")
    return status


def cmd_simulate(args):
    if args.paths < 1:
        raise UsageError("--paths must be >= 1")
    try:
        times = parse_times(args.times)
    except ValueError as exc:
        raise UsageError(str(exc))
    kernel = make_kernel(args)
    grid = make_grid(args, kernel)
    try:
        ens = sample_paths(kernel, times, args.paths, grid, args.seed, n_jobs=args.threads)
    except ValueError as exc:
        raise UsageError(str(exc))
    out = _out(args, "paths.csv")
    header = _echo(args)
    write_csv(ens, out, header)
    side = out.with_name(out.name + ".cf.csv")
    with open(side, "w") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        fh.write("t,cf_exponent_quadrature,cf_exponent_discrete\n")
        for t, a, b in zip(ens.times, ens.cf_target, ens.cf_discrete):
            fh.write(f"{float(t)!r},{float(a)!r},{float(b)!r}\n")
    if args.binary:
        write_binary(ens, args.binary)
    print(f"{ens.n_paths} paths x {ens.times.size} times -> {out} (CF targets: {side})")
    return EXIT_OK


def cmd_verify(args):
    kernel = make_kernel(args)
    grid = make_grid(args, kernel)
    try:
        cs = [float(c) for c in args.c_samples.split(",") if c.strip()]
    except ValueError:
        raise UsageError(f"bad --c-samples {args.c_samples!r}")
    flow = kernel.flow if args.flow == "attached" else FLOWS[args.flow]()
    results = []
    if flow is None:
        print(f"note: {kernel.label} has no attached flow; flow checks skipped")
    else:
        results.append(flow_axioms_check(flow, cs, grid.x))
        results.append(generation_identity_check(kernel, flow, n=args.samples, seed=args.seed))
    results.append(support_check(kernel, grid))
    if args.all:
        combs = [LinearCombination((1.0,), (1.0,)), LinearCombination((1.0, -0.5), (1.0, 2.0))]
        results.append(self_similarity_check(kernel, [c for c in cs if c > 0], combs, grid,
                                             strict=False))
    for r in results:
        print(r.line())
    out = _out(args, "verify.csv")
    write_checks_csv(results, out, _echo(args))
    print(f"report: {out}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_WARN


COMMANDS = {"classify": cmd_classify, "decompose": cmd_decompose, "simulate": cmd_simulate,
            "verify": cmd_verify}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        first = parser.parse_args(argv)
        if first.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        args = _apply_config(parser, first.command, argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ssmma: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParameterError, ValueError) as exc:
        print(f"ssmma: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
