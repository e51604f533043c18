"""Command-line interface.

Exit status: 0 on success, 1 on usage errors, 2 on runtime failures
(including chain divergence).  Every randomized subcommand takes ``--seed``
(default 42).  ``--config FILE`` reads ``key = value`` lines (``#`` starts a
comment); keys are long flag names, and flags given on the command line win.
"""
import argparse
import json
import sys
from pathlib import Path

from . import experiments, io
from .diagnostics import DegenerateTraceError, diagnose
from .distributions import RngStream
from .gibbs import ChainDivergedError, DegenerateStateError, run_chain
from .model import (
    DataError,
    DoubleExponential,
    FixedOne,
    Horseshoe,
    SamplerConfig,
    TruncNormal,
    load_dataset_csv,
    save_dataset_csv,
)

DEFAULT_SEED = 42


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n\n{self.format_help()}")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return value


def _nonneg_float(text):
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _add_common(sp):
    sp.add_argument("--config", metavar="FILE", help="key = value overlay file (default: none)")
    sp.add_argument("--seed", type=_seed, default=DEFAULT_SEED, help="master seed (default: %(default)s)")


def _add_out_dir(sp):
    sp.add_argument("--out-dir", default="results", help="output directory (default: %(default)s)")


def _add_chain_lengths(sp, burn=20_000, keep=20_000):
    sp.add_argument("--burn", type=_nonneg_int, default=burn, help="burn-in sweeps (default: %(default)s)")
    sp.add_argument("--keep", type=_positive_int, default=keep, help="kept draws (default: %(default)s)")


def _add_progress(sp):
    sp.add_argument("--progress", action="store_true",
                    help="print a tick to stderr every 1000 sweeps (default: off)")


def build_parser():
    parser = _Parser(prog="pxshrink", description="PX and non-PX Gibbs samplers for sparse normal-means models.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    sp = sub.add_parser("simulate", help="simulate a dataset and write it as CSV")
    _add_common(sp)
    sp.add_argument("--p", type=_positive_int, default=1000, help="coordinates (default: %(default)s)")
    sp.add_argument("--n", type=_positive_int, default=2, help="replicates (default: %(default)s)")
    sp.add_argument("--tau", type=_nonneg_float, default=0.1, help="true global scale (default: %(default)s)")
    sp.add_argument("--sigma", type=_positive_float, default=1.0, help="true noise sd (default: %(default)s)")
    sp.add_argument("--lambda-gen", choices=["halfcauchy", "fixedone"], default="halfcauchy",
                    help="law of the true local scales (default: %(default)s)")
    sp.add_argument("--out", default="dataset.csv", help="output CSV path (default: %(default)s)")

    sp = sub.add_parser("run", help="run one chain and write its trace and report")
    _add_common(sp)
    sp.add_argument("--data", metavar="CSV", help="dataset CSV; if omitted one is simulated (default: none)")
    sp.add_argument("--p", type=_positive_int, default=1000, help="simulated coordinates (default: %(default)s)")
    sp.add_argument("--n", type=_positive_int, default=2, help="simulated replicates (default: %(default)s)")
    sp.add_argument("--tau", type=_nonneg_float, default=0.1, help="simulated true tau (default: %(default)s)")
    sp.add_argument("--sigma", type=_positive_float, default=1.0, help="simulated true sigma (default: %(default)s)")
    sp.add_argument("--prior", default="horseshoe",
                    choices=["horseshoe", "horseshoe-slice", "lasso", "truncnormal", "fixedone"],
                    help="prior on the local scales (default: %(default)s)")
    sp.add_argument("--v", type=_positive_float, default=1.0,
                    help="variance for --prior truncnormal (default: %(default)s)")
    group = sp.add_mutually_exclusive_group()
    group.add_argument("--px", dest="px", action="store_true", default=True,
                       help="parameter-expanded sampler (default)")
    group.add_argument("--nonpx", dest="px", action="store_false", help="non-expanded sampler")
    sp.add_argument("--sigma2-mode", choices=["exact", "appendix"], default="exact",
                    help="sigma^2 update (default: %(default)s)")
    _add_chain_lengths(sp)
    sp.add_argument("--thin", type=_positive_int, default=1, help="thinning interval (default: %(default)s)")
    sp.add_argument("--label", default="run", help="output file label (default: %(default)s)")
    _add_out_dir(sp)
    _add_progress(sp)

    sp = sub.add_parser("demo-global", help="global-shrinkage PX vs non-PX demonstration")
    _add_common(sp)
    _add_chain_lengths(sp)
    _add_out_dir(sp)
    _add_progress(sp)

    sp = sub.add_parser("case", help="horseshoe case study (1, 2 or 3)")
    _add_common(sp)
    sp.add_argument("--case", type=int, choices=[1, 2, 3], required=True, help="case number")
    sp.add_argument("--p", type=_positive_int, default=None,
                    help="override the case dimension (default: the case's own p)")
    _add_chain_lengths(sp)
    _add_out_dir(sp)
    _add_progress(sp)

    sp = sub.add_parser("grid", help="relative-efficiency grid over (n, tau)")
    _add_common(sp)
    scale = sp.add_mutually_exclusive_group()
    scale.add_argument("--desk-scale", dest="scale", action="store_const", const="desk", default="desk",
                       help="p=200, T=20000, burn=5000, 3 datasets, n in {2,5}, tau in {0.01,1} (default)")
    scale.add_argument("--full-scale", dest="scale", action="store_const", const="full",
                       help="p=1000, T=100000, burn=20000, 10 datasets, n in {2,3,5,10}, "
                            "tau in {0.01,0.05,0.1,0.5,1}; takes hours")
    sp.add_argument("--p", type=_positive_int, default=None, help="override p (default: per scale)")
    sp.add_argument("--T", type=_positive_int, default=None, help="override kept draws (default: per scale)")
    sp.add_argument("--burn", type=_nonneg_int, default=None, help="override burn-in (default: per scale)")
    sp.add_argument("--datasets", type=_positive_int, default=None,
                    help="override datasets per cell (default: per scale)")
    sp.add_argument("--taus", type=_positive_float, nargs="+", default=None,
                    help="override tau values (default: per scale)")
    sp.add_argument("--ns", type=_positive_int, nargs="+", default=None,
                    help="override n values (default: per scale)")
    sp.add_argument("--jobs", type=_positive_int, default=1, help="worker processes (default: %(default)s)")
    _add_out_dir(sp)

    sp = sub.add_parser("vsweep", help="PX sampler under lambda ~ N+(1, v) for several v")
    _add_common(sp)
    sp.add_argument("--v", type=_positive_float, nargs="+", default=list(experiments.DEFAULT_V_VALUES),
                    help="prior variances (default: 0.05^2 0.5^2 5^2)")
    sp.add_argument("--p", type=_positive_int, default=1000, help="coordinates (default: %(default)s)")
    _add_chain_lengths(sp)
    _add_out_dir(sp)
    _add_progress(sp)

    sp = sub.add_parser("diag", help="diagnostics report for a stored trace CSV")
    sp.add_argument("--config", metavar="FILE", help="key = value overlay file (default: none)")
    sp.add_argument("trace", help="trace CSV (header with the column name, or one bare column)")
    sp.add_argument("--column", default="tau", help="column to analyse (default: %(default)s)")
    sp.add_argument("--max-lag", type=_positive_int, default=None,
                    help="largest lag (default: min(T/2, 5000))")
    sp.add_argument("--out", default=None, help="write the JSON report here (default: stdout)")
    return parser


def read_config_file(path):
    values = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}: line {lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def _config_argv(values, subparser):
    """Turn overlay entries into argv tokens for ``subparser``."""
    flags = {}
    for action in subparser._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                flags[opt[2:].replace("-", "_")] = (opt, action)
    argv = []
    for key, value in values.items():
        if key not in flags or key == "config":
            raise UsageError(f"unknown config key {key!r}")
        opt, action = flags[key]
        if action.nargs == 0:
            if value.lower() in ("1", "true", "yes", "on"):
                argv.append(opt)
            elif value.lower() not in ("0", "false", "no", "off"):
                raise UsageError(f"config key {key!r} expects a boolean, got {value!r}")
        elif action.nargs in ("+", "*"):
            argv += [opt, *value.split()]
        else:
            argv += [opt, value]
    return argv


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        overlay = _config_argv(read_config_file(args.config), subparser)
        # overlay first so explicit flags, parsed afterwards, take precedence
        args = parser.parse_args([args.command, *overlay, *argv[argv.index(args.command) + 1:]])
    return args


def _lambda_prior(args):
    return {
        "horseshoe": lambda: Horseshoe(),
        "horseshoe-slice": lambda: Horseshoe(update="slice"),
        "lasso": lambda: DoubleExponential(),
        "truncnormal": lambda: TruncNormal(args.v),
        "fixedone": lambda: FixedOne(),
    }[args.prior]()


def cmd_simulate(args):
    sim = experiments.simulate_dataset(args.p, args.n, args.tau, args.sigma, args.lambda_gen,
                                       RngStream(args.seed, (experiments.DATA_KEY,)))
    save_dataset_csv(sim.data, args.out)


def cmd_run(args):
    if args.data:
        data = load_dataset_csv(args.data)
    else:
        data = experiments.simulate_dataset(args.p, args.n, args.tau, args.sigma, "halfcauchy",
                                            RngStream(args.seed, (experiments.DATA_KEY,))).data
    config = SamplerConfig(
        parameterization="px" if args.px else "nonpx",
        lambda_prior=_lambda_prior(args),
        sigma2_mode=args.sigma2_mode,
        burn=args.burn,
        keep=args.keep,
        thin=args.thin,
        seed=args.seed,
    )
    result = experiments.run_labelled_chain(args.label, data, config, args.seed, progress=args.progress)
    experiments.write_chain_outputs(result, args.out_dir)


def cmd_demo_global(args):
    experiments.run_global_demo(seed=args.seed, burn=args.burn, keep=args.keep,
                                out_dir=args.out_dir, progress=args.progress)


def cmd_case(args):
    experiments.run_case_study(args.case, seed=args.seed, burn=args.burn, keep=args.keep,
                               out_dir=args.out_dir, progress=args.progress, p=args.p)


def cmd_grid(args):
    base = experiments.GridSpec.full if args.scale == "full" else experiments.GridSpec.desk
    spec = base(master_seed=args.seed)
    overrides = {
        "p": args.p, "T": args.T, "burn": args.burn, "datasets_per_cell": args.datasets,
        "tau_values": tuple(args.taus) if args.taus else None,
        "n_values": tuple(args.ns) if args.ns else None,
    }
    spec = experiments.replace(spec, **{k: v for k, v in overrides.items() if v is not None})
    result = experiments.run_grid_experiment(spec, jobs=args.jobs)
    io.write_grid_csv(Path(args.out_dir) / "grid_result.csv", result)


def cmd_vsweep(args):
    experiments.run_v_sweep(args.v, seed=args.seed, p=args.p, burn=args.burn, keep=args.keep,
                            out_dir=args.out_dir, progress=args.progress)


def cmd_diag(args):
    trace = io.read_trace_column(args.trace, args.column)
    report = diagnose(trace, args.max_lag).to_dict()
    if args.out:
        io.write_json(args.out, report)
    else:
        sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")


COMMANDS = {
    "simulate": cmd_simulate,
    "run": cmd_run,
    "demo-global": cmd_demo_global,
    "case": cmd_case,
    "grid": cmd_grid,
    "vsweep": cmd_vsweep,
    "diag": cmd_diag,
}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(str(exc).rstrip() + "\n")
        return 1
    except SystemExit as exc:  # --help
        return 0 if not exc.code else 1
    try:
        COMMANDS[args.command](args)
    except (io.ParseError, DataError, DegenerateTraceError, ValueError) as exc:
        sys.stderr.write(f"pxshrink {args.command}: error: {exc}\n")
        return 2
    except (ChainDivergedError, DegenerateStateError) as exc:
        sys.stderr.write(f"pxshrink {args.command}: chain failed: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"pxshrink {args.command}: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
