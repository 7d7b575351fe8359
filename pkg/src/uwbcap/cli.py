"""Capacity bounds and PPM receiver simulation for wideband fading channels.

    uwbcap bounds         [--config C] [--variant V,...] [--out F]
    uwbcap optimize-theta [--config C] [--variant V,...] [--out F]
    uwbcap simulate       [--config C] [--trials N] [--seed S] [--out F]
    uwbcap figure fig3|fig4|fig5|fig6 [--config C] [--plot] [--gnuplot] [--jobs J]
    uwbcap verify overlap|autocorr|ppm_union_bound [--scale smoke|full] [--seed S]

Results go to CSV files with a JSON sidecar (verify writes a JSON report).
The default output directory comes from ``$UWBCAP_OUTPUT_DIR``.

Exit codes: 0 success, 2 configuration or usage error, 3 verification
failure, 4 verification budget exceeded.
"""

from __future__ import annotations

import argparse
import sys

from uwbcap import __version__
from uwbcap.bounds import parse_variants, VARIANT_NAMES
from uwbcap.config import ConfigError, SweepSpec, parse_config
from uwbcap.sweeps import (
    FIGURE_IDS,
    OUTPUT_DIR_ENV,
    DEFAULT_SIM_TRIALS,
    EvalContext,
    render_csv,
    resolve_out_path,
    run_figure,
    run_sweep,
    sweep_sidecar,
    write_outputs,
)
from uwbcap.system import ParameterError, SystemParams

EXIT_OK = 0
EXIT_CONFIG = 2

BOUNDS_OUTPUTS = (
    "c_awgn",
    "gain_penalty",
    "spectral_efficiency_penalty",
    "delay_penalty",
    "dsss_lower_known",
    "dsss_lower_unknown",
    "dsss_upper",
    "ppm_upper",
)
OPTIMIZE_OUTPUTS = ("dsss_lower_known_opt", "dsss_lower_unknown_opt", "ppm_upper_opt", "c_awgn")
SIMULATE_OUTPUTS = ("ppm_error_rate", "union_bound")

U64_MAX = 2**64 - 1


def _seed(text):
    value = int(text, 0)
    if not 0 <= value <= U64_MAX:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _variants(text):
    names = [n for n in text.split(",") if n.strip()]
    try:
        return parse_variants(names)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON config; missing keys take the reference defaults")
    common.add_argument("--seed", type=_seed, default=0, help="master seed (unsigned 64-bit, default 0)")
    common.add_argument("--out", help=f"output file (default: ${OUTPUT_DIR_ENV} or the current directory)")
    common.add_argument(
        "--variant",
        type=_variants,
        default=None,
        help="comma list of alternate constants: " + ", ".join(sorted(VARIANT_NAMES)),
    )
    common.add_argument("--jobs", type=_positive_int, default=1, help="worker threads for sweep points")

    parser = argparse.ArgumentParser(prog="uwbcap", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("bounds", parents=[common], help="all bounds and penalties at the configured duty cycle")
    sub.add_parser("optimize-theta", parents=[common], help="optimal duty cycle for each bound")
    sim = sub.add_parser("simulate", parents=[common], help="Monte Carlo PPM error rate next to the union bound")
    sim.add_argument("--trials", type=_positive_int, default=DEFAULT_SIM_TRIALS)

    fig = sub.add_parser("figure", parents=[common], help="data for one of the fixed figure sweeps")
    fig.add_argument("figure_id", choices=FIGURE_IDS)
    fig.add_argument("--plot", action="store_true", help="also render <out>.png with matplotlib")
    fig.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script <out>.gp")

    ver = sub.add_parser("verify", parents=[common], help="run a verification suite")
    ver.add_argument("target", choices=("overlap", "autocorr", "ppm_union_bound"))
    ver.add_argument("--scale", choices=("smoke", "full"), default="smoke")
    return parser


def _load(args):
    if args.config is None:
        return SystemParams.reference_defaults(), None
    return parse_config(args.config)


def _point_spec(params: SystemParams, outputs, sweep: SweepSpec | None):
    if sweep is not None:
        return sweep
    return SweepSpec("duty_cycle_theta", (params.duty_cycle_theta,), params, tuple(outputs))


def _table_command(args, outputs, stem, trials=DEFAULT_SIM_TRIALS, use_config_outputs=True):
    params, sweep = _load(args)
    if sweep is not None and not use_config_outputs:
        sweep = SweepSpec(sweep.swept_parameter, sweep.values, sweep.fixed, tuple(outputs))
    spec = _point_spec(params, outputs, sweep)
    ctx = EvalContext(args.variant or EvalContext().variants, args.seed, trials)
    rows = run_sweep(spec, ctx, args.jobs)
    columns = rows[0].columns()
    doc = sweep_sidecar(spec, ctx, columns, args.command)
    text = render_csv(columns, rows)
    csv_path, json_path = write_outputs(resolve_out_path(args.out, stem), text, doc)
    sys.stdout.write(text)
    print(f"wrote {csv_path} and {json_path}", file=sys.stderr)
    return EXIT_OK


def cmd_figure(args):
    params, sweep = _load(args)
    if sweep is not None:
        raise ConfigError("sweep_parameter", "figure commands use fixed grids; remove the sweep keys")
    csv_path, json_path, rows = run_figure(
        args.figure_id,
        out_path=args.out,
        jobs=args.jobs,
        variants=args.variant or EvalContext().variants,
        seed=args.seed,
        base=params,
    )
    columns = list(rows[0].columns())
    written = [csv_path, json_path]
    if args.plot:
        from uwbcap.plotting import render_png

        written.append(render_png(columns, rows, csv_path.with_suffix(".png"), args.figure_id))
    if args.gnuplot:
        from uwbcap.plotting import render_gnuplot

        written.append(render_gnuplot(columns, csv_path, csv_path.with_suffix(".gp"), args.figure_id))
    print("wrote " + ", ".join(str(p) for p in written), file=sys.stderr)
    return EXIT_OK


def cmd_verify(args):
    from uwbcap.verify import run_verification

    report, code, path = run_verification(args.target, args.scale, args.seed, args.out)
    for check in report["checks"]:
        status = "PASS" if check["passed"] else ("NOTE" if check["informational"] else "FAIL")
        print(f"{status}  {check['name']}  measured={check['measured']}")
    for name in report["skipped_checks"]:
        print(f"SKIP  {name}  (budget exceeded)")
    print(f"wrote {path}", file=sys.stderr)
    return code


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "bounds":
            return _table_command(args, BOUNDS_OUTPUTS, "bounds")
        if args.command == "optimize-theta":
            return _table_command(args, OPTIMIZE_OUTPUTS, "optimize_theta", use_config_outputs=False)
        if args.command == "simulate":
            return _table_command(args, SIMULATE_OUTPUTS, "simulate", args.trials, use_config_outputs=False)
        if args.command == "figure":
            return cmd_figure(args)
        return cmd_verify(args)
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
