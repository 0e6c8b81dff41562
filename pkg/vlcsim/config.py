import argparse

from vlcsim.constants import DEFAULT_CONFIG, GOOD_KAPPA

SUBCOMMANDS = ("trace", "optimize", "sweep", "capacity", "symbols")


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser that raises on bad usage instead of exiting with 2."""

    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def init_common_configs(parser):
    common_args = parser.add_argument_group()

    ########## INPUT / OUTPUT CONFIGS ##########
    common_args.add_argument("--config", type=str, help="path to a JSON simulation config")
    common_args.add_argument(
        "--out", type=str, help="output directory; overrides `output_dir` in the config"
    )

    ########## REPRODUCIBILITY CONFIGS ##########
    common_args.add_argument("--seed", type=int, help="root seed for every random stream")
    common_args.add_argument("--rays", type=int, help="rays traced per LED")
    common_args.add_argument(
        "--workers",
        type=int,
        help="worker processes; 0 for one per CPU (VLC_SIM_THREADS when unset)",
    )

    ########## LOGGING CONFIGS ##########
    common_args.add_argument("--quiet", action="store_true", help="warnings only, no progress bars")
    common_args.add_argument("--log_level", type=str, help="stderr log level")
    common_args.add_argument(
        "--no_log_file", action="store_true", help="do not write a log file"
    )

    common_args.set_defaults(
        config=DEFAULT_CONFIG,
        out=None,
        seed=None,
        rays=None,
        workers=None,
        log_level="INFO",
    )


def init_processing_configs(parser):
    processing_args = parser.add_argument_group()

    ########## SIGNAL PROCESSING CONFIGS ##########
    processing_args.add_argument(
        "--modes",
        type=str,
        help="comma-separated processing modes, or `all`; defaults to the config",
    )
    processing_args.add_argument(
        "--noise_variance",
        type=float,
        help="receiver noise variance; overrides the config and skips calibration",
    )

    processing_args.set_defaults(modes=None, noise_variance=None)


def init_offset_configs(parser, multiple=True):
    offset_args = parser.add_argument_group()

    ########## MISALIGNMENT CONFIGS ##########
    offset_args.add_argument(
        "--offset",
        type=str,
        action="append" if multiple else "store",
        help="misalignment as <rotate|translate>[-x|-y|-z]-<rx|tx>:<value>; mm or degrees",
    )

    offset_args.set_defaults(offset=None)


def init_sweep_configs(parser):
    sweep_args = parser.add_argument_group()

    ########## SWEEP CONFIGS ##########
    sweep_args.add_argument(
        "--threshold", type=float, help="condition number bound for the movable range"
    )
    sweep_args.add_argument(
        "--drop_ratio",
        type=float,
        help="fraction of the running peak below which the condition number has collapsed",
    )
    sweep_args.add_argument("--name", type=str, help="run only the sweep with this name")

    sweep_args.set_defaults(threshold=GOOD_KAPPA, drop_ratio=0.5, name=None)


def init_optimizer_configs(parser):
    opt_args = parser.add_argument_group()

    ########## OPTIMIZER CONFIGS ##########
    opt_args.add_argument("--max_evals", type=int, help="objective evaluation budget")
    opt_args.add_argument("--restarts", type=int, help="Nelder-Mead restarts around the incumbent")
    opt_args.add_argument(
        "--scan_span", type=float, help="relative half-width of the coefficient scan, 0 to skip"
    )

    opt_args.set_defaults(max_evals=None, restarts=None, scan_span=None)


def init_symbol_configs(parser):
    symbol_args = parser.add_argument_group()

    ########## SYMBOL SIMULATION CONFIGS ##########
    symbol_args.add_argument("--n_symbols", type=int, help="OOK symbols per transmitter")
    symbol_args.add_argument(
        "--force_correct",
        action="store_true",
        help="cancel with the transmitted symbols (ideal cancellation)",
    )

    symbol_args.set_defaults(n_symbols=None)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="vlcsim", description="VLC MIMO array link simulator")
    commands = parser.add_subparsers(dest="command", parser_class=ArgumentParser)

    trace = commands.add_parser(
        "trace", help="trace the aligned link; H.csv, spots.csv, metrics.json"
    )
    init_common_configs(trace)
    init_offset_configs(trace, multiple=False)

    optimize = commands.add_parser(
        "optimize", help="optimize the lens pair; params.json, trace.csv"
    )
    init_common_configs(optimize)
    init_optimizer_configs(optimize)

    sweep = commands.add_parser("sweep", help="run the configured misalignment sweeps; sweep.csv")
    init_common_configs(sweep)
    init_processing_configs(sweep)
    init_sweep_configs(sweep)

    capacity = commands.add_parser("capacity", help="per-channel capacity tables; capacity.csv")
    init_common_configs(capacity)
    init_processing_configs(capacity)
    init_offset_configs(capacity)

    symbols = commands.add_parser("symbols", help="symbol-level BER simulation; ber.csv")
    init_common_configs(symbols)
    init_processing_configs(symbols)
    init_offset_configs(symbols, multiple=False)
    init_symbol_configs(symbols)

    return parser
