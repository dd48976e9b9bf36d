"""
Command-line surface of the package: subcommands fit, band,
efficiency, weights, ivcheck and simulate. Flags override the
values of the JSON configuration given with --config.

Exit codes: 0 on success, 1 on invalid input or usage,
2 on a numerical failure.
"""

import argparse
import logging
import sys
from lrdensity.errors import NumericalFailure, ValidationError
from lrdensity.lrdutils import make_grid
from lrdensity.pipeline import load_configuration, run, set_configuration


class UsageParser(argparse.ArgumentParser):
    """
    ArgumentParser that reports usage errors with exit code 1
    """

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _bandwidth(value: str):
    if value == "rot":
        return value
    try:
        return float(value)
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"bandwidth should be a number or rot, got {value!r}") from err


def _numbers(value: str) -> list[float]:
    try:
        return [float(i) for i in value.split(",")]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {value!r}") from err


def _integers(value: str) -> list[int]:
    try:
        return [int(i) for i in value.split(",")]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}") from err


def _grid(value: str) -> list[float]:
    parts = _numbers(value)
    if len(parts) != 3 or parts[2] != int(parts[2]):
        raise argparse.ArgumentTypeError(f"grid should be lo,hi,count, got {value!r}")
    try:
        return make_grid(parts[0], parts[1], int(parts[2])).tolist()
    except ValidationError as err:
        raise argparse.ArgumentTypeError(str(err)) from err


def _which(value: str):
    return int(value) if value in ("0", "1") else value


def _add_columns(parser: argparse.ArgumentParser, weights: bool = True):
    parser.add_argument("input", help="CSV file with a header row")
    parser.add_argument("--x-col", dest="columns.x", help="outcome column")
    if weights:
        parser.add_argument("--weight-col", dest="columns.weight", help="weight column")
    parser.add_argument("--t-col", dest="columns.t", help="binary group or treatment column")
    parser.add_argument("--d-col", dest="columns.d", help="binary instrument column")
    parser.add_argument("--z-cols", dest="columns.z", type=lambda v: v.split(","),
                        help="comma-separated covariate columns")


def _add_weights(parser: argparse.ArgumentParser):
    parser.add_argument("--scheme", dest="weights.scheme",
                        choices=("none", "subgroup", "counterfactual", "iv", "complier"))
    parser.add_argument("--which", dest="weights.which", type=_which,
                        help="subgroup 0 or 1, or complier target observed, y0 or y1")
    parser.add_argument("--order", dest="weights.covariate_order", type=int,
                        help="highest covariate power in the propensity basis")


def _add_estimator(parser: argparse.ArgumentParser):
    parser.add_argument("--method", dest="estimator.method", choices=("local", "l2", "nd"))
    parser.add_argument("--kernel", dest="estimator.kernel", choices=("uniform", "triangular", "epanechnikov"))
    parser.add_argument("--p", dest="estimator.p", type=int, help="polynomial order")
    parser.add_argument("--q", dest="estimator.q", type=int, help="polynomial order of the standard errors")
    parser.add_argument("--h", dest="estimator.h", type=_bandwidth, help="bandwidth or rot")
    parser.add_argument("--deriv", dest="estimator.deriv", type=int,
                        help="-1 distribution function, 0 density, l derivative")
    parser.add_argument("--side", dest="estimator.side", choices=("left", "right"))
    parser.add_argument("--split-from", dest="estimator.split_from", type=int)
    parser.add_argument("--md", dest="estimator.redundant_j", type=int,
                        help="index j of the redundant regressor")
    parser.add_argument("--alpha", dest="estimator.alpha", type=float)
    parser.add_argument("--support", dest="estimator.support", type=_numbers, help="lo,hi")
    parser.add_argument("--design", dest="estimator.design", choices=("lebesgue", "empirical"))
    parser.add_argument("--grid", dest="estimator.grid", type=_grid, help="lo,hi,count")


def _add_band(parser: argparse.ArgumentParser):
    parser.add_argument("--band-alpha", dest="band.alpha", type=float)
    parser.add_argument("--draws", dest="band.draws", type=int)
    parser.add_argument("--band-md", dest="band.minimum_distance", action="store_const", const=True)


def build_parser() -> argparse.ArgumentParser:
    """
    Parser with one subparser per subcommand
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--out", dest="store_path", help="output directory")
    common.add_argument("--name", dest="output_name", help="output file stem")
    common.add_argument("--seed", dest="seed", type=int)
    common.add_argument("--threads", dest="threads", type=int)
    common.add_argument("--progress", dest="progress", action="store_const", const=True)
    common.add_argument("--log-level", default="INFO",
                        choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    parser = UsageParser(prog="lrdensity",
                         description="Local regression distribution estimators")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=UsageParser)

    fit = sub.add_parser("fit", parents=[common], help="pointwise estimates and intervals")
    _add_columns(fit)
    _add_estimator(fit)
    _add_weights(fit)
    fit.add_argument("--matrices", dest="matrices", action="store_const", const=True,
                     help="write per-point Gram, sigma and omega to the sidecar")

    band = sub.add_parser("band", parents=[common], help="uniform confidence band")
    _add_columns(band)
    _add_estimator(band)
    _add_weights(band)
    _add_band(band)

    efficiency = sub.add_parser("efficiency", parents=[common], help="asymptotic variance tables")
    efficiency.add_argument("--table", dest="efficiency.table", choices=("sa", "sweep", "kernel"))
    efficiency.add_argument("--p", dest="efficiency.p", type=int)
    efficiency.add_argument("--deriv", dest="efficiency.deriv", type=int)
    efficiency.add_argument("--kernel", dest="efficiency.kernel",
                            choices=("uniform", "triangular", "epanechnikov"))
    efficiency.add_argument("--j", dest="efficiency.j_values", type=_integers, help="comma-separated j")
    efficiency.add_argument("--points", dest="efficiency.points", type=int)

    weights = sub.add_parser("weights", parents=[common], help="weight columns")
    _add_columns(weights, weights=False)
    _add_weights(weights)

    ivcheck = sub.add_parser("ivcheck", parents=[common], help="instrument validity curves with bands")
    _add_columns(ivcheck, weights=False)
    _add_estimator(ivcheck)
    _add_band(ivcheck)

    simulate = sub.add_parser("simulate", parents=[common], help="Monte Carlo experiments")
    simulate.add_argument("--experiment", dest="simulation.experiment",
                          choices=("pointwise", "uniform", "efficiency", "boundary", "process"))
    simulate.add_argument("--dgp", dest="simulation.dgp", type=lambda v: {"kind": v},
                          help="gaussian, exponential, uniform or kinked")
    simulate.add_argument("--n", dest="simulation.n", type=int)
    simulate.add_argument("--reps", dest="simulation.reps", type=int)
    simulate.add_argument("--x", dest="simulation.x", type=float)
    simulate.add_argument("--band-grid", dest="simulation.grid", type=_grid, help="lo,hi,count")
    simulate.add_argument("--j", dest="simulation.j_values", type=_integers, help="comma-separated j")
    _add_estimator(simulate)
    _add_band(simulate)
    return parser


def apply_overrides(cfg: dict, args: argparse.Namespace) -> dict:
    """
    Writes every flag the user gave into the configuration dict;
    dotted destinations address a section
    """
    skip = {"config", "log_level", "input"}
    for key, value in vars(args).items():
        if value is None or key in skip:
            continue
        if "." in key:
            section, name = key.split(".", 1)
            cfg.setdefault(section, {})[name] = value
        else:
            cfg[key] = value
    if getattr(args, "input", None) is not None:
        cfg["input_path"] = args.input
    return cfg


def main(argv: list[str] | None = None) -> int:
    """
    Entry point of the lrdensity command
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(message)s")
    try:
        cfg = set_configuration(apply_overrides(load_configuration(args.config), args))
        path = run(cfg)
    except ValidationError as err:
        print(f"lrdensity: invalid input: {err}", file=sys.stderr)
        return 1
    except NumericalFailure as err:
        print(f"lrdensity: numerical failure ({type(err).__name__}): {err}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
