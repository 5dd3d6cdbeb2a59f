"""
Command-line surface

Usage:
    python -m app.cli bdm --model exponential --n 6 --mle 1.2 --method ho --theta0 0.9
    python -m app.cli table --out table.csv
    python -m app.cli curve --model exponential --n 6 --mle 1.2 --grid 0.3:3.0:300
    python -m app.cli check --seed 1
"""
import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional
from pydantic import ValidationError
from app.config import settings
from app.exceptions import BdmError, ConfigError
from app.models.schemas import GridSpec, RunConfig
from app.services import get_bdm_service, get_check_service, get_curve_service, get_table_service
from app.utils.formatters import BDM_CSV_HEADER, format_result_json, format_result_row, write_csv
from app.utils.logger import get_logger, setup_logger
from app.utils.validators import parse_grid, parse_vector

logger = get_logger("cli")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_DOMAIN = 2


def _add_model_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", choices=["exponential", "logistic"], default="exponential", help="Built-in model")
    parser.add_argument("--n", type=int, help="Sample size of the exponential summary")
    parser.add_argument("--mle", type=float, help="MLE of the exponential summary")
    parser.add_argument("--data", help="CSV data file (column y is the response)")
    parser.add_argument("--prior-sd", type=float, help="Normal prior sd of the logistic coefficients")
    parser.add_argument("--psi-index", type=int, help="Coordinate of interest for marginal measures")
    parser.add_argument("--prior-mode", choices=["general", "jeffreys"], default="jeffreys", help="Prior handling of the scalar r*")
    parser.add_argument("--seed", type=int, default=settings.DEFAULT_SEED, help="Random seed")
    parser.add_argument("--out", help="Output path (stdout when absent)")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with the bdm, table, curve and check subcommands"""
    parser = argparse.ArgumentParser(prog="bdm", description="Bayesian discrepancy measure for precise hypotheses")
    parser.add_argument("--log-level", help="Log level (default from LOG_LEVEL)")
    commands = parser.add_subparsers(dest="command", required=True)

    bdm = commands.add_parser("bdm", help="Compute one discrepancy measure")
    _add_model_arguments(bdm)
    bdm.add_argument("--method", default="ho", choices=["io", "ho", "sks", "sks-num", "sn", "wald", "exact"])
    bdm.add_argument("--theta0", required=True, help="Hypothesized value, comma-separated for vectors")
    bdm.add_argument("--output", choices=["json", "csv"], default="json")
    bdm.add_argument("--loglik-ratio", action="store_true", help="Use the likelihood-ratio joint statistic")
    bdm.add_argument("--export-sn", help="Also write the fitted SN and transport map as JSON")
    bdm.add_argument("--export-draws", help="Also write seeded SN draws as CSV")
    bdm.add_argument("--draws", type=int, default=10_000, help="Number of exported draws")

    table = commands.add_parser("table", help="Regenerate the exponential discrepancy table")
    table.add_argument("--n", help="Comma-separated sample sizes (default 6,12,20,40)")
    table.add_argument("--mle", type=float, default=1.2, help="MLE shared by every block")
    table.add_argument("--workers", type=int, help="Threads evaluating sample-size blocks")
    table.add_argument("--out", help="Output path (stdout when absent)")

    curve = commands.add_parser("curve", help="Emit posterior density curves on a grid")
    _add_model_arguments(curve)
    curve.add_argument("--grid", required=True, help="lo:hi:steps")

    check = commands.add_parser("check", help="Run the acceptance suite")
    check.add_argument("--seed", type=int, default=settings.DEFAULT_SEED, help="Random seed")
    check.add_argument("--only", help="Comma-separated check names")
    check.add_argument("--tolerance", action="append", default=[], metavar="NAME=VALUE", help="Override a check tolerance")
    check.add_argument("--out", help="Output path (stdout when absent)")
    return parser


def _run_config(args: argparse.Namespace, **extra) -> RunConfig:
    fields = {
        "model": args.model,
        "n": args.n,
        "mle": args.mle,
        "data": args.data,
        "prior_sd": args.prior_sd,
        "psi_index": args.psi_index,
        "prior_mode": args.prior_mode,
        "seed": args.seed,
        "out": args.out,
        **extra,
    }
    return RunConfig(**{k: v for k, v in fields.items() if v is not None})


def _parse_overrides(items: List[str]) -> Dict[str, float]:
    overrides = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"tolerance override must look like NAME=VALUE, got '{item}'")
        overrides[name.strip()] = parse_vector(value, f"tolerance {name}")[0]
    return overrides


def _validation_message(err: Dict) -> str:
    location = ".".join(str(p) for p in err.get("loc", ()))
    return f"{location}: {err['msg']}" if location else err["msg"]


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        logger.info(f"Wrote {out}")
    else:
        sys.stdout.write(text)


def cmd_bdm(args: argparse.Namespace) -> int:
    config = _run_config(
        args,
        method=args.method,
        theta0=parse_vector(args.theta0),
        output=args.output,
        loglik_ratio=args.loglik_ratio,
        export_sn=args.export_sn,
        export_draws=args.export_draws,
        draws=args.draws,
    )
    service = get_bdm_service()
    result = service.compute(config)
    if config.export_sn:
        service.export_sn(config, config.export_sn)
    if config.export_draws:
        service.export_draws(config, config.export_draws)

    if config.output == "csv":
        text = write_csv(BDM_CSV_HEADER, [format_result_row(result)])
    else:
        text = format_result_json(result) + "\n"
    _emit(text, config.out)
    return EXIT_OK


def cmd_table(args: argparse.Namespace) -> int:
    sample_sizes = None
    if args.n:
        sample_sizes = []
        for value in parse_vector(args.n, "n"):
            if value != int(value) or value < 1:
                raise ConfigError(f"n must be a positive integer, got {value}")
            sample_sizes.append(int(value))
    if not args.mle > 0:
        raise ConfigError(f"mle must be positive, got {args.mle}")
    text = get_table_service().render(sample_sizes=sample_sizes, mle=args.mle, workers=args.workers)
    _emit(text, args.out)
    return EXIT_OK


def cmd_curve(args: argparse.Namespace) -> int:
    lo, hi, steps = parse_grid(args.grid)
    config = _run_config(args)
    text = get_curve_service().render(config, GridSpec(lo=lo, hi=hi, steps=steps))
    _emit(text, config.out)
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    service = get_check_service()
    only = [name.strip() for name in args.only.split(",")] if args.only else None
    outcomes = service.run(seed=args.seed, overrides=_parse_overrides(args.tolerance), only=only)
    _emit(service.render(outcomes), args.out)
    return service.exit_code(outcomes)


COMMANDS = {
    "bdm": cmd_bdm,
    "table": cmd_table,
    "curve": cmd_curve,
    "check": cmd_check,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, run one subcommand and map failures to exit codes

    Returns:
        0 on success, 1 on a failed hard check, 2 on a domain or
        configuration error, 3 on a numeric failure
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    if args.log_level:
        setup_logger(args.log_level)

    try:
        return COMMANDS[args.command](args)
    except ValidationError as e:
        error = ConfigError("; ".join(_validation_message(err) for err in e.errors()) or str(e))
    except BdmError as e:
        error = e
    logger.error(f"{args.command} failed: {error.message}")
    sys.stderr.write(error.reason + "\n")
    return error.exit_code


if __name__ == "__main__":
    sys.exit(main())
