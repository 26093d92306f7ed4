"""
Command-line surface of the tactile workbench.

Subcommands collect, train, eval, follow, table1 and plot each resolve an
:class:`ExperimentConfig` from defaults, an optional ``--config`` file and the
command-line flags (flags win), run one experiment and return an exit code.
"""

import argparse
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Type

import pydantic
import structlog

from app.core.config import settings
from app.core.constants import EXIT_CODES, OBJECT_NAMES
from app.core.exceptions import ApplicationError, ConfigurationError, NotFoundError
from app.core.logging_config import configure_logging
from app.core.utils import flatten_dict, parse_key_value_text, unflatten_dict
from app.data.models.experiment import ExperimentConfig
from app.services import experiments

logger = structlog.get_logger()

# Flag destination -> dotted ExperimentConfig key
FLAG_KEYS = {
    "seed": "seed",
    "out": "out",
    "workers": "workers",
    "object": "object",
    "n": "n",
    "image_size": "image_size",
    "noise": "noise",
    "dataset": "dataset",
    "model": "model",
    "slide_model": "slide_model",
    "template": "template",
    "arch": "arch",
    "mode": "mode",
    "oracle": "oracle",
    "frames": "eval_frames",
    "start_r": "start_r",
    "start_theta": "start_theta",
    "max_steps": "max_steps",
    "step": "servo.step",
    "r0": "servo.r0",
    "theta0": "servo.theta0",
    "gain_r": "servo.gain_r",
    "gain_theta": "servo.gain_theta",
    "direction": "servo.direction",
    "depth_offset": "contact.depth_offset",
    "batch_size": "training.batch_size",
    "epochs": "training.max_epochs",
    "patience": "training.patience",
    "augment": "training.augment",
    "lr": "training.lr",
    "dtype": "training.dtype",
}


def _on_off(value: str) -> bool:
    if value.lower() in ("on", "true", "yes", "1"):
        return True
    if value.lower() in ("off", "false", "no", "0"):
        return False
    raise argparse.ArgumentTypeError(f"expected on/off, got {value!r}")


def _add_object(parser: argparse.ArgumentParser, default: Optional[str] = None) -> None:
    parser.add_argument(
        "--object",
        default=default,
        help=f"built-in object ({', '.join(OBJECT_NAMES)}) or contour file",
    )


def _add_sensor(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--image-size", dest="image_size", type=int)
    parser.add_argument("--noise", type=float, help="pixel noise sigma")
    parser.add_argument("--depth-offset", dest="depth_offset", type=float)


def _add_servo(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mode", choices=("tap", "slide"))
    parser.add_argument("--start-r", dest="start_r", type=float)
    parser.add_argument("--start-theta", dest="start_theta", type=float)
    parser.add_argument("--step", type=float, help="tangential step (mm)")
    parser.add_argument("--r0", type=float, help="radial set-point (mm)")
    parser.add_argument("--theta0", type=float, help="angular set-point (deg)")
    parser.add_argument("--gain-r", dest="gain_r", type=float)
    parser.add_argument("--gain-theta", dest="gain_theta", type=float)
    parser.add_argument("--direction", type=int, choices=(1, -1))
    parser.add_argument("--max-steps", dest="max_steps", type=int)


def _add_perceiver(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", help="trained model file (.tcnn)")
    parser.add_argument("--template", help="dataset for template matching")
    parser.add_argument(
        "--oracle", action="store_const", const=True, help="perceive ground truth"
    )
    parser.add_argument("--dtype", choices=("float64", "float32"))


def _add_globals(parser: argparse.ArgumentParser, default: object = None) -> None:
    parser.add_argument("--seed", type=int, default=default)
    parser.add_argument("--out", default=default, help="output directory")
    parser.add_argument(
        "--config", default=default, help="key = value configuration file"
    )
    parser.add_argument("--workers", type=int, default=default)
    parser.add_argument(
        "--log-level",
        dest="log_level",
        default=settings.LOG_LEVEL if default is None else default,
    )
    parser.add_argument(
        "--log-format",
        dest="log_format",
        choices=("console", "json"),
        default=settings.LOG_FORMAT if default is None else default,
    )


def build_parser() -> argparse.ArgumentParser:
    """
    Global flags are accepted before or after the subcommand; a value given
    after it wins.
    """
    parser = argparse.ArgumentParser(
        prog="tactile-workbench", description=settings.APP_NAME
    )
    _add_globals(parser)
    # SUPPRESS keeps an absent subcommand flag from clobbering the global value
    shared = argparse.ArgumentParser(add_help=False)
    _add_globals(shared, default=argparse.SUPPRESS)
    commands = parser.add_subparsers(dest="command", required=True)

    collect = commands.add_parser(
        "collect", parents=[shared], help="collect a labeled tap dataset"
    )
    _add_object(collect)
    collect.add_argument("--n", type=int, help="number of taps")
    _add_sensor(collect)

    train = commands.add_parser(
        "train", parents=[shared], help="train a network on a dataset"
    )
    train.add_argument("--dataset")
    train.add_argument("--arch", choices=("A", "B"))
    train.add_argument("--augment", type=_on_off)
    train.add_argument("--epochs", type=int)
    train.add_argument("--patience", type=int)
    train.add_argument("--batch-size", dest="batch_size", type=int)
    train.add_argument("--lr", type=float)
    train.add_argument("--dtype", choices=("float64", "float32"))

    evaluate = commands.add_parser(
        "eval", parents=[shared], help="evaluate a model on a test set"
    )
    evaluate.add_argument("--model")
    evaluate.add_argument("--dataset")
    evaluate.add_argument("--frames", choices=("all", "center"))
    evaluate.add_argument("--dtype", choices=("float64", "float32"))

    follow = commands.add_parser("follow", parents=[shared], help="follow one contour")
    _add_object(follow)
    _add_perceiver(follow)
    follow.add_argument("--arch", choices=("A", "B"))
    _add_servo(follow)
    _add_sensor(follow)

    table1 = commands.add_parser(
        "table1", parents=[shared], help="run the disk accuracy grid"
    )
    _add_object(table1)
    _add_perceiver(table1)
    table1.add_argument("--slide-model", dest="slide_model")
    table1.add_argument("--max-steps", dest="max_steps", type=int)
    _add_sensor(table1)

    plot = commands.add_parser(
        "plot", parents=[shared], help="redraw trajectories and dump frames"
    )
    _add_object(plot)
    plot.add_argument(
        "--trajectory", action="append", default=[], help="trajectory CSV"
    )
    plot.add_argument("--dataset")
    plot.add_argument(
        "--frames", dest="dump_frames", type=int, default=0, help="samples to dump"
    )
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """
    Defaults, then the ``--config`` file, then flags.

    Raises:
        NotFoundError: If the config file does not exist
        ConfigurationError: If the merged values do not validate
    """
    data = flatten_dict(ExperimentConfig().model_dump(mode="json"))
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise NotFoundError(f"Config file not found: {path}")
        try:
            data.update(flatten_dict(parse_key_value_text(path.read_text("utf-8"))))
        except ValueError as exc:
            raise ConfigurationError(f"{path}: {exc}")
    for dest, key in FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            data[key] = value
    try:
        return ExperimentConfig.model_validate(unflatten_dict(data))
    except pydantic.ValidationError as exc:
        raise ConfigurationError(f"Invalid configuration: {exc}")


def run_collect(config: ExperimentConfig, args: argparse.Namespace) -> str:
    return f"dataset: {experiments.cmd_collect(config)}"


def run_train(config: ExperimentConfig, args: argparse.Namespace) -> str:
    path, _, summary = experiments.cmd_train(config)
    return f"model: {path}\n{summary}"


def run_eval(config: ExperimentConfig, args: argparse.Namespace) -> str:
    summary = experiments.cmd_eval(config)
    return (
        f"overall MAE: {summary.mae_r:.3f} mm, {summary.mae_theta:.2f} deg\n"
        f"central MAE: {summary.central_mae_r:.3f} mm, "
        f"{summary.central_mae_theta:.2f} deg"
    )


def run_follow(config: ExperimentConfig, args: argparse.Namespace) -> str:
    trajectory, _, line = experiments.cmd_follow(config)
    return f"{line} ({trajectory.status.value}, {len(trajectory.records)} steps)"


def run_table1(config: ExperimentConfig, args: argparse.Namespace) -> str:
    return experiments.cmd_table1(config)[1].rstrip("\n")


def run_plot(config: ExperimentConfig, args: argparse.Namespace) -> str:
    written = experiments.cmd_plot(config, args.trajectory, args.dump_frames)
    return f"{len(written)} files written"


COMMANDS: Dict[str, Callable[[ExperimentConfig, argparse.Namespace], str]] = {
    "collect": run_collect,
    "train": run_train,
    "eval": run_eval,
    "follow": run_follow,
    "table1": run_table1,
    "plot": run_plot,
}


def application_error_handler(exc: BaseException) -> int:
    """Handle application-specific exceptions."""
    assert isinstance(exc, ApplicationError)
    logger.error("Command failed", error=exc.message, code=exc.code, **exc.details)
    print(f"error: {exc.message}", file=sys.stderr)
    return exc.exit_code


def interrupt_handler(exc: BaseException) -> int:
    logger.warning("Interrupted")
    return EXIT_CODES["RUNTIME"]


def general_error_handler(exc: BaseException) -> int:
    """Handle unexpected exceptions."""
    logger.error("Unexpected error occurred", error=str(exc), exc_info=True)
    print(f"error: {exc}", file=sys.stderr)
    return EXIT_CODES["RUNTIME"]


EXCEPTION_HANDLERS: List[Tuple[Type[BaseException], Callable[[BaseException], int]]] = [
    (ApplicationError, application_error_handler),
    (KeyboardInterrupt, interrupt_handler),
    (Exception, general_error_handler),
]


def handle_exception(exc: BaseException) -> int:
    for exc_type, handler in EXCEPTION_HANDLERS:
        if isinstance(exc, exc_type):
            return handler(exc)
    raise exc


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments, run the command and map failures to exit codes:
    0 success, 2 usage or configuration, 3 runtime or numeric failure.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    configure_logging(args.log_level, args.log_format)

    try:
        config = resolve_config(args)
        logger.info(
            "Running command",
            command=args.command,
            seed=config.seed,
            out=config.out,
            config_hash=config.config_hash,
        )
        message = COMMANDS[args.command](config, args)
    except BaseException as exc:  # noqa: B902
        if isinstance(exc, SystemExit):
            raise
        return handle_exception(exc)
    print(message)
    return EXIT_CODES["OK"]


if __name__ == "__main__":
    sys.exit(main())
