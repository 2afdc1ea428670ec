"""
Command-line interface for SPCA-SI Monitor.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Callable, List, Optional, Sequence

import structlog
from pydantic import ValidationError

from app import __description__, __version__
from app.core.config import Settings, load_settings
from app.core.exceptions import (
    EXIT_IO,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VALIDATION,
    InvalidArgumentError,
    SPCAError,
)
from app.core.logging import setup_logging
from app.schemas.model import ModeData
from app.services.continual import continual_updater
from app.services.csv_io import read_matrix, write_matrix, write_statistics
from app.services.datagen import NUMERICAL_FAULTS, Purpose, datagen_service
from app.services.model_store import model_store
from app.services.monitor import monitor_service
from app.services.scenario import scenario_runner

logger = structlog.get_logger()

DEFAULT_GAMMAS = (0.0, 0.1, 1.0, 10.0, 1000.0)
DEFAULT_ETAS = (0.0, 0.5, 1.0)


def _settings(args: argparse.Namespace, **overrides) -> Settings:
    return load_settings(getattr(args, "config", None), **overrides)


def cmd_simulate(args: argparse.Namespace) -> int:
    """Write training and faulty test CSVs for every mode plus a manifest."""
    settings = _settings(args)
    seed = settings.SEED if args.seed is None else args.seed
    modes = datagen_service.load_mode_specs(args.modes_file) if args.modes_file else None
    bundle = datagen_service.build_numerical_scenario(
        args.fault, seed, modes, noise_variance=settings.NOISE_VARIANCE
    )

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    files: List[str] = []
    for mode_index in range(1, bundle.n_modes + 1):
        for kind, data in (("train", bundle.train_sets), ("test", bundle.test_sets)):
            name = f"mode{mode_index}_{kind}.csv"
            write_matrix(out_dir / name, data[mode_index - 1])
            files.append(name)

    manifest = {
        "fault": args.fault,
        "fault_spec": bundle.fault.model_dump(),
        "seed": seed,
        "noise_variance": settings.NOISE_VARIANCE,
        "streams": {
            f"mode{i}_{kind}": [seed, i, int(purpose)]
            for i in range(1, bundle.n_modes + 1)
            for kind, purpose in (("train", Purpose.TRAINING), ("test", Purpose.TESTING))
        },
        "modes": [mode.model_dump(exclude_none=True) for mode in bundle.modes],
        "files": files,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")

    print(f"wrote {len(files)} CSV files and manifest.json to {out_dir}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    """Train the first-mode model and start a new archive."""
    settings = _settings(args, N_COMPONENTS=args.n_components)
    samples = read_matrix(args.data)
    config = settings.solver_config()
    model = continual_updater.train_first_mode(
        ModeData(samples=samples, mode_index=1),
        config,
        settings.CPV_THRESHOLD,
        settings.CONFIDENCE,
        n_components=settings.N_COMPONENTS,
    )
    archive = model_store.new_archive(model, config, seed=settings.SEED, source=str(args.data))
    model_store.save_chain(archive, args.out, overwrite=args.overwrite)

    print(
        f"mode 1: {model.n_components} components, "
        f"T2 limit {model.t2_threshold:.4f}, SPE limit {model.spe_threshold:.4f} -> {args.out}"
    )
    return EXIT_OK


def cmd_update(args: argparse.Namespace) -> int:
    """Extend an archive with a model for the next mode."""
    settings = _settings(args, GAMMA=args.gamma, ETA=args.eta)
    archive = model_store.load_chain(args.model)
    previous = archive.latest
    # the archive's solver settings keep the chain consistent unless a config file overrides them
    config = settings.solver_config() if args.config else archive.config

    samples = read_matrix(args.data)
    model = continual_updater.update_model(
        previous,
        ModeData(samples=samples, mode_index=previous.mode_index + 1),
        config,
        settings.GAMMA,
        settings.ETA,
        rescale_variance=settings.UPDATE_RESCALE_VARIANCE,
    )
    extended = model_store.append_model(archive, model, seed=settings.SEED, source=str(args.data))
    overwrite = args.overwrite or Path(args.out).resolve() == Path(args.model).resolve()
    model_store.save_chain(extended, args.out, overwrite=overwrite)

    print(
        f"mode {model.mode_index}: chain length {len(extended.models)}, "
        f"T2 limit {model.t2_threshold:.4f}, SPE limit {model.spe_threshold:.4f} -> {args.out}"
    )
    return EXIT_OK


def cmd_monitor(args: argparse.Namespace) -> int:
    """Evaluate T2/SPE of a data set under the latest model of an archive."""
    archive = model_store.load_chain(args.model)
    model = archive.latest
    mode = args.mode if args.mode is not None else model.mode_index
    origin = archive.model_for_mode(mode)
    if origin is None:
        raise InvalidArgumentError(
            f"unknown mode {mode}; the archive covers modes 1..{model.mode_index}"
        )

    samples = read_matrix(args.data)
    result = monitor_service.run_monitoring(samples, model, origin.scaler)
    write_statistics(args.out, result)

    print(f"{result.n_samples} samples, {int(result.alarms.sum())} alarms -> {args.out}")
    if args.fault_start is not None:
        score = monitor_service.score_detection(result, args.fault_start)
        print(f"FDR={100 * score.fdr:.1f}% FAR={100 * score.far:.1f}%")
    return EXIT_OK


def cmd_reproduce(args: argparse.Namespace) -> int:
    """Run every fault through every situation and write the report."""
    settings = _settings(args)
    seed = settings.SEED if args.seed is None else args.seed
    modes = datagen_service.load_mode_specs(args.modes_file) if args.modes_file else None
    report = scenario_runner.reproduce(args.out, seed, settings, modes)

    print(f"{'situation':>9} {'fault':>5} {'method':>8} {'model':>8} {'testing':>8} {'FDR%':>7} {'FAR%':>7}  ok")
    for row in report.rows:
        flag = "-" if row.passed is None else ("yes" if row.passed else "NO")
        print(
            f"{row.situation:>9} {row.fault:>5} {row.method:>8} {row.model_label:>8} "
            f"{row.testing_source:>8} {row.fdr:>7.1f} {row.far:>7.1f}  {flag}"
        )
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    """Fault-1 numerical case over a gamma/eta grid."""
    settings = _settings(args)
    seed = settings.SEED if args.seed is None else args.seed
    rows = scenario_runner.sweep(seed, args.gammas, args.etas, settings, out_path=args.out)

    for row in rows:
        print(
            f"gamma={row.gamma:g} eta={row.eta:g} current FDR/FAR={row.current_fdr:.1f}/{row.current_far:.1f} "
            f"previous FDR/FAR={row.previous_fdr:.1f}/{row.previous_far:.1f} distance={row.anchor_distance:.4f}"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    """Argument parser for every command."""
    parser = argparse.ArgumentParser(
        prog="spca-si",
        description=__description__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python -m app simulate --fault 1 --seed 7 --out data/
  python -m app train --data data/mode1_train.csv --out chain.json
  python -m app update --model chain.json --data data/mode2_train.csv --gamma 1000 --eta 0.5 --out chain2.json
  python -m app monitor --model chain2.json --data data/mode1_test.csv --mode 1 --out stats.csv --fault-start 500
  python -m app reproduce --seed 7 --out results/
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", help="Log level (default: LOG_LEVEL setting)")

    commands = parser.add_subparsers(dest="command", required=True)

    def add_command(name: str, handler: Callable[[argparse.Namespace], int], help_text: str):
        sub = commands.add_parser(name, help=help_text, description=help_text)
        sub.add_argument("--config", help="KEY=VALUE settings file")
        sub.set_defaults(handler=handler)
        return sub

    simulate = add_command("simulate", cmd_simulate, "Generate numerical-case data sets")
    simulate.add_argument("--fault", type=int, required=True, choices=sorted(NUMERICAL_FAULTS))
    simulate.add_argument("--seed", type=int)
    simulate.add_argument("--out", required=True, help="Output directory")
    simulate.add_argument("--modes-file", help="YAML list of mode specifications")

    train = add_command("train", cmd_train, "Train the first-mode model")
    train.add_argument("--data", required=True, help="Training CSV")
    train.add_argument("--out", required=True, help="Archive to create")
    train.add_argument("--n-components", type=int, help="Skip CPV selection and use this many components")
    train.add_argument("--overwrite", action="store_true")

    update = add_command("update", cmd_update, "Update a model chain with the next mode")
    update.add_argument("--model", required=True, help="Archive to extend")
    update.add_argument("--data", required=True, help="Training CSV of the next mode")
    update.add_argument("--gamma", type=float)
    update.add_argument("--eta", type=float)
    update.add_argument("--out", required=True, help="Archive to write")
    update.add_argument("--overwrite", action="store_true")

    monitor = add_command("monitor", cmd_monitor, "Monitor a data set with the latest model")
    monitor.add_argument("--model", required=True, help="Archive")
    monitor.add_argument("--data", required=True, help="CSV to monitor")
    monitor.add_argument("--mode", type=int, help="Mode the data comes from (default: latest)")
    monitor.add_argument("--out", required=True, help="Statistics CSV")
    monitor.add_argument("--fault-start", type=int, help="Number of leading normal samples, to score FDR/FAR")

    reproduce = add_command("reproduce", cmd_reproduce, "Run all faults and situations of the numerical case")
    reproduce.add_argument("--seed", type=int)
    reproduce.add_argument("--out", required=True, help="Output directory")
    reproduce.add_argument("--modes-file", help="YAML list of mode specifications")

    sweep = add_command("sweep", cmd_sweep, "Sweep gamma and eta on the Fault-1 numerical case")
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--out", required=True, help="Sweep CSV")
    sweep.add_argument("--gammas", type=float, nargs="+", default=list(DEFAULT_GAMMAS))
    sweep.add_argument("--etas", type=float, nargs="+", default=list(DEFAULT_ETAS))

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one command and map failures to exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    if not structlog.is_configured():
        setup_logging(args.log_level)

    try:
        return args.handler(args)
    except SPCAError as exc:
        logger.error("command_failed", command=args.command, error=str(exc), error_type=type(exc).__name__)
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValidationError as exc:
        logger.error("invalid_configuration", command=args.command, error=str(exc))
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        logger.error("io_failed", command=args.command, error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
