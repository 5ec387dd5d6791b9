"""Command line interface of the robust grasp loss harness."""

import argparse
import json
import logging
from dataclasses import replace
from pathlib import Path
import subprocess
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from robust_grasp_loss.corruption.apply import corrupt_dataset
from robust_grasp_loss.corruption.models import CorruptionPlan, MaskedDataset
from robust_grasp_loss.corruption.plan import plan_corruption
from robust_grasp_loss.generation.grasp_synthetic import (
    GraspSyntheticParams,
    gen_grasp_synthetic,
    relabel_rotations,
)
from robust_grasp_loss.harness.config import (
    ExperimentConfig,
    apply_axis,
    load_experiment_config,
)
from robust_grasp_loss.harness.experiment import generate_data, run_experiment
from robust_grasp_loss.harness.report import convert_report, emit_report
from robust_grasp_loss.model.predictor import load_params, save_params
from robust_grasp_loss.model.training import ConfigError, evaluate, train
from robust_grasp_loss.utils.serialization import load_dataset, save_dataset

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_RUNTIME_ERROR = 2

LOSS_CHOICES = ["ce", "pseudo", "smoothed-missing", "sce", "smoothed-noisy"]
OVERRIDE_FLAGS = (
    "kappa1",
    "kappa2",
    "epsilon",
    "flip_ratio",
    "gamma",
    "xi",
    "delta",
    "learning_rate",
    "hidden_width",
)
# without a config file these flags choose the corruption kind they belong to
RATIO_FLAG_KINDS = {
    "kappa1": "mcar",
    "kappa2": "multiplicative",
    "epsilon": "multiplicative",
    "flip_ratio": "label_flip",
}


class HarnessArgumentParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with the config error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG_ERROR, f"{self.prog}: error: {message}\n")


def _validation_dir() -> Path:
    return Path(__file__).resolve().parent / "validation"


def _resolve_from_cwd(path: str) -> str:
    return str(Path(path).resolve())


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        default=None,
        metavar="PATH",
        help="Experiment config (JSON, or TOML by .toml suffix). Defaults apply when omitted.",
    )
    parser.add_argument(
        "--seed", type=int, default=None, help="Replicate seed (default: first config seed)."
    )


def _add_override_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("overrides of config values")
    group.add_argument("--kappa1", type=float, help="MCAR removal ratio.")
    group.add_argument("--kappa2", type=float, help="Multiplicative noise ratio.")
    group.add_argument("--epsilon", type=float, help="Multiplicative noise factor.")
    group.add_argument("--flip-ratio", dest="flip_ratio", type=float, help="Label flip ratio.")
    group.add_argument("--gamma", type=float, help="Confidence threshold (default 0.95).")
    group.add_argument("--xi", type=float, help="Self-target smoothing (default 0.9).")
    group.add_argument("--delta", type=float, help="Label smoothing for noisy labels (default 0.8).")
    group.add_argument("--epochs", type=int, help="Training epochs (default 100).")
    group.add_argument(
        "--warmup-epochs",
        dest="warmup_epochs",
        type=int,
        help="Supervised-only epochs (default min(10, epochs)).",
    )
    group.add_argument(
        "--learning-rate", dest="learning_rate", type=float, help="SGD step size (default 0.1)."
    )
    group.add_argument(
        "--hidden-width", dest="hidden_width", type=int, help="Hidden units, 0 = linear (default 0)."
    )
    group.add_argument(
        "--literal-paper-smoothing",
        action="store_true",
        default=False,
        help="Smooth the prediction instead of the observed label in the noisy losses.",
    )


def create_argparser() -> argparse.ArgumentParser:
    parser = HarnessArgumentParser(
        prog="robust-grasp-loss",
        description="Robust losses for missing and noisy ground truth: data, training, sweeps.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level.")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=HarnessArgumentParser)

    gen = commands.add_parser("gen-data", help="Generate train/test data sets.")
    _add_config_flags(gen)
    gen.add_argument("--out", required=True, metavar="DIR", help="Output directory.")
    gen.set_defaults(handler=_gen_data)

    corrupt = commands.add_parser("corrupt", help="Corrupt a data set with a seeded plan.")
    _add_config_flags(corrupt)
    _add_override_flags(corrupt)
    corrupt.add_argument("--data", required=True, metavar="PATH", help="Data set CSV.")
    corrupt.add_argument(
        "--kind", choices=["mcar", "multiplicative", "label_flip"], default=None,
        help="Corruption protocol (default: config corruption kind).",
    )
    corrupt.add_argument("--plan", default=None, metavar="PATH", help="Apply this saved plan.")
    corrupt.add_argument("--plan-out", default=None, metavar="PATH", help="Save the plan here.")
    corrupt.add_argument("--out", required=True, metavar="PATH", help="Corrupted data set CSV.")
    corrupt.set_defaults(handler=_corrupt)

    train_parser = commands.add_parser("train", help="Train a predictor.")
    _add_config_flags(train_parser)
    _add_override_flags(train_parser)
    train_parser.add_argument("--data", required=True, metavar="PATH", help="Training data CSV.")
    train_parser.add_argument("--val", default=None, metavar="PATH", help="Validation data CSV.")
    train_parser.add_argument("--loss", choices=LOSS_CHOICES, default="ce", help="Loss function.")
    train_parser.add_argument("--out", required=True, metavar="PATH", help="Parameter JSON.")
    train_parser.add_argument("--history", default=None, metavar="PATH", help="History CSV.")
    train_parser.set_defaults(handler=_train)

    eval_parser = commands.add_parser("eval", help="Evaluate a trained predictor.")
    eval_parser.add_argument("--params", required=True, metavar="PATH", help="Parameter JSON.")
    eval_parser.add_argument("--data", required=True, metavar="PATH", help="Data set CSV.")
    eval_parser.add_argument("--out", default=None, metavar="PATH", help="Write accuracy JSON.")
    eval_parser.set_defaults(handler=_eval)

    sweep = commands.add_parser("sweep", help="Run a paired baseline/robust sweep.")
    _add_config_flags(sweep)
    _add_override_flags(sweep)
    sweep.add_argument("--format", choices=["csv", "json"], default="csv", help="Report format.")
    sweep.add_argument("--out", default=None, metavar="PATH", help="Report file (default: stdout).")
    sweep.set_defaults(handler=_sweep)

    report = commands.add_parser("report", help="Convert a report between CSV and JSON.")
    report.add_argument("--in", dest="source", required=True, metavar="PATH", help="Report file.")
    report.add_argument("--format", choices=["csv", "json"], default="csv", help="Output format.")
    report.add_argument("--out", default=None, metavar="PATH", help="Output file (default: stdout).")
    report.set_defaults(handler=_report)

    validate = commands.add_parser("validate", help="Run the packaged acceptance suite.")
    validate.add_argument(
        "--html", default=None, metavar="PATH",
        help="Write a self-contained pytest-html report to PATH.",
    )
    validate.add_argument(
        "--junitxml", default=None, metavar="PATH", help="Write a JUnit XML report to PATH."
    )
    validate.add_argument(
        "--replicates", type=int, default=None, metavar="N",
        help="Paired seeds per directional experiment (default: 10).",
    )
    validate.set_defaults(handler=_validate)
    return parser


def _flag_kind(args: argparse.Namespace) -> str | None:
    kinds = {
        kind for name, kind in RATIO_FLAG_KINDS.items() if getattr(args, name, None) is not None
    }
    if len(kinds) > 1:
        raise ConfigError(f"Corruption flags of different kinds given together: {sorted(kinds)}.")
    return kinds.pop() if kinds else None


def _load_config(args: argparse.Namespace, task: str | None = None) -> ExperimentConfig:
    config = load_experiment_config(args.config) if args.config else ExperimentConfig()
    kind = getattr(args, "kind", None)
    if kind is None and not args.config:
        kind = _flag_kind(args)
    if kind is not None and kind != config.corruption.kind:
        if task is None and kind == "multiplicative":
            task = "grasp_synthetic"
        config = replace(
            config,
            task=task or config.task,
            corruption=replace(config.corruption, kind=kind),
            robust_loss=None,
        )
    # epochs and warmup_epochs are validated against each other, so set them together
    schedule = {
        name: getattr(args, name)
        for name in ("epochs", "warmup_epochs")
        if getattr(args, name, None) is not None
    }
    if schedule:
        config = replace(config, train=replace(config.train, **schedule))
    for name in OVERRIDE_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            config = apply_axis(config, name, value)
    if getattr(args, "literal_paper_smoothing", False):
        noisy = replace(config.train.noisy, literal_paper_smoothing=True)
        config = replace(config, train=replace(config.train, noisy=noisy))
    return config


def _seed(args: argparse.Namespace, config: ExperimentConfig) -> int:
    return args.seed if args.seed is not None else config.seeds[0]


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    Path(out).write_text(text, encoding="utf-8")
    logging.info(f"Wrote {out}")


def _gen_data(args: argparse.Namespace) -> int:
    config = _load_config(args)
    seed = _seed(args, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    split = generate_data(config, seed)
    save_dataset(split.train, out / "train.csv")
    save_dataset(split.test, out / "test.csv")
    if config.task == "grasp_synthetic":
        gen_grasp_synthetic(GraspSyntheticParams(), seed).save(out / "corpus.json")
    logging.info(f"Wrote {config.task} data (seed {seed}) to {out}")
    return EXIT_OK


def _corrupt(args: argparse.Namespace) -> int:
    data = load_dataset(args.data)
    if isinstance(data, MaskedDataset):
        raise ConfigError(f"'{args.data}' is already MCAR-masked.")
    # the data decides the task, whatever the config says
    config = _load_config(
        args, "grasp_synthetic" if data.values is not None else "blobs_classification"
    )
    if args.plan is not None:
        plan = CorruptionPlan.load(args.plan)
    else:
        spec = config.corruption
        plan = plan_corruption(
            data.size, spec.kind, spec.ratio, spec.factor, spec.seed + _seed(args, config)
        )
    corrupted = corrupt_dataset(
        data, plan, relabel=lambda values: relabel_rotations(values, data.num_classes)
    )
    save_dataset(corrupted, args.out)
    if args.plan_out is not None:
        plan.save(args.plan_out)
    logging.info(f"Corrupted {len(plan.affected_indices)}/{plan.n} rows ({plan.kind}).")
    return EXIT_OK


def _train(args: argparse.Namespace) -> int:
    config = _load_config(args)
    train_config = replace(
        config.train, loss_mode=args.loss.replace("-", "_"), seed=_seed(args, config)
    )
    data = load_dataset(args.data)
    val = load_dataset(args.val) if args.val else None
    params, history = train(data, val, train_config)
    save_params(params, args.out)
    if args.history is not None:
        history.to_csv(args.history, index=False, lineterminator="\n")
    logging.info(f"Final train loss {history['train_loss'].iloc[-1]:.6g}")
    return EXIT_OK


def _eval(args: argparse.Namespace) -> int:
    params = load_params(args.params)
    data = load_dataset(args.data)
    if isinstance(data, MaskedDataset):
        raise ConfigError(f"'{args.data}' has removed labels and cannot be evaluated.")
    accuracy = evaluate(params, data)
    _write(json.dumps({"accuracy": accuracy}) + "\n", args.out)
    return EXIT_OK


def _sweep(args: argparse.Namespace) -> int:
    config = _load_config(args)
    if args.seed is not None:
        config = replace(config, seeds=(args.seed,))
    rows = run_experiment(config)
    _write(emit_report(rows, args.format), args.out)
    return EXIT_OK


def _report(args: argparse.Namespace) -> int:
    _write(convert_report(args.source, args.format), args.out)
    return EXIT_OK


def _validate(args: argparse.Namespace) -> int:
    validation_dir = _validation_dir()
    if (
        not (validation_dir / "pytest.ini").exists()
        or not (validation_dir / "scenario").exists()
    ):
        raise FileNotFoundError(
            f"Installed validation suite not found at '{validation_dir}'."
        )
    pytest_args = [
        f"--rootdir={validation_dir}",
        f"--config-file={validation_dir / 'pytest.ini'}",
        "--import-mode=importlib",
        str(validation_dir),
    ]
    if args.replicates is not None:
        pytest_args.extend(["--replicates", str(args.replicates)])
    if args.html is not None:
        pytest_args.extend([f"--html={_resolve_from_cwd(args.html)}", "--self-contained-html"])
    if args.junitxml is not None:
        pytest_args.append(f"--junitxml={_resolve_from_cwd(args.junitxml)}")
    command = [sys.executable, "-m", "pytest", *pytest_args]
    return subprocess.run(command, check=False, cwd=validation_dir).returncode


def main(argv: list[str] | None = None) -> int:
    args = create_argparser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s: %(message)s",
    )
    try:
        return args.handler(args)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        logging.error(str(exc))
        return EXIT_CONFIG_ERROR
    except Exception as exc:
        logging.error(f"{args.command} failed: {exc}")
        return EXIT_RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
