from pathlib import Path
import json

import pytest

import robust_grasp_loss.cli as cli_module
from robust_grasp_loss.corruption import CorruptionPlan, Dataset, MaskedDataset
from robust_grasp_loss.harness import read_report
from robust_grasp_loss.model import load_params
from robust_grasp_loss.utils import load_dataset


def _write_config(tmp_path: Path, **record) -> Path:
    document = {
        "data": {"n_train": 30, "n_test": 15, "classes": 3},
        "train": {"epochs": 3, "batch_size": 10, "warmup_epochs": 1},
        "seeds": [0, 1],
    }
    document.update(record)
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps(document), encoding="utf-8")
    return path


def _gen_data(tmp_path: Path, **record) -> Path:
    out = tmp_path / "data"
    config = _write_config(tmp_path, **record)
    assert cli_module.main(["gen-data", "--config", str(config), "--out", str(out)]) == 0
    return out


def _install_fake_pytest(monkeypatch, validation_dir: Path, returncode: int = 0) -> dict:
    captured = {}

    def fake_subprocess_run(command, check, cwd):
        captured["command"] = command
        assert check is False
        assert cwd == validation_dir
        return type("CompletedProcess", (), {"returncode": returncode})()

    monkeypatch.setattr(cli_module.subprocess, "run", fake_subprocess_run)
    monkeypatch.setattr(cli_module, "_validation_dir", lambda: validation_dir)
    monkeypatch.setattr(
        cli_module.Path,
        "exists",
        lambda self: self.name in {"pytest.ini", "scenario"},
    )
    return captured


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def test_validate_runs_installed_validation_suite(monkeypatch):
    validation_dir = Path("installed-validation")
    captured = _install_fake_pytest(monkeypatch, validation_dir, returncode=17)

    assert cli_module.main(["validate", "--replicates", "3"]) == 17

    assert captured["command"] == [
        cli_module.sys.executable,
        "-m",
        "pytest",
        f"--rootdir={validation_dir}",
        f"--config-file={validation_dir / 'pytest.ini'}",
        "--import-mode=importlib",
        str(validation_dir),
        "--replicates",
        "3",
    ]


def test_validate_adds_self_contained_html(monkeypatch):
    captured = _install_fake_pytest(monkeypatch, Path("installed-validation"))

    assert cli_module.main(["validate", "--html", "validation-report.html"]) == 0

    assert f"--html={Path('validation-report.html').resolve()}" in captured["command"]
    assert "--self-contained-html" in captured["command"]


def test_validate_adds_junitxml(monkeypatch):
    captured = _install_fake_pytest(monkeypatch, Path("installed-validation"))

    assert cli_module.main(["validate", "--junitxml", "validation-results.xml"]) == 0

    assert f"--junitxml={Path('validation-results.xml').resolve()}" in captured["command"]
    assert "--replicates" not in captured["command"]


def test_validate_rejects_positional_test_paths(monkeypatch):
    monkeypatch.setattr(
        cli_module.subprocess,
        "run",
        lambda command, check, cwd: pytest.fail("pytest should not be called"),
    )

    with pytest.raises(SystemExit) as excinfo:
        cli_module.main(["validate", "scenario/gradients"])
    assert excinfo.value.code == cli_module.EXIT_CONFIG_ERROR


def test_validate_requires_installed_validation_suite(monkeypatch):
    monkeypatch.setattr(cli_module, "_validation_dir", lambda: Path("missing-validation"))
    monkeypatch.setattr(cli_module.Path, "exists", lambda self: False)
    monkeypatch.setattr(
        cli_module.subprocess,
        "run",
        lambda command, check, cwd: pytest.fail("pytest should not be called"),
    )

    assert cli_module.main(["validate"]) == cli_module.EXIT_CONFIG_ERROR


# ---------------------------------------------------------------------------
# Data generation and corruption
# ---------------------------------------------------------------------------


def test_gen_data_writes_train_and_test_sets(tmp_path):
    out = _gen_data(tmp_path)
    train = load_dataset(out / "train.csv")
    test = load_dataset(out / "test.csv")
    assert isinstance(train, Dataset)
    assert train.size == 30
    assert test.size == 15
    assert train.num_classes == 3
    assert not (out / "corpus.json").exists()


def test_gen_data_grasp_task_writes_corpus(tmp_path):
    out = _gen_data(
        tmp_path,
        task="grasp_synthetic",
        data={"n_train": 20, "n_test": 10, "classes": 6, "cluster_spread": 0.1},
    )
    train = load_dataset(out / "train.csv")
    assert train.values.shape == (20, 2)
    assert (out / "corpus.json").exists()


def test_gen_data_is_deterministic_per_seed(tmp_path):
    config = _write_config(tmp_path)
    for name in ("first", "second"):
        assert (
            cli_module.main(
                ["gen-data", "--config", str(config), "--seed", "4", "--out", str(tmp_path / name)]
            )
            == 0
        )
    assert (tmp_path / "first" / "train.csv").read_bytes() == (
        tmp_path / "second" / "train.csv"
    ).read_bytes()


def test_corrupt_mcar_writes_masked_data_and_plan(tmp_path):
    out = _gen_data(tmp_path)
    masked_path = tmp_path / "masked.csv"
    plan_path = tmp_path / "plan.json"
    assert (
        cli_module.main(
            [
                "corrupt",
                "--data",
                str(out / "train.csv"),
                "--kind",
                "mcar",
                "--kappa1",
                "0.5",
                "--plan-out",
                str(plan_path),
                "--out",
                str(masked_path),
            ]
        )
        == 0
    )
    masked = load_dataset(masked_path)
    plan = CorruptionPlan.load(plan_path)
    assert isinstance(masked, MaskedDataset)
    assert plan.kind == "mcar"
    assert len(plan.affected_indices) == 15
    assert int((~masked.mask).sum()) == 15


def test_corrupt_with_saved_plan_reproduces_output(tmp_path):
    out = _gen_data(tmp_path)
    plan_path = tmp_path / "plan.json"
    first = tmp_path / "first.csv"
    second = tmp_path / "second.csv"
    base = ["corrupt", "--data", str(out / "train.csv"), "--flip-ratio", "0.4"]
    assert cli_module.main(base + ["--plan-out", str(plan_path), "--out", str(first)]) == 0
    assert cli_module.main(base + ["--plan", str(plan_path), "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    assert CorruptionPlan.load(plan_path).kind == "label_flip"


def test_corrupt_grasp_data_with_multiplicative_noise(tmp_path):
    out = _gen_data(
        tmp_path,
        task="grasp_synthetic",
        data={"n_train": 20, "n_test": 10, "classes": 6, "cluster_spread": 0.1},
    )
    noisy_path = tmp_path / "noisy.csv"
    assert (
        cli_module.main(
            [
                "corrupt",
                "--data",
                str(out / "train.csv"),
                "--kind",
                "multiplicative",
                "--kappa2",
                "0.5",
                "--epsilon",
                "1.5",
                "--out",
                str(noisy_path),
            ]
        )
        == 0
    )
    clean = load_dataset(out / "train.csv")
    noisy = load_dataset(noisy_path)
    changed = (noisy.values != clean.values).any(axis=1)
    assert int(changed.sum()) <= 10
    assert changed.any()


def test_corrupt_rejects_masked_input(tmp_path):
    out = _gen_data(tmp_path)
    masked_path = tmp_path / "masked.csv"
    base = ["corrupt", "--kind", "mcar", "--kappa1", "0.5"]
    assert cli_module.main(base + ["--data", str(out / "train.csv"), "--out", str(masked_path)]) == 0
    assert (
        cli_module.main(base + ["--data", str(masked_path), "--out", str(tmp_path / "again.csv")])
        == cli_module.EXIT_CONFIG_ERROR
    )


# ---------------------------------------------------------------------------
# Training and evaluation
# ---------------------------------------------------------------------------


def test_train_then_eval(tmp_path):
    out = _gen_data(tmp_path)
    masked_path = tmp_path / "masked.csv"
    params_path = tmp_path / "params.json"
    history_path = tmp_path / "history.csv"
    accuracy_path = tmp_path / "accuracy.json"
    assert (
        cli_module.main(
            [
                "corrupt",
                "--data",
                str(out / "train.csv"),
                "--kind",
                "mcar",
                "--kappa1",
                "0.3",
                "--out",
                str(masked_path),
            ]
        )
        == 0
    )
    assert (
        cli_module.main(
            [
                "train",
                "--data",
                str(masked_path),
                "--val",
                str(out / "test.csv"),
                "--loss",
                "smoothed-missing",
                "--epochs",
                "4",
                "--warmup-epochs",
                "2",
                "--gamma",
                "0.8",
                "--out",
                str(params_path),
                "--history",
                str(history_path),
            ]
        )
        == 0
    )
    assert load_params(params_path).num_classes == 3
    assert history_path.read_text(encoding="utf-8").splitlines()[0] == (
        "epoch,train_loss,val_accuracy,gated_in_fraction"
    )
    assert len(history_path.read_text(encoding="utf-8").splitlines()) == 5

    assert (
        cli_module.main(
            [
                "eval",
                "--params",
                str(params_path),
                "--data",
                str(out / "test.csv"),
                "--out",
                str(accuracy_path),
            ]
        )
        == 0
    )
    accuracy = json.loads(accuracy_path.read_text(encoding="utf-8"))["accuracy"]
    assert 0.0 <= accuracy <= 1.0


def test_train_rejects_inconsistent_schedule(tmp_path):
    out = _gen_data(tmp_path)
    argv = [
        "train",
        "--data",
        str(out / "train.csv"),
        "--epochs",
        "2",
        "--warmup-epochs",
        "5",
        "--out",
        str(tmp_path / "params.json"),
    ]
    assert cli_module.main(argv) == cli_module.EXIT_CONFIG_ERROR


def test_train_with_literal_smoothing_flag(tmp_path):
    out = _gen_data(tmp_path)
    argv = [
        "train",
        "--data",
        str(out / "train.csv"),
        "--loss",
        "smoothed-noisy",
        "--literal-paper-smoothing",
        "--epochs",
        "2",
        "--warmup-epochs",
        "0",
        "--out",
        str(tmp_path / "params.json"),
    ]
    assert cli_module.main(argv) == 0


def test_eval_shape_mismatch_is_a_runtime_error(tmp_path):
    out = _gen_data(tmp_path)
    params_path = tmp_path / "params.json"
    params_path.write_text(
        json.dumps(
            {
                "activation": "relu",
                "hidden_width": 0,
                "layers": [{"shape": [3, 4], "weights": [0.0] * 12, "biases": [0.0] * 3}],
            }
        ),
        encoding="utf-8",
    )
    argv = ["eval", "--params", str(params_path), "--data", str(out / "test.csv")]
    assert cli_module.main(argv) == cli_module.EXIT_RUNTIME_ERROR


def test_train_short_schedule_uses_default_warmup(tmp_path):
    out = _gen_data(tmp_path)
    argv = [
        "train",
        "--data",
        str(out / "train.csv"),
        "--epochs",
        "5",
        "--out",
        str(tmp_path / "params.json"),
    ]
    assert cli_module.main(argv) == 0


def test_train_multiplicative_flags_without_config(tmp_path):
    out = _gen_data(tmp_path)
    argv = [
        "train",
        "--data",
        str(out / "train.csv"),
        "--kappa2",
        "0.3",
        "--epsilon",
        "1.5",
        "--epochs",
        "2",
        "--out",
        str(tmp_path / "params.json"),
    ]
    assert cli_module.main(argv) == 0


def test_missing_config_file_is_a_config_error(tmp_path):
    argv = ["gen-data", "--config", str(tmp_path / "absent.json"), "--out", str(tmp_path)]
    assert cli_module.main(argv) == cli_module.EXIT_CONFIG_ERROR


def test_unknown_loss_choice_exits_with_config_error(tmp_path):
    with pytest.raises(SystemExit) as excinfo:
        cli_module.main(["train", "--data", "x.csv", "--loss", "focal", "--out", "p.json"])
    assert excinfo.value.code == cli_module.EXIT_CONFIG_ERROR


# ---------------------------------------------------------------------------
# Sweeps and reports
# ---------------------------------------------------------------------------


def test_sweep_and_report_conversion(tmp_path):
    config = _write_config(tmp_path, sweep={"flip_ratio": [0.0, 0.2]})
    json_path = tmp_path / "report.json"
    csv_path = tmp_path / "report.csv"
    argv = ["sweep", "--config", str(config), "--format", "json", "--out", str(json_path)]
    assert cli_module.main(argv) == 0
    records = json.loads(json_path.read_text(encoding="utf-8"))
    assert [record["flip_ratio"] for record in records] == [0.0, 0.2]

    argv = ["report", "--in", str(json_path), "--format", "csv", "--out", str(csv_path)]
    assert cli_module.main(argv) == 0
    frame = read_report(csv_path)
    assert list(frame.columns)[:2] == ["flip_ratio", "mean_acc_baseline"]
    assert frame["mean_acc_robust"].tolist() == [record["mean_acc_robust"] for record in records]


def test_sweep_is_byte_reproducible(tmp_path, capsys):
    config = _write_config(tmp_path, sweep={"delta": [0.6, 0.8]})
    assert cli_module.main(["sweep", "--config", str(config), "--seed", "2"]) == 0
    first = capsys.readouterr().out
    assert cli_module.main(["sweep", "--config", str(config), "--seed", "2"]) == 0
    second = capsys.readouterr().out
    assert first == second
    assert first.splitlines()[0].startswith("delta,mean_acc_baseline")
    assert len(first.splitlines()) == 3


def test_sweep_kappa1_flag_selects_mcar_without_config(tmp_path):
    report_path = tmp_path / "report.json"
    argv = [
        "sweep",
        "--kappa1",
        "0.5",
        "--epochs",
        "2",
        "--format",
        "json",
        "--out",
        str(report_path),
    ]
    assert cli_module.main(argv) == 0
    (record,) = json.loads(report_path.read_text(encoding="utf-8"))
    assert 0.0 <= record["mean_acc_robust"] <= 1.0


def test_ratio_flags_of_different_kinds_are_a_config_error(tmp_path):
    argv = ["sweep", "--kappa1", "0.5", "--flip-ratio", "0.2", "--epochs", "2"]
    assert cli_module.main(argv) == cli_module.EXIT_CONFIG_ERROR


def test_ratio_flag_against_configured_kind_is_a_config_error(tmp_path):
    config = _write_config(tmp_path)
    argv = ["sweep", "--config", str(config), "--kappa1", "0.5"]
    assert cli_module.main(argv) == cli_module.EXIT_CONFIG_ERROR


def test_sweep_failure_is_a_runtime_error(tmp_path):
    config = _write_config(tmp_path, corruption={"kind": "mcar", "ratio": 1.0})
    assert cli_module.main(["sweep", "--config", str(config)]) == cli_module.EXIT_RUNTIME_ERROR
