"""
Tests for the command-line interface.
"""

import json

import numpy as np
import pytest
from structlog.testing import capture_logs

from app.cli import build_parser, main
from app.services.csv_io import STATISTICS_HEADER, write_matrix
from app.services.model_store import model_store


def correlated_data(rng, n=200, shift=0.0):
    """Three variables driven by one source."""
    source = rng.normal(size=n)
    X = np.column_stack([source, 0.8 * source, -0.5 * source]) + 0.2 * rng.normal(size=(n, 3))
    return X + shift


@pytest.fixture
def training_csvs(tmp_path, rng):
    """Mode 1 and Mode 2 training files."""
    first = write_matrix(tmp_path / "mode1.csv", correlated_data(rng))
    second = write_matrix(tmp_path / "mode2.csv", correlated_data(rng, shift=3.0))
    return first, second


@pytest.fixture
def trained_archive(tmp_path, training_csvs):
    """Archive produced by the train command."""
    out = tmp_path / "chain.json"
    assert main(["train", "--data", str(training_csvs[0]), "--out", str(out)]) == 0
    return out


@pytest.mark.cli
class TestParser:
    """Test cases for argument parsing."""

    def test_commands(self):
        """Every command is registered."""
        parser = build_parser()

        for command in ("simulate", "train", "update", "monitor", "reproduce", "sweep"):
            args = parser.parse_args([command, "--out", "x"] + {
                "simulate": ["--fault", "1"],
                "train": ["--data", "d.csv"],
                "update": ["--model", "m.json", "--data", "d.csv"],
                "monitor": ["--model", "m.json", "--data", "d.csv"],
                "reproduce": [],
                "sweep": [],
            }[command])
            assert args.command == command

    def test_unknown_fault_is_usage_error(self, tmp_path):
        """Fault 4 does not exist."""
        assert main(["simulate", "--fault", "4", "--out", str(tmp_path)]) == 2

    def test_missing_command(self):
        """A command is required."""
        assert main([]) == 2

    def test_version_exits_cleanly(self, capsys):
        """--version prints and succeeds."""
        assert main(["--version"]) == 0
        assert "spca-si" in capsys.readouterr().out


@pytest.mark.cli
class TestSimulateCommand:
    """Test cases for simulate."""

    def test_writes_data_and_manifest(self, tmp_path):
        """Four CSV files plus a manifest with the streams used."""
        out = tmp_path / "data"

        assert main(["simulate", "--fault", "2", "--seed", "5", "--out", str(out)]) == 0

        names = sorted(p.name for p in out.iterdir())
        assert names == ["manifest.json", "mode1_test.csv", "mode1_train.csv", "mode2_test.csv", "mode2_train.csv"]
        manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["fault"] == 2
        assert manifest["seed"] == 5
        assert manifest["streams"]["mode2_test"] == [5, 2, 1]
        assert manifest["noise_variance"] == 1e-6
        header = (out / "mode1_train.csv").read_text(encoding="utf-8").splitlines()[0]
        assert header == "x1,x2,x3,x4,x5,x6,x7,x8"

    def test_noise_variance_from_config(self, tmp_path):
        """NOISE_VARIANCE in a config file reaches the generator."""
        config = tmp_path / "settings.env"
        config.write_text("NOISE_VARIANCE=0.001\n", encoding="utf-8")
        quiet, noisy = tmp_path / "quiet", tmp_path / "noisy"

        main(["simulate", "--fault", "1", "--seed", "9", "--out", str(quiet)])
        main(["simulate", "--fault", "1", "--seed", "9", "--out", str(noisy), "--config", str(config)])

        manifest = json.loads((noisy / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["noise_variance"] == 0.001
        difference = np.loadtxt(noisy / "mode1_train.csv", delimiter=",", skiprows=1) - np.loadtxt(
            quiet / "mode1_train.csv", delimiter=",", skiprows=1
        )
        # both runs scale the same normal draws
        assert difference.var() == pytest.approx((np.sqrt(0.001) - 0.001) ** 2, rel=0.15)

    def test_deterministic(self, tmp_path):
        """Same seed, same bytes."""
        first, second = tmp_path / "a", tmp_path / "b"

        main(["simulate", "--fault", "3", "--seed", "9", "--out", str(first)])
        main(["simulate", "--fault", "3", "--seed", "9", "--out", str(second)])

        for name in ("mode1_train.csv", "mode2_test.csv", "manifest.json"):
            assert (first / name).read_bytes() == (second / name).read_bytes()


@pytest.mark.cli
class TestTrainCommand:
    """Test cases for train."""

    def test_creates_archive(self, trained_archive):
        """A one-model archive is written."""
        archive = model_store.load_chain(trained_archive)

        assert len(archive.models) == 1
        assert archive.latest.n_components == 1

    def test_explicit_components(self, tmp_path, training_csvs):
        """--n-components skips CPV selection."""
        out = tmp_path / "two.json"

        assert main(["train", "--data", str(training_csvs[0]), "--out", str(out), "--n-components", "2"]) == 0
        assert model_store.load_chain(out).latest.n_components == 2

    def test_existing_archive(self, trained_archive, training_csvs):
        """Refuses to overwrite without --overwrite."""
        assert main(["train", "--data", str(training_csvs[0]), "--out", str(trained_archive)]) == 6
        assert main(["train", "--data", str(training_csvs[0]), "--out", str(trained_archive), "--overwrite"]) == 0

    def test_malformed_csv(self, tmp_path, capsys):
        """Bad rows exit 4 and name the line."""
        path = tmp_path / "bad.csv"
        path.write_text("x1,x2\n1,2\n3,four\n", encoding="utf-8")

        code = main(["train", "--data", str(path), "--out", str(tmp_path / "m.json")])

        assert code == 4
        assert "bad.csv:3" in capsys.readouterr().err

    def test_missing_csv(self, tmp_path):
        """Unreadable input exits 6."""
        assert main(["train", "--data", str(tmp_path / "absent.csv"), "--out", str(tmp_path / "m.json")]) == 6

    def test_invalid_config(self, tmp_path, training_csvs, capsys):
        """A negative lambda in the config file exits 3."""
        config = tmp_path / "bad.env"
        config.write_text("LAMBDA=-1\n", encoding="utf-8")

        code = main(["train", "--config", str(config), "--data", str(training_csvs[0]), "--out", str(tmp_path / "m.json")])

        assert code == 3
        assert "invalid configuration" in capsys.readouterr().err

    def test_constant_column(self, tmp_path, rng):
        """Zero-variance data exits 4."""
        X = correlated_data(rng)
        X[:, 2] = 1.0
        path = write_matrix(tmp_path / "flat.csv", X)

        assert main(["train", "--data", str(path), "--out", str(tmp_path / "m.json")]) == 4


@pytest.mark.cli
class TestUpdateCommand:
    """Test cases for update."""

    def test_extends_chain(self, tmp_path, trained_archive, training_csvs):
        """The output archive holds both modes."""
        out = tmp_path / "chain2.json"

        code = main([
            "update", "--model", str(trained_archive), "--data", str(training_csvs[1]),
            "--gamma", "1", "--eta", "0.5", "--out", str(out),
        ])

        assert code == 0
        archive = model_store.load_chain(out)
        assert [m.mode_index for m in archive.models] == [1, 2]
        assert archive.latest.gamma == 1.0 and archive.latest.eta == 0.5

    def test_in_place(self, trained_archive, training_csvs):
        """Writing back to the input archive is allowed."""
        code = main([
            "update", "--model", str(trained_archive), "--data", str(training_csvs[1]),
            "--out", str(trained_archive),
        ])

        assert code == 0
        assert len(model_store.load_chain(trained_archive).models) == 2

    def test_variance_scaling_follows_config(self, tmp_path, trained_archive, training_csvs):
        """Updates keep the chain's variances unless UPDATE_RESCALE_VARIANCE is set."""
        config = tmp_path / "rescale.env"
        config.write_text("UPDATE_RESCALE_VARIANCE=true\n", encoding="utf-8")
        shared, rescaled = tmp_path / "shared.json", tmp_path / "rescaled.json"
        base = ["update", "--model", str(trained_archive), "--data", str(training_csvs[1])]

        assert main([*base, "--out", str(shared)]) == 0
        assert main([*base, "--out", str(rescaled), "--config", str(config)]) == 0

        first = model_store.load_chain(trained_archive).latest
        samples = np.loadtxt(training_csvs[1], delimiter=",", skiprows=1)
        np.testing.assert_array_equal(model_store.load_chain(shared).latest.scaler.std, first.scaler.std)
        np.testing.assert_allclose(
            model_store.load_chain(rescaled).latest.scaler.std, samples.std(axis=0, ddof=1)
        )

    def test_forgetting_warning(self, tmp_path, trained_archive, training_csvs):
        """gamma 0 with eta 1 succeeds with a warning."""
        with capture_logs() as logs:
            code = main([
                "update", "--model", str(trained_archive), "--data", str(training_csvs[1]),
                "--gamma", "0", "--eta", "1", "--out", str(tmp_path / "forget.json"),
            ])

        assert code == 0
        assert any(e["event"] == "catastrophic_forgetting_configuration" for e in logs)

    def test_column_mismatch(self, tmp_path, trained_archive, rng):
        """Data with a different variable count exits 3."""
        wide = write_matrix(tmp_path / "wide.csv", rng.normal(size=(50, 4)))

        code = main(["update", "--model", str(trained_archive), "--data", str(wide), "--out", str(tmp_path / "x.json")])

        assert code == 3

    def test_corrupt_archive(self, tmp_path, training_csvs):
        """A truncated archive exits 4."""
        broken = tmp_path / "broken.json"
        broken.write_text('{"format_version": 1, "models": [', encoding="utf-8")

        code = main(["update", "--model", str(broken), "--data", str(training_csvs[1]), "--out", str(tmp_path / "x.json")])

        assert code == 4

    def test_eta_out_of_range(self, tmp_path, trained_archive, training_csvs):
        """eta above 1 exits 3."""
        code = main([
            "update", "--model", str(trained_archive), "--data", str(training_csvs[1]),
            "--eta", "1.5", "--out", str(tmp_path / "x.json"),
        ])

        assert code == 3


@pytest.mark.cli
class TestMonitorCommand:
    """Test cases for monitor."""

    def test_writes_statistics(self, tmp_path, trained_archive, training_csvs, capsys):
        """One statistics row per sample plus a score line."""
        out = tmp_path / "stats.csv"

        code = main([
            "monitor", "--model", str(trained_archive), "--data", str(training_csvs[0]),
            "--out", str(out), "--fault-start", "100",
        ])

        assert code == 0
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines[0] == ",".join(STATISTICS_HEADER)
        assert len(lines) == 201
        assert "FDR=" in capsys.readouterr().out

    def test_unknown_mode(self, tmp_path, trained_archive, training_csvs):
        """Asking for a mode the chain never saw exits 3."""
        code = main([
            "monitor", "--model", str(trained_archive), "--data", str(training_csvs[0]),
            "--mode", "2", "--out", str(tmp_path / "stats.csv"),
        ])

        assert code == 3

    def test_earlier_mode_after_update(self, tmp_path, trained_archive, training_csvs):
        """The latest model monitors an earlier mode with that mode's scaler."""
        chain = tmp_path / "chain2.json"
        main(["update", "--model", str(trained_archive), "--data", str(training_csvs[1]), "--out", str(chain)])

        code = main([
            "monitor", "--model", str(chain), "--data", str(training_csvs[0]),
            "--mode", "1", "--out", str(tmp_path / "stats.csv"),
        ])

        assert code == 0
