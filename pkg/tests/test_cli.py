"""
End-to-end tests for the microstat command line.
"""

import json

import pytest

from microstat import __version__
from microstat.cli import EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, run

CONSTANT_COUNTS_TSV = "taxon\tS1\tS2\tS3\nOTU1\t10\t10\t10\nOTU2\t5\t5\t5\n"
CONSTANT_SAMPLES_TSV = (
    "specimen_id\tspecimen_type\tsubject_id\tbatch\tgroup\n"
    "S1\tbiological\tP1\t1\ta\n"
    "S2\tbiological\tP2\t1\ta\n"
    "S3\tbiological\tP3\t1\tb\n"
)
TWO_COUNTS_TSV = "taxon\tS1\tS2\nOTU1\t10\t4\nOTU2\t5\t9\n"
TWO_SAMPLES_TSV = (
    "specimen_id\tspecimen_type\tsubject_id\tbatch\tgroup\n"
    "S1\tbiological\tP1\t1\ta\n"
    "S2\tbiological\tP2\t1\tb\n"
)


def _ingest(tmp_path, name, counts, samples):
    (tmp_path / f"{name}_c.tsv").write_text(counts)
    (tmp_path / f"{name}_s.tsv").write_text(samples)
    data = str(tmp_path / f"{name}.json")
    code = run(
        [
            "ingest",
            "--counts", str(tmp_path / f"{name}_c.tsv"),
            "--samples", str(tmp_path / f"{name}_s.tsv"),
            "--out", data,
        ]
    )
    assert code == EXIT_OK
    return data


@pytest.fixture
def singleton_json(tmp_path):
    """Three specimens where group 'b' holds one."""
    return _ingest(tmp_path, "const", CONSTANT_COUNTS_TSV, CONSTANT_SAMPLES_TSV)


@pytest.fixture
def dataset_json(table_files, tmp_path):
    out = tmp_path / "dataset.json"
    code = run(
        [
            "ingest",
            "--counts", table_files["counts"],
            "--samples", table_files["samples"],
            "--taxonomy", table_files["taxonomy"],
            "--tree", table_files["tree"],
            "--out", str(out),
        ]
    )
    assert code == EXIT_OK
    return str(out)


class TestGlobalOptions:
    """Tests for options shared by every subcommand"""

    def test_version(self, capsys):
        """Test that --version prints the tool version."""
        assert run(["--version"]) == EXIT_OK
        assert capsys.readouterr().out.strip() == f"microstat {__version__}"

    def test_missing_subcommand_is_usage_error(self, capsys):
        """Test that no subcommand exits with 1."""
        assert run([]) == EXIT_USAGE
        assert "microstat: error:" in capsys.readouterr().err

    def test_unknown_option_is_usage_error(self, dataset_json):
        """Test that argparse errors map to exit code 1."""
        assert run(["gof", "--data", dataset_json, "--out", "x.csv", "--bogus"]) == EXIT_USAGE


class TestIngest:
    """Tests for the ingest subcommand"""

    def test_writes_dataset_and_manifest(self, dataset_json, table_files):
        """Test the dataset file and its manifest."""
        payload = json.loads(open(dataset_json).read())
        record = json.loads(open(dataset_json + ".manifest.json").read())

        assert payload["counts"]["taxa_ids"] == ["OTU1", "OTU2", "OTU3"]
        assert record["subcommand"] == "ingest"
        assert len(record["inputs"]) == 4
        assert record["seed"] is None

    def test_missing_input_is_data_error(self, tmp_path, capsys):
        """Test that a missing counts file exits with 2."""
        code = run(
            [
                "ingest",
                "--counts", str(tmp_path / "nope.tsv"),
                "--samples", str(tmp_path / "nope2.tsv"),
                "--out", str(tmp_path / "d.json"),
            ]
        )

        assert code == EXIT_DATA
        assert "not found" in capsys.readouterr().err


class TestOrdinate:
    """Tests for the ordinate subcommand"""

    def test_pcoa_with_svg(self, dataset_json, tmp_path):
        """Test coordinates, axes table, plot and manifests."""
        out = tmp_path / "coords.csv"
        svg = tmp_path / "coords.svg"

        code = run(
            [
                "ordinate",
                "--data", dataset_json,
                "--metric", "bray",
                "--svg", str(svg),
                "--axes-out", str(tmp_path / "axes.csv"),
                "--out", str(out),
            ]
        )

        assert code == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == "specimen_id,Axis1,Axis2"
        assert [row.split(",")[0] for row in lines[1:]] == ["S1", "S2", "S3", "S4"]
        assert svg.read_text().startswith("<?xml")
        assert (tmp_path / "coords.svg.manifest.json").exists()
        assert (tmp_path / "axes.csv.manifest.json").exists()

    def test_ca_rejects_transforms(self, dataset_json, tmp_path):
        """Test that correspondence analysis only takes raw counts."""
        code = run(
            [
                "ordinate",
                "--data", dataset_json,
                "--method", "ca",
                "--transform", "presence",
                "--out", str(tmp_path / "ca.csv"),
            ]
        )

        assert code == EXIT_USAGE

    def test_constant_table_is_numerical_error(self, singleton_json, tmp_path):
        """Test that PCA on identical specimens exits with 3."""
        out = str(tmp_path / "p.csv")
        code = run(["ordinate", "--data", singleton_json, "--method", "pca", "--out", out])

        assert code == EXIT_NUMERICAL

    def test_two_specimens_is_data_error(self, tmp_path, capsys):
        """Test that PCoA on fewer than three specimens exits with 2."""
        data = _ingest(tmp_path, "two", TWO_COUNTS_TSV, TWO_SAMPLES_TSV)

        code = run(["ordinate", "--data", data, "--out", str(tmp_path / "o.csv")])

        assert code == EXIT_DATA
        assert "at least 3 specimens" in capsys.readouterr().err

    def test_missing_dataset_is_data_error(self, tmp_path):
        """Test that a missing dataset exits with 2."""
        code = run(
            ["ordinate", "--data", str(tmp_path / "none.json"), "--out", str(tmp_path / "o.csv")]
        )

        assert code == EXIT_DATA


class TestHypothesisCommand:
    """Tests for the test subcommand"""

    def test_permanova_to_stdout(self, dataset_json, capsys):
        """Test that the result row goes to stdout without --out."""
        code = run(["test", "--data", dataset_json, "--group", "group", "--nperm", "99"])

        assert code == EXIT_OK
        out = capsys.readouterr().out.splitlines()
        assert len(out) == 2
        assert "pseudo_F" in out[1]

    def test_group_required(self, dataset_json):
        """Test that PERMANOVA needs a grouping column."""
        assert run(["test", "--data", dataset_json]) == EXIT_USAGE

    def test_unknown_column_is_data_error(self, dataset_json):
        """Test that a missing metadata column exits with 2."""
        code = run(["test", "--data", dataset_json, "--group", "treatment", "--nperm", "9"])

        assert code == EXIT_DATA

    def test_singleton_group_is_data_error(self, singleton_json, capsys):
        """Test that PERMANOVA with a one-specimen group exits with 2."""
        code = run(["test", "--data", singleton_json, "--group", "group", "--nperm", "9"])

        assert code == EXIT_DATA
        assert "fewer than 2 specimens: b" in capsys.readouterr().err

    def test_network_components(self, dataset_json, tmp_path):
        """Test the network edges and components files."""
        edges = tmp_path / "edges.csv"
        components = tmp_path / "components.csv"

        code = run(
            [
                "test",
                "--data", dataset_json,
                "--method", "network",
                "--max-d", "1.0",
                "--components-out", str(components),
                "--out", str(edges),
            ]
        )

        assert code == EXIT_OK
        assert len(components.read_text().splitlines()) == 5


class TestDiffCommand:
    """Tests for the diff subcommand"""

    def test_singleton_group_is_data_error(self, singleton_json, tmp_path, capsys):
        """Test that a one-specimen group in the design exits with 2."""
        out = str(tmp_path / "d.csv")
        code = run(["diff", "--data", singleton_json, "--group", "group", "--out", out])

        assert code == EXIT_DATA
        assert "group 'b' has 1 specimen(s)" in capsys.readouterr().err

    def test_unlabelled_specimen_is_data_error(self, tmp_path, capsys):
        """Test that a biological specimen without a group label exits with 2."""
        samples = CONSTANT_SAMPLES_TSV.replace("\t1\tb\n", "\t1\t\n")
        data = _ingest(tmp_path, "unlabelled", CONSTANT_COUNTS_TSV, samples)

        code = run(["diff", "--data", data, "--group", "group", "--out", str(tmp_path / "d.csv")])

        assert code == EXIT_DATA
        assert "needs a group label" in capsys.readouterr().err


class TestPipelineCommand:
    """Tests for the pipeline subcommand"""

    def test_runs_stages(self, table_files, tmp_path):
        """Test a two-stage pipeline end to end."""
        config = tmp_path / "pipeline.toml"
        config.write_text(
            "[[stage]]\n"
            'command = "ingest"\n'
            f'counts = "{table_files["counts"]}"\n'
            f'samples = "{table_files["samples"]}"\n'
            "\n[[stage]]\n"
            'command = "ordinate"\n'
            'data = "@previous"\n'
        )

        code = run(["pipeline", "--config", str(config)])

        assert code == EXIT_OK
        assert (tmp_path / "run" / "01_ingest.json").exists()
        assert (tmp_path / "run" / "02_ordinate.csv.manifest.json").exists()

    def test_failed_stage_propagates_exit_code(self, tmp_path):
        """Test that the first failing stage sets the exit code."""
        config = tmp_path / "pipeline.toml"
        config.write_text('[[stage]]\ncommand = "ordinate"\ndata = "missing.json"\n')

        assert run(["pipeline", "--config", str(config)]) == EXIT_DATA

    def test_unknown_reference_is_data_error(self, tmp_path):
        """Test that a dangling @name reference exits with 2."""
        config = tmp_path / "pipeline.toml"
        config.write_text('[[stage]]\ncommand = "gof"\ndata = "@ingest"\n')

        assert run(["pipeline", "--config", str(config)]) == EXIT_DATA
