"""
Tests for dataset readers, writers and the delimited/Newick parsers.
"""

import json

import numpy as np
import pandas as pd
import pytest

from microstat.infrastructure.data.readers import DelimitedDatasetReader, JsonDatasetReader
from microstat.infrastructure.data.readers.files import (
    parse_count_table,
    parse_newick,
    parse_sample_metadata,
    parse_taxonomy,
)
from microstat.infrastructure.data.writers import CsvTableWriter, JsonDatasetWriter
from microstat.shared.errors import DataValidationError, ParseError


class TestParseCountTable:
    """Tests for parse_count_table"""

    def test_parses_ids_and_counts(self):
        """Test a well-formed table."""
        table = parse_count_table("OTU\tA\tB\nx\t1\t2\ny\t0\t5\n")

        assert table.taxa_ids == ("x", "y")
        assert table.specimen_ids == ("A", "B")
        assert table.counts.tolist() == [[1, 2], [0, 5]]

    def test_comma_delimiter(self):
        """Test CSV input."""
        table = parse_count_table("OTU,A\nx,3\n", delimiter=",")

        assert table.counts.tolist() == [[3]]

    def test_negative_count_reports_location(self):
        """Test that a negative count carries line and column."""
        with pytest.raises(ParseError) as excinfo:
            parse_count_table("OTU\tA\tB\nx\t1\t2\ny\t-4\t5\n", source="counts.tsv")

        assert excinfo.value.line == 3
        assert excinfo.value.column == 2
        assert "counts.tsv, line 3, column 2" in str(excinfo.value)

    def test_non_integer_cell_raises(self):
        """Test that decimals are rejected with their position."""
        with pytest.raises(ParseError, match="invalid count '1.5'") as excinfo:
            parse_count_table("OTU\tA\nx\t1.5\n")

        assert (excinfo.value.line, excinfo.value.column) == (2, 2)

    def test_ragged_row_raises(self):
        """Test that a row with a missing field is reported."""
        with pytest.raises(ParseError, match="ragged row") as excinfo:
            parse_count_table("OTU\tA\tB\nx\t1\t2\ny\t3\n")

        assert excinfo.value.line == 3

    def test_duplicate_taxon_raises(self):
        """Test that duplicate taxon ids point at the second occurrence."""
        with pytest.raises(ParseError, match="duplicate taxon id 'x'") as excinfo:
            parse_count_table("OTU\tA\nx\t1\nx\t2\n")

        assert excinfo.value.line == 3

    def test_empty_input_raises(self):
        """Test that empty text is a parse error."""
        with pytest.raises(ParseError, match="empty"):
            parse_count_table("")


class TestParseSampleMetadata:
    """Tests for parse_sample_metadata"""

    def test_extra_columns_kept(self):
        """Test that unknown columns become extras."""
        samples = parse_sample_metadata(
            "specimen_id\tspecimen_type\tsite\nA\tbiological\tleaf\nB\tcontrol\troot\n"
        )

        assert samples[0].get("site") == "leaf"
        assert samples[1].is_control

    def test_missing_required_column_raises(self):
        """Test that specimen_type is required."""
        with pytest.raises(ParseError, match="missing required column 'specimen_type'"):
            parse_sample_metadata("specimen_id\tgroup\nA\tx\n")

    def test_invalid_batch_raises(self):
        """Test that a non-integer batch is located."""
        with pytest.raises(ParseError, match="batch must be an integer") as excinfo:
            parse_sample_metadata("specimen_id\tspecimen_type\tbatch\nA\tbiological\tone\n")

        assert (excinfo.value.line, excinfo.value.column) == (2, 3)

    def test_short_row_raises(self):
        """Test that a row missing trailing fields is reported."""
        with pytest.raises(ParseError, match="expected 3 fields, found 2") as excinfo:
            parse_sample_metadata(
                "specimen_id\tspecimen_type\tgroup\nA\tbiological\ta\nB\tbiological\n"
            )

        assert (excinfo.value.line, excinfo.value.column) == (3, 3)


class TestParseTaxonomy:
    """Tests for parse_taxonomy"""

    def test_placeholders_are_unassigned(self):
        """Test that NA and empty cells become None."""
        taxonomy = parse_taxonomy("taxon_id\tkingdom\tgenus\nx\tBacteria\tNA\ny\tBacteria\t\n")

        assert taxonomy.ranks == ("Kingdom", "Genus")
        assert taxonomy.rank_of("x", "Genus") is None
        assert taxonomy.rank_of("y", "Kingdom") == "Bacteria"

    def test_first_column_must_be_taxon_id(self):
        """Test the header check."""
        with pytest.raises(ParseError, match="first column must be 'taxon_id'"):
            parse_taxonomy("otu\tKingdom\nx\tBacteria\n")

    def test_short_row_raises(self):
        """Test that a taxon with fewer ranks than the header is rejected."""
        with pytest.raises(ParseError, match="ragged row") as excinfo:
            parse_taxonomy("taxon_id\tKingdom\tPhylum\nA\tBacteria\tFirmicutes\nB\tBacteria\n")

        assert excinfo.value.line == 3


class TestParseNewick:
    """Tests for parse_newick"""

    def test_lengths_and_labels(self):
        """Test a simple tree with comments and quoted labels."""
        tree = parse_newick("((A:1,'B c':2)[internal]:0.5,C:3);")

        assert sorted(tree.leaf_labels()) == ["A", "B c", "C"]
        assert tree.path_length("A", "C") == pytest.approx(4.5)

    def test_missing_length_defaults_to_zero(self):
        """Test that unlabeled branch lengths are zero."""
        tree = parse_newick("(A,B:1);")

        assert tree.path_length("A", "B") == pytest.approx(1.0)

    def test_unbalanced_parentheses_raise(self):
        """Test that a missing ')' is reported."""
        with pytest.raises(ParseError, match="unbalanced parentheses"):
            parse_newick("((A:1,B:2);")

    def test_invalid_length_raises(self):
        """Test that a malformed branch length is located."""
        with pytest.raises(ParseError, match="invalid branch length 'x1'") as excinfo:
            parse_newick("(A:x1,B:2);")

        assert excinfo.value.column == 4

    def test_trailing_text_raises(self):
        """Test that text after ';' is rejected."""
        with pytest.raises(ParseError, match="after ';'"):
            parse_newick("(A:1,B:2); extra")


class TestDelimitedDatasetReader:
    """Tests for DelimitedDatasetReader"""

    def test_loads_all_components(self, table_files):
        """Test loading counts, samples, taxonomy and tree."""
        reader = DelimitedDatasetReader(
            table_files["counts"],
            table_files["samples"],
            table_files["taxonomy"],
            table_files["tree"],
        )

        dataset = reader.load()

        assert dataset.specimen_ids == ("S1", "S2", "S3", "S4", "NC1")
        assert dataset.controls().specimen_ids == ("NC1",)
        assert dataset.taxonomy.rank_of("OTU2", "Genus") == "Chloroplast"
        assert dataset.tree is not None

    def test_missing_file_raises(self, tmp_path, table_files):
        """Test that a missing path fails at construction."""
        with pytest.raises(FileNotFoundError, match="counts file not found"):
            DelimitedDatasetReader(str(tmp_path / "nope.tsv"), table_files["samples"])

    def test_inconsistent_files_raise(self, tmp_path, table_files):
        """Test that metadata naming an unknown specimen fails validation."""
        samples = tmp_path / "bad_samples.tsv"
        samples.write_text(
            open(table_files["samples"]).read() + "S9\tbiological\tP9\t1\tcase\tleaf\n"
        )
        reader = DelimitedDatasetReader(table_files["counts"], str(samples))

        with pytest.raises(DataValidationError, match="unknown_specimen"):
            reader.load()

    def test_after_transformers_applied(self, table_files):
        """Test that 'after' transformers run on the loaded dataset."""
        reader = DelimitedDatasetReader(
            table_files["counts"],
            table_files["samples"],
            transformers={"after": [lambda d: d.biological()]},
        )

        assert reader.load().specimen_ids == ("S1", "S2", "S3", "S4")

    def test_invalid_delimiter_raises(self, table_files):
        """Test that only tab, comma and semicolon are accepted."""
        with pytest.raises(ValueError, match="Invalid delimiter"):
            DelimitedDatasetReader(table_files["counts"], table_files["samples"], delimiter="|")


class TestJsonDataset:
    """Tests for the JSON dataset writer and reader"""

    def test_write_then_read_is_identical(self, tmp_path, small_dataset):
        """Test that a dataset with size factors survives a write/read cycle."""
        dataset = small_dataset.with_size_factors([0.1, 1 / 3, 2.5, 1.0, 0.7])
        path = tmp_path / "dataset.json"

        JsonDatasetWriter(str(path)).write(dataset)
        loaded = JsonDatasetReader(str(path)).load()

        assert loaded == dataset
        assert loaded.size_factors[1] == 1 / 3

    def test_output_is_deterministic(self, tmp_path, small_dataset):
        """Test that writing twice gives identical bytes."""
        a, b = tmp_path / "a.json", tmp_path / "b.json"

        JsonDatasetWriter(str(a)).write(small_dataset)
        JsonDatasetWriter(str(b)).write(small_dataset)

        assert a.read_bytes() == b.read_bytes()

    def test_wrong_format_raises(self, tmp_path):
        """Test that foreign JSON is rejected."""
        path = tmp_path / "other.json"
        path.write_text(json.dumps({"format": "something-else"}))

        with pytest.raises(ParseError, match="not a microstat-dataset document"):
            JsonDatasetReader(str(path)).load()

    def test_invalid_json_reports_line(self, tmp_path):
        """Test that a JSON syntax error carries its position."""
        path = tmp_path / "broken.json"
        path.write_text('{\n  "format": \n}')

        with pytest.raises(ParseError) as excinfo:
            JsonDatasetReader(str(path)).load()

        assert excinfo.value.line == 3

    def test_writer_requires_dataset(self, tmp_path):
        """Test the writer type check."""
        with pytest.raises(TypeError, match="Expected Dataset"):
            JsonDatasetWriter(str(tmp_path / "x.json")).write({"a": 1})

    def test_writer_requires_existing_directory(self, tmp_path):
        """Test that the parent directory must exist."""
        with pytest.raises(FileNotFoundError, match="Parent directory does not exist"):
            JsonDatasetWriter(str(tmp_path / "missing" / "x.json"))


class TestCsvTableWriter:
    """Tests for CsvTableWriter"""

    def test_fixed_float_format_and_na(self, tmp_path):
        """Test the float format and NA representation."""
        path = tmp_path / "out.csv"

        CsvTableWriter(str(path)).write(pd.DataFrame({"a": [1 / 3, np.nan], "b": ["x", "y"]}))

        assert path.read_text() == "a,b\n0.3333333333,x\nNA,y\n"

    def test_before_transformers_applied(self, tmp_path):
        """Test that 'before' transformers run before writing."""
        path = tmp_path / "out.csv"
        writer = CsvTableWriter(str(path), transformers={"before": [lambda df: df.head(1)]})

        writer.write(pd.DataFrame({"a": [1, 2, 3]}))

        assert path.read_text() == "a\n1\n"
