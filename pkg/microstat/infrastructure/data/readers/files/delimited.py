"""
Delimited-text parsers for count tables, sample metadata and taxonomy.

All three formats are UTF-8 text with a mandatory header row. Cells are read
as strings through pandas and converted here so every problem can be
reported with its 1-based line and column.
"""

import csv
import io
import re
from typing import Optional, TextIO, Union

import numpy as np
import pandas as pd

from microstat.core.count_table import CountTable
from microstat.core.samples import SampleMetadata, SpecimenType
from microstat.core.taxonomy import TaxonomyTable
from microstat.shared.errors import ParseError

TextSource = Union[str, TextIO]

_INTEGER = re.compile(r"^[+-]?\d+$")
_UNASSIGNED = {"", "na", "nan", "none", "unassigned", "null"}

SAMPLE_COLUMNS = ("specimen_id", "specimen_type", "subject_id", "batch", "group", "pair_id")


def _check_field_counts(content: str, delimiter: str, source: Optional[str]) -> None:
    """Raise on the first non-blank line whose field count differs from the header's."""
    expected = None
    for number, line in enumerate(content.splitlines(), start=1):
        fields = line.split(delimiter)
        if all(f.strip() == "" for f in fields):
            continue
        if expected is None:
            expected = len(fields)
        elif len(fields) != expected:
            found = len(fields)
            raise ParseError(
                f"ragged row: expected {expected} fields, found {found}",
                line=number,
                column=min(found, expected) + 1,
                source=source,
            )


def _read_cells(text: TextSource, delimiter: str, source: Optional[str]) -> pd.DataFrame:
    """
    Read every cell as a string, keeping file line numbers as the index.

    Fully blank lines are dropped; rows with too few or too many fields are
    reported as ragged.
    """
    if len(delimiter) != 1:
        raise ValueError(f"delimiter must be a single character, got {delimiter!r}")
    content = text if isinstance(text, str) else text.read()
    _check_field_counts(content, delimiter, source)

    try:
        cells = pd.read_csv(
            io.StringIO(content),
            sep=delimiter,
            header=None,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=False,
            quoting=csv.QUOTE_NONE,
            engine="c",
        )
    except pd.errors.EmptyDataError:
        raise ParseError("input is empty", source=source) from None
    except pd.errors.ParserError as e:
        raise ParseError(f"could not parse delimited text: {e}", source=source) from None

    cells.index = np.arange(1, len(cells) + 1)
    blank = cells.apply(lambda row: all(pd.isna(v) or v == "" for v in row), axis=1)
    cells = cells.loc[~blank]
    if cells.empty:
        raise ParseError("input is empty", source=source)
    return cells.apply(lambda column: column.str.strip())


def _check_unique(
    values: list[str],
    lines: list[int],
    columns: list[int],
    what: str,
    source: Optional[str],
) -> None:
    seen: dict[str, int] = {}
    for value, line, column in zip(values, lines, columns):
        if value == "":
            raise ParseError(f"empty {what} id", line=line, column=column, source=source)
        if value in seen:
            raise ParseError(
                f"duplicate {what} id '{value}' (first seen on line {seen[value]})",
                line=line,
                column=column,
                source=source,
            )
        seen[value] = line


def parse_count_table(
    text: TextSource, delimiter: str = "\t", source: Optional[str] = None
) -> CountTable:
    """
    Parse a taxa x specimen count table.

    The first row holds specimen ids (its first cell is a free-form corner
    label), the first column holds taxon ids and the body holds
    non-negative integers.

    Args:
        text: Table text or an open text stream
        delimiter: Field separator (tab by default, ',' for CSV)
        source: Optional file name used in error messages

    Returns:
        CountTable: Identifiers and counts exactly as written

    Raises:
        ParseError: On malformed or negative cells, ragged rows and
            duplicate identifiers, each with line and column
    """
    cells = _read_cells(text, delimiter, source)
    if cells.shape[0] < 2 or cells.shape[1] < 2:
        raise ParseError(
            "count table needs a header row, a taxon id column and at least one count",
            source=source,
        )

    header_line = int(cells.index[0])
    header = cells.iloc[0].tolist()
    body = cells.iloc[1:]
    specimen_ids = header[1:]
    taxa_ids = body.iloc[:, 0].tolist()
    body_lines = [int(i) for i in body.index]

    for column, specimen in enumerate(specimen_ids, start=2):
        if specimen == "":
            raise ParseError("empty specimen id", line=header_line, column=column, source=source)
    _check_unique(
        specimen_ids,
        [header_line] * len(specimen_ids),
        list(range(2, len(specimen_ids) + 2)),
        "specimen",
        source,
    )
    _check_unique(taxa_ids, body_lines, [1] * len(taxa_ids), "taxon", source)

    raw = body.iloc[:, 1:].to_numpy()
    is_integer = np.vectorize(lambda cell: bool(_INTEGER.match(cell)), otypes=[bool])(raw)
    if not is_integer.all():
        r, c = np.argwhere(~is_integer)[0]
        raise ParseError(
            f"invalid count '{raw[r, c]}' for taxon '{taxa_ids[r]}' "
            f"in specimen '{specimen_ids[c]}': expected a non-negative integer",
            line=body_lines[r],
            column=c + 2,
            source=source,
        )

    counts = raw.astype(np.int64)
    if (counts < 0).any():
        r, c = np.argwhere(counts < 0)[0]
        raise ParseError(
            f"negative count {counts[r, c]} for taxon '{taxa_ids[r]}' "
            f"in specimen '{specimen_ids[c]}'",
            line=body_lines[r],
            column=c + 2,
            source=source,
        )

    return CountTable(taxa_ids, specimen_ids, counts)


def parse_sample_metadata(
    text: TextSource, delimiter: str = "\t", source: Optional[str] = None
) -> tuple[SampleMetadata, ...]:
    """
    Parse per-specimen metadata.

    Required columns: specimen_id, specimen_type. Optional: subject_id,
    batch, group, pair_id. Any further columns are kept as extras.

    Raises:
        ParseError: On missing required columns, duplicate specimen ids or
            invalid values
    """
    cells = _read_cells(text, delimiter, source)
    header_line = int(cells.index[0])
    header = [
        name.lower() if name.lower() in SAMPLE_COLUMNS else name for name in cells.iloc[0]
    ]

    for required in ("specimen_id", "specimen_type"):
        if required not in header:
            raise ParseError(
                f"missing required column '{required}'. Available: {header}",
                line=header_line,
                source=source,
            )
    duplicated = [name for name in set(header) if header.count(name) > 1]
    if duplicated:
        raise ParseError(
            f"duplicate column(s): {sorted(duplicated)}", line=header_line, source=source
        )

    body = cells.iloc[1:]
    id_column = header.index("specimen_id")
    _check_unique(
        body.iloc[:, id_column].tolist(),
        [int(i) for i in body.index],
        [id_column + 1] * len(body),
        "specimen",
        source,
    )

    type_column = header.index("specimen_type") + 1
    batch_column = header.index("batch") + 1 if "batch" in header else None

    samples = []
    for line, row in body.iterrows():
        record = dict(zip(header, row.tolist()))
        try:
            SpecimenType.parse(record["specimen_type"])
        except ValueError as e:
            raise ParseError(str(e), line=int(line), column=type_column, source=source) from None
        batch = record.get("batch", "")
        if batch and not _INTEGER.match(batch):
            raise ParseError(
                f"batch must be an integer, got '{batch}'",
                line=int(line),
                column=batch_column,
                source=source,
            )
        samples.append(SampleMetadata.from_record(record))

    if not samples:
        raise ParseError("sample metadata has no rows", source=source)
    return tuple(samples)


def parse_taxonomy(
    text: TextSource, delimiter: str = "\t", source: Optional[str] = None
) -> TaxonomyTable:
    """
    Parse a taxonomy table: taxon_id followed by one column per rank.

    Empty cells and the usual placeholders (NA, none, unassigned) become
    unassigned ranks.

    Raises:
        ParseError: On a missing taxon_id column or duplicate taxon ids
    """
    cells = _read_cells(text, delimiter, source)
    header_line = int(cells.index[0])
    header = cells.iloc[0].tolist()
    if header[0].lower() != "taxon_id":
        raise ParseError(
            f"first column must be 'taxon_id', got '{header[0]}'",
            line=header_line,
            column=1,
            source=source,
        )
    ranks = tuple(name.strip().capitalize() for name in header[1:])
    if not ranks:
        raise ParseError("taxonomy has no rank columns", line=header_line, source=source)

    body = cells.iloc[1:]
    taxon_ids = body.iloc[:, 0].tolist()
    lines = [int(i) for i in body.index]
    _check_unique(taxon_ids, lines, [1] * len(taxon_ids), "taxon", source)

    assignments = [
        tuple(None if value.lower() in _UNASSIGNED else value for value in row[1:])
        for row in body.itertuples(index=False)
    ]
    return TaxonomyTable(tuple(taxon_ids), tuple(assignments), ranks)
