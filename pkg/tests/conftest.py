"""
Pytest configuration and fixtures.
"""

import sys
import os

import numpy as np
import pytest

# Add the parent directory to the path so we can import microstat
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from microstat.core.count_table import CountTable  # noqa: E402
from microstat.core.dataset import Dataset  # noqa: E402
from microstat.core.samples import SampleMetadata  # noqa: E402
from microstat.core.taxonomy import TaxonomyTable  # noqa: E402
from microstat.infrastructure.data.readers.files import parse_newick  # noqa: E402

COUNTS_TSV = (
    "taxon\tS1\tS2\tS3\tS4\tNC1\n"
    "OTU1\t120\t80\t300\t210\t2\n"
    "OTU2\t30\t0\t45\t12\t40\n"
    "OTU3\t0\t7\t3\t1\t0\n"
)

SAMPLES_TSV = (
    "specimen_id\tspecimen_type\tsubject_id\tbatch\tgroup\tsite\n"
    "S1\tbiological\tP1\t1\tcase\tleaf\n"
    "S2\tbiological\tP2\t1\tcase\troot\n"
    "S3\tbiological\tP3\t1\tcontrol\tleaf\n"
    "S4\tbiological\tP4\t1\tcontrol\troot\n"
    "NC1\tnegative_control\t\t1\t\t\n"
)

TAXONOMY_TSV = (
    "taxon_id\tKingdom\tPhylum\tGenus\n"
    "OTU1\tBacteria\tProteobacteria\tPseudomonas\n"
    "OTU2\tBacteria\tCyanobacteria\tChloroplast\n"
    "OTU3\tBacteria\tFirmicutes\tNA\n"
)

TREE_NWK = "((OTU1:0.1,OTU2:0.2):0.05,OTU3:0.3);"


def make_dataset(counts, groups=None, controls=(), tree=None, taxonomy=None, size_factors=None):
    """Wrap a count matrix into a Dataset with S1..SN specimens and T1..Tm taxa."""
    counts = np.asarray(counts)
    m, n = counts.shape
    specimens = [f"S{j + 1}" for j in range(n)]
    taxa = [f"T{i + 1}" for i in range(m)]
    groups = groups if groups is not None else [None] * n
    samples = tuple(
        SampleMetadata(
            specimen_id=s,
            specimen_type="negative_control" if j in controls else "biological",
            subject_id=s,
            group=g,
        )
        for j, (s, g) in enumerate(zip(specimens, groups))
    )
    return Dataset(
        counts=CountTable(taxa, specimens, counts),
        samples=samples,
        tree=tree,
        taxonomy=taxonomy,
        size_factors=size_factors,
    )


@pytest.fixture
def dataset_factory():
    return make_dataset


@pytest.fixture
def table_files(tmp_path):
    """Delimited counts, samples, taxonomy and tree files."""
    paths = {}
    for name, text in (
        ("counts.tsv", COUNTS_TSV),
        ("samples.tsv", SAMPLES_TSV),
        ("taxonomy.tsv", TAXONOMY_TSV),
        ("tree.nwk", TREE_NWK),
    ):
        path = tmp_path / name
        path.write_text(text)
        paths[name.split(".")[0]] = str(path)
    return paths


@pytest.fixture
def small_dataset():
    """Four biological specimens in two groups, one negative control, taxonomy and tree."""
    counts = CountTable(
        ["OTU1", "OTU2", "OTU3"],
        ["S1", "S2", "S3", "S4", "NC1"],
        np.array(
            [
                [120, 80, 300, 210, 2],
                [30, 0, 45, 12, 40],
                [0, 7, 3, 1, 0],
            ]
        ),
    )
    samples = (
        SampleMetadata("S1", "biological", "P1", 1, "case", extra={"site": "leaf"}),
        SampleMetadata("S2", "biological", "P2", 1, "case", extra={"site": "root"}),
        SampleMetadata("S3", "biological", "P3", 1, "control", extra={"site": "leaf"}),
        SampleMetadata("S4", "biological", "P4", 1, "control", extra={"site": "root"}),
        SampleMetadata("NC1", "negative_control", None, 1, None),
    )
    taxonomy = TaxonomyTable(
        ("OTU1", "OTU2", "OTU3"),
        (
            ("Bacteria", "Proteobacteria", "Pseudomonas"),
            ("Bacteria", "Cyanobacteria", "Chloroplast"),
            ("Bacteria", "Firmicutes", None),
        ),
        ("Kingdom", "Phylum", "Genus"),
    )
    return Dataset(counts, samples, taxonomy, parse_newick(TREE_NWK))


@pytest.fixture
def grouped_counts():
    """Twelve specimens in two groups with a clear abundance shift in T1."""
    rng = np.random.default_rng(11)
    base = np.array([200.0, 120.0, 80.0, 40.0, 20.0])
    columns = []
    for j in range(12):
        mu = base.copy()
        if j >= 6:
            mu[0] *= 8.0
        columns.append(rng.negative_binomial(5, 5 / (5 + mu)))
    return np.array(columns).T, ["a"] * 6 + ["b"] * 6
