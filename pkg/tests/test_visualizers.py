"""
Tests for OrdinationVisualizer and PpcVisualizer.
"""

import numpy as np
import pytest

from microstat.infrastructure.ordination import Ordination
from microstat.infrastructure.topics import PpcResult
from microstat.infrastructure.visualizers import OrdinationVisualizer, PpcVisualizer
from microstat.infrastructure.visualizers.base import pyplot


@pytest.fixture
def ordination():
    return Ordination(
        ids=("S1", "S2", "S3", "S4"),
        coordinates=np.array(
            [[1.0, 0.5, 0.1], [-1.0, 0.4, 0.0], [0.8, -0.6, 0.2], [-0.8, -0.3, 0.0]]
        ),
        eigenvalues=np.array([3.0, 1.0, 0.1]),
        variance_explained=np.array([0.6, 0.2, 0.02]),
        method="pcoa",
    )


@pytest.fixture
def ppc_result():
    rng = np.random.default_rng(0)
    return PpcResult(
        taxa_ids=("T1", "T2", "T3"),
        observed_max=np.array([40.0, 12.0, 5.0]),
        replicate_max=rng.poisson([20.0, 12.0, 5.0], size=(30, 3)).astype(float),
        tail_probability=np.array([0.0, 0.5, 0.6]),
        draw_indices=np.arange(30),
        seed=0,
    )


class TestOrdinationVisualizerInit:
    """Tests for OrdinationVisualizer initialization"""

    def test_rejects_non_ordination(self):
        """Test that a plain array raises TypeError."""
        with pytest.raises(TypeError, match="ordination must be an Ordination"):
            OrdinationVisualizer(np.zeros((3, 2)))

    def test_needs_two_axes(self):
        """Test that a one-axis ordination cannot be plotted."""
        single = Ordination(("S1", "S2"), [[1.0], [-1.0]], [2.0], [1.0], "pca")

        with pytest.raises(ValueError, match="need at least 2 axes"):
            OrdinationVisualizer(single)

    def test_label_count_must_match(self, ordination):
        """Test the label length check."""
        with pytest.raises(ValueError, match="3 labels for 4 specimens"):
            OrdinationVisualizer(ordination, ["a", "b", "a"])

    def test_missing_labels_become_na(self, ordination):
        """Test that None labels are drawn under NA."""
        visualizer = OrdinationVisualizer(ordination, ["a", None, "b", "a"], "group")

        assert visualizer._labels == ["a", "NA", "b", "a"]


class TestOrdinationFigure:
    """Tests for the ordination scatter plot"""

    def test_axis_labels_carry_variance_share(self, ordination):
        """Test the axis label text."""
        fig = OrdinationVisualizer(ordination).create_figure()
        ax = fig.axes[0]

        assert ax.get_xlabel() == "Axis1 [60.0%]"
        assert ax.get_ylabel() == "Axis2 [20.0%]"
        pyplot().close(fig)

    def test_legend_lists_sorted_levels(self, ordination):
        """Test one legend entry per label level."""
        fig = OrdinationVisualizer(ordination, ["b", "a", "b", "a"], "group").create_figure()
        legend = fig.axes[0].get_legend()

        assert [t.get_text() for t in legend.get_texts()] == ["a", "b"]
        assert legend.get_title().get_text() == "group"
        pyplot().close(fig)

    def test_svg_is_reproducible(self, ordination):
        """Test that two renderings are byte-identical."""
        visualizer = OrdinationVisualizer(ordination, ["b", "a", "b", "a"], "group")

        first = visualizer.to_svg(title="Bray-Curtis")
        second = visualizer.to_svg(title="Bray-Curtis")

        assert first.startswith("<?xml")
        assert first == second

    def test_save_writes_file(self, ordination, tmp_path):
        """Test that save writes the SVG."""
        path = tmp_path / "coords.svg"

        OrdinationVisualizer(ordination).save(str(path))

        assert "<svg" in path.read_text()


class TestPpcVisualizer:
    """Tests for PpcVisualizer"""

    def test_rejects_non_result(self):
        """Test the result type check."""
        with pytest.raises(TypeError, match="result must be a PpcResult"):
            PpcVisualizer({"T1": 0.5})

    def test_default_panels_follow_tail_probability(self, ppc_result):
        """Test that the lowest tail probabilities come first."""
        visualizer = PpcVisualizer(ppc_result)

        assert visualizer._indices == [0, 1, 2]

    def test_selected_taxa(self, ppc_result):
        """Test an explicit taxon selection."""
        fig = PpcVisualizer(ppc_result, taxa=["T3"]).create_figure()

        visible = [ax for ax in fig.axes if ax.get_visible()]
        assert len(visible) == 1
        assert visible[0].get_title() == "T3 (p=0.600)"
        pyplot().close(fig)

    def test_unknown_taxon_raises(self, ppc_result):
        """Test that requested taxa must exist."""
        with pytest.raises(ValueError, match="unknown taxa: T9"):
            PpcVisualizer(ppc_result, taxa=["T1", "T9"])

    def test_empty_selection_raises(self, ppc_result):
        """Test that at least one taxon is drawn."""
        with pytest.raises(ValueError, match="no taxa to plot"):
            PpcVisualizer(ppc_result, taxa=[])

    def test_svg_is_reproducible(self, ppc_result):
        """Test that two renderings are byte-identical."""
        visualizer = PpcVisualizer(ppc_result)

        assert visualizer.to_svg() == visualizer.to_svg()
