"""
Ordination scatter plot.
"""

from typing import Any, Optional, Sequence

import numpy as np

from microstat.infrastructure.ordination.base import Ordination
from .base import figure_to_svg, pyplot, write_svg

PALETTE = ["#2E86AB", "#E4572E", "#76B041", "#FFC914", "#7D5BA6", "#17BEBB", "#8C564B"]
MISSING_LABEL = "NA"


class OrdinationVisualizer:
    """
    Scatter of the first two ordination axes, coloured by a metadata column.

    Axis labels carry the share of variance explained and the plot keeps an
    equal aspect ratio, so axis lengths follow the eigenvalues.

    Args:
        ordination: Ordination with at least two axes
        labels: Optional label per specimen (e.g. a metadata column)
        label_name: Legend title for the labels

    Raises:
        TypeError: If ordination is not an Ordination
        ValueError: If there are fewer than two axes or labels do not match
    """

    def __init__(
        self,
        ordination: Ordination,
        labels: Optional[Sequence[Optional[str]]] = None,
        label_name: Optional[str] = None,
    ) -> None:
        if not isinstance(ordination, Ordination):
            raise TypeError(
                f"ordination must be an Ordination instance, got {type(ordination).__name__}"
            )
        if ordination.n_axes < 2:
            raise ValueError(f"need at least 2 axes to plot, got {ordination.n_axes}")
        if labels is not None and len(labels) != len(ordination.ids):
            raise ValueError(f"{len(labels)} labels for {len(ordination.ids)} specimens")

        self._ordination: Ordination = ordination
        self._labels: Optional[list[str]] = None
        if labels is not None:
            self._labels = [MISSING_LABEL if v is None else str(v) for v in labels]
        self._label_name: Optional[str] = label_name

    def _axis_label(self, axis: int) -> str:
        share = self._ordination.variance_explained[axis]
        return f"{self._ordination.axis_names()[axis]} [{share * 100:.1f}%]"

    def create_figure(self, title: Optional[str] = None) -> Any:
        """
        Build the scatter plot.

        Returns:
            matplotlib.figure.Figure: The figure object
        """
        plt = pyplot()
        fig, ax = plt.subplots(figsize=(6, 6))
        xy = self._ordination.coordinates[:, :2]

        if self._labels is None:
            ax.scatter(xy[:, 0], xy[:, 1], s=30, color=PALETTE[0], alpha=0.8)
        else:
            levels = sorted(set(self._labels))
            labels = np.asarray(self._labels)
            for index, level in enumerate(levels):
                mask = labels == level
                ax.scatter(
                    xy[mask, 0],
                    xy[mask, 1],
                    s=30,
                    color=PALETTE[index % len(PALETTE)],
                    alpha=0.8,
                    label=level,
                )
            ax.legend(title=self._label_name, fontsize=8, frameon=False)

        ax.set_xlabel(self._axis_label(0))
        ax.set_ylabel(self._axis_label(1))
        ax.set_aspect("equal", adjustable="datalim")
        ax.axhline(0, color="#999999", linewidth=0.5)
        ax.axvline(0, color="#999999", linewidth=0.5)
        ax.grid(True, alpha=0.3)
        if title:
            ax.set_title(title, fontsize=12, fontweight="bold")
        fig.tight_layout()
        return fig

    def to_svg(self, title: Optional[str] = None) -> str:
        return figure_to_svg(self.create_figure(title))

    def save(self, path: str, title: Optional[str] = None) -> None:
        write_svg(path, self.to_svg(title))
