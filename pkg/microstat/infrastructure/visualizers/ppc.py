"""
Posterior predictive check histograms.
"""

from typing import Any, Optional, Sequence

import numpy as np

from microstat.infrastructure.topics.ppc import PpcResult
from .base import figure_to_svg, pyplot, write_svg

MAX_PANELS = 12


class PpcVisualizer:
    """
    Histograms of replicated per-taxon maxima with the observed maximum marked.

    Args:
        result: Posterior predictive check result
        taxa: Taxa to draw (default: the lowest tail probabilities, up to 12)

    Raises:
        TypeError: If result is not a PpcResult
        ValueError: If a requested taxon is unknown
    """

    def __init__(self, result: PpcResult, taxa: Optional[Sequence[str]] = None) -> None:
        if not isinstance(result, PpcResult):
            raise TypeError(f"result must be a PpcResult instance, got {type(result).__name__}")
        if taxa is None:
            order = np.argsort(result.tail_probability, kind="stable")[:MAX_PANELS]
            indices = [int(i) for i in order]
        else:
            lookup = {t: i for i, t in enumerate(result.taxa_ids)}
            missing = [t for t in taxa if t not in lookup]
            if missing:
                raise ValueError(f"unknown taxa: {', '.join(missing)}")
            indices = [lookup[t] for t in taxa]
        if not indices:
            raise ValueError("no taxa to plot")

        self._result: PpcResult = result
        self._indices: list[int] = indices

    def create_figure(self) -> Any:
        """
        Build one histogram panel per selected taxon.

        Returns:
            matplotlib.figure.Figure: The figure object
        """
        plt = pyplot()
        n = len(self._indices)
        columns = min(n, 4)
        rows = int(np.ceil(n / columns))
        fig, axes = plt.subplots(rows, columns, figsize=(3 * columns, 2.5 * rows), squeeze=False)

        for panel, ax in enumerate(axes.ravel()):
            if panel >= n:
                ax.set_visible(False)
                continue
            w = self._indices[panel]
            ax.hist(self._result.replicate_max[:, w], bins=20, color="#2E86AB", alpha=0.8)
            ax.axvline(self._result.observed_max[w], color="#E4572E", linewidth=2)
            ax.set_title(
                f"{self._result.taxa_ids[w]} (p={self._result.tail_probability[w]:.3f})",
                fontsize=9,
            )
            ax.tick_params(labelsize=7)

        fig.supxlabel("max count over specimens", fontsize=9)
        fig.tight_layout()
        return fig

    def to_svg(self) -> str:
        return figure_to_svg(self.create_figure())

    def save(self, path: str) -> None:
        write_svg(path, self.to_svg())
