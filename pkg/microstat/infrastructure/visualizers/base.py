"""
Shared plumbing for static SVG figures.
"""

import io
from typing import Any

SVG_HASH_SALT = "microstat"


def pyplot() -> Any:
    """Import pyplot on the non-interactive backend with reproducible SVG ids."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = SVG_HASH_SALT
    return plt


def figure_to_svg(fig: Any) -> str:
    """Render a figure as SVG text without a creation date, then close it."""
    plt = pyplot()
    buffer = io.StringIO()
    fig.savefig(buffer, format="svg", bbox_inches="tight", metadata={"Date": None})
    plt.close(fig)
    return buffer.getvalue()


def write_svg(path: str, svg: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(svg)
