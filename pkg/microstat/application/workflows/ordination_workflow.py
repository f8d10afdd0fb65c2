"""
Ordination workflow orchestrator.
"""

from typing import Optional

from ...infrastructure.data.readers.base import DatasetReader
from ...infrastructure.data.writers.base import DataWriter
from ...infrastructure.ordination.base import Ordination, Ordinator
from ...infrastructure.visualizers import OrdinationVisualizer


class OrdinationWorkflow:
    """
    Main orchestrator class for the ordination workflow.

    This workflow orchestrates:
    1. Load the dataset (via dataset_reader)
    2. Ordinate it (via ordinator)
    3. Write specimen coordinates (via data_writer)
    4. Optionally draw the first two axes as SVG, coloured by a metadata column

    Transformations (e.g. dropping controls, variance stabilization) belong
    to the components: reader 'after' transformers or ordinator tables.

    Args:
        dataset_reader: Dataset reader
        ordinator: Ordinator instance
        data_writer: Writer for the coordinates table (optional)
        svg_path: Destination of the scatter plot (optional)
        color_by: Metadata column used to colour the plot
    """

    def __init__(
        self,
        dataset_reader: DatasetReader,
        ordinator: Ordinator,
        data_writer: Optional[DataWriter] = None,
        svg_path: Optional[str] = None,
        color_by: Optional[str] = "group",
    ):
        if not isinstance(dataset_reader, DatasetReader):
            raise TypeError(
                f"dataset_reader must be a DatasetReader instance, "
                f"got {type(dataset_reader).__name__}"
            )
        if not isinstance(ordinator, Ordinator):
            raise TypeError(
                f"ordinator must be an Ordinator instance, got {type(ordinator).__name__}"
            )
        if data_writer is not None and not isinstance(data_writer, DataWriter):
            raise TypeError(
                f"data_writer must be a DataWriter instance or None, "
                f"got {type(data_writer).__name__}"
            )

        self.dataset_reader = dataset_reader
        self.ordinator = ordinator
        self.data_writer = data_writer
        self.svg_path = svg_path
        self.color_by = color_by

    def run(self) -> Ordination:
        """
        Execute the complete ordination workflow.

        Returns:
            Ordination: The ordination result
        """
        dataset = self.dataset_reader.load()
        ordination = self.ordinator.ordinate(dataset)

        if self.data_writer:
            self.data_writer.write(ordination.to_frame())
        if self.svg_path:
            lookup = dict(zip(dataset.specimen_ids, dataset.samples_in_order()))
            labels = None
            if self.color_by:
                labels = [lookup[s].get(self.color_by) for s in ordination.ids]
            OrdinationVisualizer(ordination, labels, self.color_by).save(self.svg_path)
        return ordination
