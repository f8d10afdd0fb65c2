"""
Decontamination workflow orchestrator.
"""

from typing import Optional

import pandas as pd

from ...core.dataset import Dataset
from ...infrastructure.data.readers.base import DatasetReader
from ...infrastructure.data.writers.base import DataWriter
from ...infrastructure.decontaminators.base import Decontaminator
from ...infrastructure.decontaminators.bayes import contamination_frame


class DecontaminationWorkflow:
    """
    Main orchestrator class for the decontamination workflow.

    This workflow orchestrates contamination removal:
    1. Load the dataset (via dataset_reader)
    2. Call and remove contaminants (via decontaminator)
    3. Write the cleaned dataset (via dataset_writer)
    4. Write the per-cell call report (via report_writer)

    Args:
        dataset_reader: Reader for a dataset with negative controls
        decontaminator: Decontaminator instance
        dataset_writer: Writer for the cleaned dataset (optional)
        report_writer: Writer for the call report (optional)
    """

    def __init__(
        self,
        dataset_reader: DatasetReader,
        decontaminator: Decontaminator,
        dataset_writer: Optional[DataWriter] = None,
        report_writer: Optional[DataWriter] = None,
    ):
        if not isinstance(dataset_reader, DatasetReader):
            raise TypeError(
                f"dataset_reader must be a DatasetReader instance, "
                f"got {type(dataset_reader).__name__}"
            )
        if not isinstance(decontaminator, Decontaminator):
            raise TypeError(
                f"decontaminator must be a Decontaminator instance, "
                f"got {type(decontaminator).__name__}"
            )
        for name, writer in (("dataset_writer", dataset_writer), ("report_writer", report_writer)):
            if writer is not None and not isinstance(writer, DataWriter):
                raise TypeError(
                    f"{name} must be a DataWriter instance or None, got {type(writer).__name__}"
                )

        self.dataset_reader = dataset_reader
        self.decontaminator = decontaminator
        self.dataset_writer = dataset_writer
        self.report_writer = report_writer

    def run(self) -> tuple[Dataset, pd.DataFrame]:
        """
        Execute the complete decontamination workflow.

        Returns:
            tuple: (cleaned Dataset, call report DataFrame)
        """
        dataset = self.dataset_reader.load()
        summaries, cleaned = self.decontaminator.decontaminate(dataset)
        report = contamination_frame(summaries)

        if self.dataset_writer:
            self.dataset_writer.write(cleaned)
        if self.report_writer:
            self.report_writer.write(report)
        return cleaned, report
