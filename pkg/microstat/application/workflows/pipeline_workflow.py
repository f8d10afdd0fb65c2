"""
Config-driven pipeline workflow.

A pipeline config is a TOML file::

    [pipeline]
    run_dir = "run"        # relative to the config file
    seed = 7               # default --seed for stages that take one

    [[stage]]
    command = "ingest"
    counts = "counts.tsv"
    samples = "samples.tsv"

    [[stage]]
    command = "filter"
    data = "@previous"
    min-reads = 800

    [[stage]]
    name = "coords"
    command = "ordinate"
    data = "@filter"
    metric = "bray"
    svg = "coords.svg"

Every key other than ``command`` and ``name`` becomes a ``--key value``
option (``true`` becomes a bare flag, lists repeat the option). ``@previous``
and ``@<stage name>`` refer to the main output of an earlier stage; stage
names default to the command. Stage i writes its main output to
``<run_dir>/<NN>_<name>.<ext>``; side outputs (report, svg, ...) given as
relative paths land in the run directory too.
"""

import logging
import os

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from ...shared.errors import DataValidationError, ParseError

logger = logging.getLogger("microstat")

JSON_OUTPUTS = {"ingest", "filter", "decontam", "simulate", "topics"}
INPUT_KEYS = {"counts", "samples", "taxonomy", "tree", "data", "fit", "scenario"}
SIDE_OUTPUT_KEYS = {"report", "svg", "summary-out", "top-taxa-out", "diagnostics-out"}
SEEDED_COMMANDS = {"gof", "decontam", "test", "power", "topics", "topics-ppc", "topics-scan"}
RESERVED_KEYS = {"command", "name"}


@dataclass(frozen=True)
class Stage:
    """
    One pipeline step.

    Args:
        name: Unique stage name (referenced as @name)
        command: microstat subcommand
        options: Option name -> value, in config order
    """

    name: str
    command: str
    options: dict[str, Any] = field(default_factory=dict)

    def output_name(self, index: int) -> str:
        extension = "json" if self.command in JSON_OUTPUTS else "csv"
        return f"{index + 1:02d}_{self.name}.{extension}"


@dataclass(frozen=True)
class PipelineResult:
    """Outputs written so far and the exit code of the run."""

    outputs: tuple[str, ...]
    exit_code: int
    failed_stage: Optional[str] = None


def load_config(path: str) -> tuple[dict[str, Any], list[Stage]]:
    """
    Parse a pipeline config.

    Raises:
        FileNotFoundError: If the file does not exist
        ParseError: If the file is not valid TOML
        DataValidationError: If stages are missing, unnamed or duplicated
    """
    abs_path = os.path.abspath(path)
    if not os.path.isfile(abs_path):
        raise FileNotFoundError(f"Pipeline config not found: {abs_path}")
    with open(abs_path, "rb") as handle:
        try:
            document = tomllib.load(handle)
        except tomllib.TOMLDecodeError as e:
            raise ParseError(str(e), source=os.path.basename(abs_path)) from None

    settings = document.get("pipeline", {})
    raw_stages = document.get("stage", [])
    if not isinstance(raw_stages, list) or not raw_stages:
        raise DataValidationError("pipeline config needs at least one [[stage]] table")

    stages: list[Stage] = []
    seen: set[str] = set()
    for number, raw in enumerate(raw_stages, start=1):
        command = raw.get("command")
        if not isinstance(command, str) or not command:
            raise DataValidationError(f"stage {number} has no command")
        if command == "pipeline":
            raise DataValidationError(f"stage {number} cannot run a nested pipeline")
        name = str(raw.get("name", command))
        if name in seen:
            raise DataValidationError(f"stage name '{name}' is used twice; set distinct names")
        seen.add(name)
        options = {k: v for k, v in raw.items() if k not in RESERVED_KEYS}
        stages.append(Stage(name, command, options))
    return settings, stages


def _option_arguments(key: str, value: Any) -> list[str]:
    flag = f"--{key}"
    if value is True:
        return [flag]
    if value is False or value is None:
        return []
    if isinstance(value, list):
        return [a for item in value for a in (flag, str(item))]
    return [flag, str(value)]


class PipelineWorkflow:
    """
    Main orchestrator class for config-driven runs.

    Stages run in order through ``runner`` (the CLI entry point, taking an
    argument vector and returning an exit code). The first failing stage
    aborts the run.

    Args:
        config_path: TOML pipeline config
        runner: Callable executing one subcommand argument vector
        run_dir: Override of the config's run directory
    """

    def __init__(
        self,
        config_path: str,
        runner: Callable[[list[str]], int],
        run_dir: Optional[str] = None,
    ):
        if not callable(runner):
            raise TypeError(f"runner must be callable, got {type(runner).__name__}")
        self.config_path = os.path.abspath(config_path)
        self.settings, self.stages = load_config(config_path)
        self.base_dir = os.path.dirname(self.config_path)
        self.run_dir = os.path.abspath(
            run_dir or os.path.join(self.base_dir, self.settings.get("run_dir", "run"))
        )
        self.runner = runner

    def _resolve(self, index: int, key: str, value: Any, outputs: dict[str, str]) -> Any:
        stage = self.stages[index]
        if isinstance(value, str) and value.startswith("@"):
            reference = value[1:]
            if reference == "previous":
                if index == 0:
                    raise DataValidationError(f"stage '{stage.name}' has no previous stage")
                reference = self.stages[index - 1].name
            if reference not in outputs:
                raise DataValidationError(
                    f"stage '{stage.name}' refers to '{value}', which is not an earlier stage"
                )
            return outputs[reference]
        if key in INPUT_KEYS and isinstance(value, str):
            return os.path.join(self.base_dir, value)
        if key in SIDE_OUTPUT_KEYS and isinstance(value, str):
            return os.path.join(self.run_dir, value)
        return value

    def stage_argv(self, index: int, outputs: dict[str, str]) -> tuple[list[str], str]:
        """Build the argument vector and main output path of stage ``index``."""
        stage = self.stages[index]
        argv = [stage.command]
        for key, value in stage.options.items():
            argv += _option_arguments(key, self._resolve(index, key, value, outputs))
        if stage.command in SEEDED_COMMANDS and "seed" not in stage.options:
            if "seed" in self.settings:
                argv += ["--seed", str(self.settings["seed"])]
        output = os.path.join(self.run_dir, stage.output_name(index))
        argv += ["--out", output]
        return argv, output

    def run(self) -> PipelineResult:
        """
        Execute every stage in order.

        Returns:
            PipelineResult: Outputs of the completed stages and the exit code

        Raises:
            DataValidationError: If a stage refers to an unknown stage
        """
        os.makedirs(self.run_dir, exist_ok=True)
        outputs: dict[str, str] = {}
        written: list[str] = []
        for index, stage in enumerate(self.stages):
            argv, output = self.stage_argv(index, outputs)
            logger.info("stage %d/%d: %s", index + 1, len(self.stages), " ".join(argv))
            code = self.runner(argv)
            if code != 0:
                logger.error("stage %d (%s) failed with exit code %d", index + 1, stage.name, code)
                return PipelineResult(tuple(written), code, stage.name)
            outputs[stage.name] = output
            written.append(output)
        return PipelineResult(tuple(written), 0)