"""
The ``microstat`` command-line interface.

Every subcommand reads its inputs from files named by flags, writes its
outputs to the paths it is given and leaves ``<output>.manifest.json`` next
to each output. Parameters come from flags only.

Exit codes: 0 success, 1 usage error, 2 data or validation error (including
missing files), 3 numerical failure.
"""

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import pandas as pd

import microstat
from microstat import __version__
from microstat.application.manifest import utc_now, write_manifests
from microstat.application.workflows import (
    DecontaminationWorkflow,
    OrdinationWorkflow,
    PipelineWorkflow,
)
from microstat.core.dataset import Dataset
from microstat.infrastructure.data.readers import DelimitedDatasetReader, JsonDatasetReader
from microstat.infrastructure.data.readers.files import read_json
from microstat.infrastructure.data.writers import CsvTableWriter, JsonDatasetWriter
from microstat.infrastructure.data.writers.files import checked_output_path, write_json
from microstat.infrastructure.decontaminators import BayesianDecontaminator, McmcSettings
from microstat.infrastructure.hypothesis_tests import (
    mst_pure_edge_test,
    permanova,
    power_frame,
    strain_switch_power,
    threshold_network,
)
from microstat.infrastructure.models import SimScenario, gof_all, simulate, wald_frame, wald_test
from microstat.infrastructure.ordination import (
    CAOrdinator,
    PCAOrdinator,
    PCoAOrdinator,
    distance,
)
from microstat.infrastructure.ordination.pcoa import UNIFRAC_METRICS
from microstat.infrastructure.topics import (
    LdaSpec,
    differential_topics,
    fit_from_payload,
    fit_lda,
    fit_to_payload,
    posterior_predictive_check,
    scan_topics,
    top_taxa_frame,
    topic_proportions_frame,
)
from microstat.infrastructure.transformers import (
    TABLE_METHODS,
    ensure_size_factors,
    transform_table,
)
from microstat.infrastructure.transformers.filters import FilterSpec, SpecFilter, parse_rules
from microstat.infrastructure.visualizers import PpcVisualizer
from microstat.shared.errors import (
    DataValidationError,
    MicrostatError,
    NumericalError,
    UsageError,
)

logger = logging.getLogger("microstat")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


@dataclass
class CommandResult:
    """Files a subcommand read and wrote, for its manifests."""

    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    seed: Optional[int] = None
    exit_code: int = EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


# ---------------------------------------------------------------- helpers


def _load(path: str, biological: bool = False) -> Dataset:
    transformers = {"after": [lambda d: d.biological()]} if biological else None
    return JsonDatasetReader(path, transformers=transformers).load()


def _column(dataset: Dataset, column: Optional[str]) -> Optional[list]:
    if column is None:
        return None
    try:
        return dataset.metadata_column(column)
    except KeyError as e:
        raise DataValidationError(str(e.args[0])) from None


def _load_scenario(path: str) -> SimScenario:
    try:
        return SimScenario.from_dict(read_json(path))
    except DataValidationError:
        raise
    except (ValueError, TypeError) as e:
        raise DataValidationError(f"{path}: invalid scenario: {e}") from None


def _write_frame(frame, path: str, index: bool = False) -> str:
    CsvTableWriter(path, index=index).write(frame)
    return path


def _table_for(args: argparse.Namespace) -> Callable[[Dataset], object]:
    return lambda dataset: transform_table(dataset, args.transform, args.t, args.tau)


def _add_transform_options(parser: argparse.ArgumentParser, default: str) -> None:
    parser.add_argument("--transform", choices=TABLE_METHODS, default=default)
    parser.add_argument("--t", type=int, default=None, help="rank threshold for trunc-rank")
    parser.add_argument("--tau", type=int, default=2, help="read threshold for presence")


def _add_lda_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, default=0.8)
    parser.add_argument("--gamma", type=float, default=0.5)
    parser.add_argument("--chains", type=int, default=4)
    parser.add_argument("--iters", type=int, default=2000)
    parser.add_argument("--warmup", type=int, default=1000)
    parser.add_argument("--thin", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)


def _lda_spec(args: argparse.Namespace, n_topics: int) -> LdaSpec:
    return LdaSpec(
        T=n_topics,
        alpha=args.alpha,
        gamma=args.gamma,
        chains=args.chains,
        iters=args.iters,
        warmup=args.warmup,
        seed=args.seed,
        thin=args.thin,
    )


def _load_fit(path: str):
    fit, dataset = fit_from_payload(read_json(path))
    if dataset is None:
        raise DataValidationError(f"fit file {os.path.basename(path)} has no embedded dataset")
    return fit, dataset


# ---------------------------------------------------------------- commands


def cmd_ingest(args: argparse.Namespace) -> CommandResult:
    delimiter = {"tab": "\t", "comma": ",", "semicolon": ";"}[args.delimiter]
    reader = DelimitedDatasetReader(
        args.counts, args.samples, args.taxonomy, args.tree, delimiter=delimiter
    )
    JsonDatasetWriter(args.out).write(reader.load())
    inputs = [p for p in (args.counts, args.samples, args.taxonomy, args.tree) if p]
    return CommandResult(inputs, [args.out])


def cmd_filter(args: argparse.Namespace) -> CommandResult:
    spec = FilterSpec(
        min_reads_per_specimen=args.min_reads,
        min_count=args.min_count,
        min_specimens=args.min_specimens,
        drop_taxonomy=parse_rules(args.drop_taxonomy or ()),
        require_rank=tuple(args.require_rank or ()),
        exclude_specimens=tuple(args.exclude or ()),
        keep_controls=not args.filter_controls,
    )
    dataset = JsonDatasetReader(args.data, transformers={"after": [SpecFilter(spec)]}).load()
    JsonDatasetWriter(args.out).write(dataset)
    return CommandResult([args.data], [args.out])


def cmd_gof(args: argparse.Namespace) -> CommandResult:
    dataset = ensure_size_factors(_load(args.data))
    report = gof_all(dataset, n_sim=args.nsim, seed=args.seed, refit=args.refit)
    logger.info("%.3f of taxa show excess zeros", report.zero_excess_fraction)
    _write_frame(report.to_frame(), args.out)
    return CommandResult([args.data], [args.out], args.seed)


def cmd_simulate(args: argparse.Namespace) -> CommandResult:
    scenario = _load_scenario(args.scenario)
    if args.seed is not None:
        scenario = scenario.with_seed(args.seed)
    JsonDatasetWriter(args.out).write(simulate(scenario))
    return CommandResult([args.scenario], [args.out], scenario.seed)


def cmd_decontam(args: argparse.Namespace) -> CommandResult:
    mcmc = McmcSettings(chains=args.chains, iterations=args.iters, warmup=args.warmup)
    workflow = DecontaminationWorkflow(
        JsonDatasetReader(args.data),
        BayesianDecontaminator(mcmc, args.hpd, args.seed, taxon_level=args.taxon_level),
        JsonDatasetWriter(args.out),
        CsvTableWriter(args.report) if args.report else None,
    )
    _, report = workflow.run()
    called = int(report["is_contaminant"].sum())
    logger.info("%d of %d cells called contaminant", called, len(report))
    outputs = [args.out] + ([args.report] if args.report else [])
    return CommandResult([args.data], outputs, args.seed)


def cmd_transform(args: argparse.Namespace) -> CommandResult:
    dataset = _load(args.data, biological=not args.include_controls)
    table = transform_table(dataset, args.method, args.t, args.tau)
    _write_frame(table.to_frame(), args.out, index=True)
    return CommandResult([args.data], [args.out])


def cmd_ordinate(args: argparse.Namespace) -> CommandResult:
    if args.method == "pcoa":
        table = None if args.transform == "none" else _table_for(args)
        ordinator = PCoAOrdinator(args.metric, args.axes, table)
    elif args.method == "pca":
        ordinator = PCAOrdinator(args.axes, _table_for(args))
    else:
        if args.transform != "none":
            raise UsageError("correspondence analysis works on raw counts; use --transform none")
        ordinator = CAOrdinator(args.axes)

    biological = {"after": [lambda d: d.biological()]} if not args.include_controls else None
    workflow = OrdinationWorkflow(
        JsonDatasetReader(args.data, transformers=biological),
        ordinator,
        CsvTableWriter(args.out),
        svg_path=args.svg,
        color_by=args.color,
    )
    ordination = workflow.run()
    outputs = [args.out]
    if args.axes_out:
        outputs.append(_write_frame(ordination.axes_frame(), args.axes_out))
    if args.loadings_out and ordination.loadings is not None:
        outputs.append(_write_frame(ordination.loadings_frame(), args.loadings_out))
    if args.svg:
        outputs.append(args.svg)
    return CommandResult([args.data], outputs)


def cmd_test(args: argparse.Namespace) -> CommandResult:
    dataset = _load(args.data, biological=True)
    if args.metric in UNIFRAC_METRICS:
        d = PCoAOrdinator(args.metric).distances(dataset)
    else:
        table = dataset.counts if args.transform == "none" else _table_for(args)(dataset)
        d = distance(table, args.metric)

    if args.method == "network":
        network = threshold_network(d, args.max_d)
        _write_frame(network.edges_frame(), args.out)
        outputs = [args.out]
        if args.components_out:
            outputs.append(_write_frame(network.components_frame(), args.components_out))
        return CommandResult([args.data], outputs)

    if args.group is None:
        raise UsageError(f"--group is required for {args.method}")
    groups = _column(dataset, args.group)
    blocks = _column(dataset, args.blocks)
    run = permanova if args.method == "permanova" else mst_pure_edge_test
    result = run(d, groups, n_perm=args.nperm, seed=args.seed, blocks=blocks)
    frame = pd.DataFrame([result.to_record()])
    if args.out:
        _write_frame(frame, args.out)
        return CommandResult([args.data], [args.out], args.seed)
    frame.to_csv(sys.stdout, index=False, float_format="%.10g", lineterminator="\n")
    return CommandResult([args.data], [], args.seed)


def cmd_power(args: argparse.Namespace) -> CommandResult:
    scenario = _load_scenario(args.scenario)
    curves = strain_switch_power(
        scenario,
        args.grid,
        n_replicates=args.reps,
        alpha=args.alpha,
        seed=args.seed,
        n_perm=args.nperm,
    )
    _write_frame(power_frame(curves), args.out)
    return CommandResult([args.scenario], [args.out], args.seed)


def cmd_diff(args: argparse.Namespace) -> CommandResult:
    dataset = ensure_size_factors(_load(args.data)).biological()
    rows = wald_test(dataset.counts, _column(dataset, args.group), dataset.size_factors)
    _write_frame(wald_frame(rows, id_column="taxon_id"), args.out)
    return CommandResult([args.data], [args.out])


def cmd_topics(args: argparse.Namespace) -> CommandResult:
    dataset = _load(args.data, biological=not args.include_controls)
    fit = fit_lda(dataset.counts, _lda_spec(args, args.T))
    write_json(checked_output_path(args.out), fit_to_payload(fit, dataset))
    outputs = [args.out]
    if args.summary_out:
        outputs.append(_write_frame(topic_proportions_frame(fit), args.summary_out))
    if args.top_taxa_out:
        outputs.append(_write_frame(top_taxa_frame(fit, args.n_top), args.top_taxa_out))
    if args.diagnostics_out and fit.convergence is not None:
        outputs.append(_write_frame(fit.convergence, args.diagnostics_out))
    return CommandResult([args.data], outputs, args.seed)


def cmd_topics_diff(args: argparse.Namespace) -> CommandResult:
    fit, dataset = _load_fit(args.fit)
    lookup = dict(zip(dataset.specimen_ids, dataset.samples_in_order()))
    groups = [lookup[s].get(args.group) for s in fit.specimen_ids]
    _write_frame(differential_topics(fit, groups), args.out)
    return CommandResult([args.fit], [args.out])


def cmd_topics_ppc(args: argparse.Namespace) -> CommandResult:
    fit, dataset = _load_fit(args.fit)
    counts = dataset.counts.select(fit.taxa_ids, fit.specimen_ids)
    result = posterior_predictive_check(fit, counts, max_draws=args.max_draws, seed=args.seed)
    _write_frame(result.to_frame(), args.out)
    outputs = [args.out]
    if args.svg:
        PpcVisualizer(result, args.taxa or None).save(checked_output_path(args.svg))
        outputs.append(args.svg)
    return CommandResult([args.fit], outputs, args.seed)


def cmd_topics_scan(args: argparse.Namespace) -> CommandResult:
    dataset = _load(args.data, biological=not args.include_controls)
    frame = scan_topics(
        dataset.counts,
        args.grid,
        _lda_spec(args, max(args.grid)),
        holdout_fraction=args.holdout,
        holdout_seed=args.holdout_seed,
    )
    _write_frame(frame, args.out)
    return CommandResult([args.data], [args.out], args.seed)


def cmd_pipeline(args: argparse.Namespace) -> CommandResult:
    result = PipelineWorkflow(args.config, run, args.run_dir).run()
    if result.exit_code != 0:
        logger.error("pipeline aborted at stage '%s'", result.failed_stage)
    return CommandResult([args.config], [], exit_code=result.exit_code)


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="microstat", description="Statistics for microbial count tables.")
    parser.add_argument("--version", action="version", version=f"microstat {__version__}")
    parser.add_argument("--threads", type=int, default=None, help="cap on worker threads")
    parser.add_argument("--verbose", action="store_true", help="progress and tracebacks")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="bundle delimited tables into dataset.json")
    p.add_argument("--counts", required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--taxonomy")
    p.add_argument("--tree")
    p.add_argument("--delimiter", choices=("tab", "comma", "semicolon"), default="tab")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("filter", help="read-depth, prevalence and taxonomy filters")
    p.add_argument("--data", required=True)
    p.add_argument("--min-reads", type=int, default=800)
    p.add_argument("--min-count", type=int, default=0)
    p.add_argument("--min-specimens", type=int, default=0)
    p.add_argument("--drop-taxonomy", action="append", metavar="RANK=VALUE")
    p.add_argument("--require-rank", action="append", metavar="RANK")
    p.add_argument("--exclude", action="append", metavar="SPECIMEN")
    p.add_argument("--filter-controls", action="store_true", help="apply --min-reads to controls")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_filter)

    p = sub.add_parser("gof", help="negative binomial goodness of fit per taxon")
    p.add_argument("--data", required=True)
    p.add_argument("--nsim", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--refit", action="store_true", help="refit (mu, k) on every simulation")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_gof)

    p = sub.add_parser("simulate", help="simulate a dataset from scenario.json")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("decontam", help="Bayesian contaminant removal")
    p.add_argument("--data", required=True)
    p.add_argument("--hpd", type=float, default=0.95)
    p.add_argument("--chains", type=int, default=4)
    p.add_argument("--iters", type=int, default=2000)
    p.add_argument("--warmup", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--taxon-level", action="store_true")
    p.add_argument("--report")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_decontam)

    p = sub.add_parser("transform", help="variance-stabilizing and rank transforms")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=TABLE_METHODS[1:], required=True)
    p.add_argument("--t", type=int, default=None)
    p.add_argument("--tau", type=int, default=2)
    p.add_argument("--include-controls", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_transform)

    p = sub.add_parser("ordinate", help="PCoA, PCA or correspondence analysis")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=("pcoa", "pca", "ca"), default="pcoa")
    p.add_argument("--metric", default="bray")
    p.add_argument("--axes", type=int, default=2)
    _add_transform_options(p, "none")
    p.add_argument("--include-controls", action="store_true")
    p.add_argument("--svg")
    p.add_argument("--color", default="group", help="metadata column colouring the plot")
    p.add_argument("--axes-out")
    p.add_argument("--loadings-out")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_ordinate)

    p = sub.add_parser("test", help="PERMANOVA, MST test or threshold network")
    p.add_argument("--data", required=True)
    p.add_argument("--metric", default="bray")
    p.add_argument("--method", choices=("permanova", "mst", "network"), default="permanova")
    p.add_argument("--group")
    p.add_argument("--blocks")
    p.add_argument("--nperm", type=int, default=999)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-d", type=float, default=0.5)
    _add_transform_options(p, "none")
    p.add_argument("--components-out")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_test)

    p = sub.add_parser("power", help="PERMANOVA power with and without strain switching")
    p.add_argument("--scenario", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--grid", type=_float_list, default=[0.0, 0.25, 0.5, 0.75, 1.0])
    p.add_argument("--nperm", type=int, default=199)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_power)

    p = sub.add_parser("diff", help="NB GLM Wald tests per taxon")
    p.add_argument("--data", required=True)
    p.add_argument("--group", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_diff)

    p = sub.add_parser("topics", help="fit an LDA topic model")
    p.add_argument("--data", required=True)
    p.add_argument("--T", type=int, required=True)
    _add_lda_options(p)
    p.add_argument("--include-controls", action="store_true")
    p.add_argument("--summary-out", help="median topic proportions per specimen")
    p.add_argument("--top-taxa-out")
    p.add_argument("--n-top", type=int, default=10)
    p.add_argument("--diagnostics-out")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_topics)

    p = sub.add_parser("topics-diff", help="differential topic abundance")
    p.add_argument("--fit", required=True)
    p.add_argument("--group", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_topics_diff)

    p = sub.add_parser("topics-ppc", help="posterior predictive check of a topic fit")
    p.add_argument("--fit", required=True)
    p.add_argument("--max-draws", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--svg")
    p.add_argument("--taxa", action="append", help="taxa to draw in the SVG")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_topics_ppc)

    p = sub.add_parser("topics-scan", help="held-out likelihood over topic numbers")
    p.add_argument("--data", required=True)
    p.add_argument("--grid", type=_int_list, required=True, help="e.g. 2,4,6,8")
    p.add_argument("--holdout", type=float, default=0.2)
    p.add_argument("--holdout-seed", type=int, default=0)
    _add_lda_options(p)
    p.add_argument("--include-controls", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_topics_scan)

    p = sub.add_parser("pipeline", help="run stages listed in a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--run-dir")
    p.set_defaults(handler=cmd_pipeline)

    return parser


def _configure_logging(verbose: bool) -> None:
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        logger.addHandler(handler)
    logger.setLevel(logging.INFO if verbose else logging.WARNING)


def _fail(message: str, code: int) -> int:
    print(f"microstat: error: {message}", file=sys.stderr)
    return code


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one command line and return its exit code.

    Args:
        argv: Arguments after the program name (defaults to sys.argv[1:])
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        return _fail(str(e), EXIT_USAGE)
    except SystemExit as e:
        return int(e.code or 0)

    _configure_logging(args.verbose)
    try:
        microstat.configure(verbose=args.verbose, threads=args.threads)
        started_at = utc_now()
        result = args.handler(args)
        if result.outputs:
            write_manifests(
                args.command, argv, result.inputs, result.outputs, result.seed, started_at
            )
        return result.exit_code
    except UsageError as e:
        return _fail(str(e), EXIT_USAGE)
    except (DataValidationError, FileNotFoundError, PermissionError, KeyError) as e:
        for violation in getattr(e, "violations", []):
            print(f"  {violation}", file=sys.stderr)
        return _fail(str(e), EXIT_DATA)
    except NumericalError as e:
        return _fail(str(e), EXIT_NUMERICAL)
    except (ValueError, TypeError, MicrostatError) as e:
        if args.verbose:
            logger.exception("command failed")
        return _fail(str(e), EXIT_USAGE)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
