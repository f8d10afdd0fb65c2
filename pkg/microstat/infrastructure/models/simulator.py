"""
Generative simulator for two-group count tables.

Counts are K_ij ~ NB(mu_i * f_ig * d_j, k_i) where f_ig is the group-2 fold
change, optionally plus Poisson(lambda^c_i * d_j) contamination. Strain
switching re-labels reads: for a switch pair (a, b) a switched specimen
reports taxon a's reads under b and none under a; an unswitched specimen
reports nothing under b.
"""

from dataclasses import dataclass, field, replace
from typing import Any, Optional, Sequence

import numpy as np

from microstat.core.count_table import CountTable
from microstat.core.dataset import Dataset
from microstat.core.samples import SampleMetadata, SpecimenType
from microstat.shared.random import SeedLike, make_rng, spawn
from .negative_binomial import NBParams

SWITCH_MODES = ("group", "random")
LIBRARY_MODELS = ("fixed", "nb")
GROUP_LABELS = ("g1", "g2")


@dataclass(frozen=True)
class SimScenario:
    """
    Everything needed to simulate one dataset.

    Args:
        params: NB (mu, k) per taxon
        n_per_group: Biological specimens in group 1 and group 2
        fold_change: Multiplier on mu for group-2 specimens, per taxon
            (defaults to 1, i.e. no group effect)
        taxa_ids: Taxon identifiers (default taxon_1..taxon_m)
        library_model: 'fixed' (d_j = 1) or 'nb' (library sizes drawn from
            NB(library_mean, library_k), d_j = L_j / library_mean)
        library_mean: Mean library size for the 'nb' model
        library_k: Dispersion of library sizes for the 'nb' model
        contamination: Contaminant intensity lambda^c per taxon (optional)
        n_controls: Negative controls, which receive contamination only
        switch_pairs: (taxon_a, taxon_b) identifier pairs
        switch_mode: 'group' switches every group-2 specimen, 'random'
            switches each biological specimen with probability switch_fraction
        switch_fraction: Switching probability for the 'random' mode
        seed: Integer seed
    """

    params: tuple[NBParams, ...]
    n_per_group: tuple[int, int]
    fold_change: Optional[tuple[float, ...]] = None
    taxa_ids: Optional[tuple[str, ...]] = None
    library_model: str = "fixed"
    library_mean: float = 10000.0
    library_k: float = 20.0
    contamination: Optional[tuple[float, ...]] = None
    n_controls: int = 0
    switch_pairs: tuple[tuple[str, str], ...] = ()
    switch_mode: str = "group"
    switch_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        params = tuple(self.params)
        if not params:
            raise ValueError("scenario needs at least one taxon")
        for p in params:
            if not isinstance(p, NBParams):
                raise TypeError(f"params must be NBParams, got {type(p).__name__}")
        object.__setattr__(self, "params", params)
        m = len(params)

        n1, n2 = (int(n) for n in self.n_per_group)
        if n1 < 0 or n2 < 0 or n1 + n2 < 1:
            raise ValueError(
                f"n_per_group must be non-negative with a positive total, got {(n1, n2)}"
            )
        object.__setattr__(self, "n_per_group", (n1, n2))

        taxa = self.taxa_ids or tuple(f"taxon_{i + 1}" for i in range(m))
        if len(taxa) != m or len(set(taxa)) != m:
            raise ValueError(f"taxa_ids must be {m} unique identifiers")
        object.__setattr__(self, "taxa_ids", tuple(str(t) for t in taxa))

        for name in ("fold_change", "contamination"):
            values = getattr(self, name)
            if values is None:
                continue
            values = tuple(float(v) for v in values)
            if len(values) != m:
                raise ValueError(f"{name} has {len(values)} entries, expected {m}")
            if any(not np.isfinite(v) or v < 0 for v in values):
                raise ValueError(f"{name} entries must be finite and >= 0")
            if name == "fold_change" and any(v == 0 for v in values):
                raise ValueError("fold_change entries must be > 0")
            object.__setattr__(self, name, values)

        if self.library_model not in LIBRARY_MODELS:
            raise ValueError(
                f"Invalid library_model: '{self.library_model}'. "
                f"Must be one of: {list(LIBRARY_MODELS)}"
            )
        if self.library_mean <= 0 or self.library_k <= 0:
            raise ValueError("library_mean and library_k must be > 0")
        if self.n_controls < 0:
            raise ValueError(f"n_controls must be >= 0, got {self.n_controls}")
        if self.switch_mode not in SWITCH_MODES:
            raise ValueError(
                f"Invalid switch_mode: '{self.switch_mode}'. Must be one of: {list(SWITCH_MODES)}"
            )
        if not 0.0 <= self.switch_fraction <= 1.0:
            raise ValueError(f"switch_fraction must lie in [0, 1], got {self.switch_fraction}")

        pairs = tuple((str(a), str(b)) for a, b in self.switch_pairs)
        used: set[str] = set()
        for a, b in pairs:
            if a == b:
                raise ValueError(f"invalid switch pair ({a}, {b}): taxa must differ")
            for taxon in (a, b):
                if taxon not in self.taxa_ids:
                    raise ValueError(f"invalid switch pair: unknown taxon '{taxon}'")
                if taxon in used:
                    raise ValueError(f"invalid switch pair: taxon '{taxon}' appears twice")
                used.add(taxon)
        object.__setattr__(self, "switch_pairs", pairs)

    @property
    def n_taxa(self) -> int:
        return len(self.params)

    def with_seed(self, seed: int) -> "SimScenario":
        return replace(self, seed=seed)

    def to_dict(self) -> dict[str, Any]:
        return {
            "taxa_ids": list(self.taxa_ids),
            "mu": [p.mu for p in self.params],
            "k": [p.k for p in self.params],
            "n_per_group": list(self.n_per_group),
            "fold_change": None if self.fold_change is None else list(self.fold_change),
            "library_model": self.library_model,
            "library_mean": self.library_mean,
            "library_k": self.library_k,
            "contamination": None if self.contamination is None else list(self.contamination),
            "n_controls": self.n_controls,
            "switch_pairs": [list(p) for p in self.switch_pairs],
            "switch_mode": self.switch_mode,
            "switch_fraction": self.switch_fraction,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "SimScenario":
        """
        Build a scenario from its JSON form.

        Required keys: mu, k (lists, one entry per taxon) and n_per_group.
        """
        try:
            mu, k = doc["mu"], doc["k"]
            n_per_group = doc["n_per_group"]
        except KeyError as e:
            raise ValueError(f"scenario is missing required key {e}") from None
        if len(mu) != len(k):
            raise ValueError(f"mu has {len(mu)} entries but k has {len(k)}")
        known = {
            "taxa_ids", "mu", "k", "n_per_group", "fold_change", "library_model",
            "library_mean", "library_k", "contamination", "n_controls", "switch_pairs",
            "switch_mode", "switch_fraction", "seed",
        }
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ValueError(f"unknown scenario key(s): {unknown}")

        optional = {key: doc[key] for key in known - {"mu", "k", "n_per_group"} if key in doc}
        for key in ("taxa_ids", "fold_change", "contamination"):
            if optional.get(key) is not None:
                optional[key] = tuple(optional[key])
        if "switch_pairs" in optional:
            optional["switch_pairs"] = tuple(tuple(p) for p in optional["switch_pairs"])
        return cls(
            params=tuple(NBParams(float(m_), float(k_)) for m_, k_ in zip(mu, k)),
            n_per_group=tuple(n_per_group),
            **optional,
        )


@dataclass(frozen=True)
class SimulationTruth:
    """Latent quantities behind a simulated dataset (for checks and power studies)."""

    size_factors: np.ndarray
    switched: np.ndarray
    contamination_counts: np.ndarray = field(repr=False)


def simulate(scenario: SimScenario) -> Dataset:
    """Simulate a dataset; see :func:`simulate_with_truth`."""
    return simulate_with_truth(scenario)[0]


def simulate_with_truth(scenario: SimScenario) -> tuple[Dataset, SimulationTruth]:
    """
    Draw a dataset from a scenario.

    Streams are spawned from the scenario seed in a fixed order (library
    sizes, switching decisions, then one stream per taxon), so the same seed
    gives the same table regardless of anything else and two scenarios
    that differ only in switching share every count draw.

    Returns:
        tuple: (Dataset with size factors, SimulationTruth)
    """
    n1, n2 = scenario.n_per_group
    n_bio = n1 + n2
    n_total = n_bio + scenario.n_controls
    m = scenario.n_taxa
    library_seed, switch_seed, *taxon_seeds = spawn(scenario.seed, m + 2)

    if scenario.library_model == "fixed":
        d = np.ones(n_total)
    else:
        lib_rng = make_rng(library_seed)
        k_lib = scenario.library_k
        sizes = lib_rng.negative_binomial(
            k_lib, k_lib / (k_lib + scenario.library_mean), size=n_total
        )
        d = np.maximum(sizes, 1) / scenario.library_mean

    in_group2 = np.zeros(n_total, dtype=bool)
    in_group2[n1:n_bio] = True
    is_control = np.zeros(n_total, dtype=bool)
    is_control[n_bio:] = True

    fold = np.ones(m) if scenario.fold_change is None else np.asarray(scenario.fold_change)
    contam = np.zeros(m) if scenario.contamination is None else np.asarray(scenario.contamination)

    counts = np.zeros((m, n_total), dtype=np.int64)
    contamination_counts = np.zeros((m, n_total), dtype=np.int64)
    for i, (params, child) in enumerate(zip(scenario.params, taxon_seeds)):
        rng = make_rng(child)
        means = params.mu * d * np.where(in_group2, fold[i], 1.0)
        biological = rng.negative_binomial(params.k, params.k / (params.k + means))
        biological[is_control] = 0
        noise = rng.poisson(contam[i] * d) if contam[i] > 0 else np.zeros(n_total, np.int64)
        contamination_counts[i] = noise
        counts[i] = biological + noise

    if scenario.switch_mode == "group":
        switched = in_group2.copy()
    else:
        switch_rng = make_rng(switch_seed)
        switched = (switch_rng.random(n_total) < scenario.switch_fraction) & ~is_control

    index = {t: i for i, t in enumerate(scenario.taxa_ids)}
    for a, b in scenario.switch_pairs:
        ia, ib = index[a], index[b]
        counts[ib] = np.where(switched, counts[ia], 0)
        counts[ia] = np.where(switched, 0, counts[ia])

    specimen_ids = [f"S{j + 1}" for j in range(n_bio)] + [
        f"C{j + 1}" for j in range(scenario.n_controls)
    ]
    samples = []
    for j, specimen in enumerate(specimen_ids):
        if is_control[j]:
            samples.append(
                SampleMetadata(specimen, SpecimenType.NEGATIVE_CONTROL, subject_id=specimen)
            )
        else:
            samples.append(
                SampleMetadata(
                    specimen,
                    SpecimenType.BIOLOGICAL,
                    subject_id=specimen,
                    group=GROUP_LABELS[int(in_group2[j])],
                )
            )

    dataset = Dataset(
        counts=CountTable(scenario.taxa_ids, specimen_ids, counts),
        samples=tuple(samples),
        size_factors=d,
    )
    return dataset, SimulationTruth(d, switched, contamination_counts)


def scenario_for(
    mu: Sequence[float],
    k: Sequence[float],
    n_per_group: tuple[int, int],
    seed: SeedLike = 0,
    **options: Any,
) -> SimScenario:
    """Shorthand for building a scenario from parallel mu/k lists."""
    return SimScenario(
        params=tuple(NBParams(float(a), float(b)) for a, b in zip(mu, k)),
        n_per_group=n_per_group,
        seed=int(seed),
        **options,
    )
