"""Unsupervised variable pruning driven by the median death time of the VR barcode."""

from __future__ import annotations

import json
import logging
import statistics
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateStateError
from .mts import MtsDataset, check_distance_matrix, compute_correlation, correlation_to_distance
from .persistence import Barcode, compute_barcode
from .simplicial import SimplicialComplex, default_max_dim, degree, vietoris_rips

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PruneConfig:
    max_dim: int | None = 3
    epsilon: float | None = None
    include_degenerate: bool = False

    def __post_init__(self):
        if self.max_dim is not None and self.max_dim < 0:
            raise ValueError("max_dim must be >= 0")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError("epsilon override must be >= 0")


@dataclass(frozen=True)
class PruneResult:
    epsilon_optimal: float
    kept: tuple[int, ...]
    pruned: tuple[int, ...]
    complex_at_epsilon: SimplicialComplex
    death_times_used: tuple[float, ...]
    variable_names: tuple[str, ...]
    max_dim: int = 0
    dataset: MtsDataset | None = field(default=None, compare=False, repr=False)

    @property
    def kept_names(self) -> list[str]:
        return [self.variable_names[i] for i in self.kept]

    @property
    def pruned_names(self) -> list[str]:
        return [self.variable_names[i] for i in self.pruned]

    @property
    def pruned_fraction(self) -> float:
        return len(self.pruned) / len(self.variable_names)

    def kept_complex(self) -> SimplicialComplex:
        """The complex restricted to kept variables, indexed like the pruned dataset."""
        return self.complex_at_epsilon.induced(self.kept)

    def to_dict(self) -> dict:
        names = self.variable_names
        return {
            "epsilon": self.epsilon_optimal,
            "death_times": list(self.death_times_used),
            "kept": self.kept_names,
            "pruned": self.pruned_names,
            "edges": [[names[u], names[v]] for u, v in self.complex_at_epsilon.edges],
            "max_dim": self.max_dim,
        }

    def to_json(self, **extra) -> str:
        doc = self.to_dict()
        doc.update(extra)
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def median(values) -> float:
    """Median; mean of the two middle values for even-length input."""
    return float(statistics.median(values))


def death_times(barcode: Barcode, include_degenerate: bool = False) -> list[float]:
    """Finite death times of dimensions 1..N, N the top dimension with a finite bar.

    When no dimension >= 1 has a finite bar, falls back to the finite
    dimension-0 deaths (the merge scales). If degenerate bars are excluded and
    that leaves nothing, the degenerate dimension-0 deaths are used.
    """
    top = 0
    for p in range(1, barcode.max_dim + 1):
        if barcode.finite_deaths(p, include_degenerate):
            top = p
    out: list[float] = []
    for p in range(1, top + 1):
        out.extend(barcode.finite_deaths(p, include_degenerate))
    if out:
        return out
    out = barcode.finite_deaths(0, include_degenerate)
    if not out:
        out = barcode.finite_deaths(0, include_degenerate=True)
    return out


def optimal_epsilon(dist: np.ndarray, max_dim: int | None = None, include_degenerate: bool = False) -> tuple[float, list[float]]:
    """Median death time of the barcode, together with the death times it came from."""
    dist = check_distance_matrix(dist)
    if dist.shape[0] < 2:
        raise ValueError("need at least 2 variables")
    barcode = compute_barcode(dist, max_dim)
    times = death_times(barcode, include_degenerate)
    return median(times), times


def prune(dataset: MtsDataset, dist: np.ndarray, epsilon: float, max_dim: int | None = None,
          death_times_used=()) -> PruneResult:
    """Drop variables that have no edge in the VR complex at ``epsilon``."""
    dist = check_distance_matrix(dist)
    if dist.shape[0] != dataset.n_vars:
        raise ValueError(f"distance matrix is {dist.shape[0]}x{dist.shape[0]} but dataset has {dataset.n_vars} variables")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    if max_dim is None:
        max_dim = default_max_dim(dataset.n_vars)
    cx = vietoris_rips(dist, epsilon, max_dim)
    kept = tuple(v for v in range(dataset.n_vars) if degree(cx, v) > 0)
    pruned = tuple(v for v in range(dataset.n_vars) if v not in kept)
    if not kept:
        raise DegenerateStateError(f"empty pruned dataset: no variable has a neighbour at epsilon={epsilon!r}")
    return PruneResult(
        epsilon_optimal=float(epsilon),
        kept=kept,
        pruned=pruned,
        complex_at_epsilon=cx,
        death_times_used=tuple(float(t) for t in death_times_used),
        variable_names=dataset.variable_names,
        max_dim=max_dim,
        dataset=dataset.select_variables(kept),
    )


def distance_matrix(dataset: MtsDataset) -> np.ndarray:
    return correlation_to_distance(compute_correlation(dataset))


def run_pipeline(dataset: MtsDataset, config: PruneConfig | None = None, log_level: int = logging.INFO) -> PruneResult:
    """Correlation -> distance -> median death time -> prune.

    Death times, epsilon and the kept/pruned names are logged at ``log_level``.
    """
    config = config or PruneConfig()
    dist = distance_matrix(dataset)
    if config.max_dim is None:
        max_dim = default_max_dim(dataset.n_vars)
    else:
        max_dim = min(config.max_dim, max(dataset.n_vars - 1, 0))
    if config.epsilon is not None:
        eps, times = float(config.epsilon), []
    else:
        eps, times = optimal_epsilon(dist, max_dim, config.include_degenerate)
    logger.log(log_level, "death times: %s", times)
    logger.log(log_level, "epsilon: %r", eps)
    result = prune(dataset, dist, eps, max_dim, times)
    logger.log(log_level, "kept: %s", result.kept_names)
    logger.log(log_level, "pruned: %s", result.pruned_names)
    return result
