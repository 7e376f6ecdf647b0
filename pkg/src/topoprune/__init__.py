"""Unsupervised variable pruning for multivariate time series via persistent homology
of the inter-variable correlation distance, plus sheaf consistency features."""

__version__ = "0.1.0"

from .exceptions import DatasetError, DegenerateStateError, OutputError, TopoPruneError
from .mts import MtsDataset, compute_correlation, correlation_to_distance, load_dataset
from .persistence import Barcode, Filtration, PersistencePair, build_filtration, persistent_betti, reduce
from .pruner import PruneConfig, PruneResult, optimal_epsilon, prune, run_pipeline
from .sheaf import Assignment, SheafComplex, consistency_filtration, consistency_radius, delta, sheaf_features
from .simplicial import SimplicialComplex, connected_components, degree, vietoris_rips

__all__ = [
    "Assignment",
    "Barcode",
    "DatasetError",
    "DegenerateStateError",
    "Filtration",
    "MtsDataset",
    "OutputError",
    "PersistencePair",
    "PruneConfig",
    "PruneResult",
    "SheafComplex",
    "SimplicialComplex",
    "TopoPruneError",
    "build_filtration",
    "compute_correlation",
    "connected_components",
    "consistency_filtration",
    "consistency_radius",
    "correlation_to_distance",
    "degree",
    "delta",
    "load_dataset",
    "optimal_epsilon",
    "persistent_betti",
    "prune",
    "reduce",
    "run_pipeline",
    "sheaf_features",
    "vietoris_rips",
]
