"""Small deterministic classification harness for comparing full, pruned and sheaf-augmented data.

Pruning and normalisation are always fitted on the training fold and applied
to the test fold.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import DatasetError
from .mts import MtsDataset
from .pruner import PruneConfig, run_pipeline
from .sheaf import Normalizer, SheafComplex, sheaf_features

logger = logging.getLogger(__name__)

VARIANTS = ("full", "pruned", "pruned_plus_sheaf")


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    folds: int = 5
    seed: int = 42

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must be in (0, 1)")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float


def _harmonic(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def compute_metrics(y_true, y_pred) -> Metrics:
    """Accuracy plus macro precision/recall; f1 is the harmonic mean of those two."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    classes = sorted(set(y_true.tolist()) | set(y_pred.tolist()))
    precisions, recalls = [], []
    for c in classes:
        tp = np.sum((y_pred == c) & (y_true == c))
        n_pred = np.sum(y_pred == c)
        n_true = np.sum(y_true == c)
        precisions.append(tp / n_pred if n_pred else 0.0)
        recalls.append(tp / n_true if n_true else 0.0)
    p = float(np.mean(precisions))
    r = float(np.mean(recalls))
    return Metrics(float(np.mean(y_true == y_pred)), p, r, _harmonic(p, r))


def _flatten(train: MtsDataset, test: MtsDataset) -> tuple[np.ndarray, np.ndarray]:
    if not train.n_instances:
        raise DatasetError("empty training set")
    if train.variable_names != test.variable_names:
        raise DatasetError("train and test have different variables")
    if not train.is_labeled:
        raise DatasetError("training set is unlabeled")
    norm = Normalizer.fit(train)
    xtr = norm.transform(train.values).reshape(train.n_instances, -1)
    xte = norm.transform(test.values).reshape(test.n_instances, -1)
    return xtr, xte


def classify_1nn(train: MtsDataset, test: MtsDataset) -> list[str]:
    """Label of the nearest training instance (Euclidean, per-variable z-scored).

    Ties go to the lowest training index.
    """
    xtr, xte = _flatten(train, test)
    d2 = ((xte[:, None, :] - xtr[None, :, :]) ** 2).sum(axis=2)
    nearest = np.argmin(d2, axis=1)
    return [train.labels[k] for k in nearest]


def classify_centroid(train: MtsDataset, test: MtsDataset) -> list[str]:
    xtr, xte = _flatten(train, test)
    labels = np.asarray(train.labels)
    classes = sorted(set(train.labels))
    centroids = np.stack([xtr[labels == c].mean(axis=0) for c in classes])
    d2 = ((xte[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return [classes[k] for k in np.argmin(d2, axis=1)]


CLASSIFIERS = {"1nn": classify_1nn, "centroid": classify_centroid}


def stratified_folds(labels, folds: int, seed: int) -> np.ndarray:
    """Fold id per instance: each class is shuffled with its own seeded stream, then dealt round-robin."""
    labels = list(labels)
    classes = sorted(set(labels))
    out = np.empty(len(labels), dtype=int)
    for ci, c in enumerate(classes):
        idx = np.array([k for k, lab in enumerate(labels) if lab == c])
        if len(idx) < folds:
            raise DatasetError(f"class {c!r} has {len(idx)} instances, fewer than folds={folds}")
        rng = np.random.default_rng([seed, ci])
        out[rng.permutation(idx)] = np.arange(len(idx)) % folds
    return out


def holdout_split(labels, train_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Stratified train/test index split."""
    labels = list(labels)
    train, test = [], []
    for ci, c in enumerate(sorted(set(labels))):
        idx = np.array([k for k, lab in enumerate(labels) if lab == c])
        idx = np.random.default_rng([seed, ci]).permutation(idx)
        n_train = min(max(1, int(round(train_fraction * len(idx)))), len(idx))
        train.extend(idx[:n_train].tolist())
        test.extend(idx[n_train:].tolist())
    return np.array(sorted(train)), np.array(sorted(test))


def prepare_variant(train: MtsDataset, test: MtsDataset, variant: str,
                    prune_config: PruneConfig | None = None,
                    normalize_sheaf: bool = True) -> tuple[MtsDataset, MtsDataset, dict]:
    """Fit the variant's preprocessing on ``train`` and apply it to both splits."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    info: dict = {}
    if variant == "full":
        return train, test, info
    result = run_pipeline(train, prune_config, log_level=logging.DEBUG)
    info = {"epsilon": result.epsilon_optimal, "kept": result.kept_names, "pruned": result.pruned_names}
    train_p = train.select_variables(result.kept)
    test_p = test.select_variables(result.kept)
    if variant == "pruned":
        return train_p, test_p, info
    sheaf = SheafComplex(result.kept_complex())
    norm = Normalizer.fit(train_p)
    train_a = sheaf_features(train_p, sheaf, normalize_sheaf, norm)
    test_a = sheaf_features(test_p, sheaf, normalize_sheaf, norm)
    info["sheaf_channels"] = list(train_a.variable_names[train_p.n_vars:])
    return train_a, test_a, info


@dataclass
class EvaluationResult:
    variant: str
    folds: int
    metrics: Metrics
    per_fold: list[Metrics] = field(default_factory=list)
    fold_info: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        doc = {"variant": self.variant, "folds": self.folds, **asdict(self.metrics)}
        doc["per_fold"] = [{**asdict(m), **info} for m, info in zip(self.per_fold, self.fold_info)]
        return doc

    def to_json(self, **extra) -> str:
        doc = self.to_dict()
        doc.update(extra)
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def evaluate(dataset: MtsDataset, split: SplitSpec, variant: str = "full",
             prune_config: PruneConfig | None = None, classifier: str = "1nn",
             normalize_sheaf: bool = True) -> EvaluationResult:
    """Stratified k-fold cross-validation of one variant; metrics averaged over folds.

    The reported f1 is the harmonic mean of the fold-averaged precision and recall.
    """
    if not dataset.is_labeled:
        raise DatasetError("evaluation needs a labeled dataset")
    predict = CLASSIFIERS[classifier]
    fold_of = stratified_folds(dataset.labels, split.folds, split.seed)
    per_fold, infos = [], []
    for k in range(split.folds):
        train = dataset.select_instances(np.nonzero(fold_of != k)[0])
        test = dataset.select_instances(np.nonzero(fold_of == k)[0])
        tr, te, info = prepare_variant(train, test, variant, prune_config, normalize_sheaf)
        per_fold.append(compute_metrics(te.labels, predict(tr, te)))
        infos.append({"fold": k, **info})
    p = float(np.mean([m.precision for m in per_fold]))
    r = float(np.mean([m.recall for m in per_fold]))
    acc = float(np.mean([m.accuracy for m in per_fold]))
    summary = Metrics(acc, p, r, _harmonic(p, r))
    logger.info("%s: accuracy=%.4f precision=%.4f recall=%.4f f1=%.4f", variant, *asdict(summary).values())
    return EvaluationResult(variant, split.folds, summary, per_fold, infos)
