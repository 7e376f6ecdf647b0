"""Multivariate time-series datasets, CSV ingestion and the correlation/distance transform."""

from __future__ import annotations

import csv
import io
import logging
import os
import re
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .exceptions import DatasetError

logger = logging.getLogger(__name__)

FORMATS = ("long_csv", "wide_csv")
_FORMAT_ALIASES = {"long": "long_csv", "wide": "wide_csv", "long_csv": "long_csv", "wide_csv": "wide_csv"}
_WIDE_COLUMN = re.compile(r"^(?P<var>.+)__t(?P<t>\d+)$")


@dataclass(frozen=True)
class MtsDataset:
    """Labeled collection of equal-length multivariate series.

    ``values`` has shape ``(n_instances, n_vars, n_timesteps)``. The array is
    copied and frozen on construction so datasets can be shared freely.
    """

    values: np.ndarray
    variable_names: tuple[str, ...]
    instance_ids: tuple[str, ...] = ()
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise DatasetError(f"values must be 3-d (instances, vars, timesteps), got shape {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "variable_names", tuple(str(v) for v in self.variable_names))
        n_inst, n_vars, _ = values.shape
        if not self.instance_ids:
            object.__setattr__(self, "instance_ids", tuple(str(i) for i in range(n_inst)))
        else:
            object.__setattr__(self, "instance_ids", tuple(str(i) for i in self.instance_ids))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(str(lab) for lab in self.labels))

        if len(self.variable_names) != n_vars:
            raise DatasetError(f"{len(self.variable_names)} variable names for {n_vars} variables")
        if len(set(self.variable_names)) != n_vars:
            raise DatasetError("variable names must be unique")
        if len(self.instance_ids) != n_inst:
            raise DatasetError(f"{len(self.instance_ids)} instance ids for {n_inst} instances")
        if len(set(self.instance_ids)) != n_inst:
            raise DatasetError("instance ids must be unique")
        if self.labels is not None and len(self.labels) != n_inst:
            raise DatasetError(f"{len(self.labels)} labels for {n_inst} instances")
        if not np.isfinite(values).all():
            i, v, t = np.argwhere(~np.isfinite(values))[0]
            raise DatasetError(
                f"non-finite value at ({self.instance_ids[i]},{self.variable_names[v]},{t})"
            )

    @property
    def n_instances(self) -> int:
        return self.values.shape[0]

    @property
    def n_vars(self) -> int:
        return self.values.shape[1]

    @property
    def n_timesteps(self) -> int:
        return self.values.shape[2]

    @property
    def is_labeled(self) -> bool:
        return self.labels is not None

    def select_variables(self, indices: Sequence[int]) -> MtsDataset:
        """Restrict to the given variables, keeping the order they are passed in."""
        idx = list(indices)
        return MtsDataset(
            self.values[:, idx, :],
            tuple(self.variable_names[i] for i in idx),
            self.instance_ids,
            self.labels,
        )

    def select_instances(self, indices: Sequence[int]) -> MtsDataset:
        idx = list(indices)
        labels = None if self.labels is None else tuple(self.labels[i] for i in idx)
        return MtsDataset(self.values[idx], self.variable_names, tuple(self.instance_ids[i] for i in idx), labels)

    def append_variables(self, names: Sequence[str], values: np.ndarray) -> MtsDataset:
        """Return a new dataset with extra channels appended after the existing ones."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape[1] == 0:
            return self
        return MtsDataset(
            np.concatenate([self.values, values], axis=1),
            self.variable_names + tuple(names),
            self.instance_ids,
            self.labels,
        )


def _as_float(raw: str, where: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise DatasetError(f"non-numeric value {raw!r} at {where}") from None


def _read_rows(path: str | os.PathLike) -> tuple[list[str], list[list[str]]]:
    if not os.path.exists(path):
        raise DatasetError(f"input file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise DatasetError(f"input file is empty: {path}")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise DatasetError(f"input file has a header but no data rows: {path}")
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DatasetError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
    return header, body


def _load_long(path) -> MtsDataset:
    header, body = _read_rows(path)
    if len(header) < 3 or header[0] != "instance" or "timestep" not in header:
        raise DatasetError("long_csv header must be: instance,timestep[,label],<var1>,...")
    t_col = header.index("timestep")
    label_col = header.index("label") if "label" in header else None
    var_cols = [j for j in range(1, len(header)) if j not in (t_col, label_col)]
    if not var_cols:
        raise DatasetError("long_csv has no variable columns")
    var_names = [header[j] for j in var_cols]
    if len(set(var_names)) != len(var_names):
        raise DatasetError("duplicate variable names in header")

    order: list[str] = []
    cells: dict[str, dict[int, list[float]]] = {}
    labels: dict[str, str] = {}
    for lineno, row in enumerate(body, start=2):
        inst = row[0].strip()
        try:
            t = int(row[t_col])
        except ValueError:
            raise DatasetError(f"line {lineno}: timestep {row[t_col]!r} is not an integer") from None
        if inst not in cells:
            order.append(inst)
            cells[inst] = {}
        if t in cells[inst]:
            raise DatasetError(f"duplicate row for instance {inst!r}, timestep {t}")
        if label_col is not None:
            lab = row[label_col].strip()
            if labels.setdefault(inst, lab) != lab:
                raise DatasetError(f"instance {inst!r} has more than one label")
        cells[inst][t] = [_as_float(row[j], f"({inst},{header[j]},{t})") for j in var_cols]

    lengths = {inst: len(steps) for inst, steps in cells.items()}
    n_t = lengths[order[0]]
    for inst in order:
        if lengths[inst] != n_t:
            raise DatasetError(
                f"ragged series: instance {inst!r} has {lengths[inst]} timesteps, "
                f"instance {order[0]!r} has {n_t}"
            )
        if sorted(cells[inst]) != list(range(n_t)):
            raise DatasetError(f"instance {inst!r}: timesteps must be 0..{n_t - 1}")
    values = np.array([[cells[inst][t] for t in range(n_t)] for inst in order]).transpose(0, 2, 1)
    lab = tuple(labels[i] for i in order) if label_col is not None else None
    return MtsDataset(values, tuple(var_names), tuple(order), lab)


def _load_wide(path) -> MtsDataset:
    header, body = _read_rows(path)
    if header[0] != "instance":
        raise DatasetError("wide_csv header must start with: instance[,label],<var>__t<k>,...")
    label_col = header.index("label") if "label" in header else None
    layout: dict[str, dict[int, int]] = {}
    for j, name in enumerate(header):
        if j == 0 or j == label_col:
            continue
        m = _WIDE_COLUMN.match(name)
        if m is None:
            raise DatasetError(f"wide_csv column {name!r} does not match <var>__t<k>")
        var, t = m.group("var"), int(m.group("t"))
        if t in layout.setdefault(var, {}):
            raise DatasetError(f"duplicate column {name!r}")
        layout[var][t] = j
    var_names = list(layout)
    n_t = len(layout[var_names[0]])
    for var in var_names:
        if sorted(layout[var]) != list(range(len(layout[var]))) or len(layout[var]) != n_t:
            raise DatasetError(f"ragged series: variable {var!r} does not have timesteps 0..{n_t - 1}")

    ids, labels, values = [], [], []
    for row in body:
        inst = row[0].strip()
        ids.append(inst)
        if label_col is not None:
            labels.append(row[label_col].strip())
        values.append(
            [[_as_float(row[layout[v][t]], f"({inst},{v},{t})") for t in range(n_t)] for v in var_names]
        )
    if len(set(ids)) != len(ids):
        raise DatasetError("duplicate instance ids")
    return MtsDataset(np.array(values), tuple(var_names), tuple(ids), tuple(labels) if label_col is not None else None)


def load_dataset(path: str | os.PathLike, format: str = "long_csv") -> MtsDataset:
    """Read a dataset from CSV. ``format`` is ``long_csv``/``long`` or ``wide_csv``/``wide``."""
    fmt = _FORMAT_ALIASES.get(format)
    if fmt is None:
        raise DatasetError(f"unknown format {format!r}; expected one of {FORMATS}")
    ds = _load_long(path) if fmt == "long_csv" else _load_wide(path)
    logger.debug("loaded %s: %d instances, %d variables, %d timesteps", path, ds.n_instances, ds.n_vars, ds.n_timesteps)
    return ds


def _fmt(x: float) -> str:
    return repr(float(x))


def dumps_long_csv(dataset: MtsDataset) -> str:
    """Serialize in long format. Floats use ``repr`` so a reload is bit-exact."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = ["instance", "timestep"] + (["label"] if dataset.is_labeled else []) + list(dataset.variable_names)
    w.writerow(head)
    for i, inst in enumerate(dataset.instance_ids):
        lab = [dataset.labels[i]] if dataset.is_labeled else []
        for t in range(dataset.n_timesteps):
            w.writerow([inst, t] + lab + [_fmt(x) for x in dataset.values[i, :, t]])
    return buf.getvalue()


def dumps_wide_csv(dataset: MtsDataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = [f"{v}__t{t}" for v in dataset.variable_names for t in range(dataset.n_timesteps)]
    w.writerow(["instance"] + (["label"] if dataset.is_labeled else []) + cols)
    for i, inst in enumerate(dataset.instance_ids):
        lab = [dataset.labels[i]] if dataset.is_labeled else []
        w.writerow([inst] + lab + [_fmt(x) for x in dataset.values[i].ravel()])
    return buf.getvalue()


def _instance_correlation(x: np.ndarray) -> np.ndarray:
    """Pearson matrix of one (n_vars, T) panel; NaN where a variable is constant."""
    constant = np.ptp(x, axis=1) == 0
    xc = x - x.mean(axis=1, keepdims=True)
    cov = xc @ xc.T
    var = np.diag(cov)
    with np.errstate(divide="ignore", invalid="ignore"):
        # sqrt of the product (not product of sqrts) keeps corr(x, x) exactly 1
        corr = cov / np.sqrt(np.outer(var, var))
    corr[constant, :] = np.nan
    corr[:, constant] = np.nan
    return corr


def compute_correlation(dataset: MtsDataset) -> np.ndarray:
    """Instance-averaged Pearson correlation between variables.

    Each instance contributes its own correlation over the time axis; pairs
    undefined in an instance (a constant variable) are skipped for that
    instance, and pairs undefined everywhere are set to 0 with a warning.
    The result is clamped to [-1, 1], symmetrized and has a unit diagonal.
    """
    if dataset.n_timesteps < 2:
        raise DatasetError("correlation needs at least 2 timesteps")
    n = dataset.n_vars
    total = np.zeros((n, n))
    count = np.zeros((n, n))
    # sequential fold in instance order keeps the result run-to-run identical
    for x in dataset.values:
        c = _instance_correlation(x)
        ok = np.isfinite(c)
        total[ok] += c[ok]
        count[ok] += 1
    with np.errstate(invalid="ignore"):
        corr = np.where(count > 0, total / np.maximum(count, 1), 0.0)
    never = np.where(np.diag(count) == 0)[0]
    if len(never):
        names = [dataset.variable_names[i] for i in never]
        warnings.warn(f"zero-variance variable(s) {names}: correlation set to 0", RuntimeWarning, stacklevel=2)
    corr = np.clip(corr, -1.0, 1.0)
    corr = (corr + corr.T) / 2
    np.fill_diagonal(corr, 1.0)
    return corr


def check_correlation_matrix(corr: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    corr = np.asarray(corr, dtype=np.float64)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise ValueError(f"correlation matrix must be square, got shape {corr.shape}")
    if not np.allclose(corr, corr.T, rtol=0, atol=atol):
        raise ValueError("correlation matrix is not symmetric")
    if np.any(np.abs(np.diag(corr) - 1) > atol):
        raise ValueError("correlation matrix diagonal must be 1")
    if np.any(corr < -1 - atol) or np.any(corr > 1 + atol):
        raise ValueError("correlation entries must lie in [-1, 1]")
    return corr


def check_distance_matrix(dist: np.ndarray) -> np.ndarray:
    """Validate a symmetric dissimilarity matrix with zero diagonal; returns it as float64."""
    dist = np.asarray(dist, dtype=np.float64)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {dist.shape}")
    if not np.isfinite(dist).all():
        raise ValueError("distance matrix has non-finite entries")
    if not np.array_equal(dist, dist.T):
        raise ValueError("distance matrix is not symmetric")
    if np.any(np.diag(dist) != 0):
        raise ValueError("distance matrix diagonal must be 0")
    if np.any(dist < 0):
        raise ValueError("distance matrix has negative entries")
    return dist


def correlation_to_distance(corr: np.ndarray) -> np.ndarray:
    """Map correlations to distances, ``sqrt(2 * (1 - C))``; diagonal is exactly 0."""
    corr = check_correlation_matrix(corr)
    dist = np.sqrt(2.0 * (1.0 - np.clip(corr, -1.0, 1.0)))
    np.fill_diagonal(dist, 0.0)
    return dist


def distance_to_correlation(dist: np.ndarray) -> np.ndarray:
    return 1.0 - np.asarray(dist, dtype=np.float64) ** 2 / 2.0


def stack(datasets: Iterable[MtsDataset]) -> MtsDataset:
    datasets = list(datasets)
    first = datasets[0]
    labels = None
    if all(d.is_labeled for d in datasets):
        labels = tuple(lab for d in datasets for lab in d.labels)
    return MtsDataset(
        np.concatenate([d.values for d in datasets]),
        first.variable_names,
        tuple(i for d in datasets for i in d.instance_ids),
        labels,
    )


__all__ = [
    "FORMATS",
    "MtsDataset",
    "check_correlation_matrix",
    "check_distance_matrix",
    "compute_correlation",
    "correlation_to_distance",
    "distance_to_correlation",
    "dumps_long_csv",
    "dumps_wide_csv",
    "load_dataset",
    "stack",
]
