"""Sheaves with identity restriction maps on a variable complex, and consistency features.

Each vertex holds one variable's reading (a vector of length ``stalk_dim``,
scalar by default). Because every restriction map is the identity, the value a
vertex pushes onto a face is its own reading, and a face's disagreement is the
spread of its vertices' readings.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .exceptions import DatasetError
from .mts import MtsDataset
from .simplicial import Simplex, SimplicialComplex, boundary_faces

STD_FLOOR = 1e-12


@dataclass(frozen=True)
class SheafComplex:
    base: SimplicialComplex
    stalk_dim: int = 1

    def __post_init__(self):
        if self.stalk_dim < 1:
            raise ValueError("stalk_dim must be >= 1")

    @property
    def n_vertices(self) -> int:
        return self.base.n_vertices

    def higher_faces(self) -> list[Simplex]:
        """Faces of dimension >= 1, by dimension then lexicographically."""
        return [s for s in self.base.simplices() if len(s) > 1]


@dataclass(frozen=True)
class Assignment:
    """Readings on every vertex for one timestep, shape ``(n_vertices, stalk_dim)``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise ValueError(f"assignment must be 1-d or 2-d, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError("assignment values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_vertices(self) -> int:
        return self.values.shape[0]

    def check(self, sheaf: SheafComplex) -> None:
        if self.values.shape != (sheaf.n_vertices, sheaf.stalk_dim):
            raise ValueError(
                f"assignment shape {self.values.shape} does not match sheaf "
                f"({sheaf.n_vertices}, {sheaf.stalk_dim})"
            )


def delta(face: Simplex, assignment: Assignment) -> float:
    """Consistency of a face: sqrt(trace(Cov(Y)) / (d + 1)), population covariance.

    ``Y`` stacks the d+1 vertex readings of the face.
    """
    if len(face) < 2:
        raise ValueError(f"delta needs a face of dimension >= 1, got {face}")
    y = assignment.values[list(face)]
    if np.all(y == y[0]):
        return 0.0
    # power-of-two rescaling is exact, so unequal readings stay unequal and nothing overflows
    exponent = int(np.frexp(np.abs(y).max())[1])
    z = np.ldexp(y, -exponent)
    trace = float(np.sum(np.var(z - z[0], axis=0)))
    # keep unequal readings strictly positive even if the true value underflows
    return max(math.ldexp(math.sqrt(trace / len(face)), exponent), math.ulp(0.0))


def c_epsilon(face: Simplex, assignment: Assignment, eps: float) -> bool:
    return delta(face, assignment) <= eps


def is_global_section(assignment: Assignment, sheaf: SheafComplex) -> bool:
    """True when every edge carries equal readings at both ends."""
    assignment.check(sheaf)
    v = assignment.values
    return all(np.array_equal(v[a], v[b]) for a, b in sheaf.base.edges)


def _all_deltas(assignment: Assignment, sheaf: SheafComplex) -> dict[Simplex, float]:
    assignment.check(sheaf)
    return {s: delta(s, assignment) for s in sheaf.higher_faces()}


def consistency_radius(assignment: Assignment, sheaf: SheafComplex) -> float:
    """Largest face delta, i.e. the least eps at which every face passes ``c_epsilon``."""
    return max(_all_deltas(assignment, sheaf).values(), default=0.0)


@dataclass(frozen=True)
class ConsistencyReport:
    deltas: Mapping[Simplex, float]
    radius: float
    landmarks: tuple[float, ...]
    sheaf: SheafComplex = field(repr=False, compare=False, default=None)

    def subcomplex(self, eps: float) -> SimplicialComplex:
        """Consistent subcomplex at ``eps``: all vertices plus faces that pass
        at ``eps`` and whose every sub-face of dimension >= 1 also passes."""
        keep: set[Simplex] = set()
        for s, d in sorted(self.deltas.items(), key=lambda kv: (len(kv[0]), kv[0])):
            if d <= eps and all(len(f) < 2 or f in keep for f in boundary_faces(s)):
                keep.add(s)
        return SimplicialComplex.from_simplices(self.sheaf.n_vertices, sorted(keep))

    def to_dict(self, names=None) -> dict:
        def key(s):
            return "-".join(str(names[v]) if names else str(v) for v in s)

        return {
            "radius": self.radius,
            "landmarks": list(self.landmarks),
            "deltas": {key(s): d for s, d in self.deltas.items()},
        }

    def to_json(self, names=None) -> str:
        return json.dumps(self.to_dict(names), sort_keys=True, indent=2) + "\n"


def consistency_filtration(assignment: Assignment, sheaf: SheafComplex) -> ConsistencyReport:
    deltas = _all_deltas(assignment, sheaf)
    landmarks = tuple(sorted({0.0, *deltas.values()}))
    return ConsistencyReport(deltas, landmarks[-1], landmarks, sheaf)


def channel_name(face: Simplex, names) -> str:
    return "delta__" + "__".join(str(names[v]) for v in face)


@dataclass(frozen=True)
class Normalizer:
    """Per-variable z-score, fitted on one dataset and applied to others."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, dataset: MtsDataset) -> Normalizer:
        return cls(dataset.values.mean(axis=(0, 2)), dataset.values.std(axis=(0, 2)))

    def transform(self, values: np.ndarray) -> np.ndarray:
        """z-score ``(n_instances, n_vars, T)``; constant variables map to 0."""
        safe = np.where(self.std < STD_FLOOR, 1.0, self.std)
        z = (values - self.mean[None, :, None]) / safe[None, :, None]
        z[:, self.std < STD_FLOOR, :] = 0.0
        return z


def delta_channels(values: np.ndarray, faces: list[Simplex]) -> np.ndarray:
    """Per-timestep delta of each face for scalar stalks; shape ``(n_instances, n_faces, T)``.

    Vectorised equivalent of calling :func:`delta` on every (instance, timestep).
    """
    n_inst, _, n_t = values.shape
    out = np.empty((n_inst, len(faces), n_t))
    for k, face in enumerate(faces):
        y = values[:, list(face), :]
        # centring on the first vertex makes equal readings give exactly 0
        y = y - y[:, :1, :]
        out[:, k, :] = np.sqrt(np.var(y, axis=1) / len(face))
    return out


def sheaf_features(dataset: MtsDataset, sheaf: SheafComplex, normalize: bool = True,
                   normalizer: Normalizer | None = None) -> MtsDataset:
    """Append one ``delta__<v1>__<v2>...`` channel per face of dimension >= 1.

    Readings are z-scored first when ``normalize`` is set, using ``normalizer``
    if given (e.g. fitted on a training split) or statistics of ``dataset``
    itself. Original channels are passed through untouched.
    """
    if sheaf.n_vertices != dataset.n_vars:
        raise DatasetError(f"sheaf has {sheaf.n_vertices} vertices but dataset has {dataset.n_vars} variables")
    if sheaf.stalk_dim != 1:
        raise ValueError("sheaf_features supports scalar stalks only")
    faces = sheaf.higher_faces()
    if not faces:
        return dataset
    values = dataset.values
    if normalize:
        values = (normalizer or Normalizer.fit(dataset)).transform(values)
    names = [channel_name(f, dataset.variable_names) for f in faces]
    return dataset.append_variables(names, delta_channels(values, faces))
