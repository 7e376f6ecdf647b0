"""Abstract simplicial complexes over variable indices and Vietoris-Rips construction.

A simplex is a strictly increasing tuple of vertex indices; its dimension is
``len(simplex) - 1``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

from .mts import check_distance_matrix

Simplex = tuple[int, ...]


def make_simplex(vertices: Iterable[int]) -> Simplex:
    """Canonical sorted form; rejects empty input and repeated vertices."""
    s = tuple(sorted(int(v) for v in vertices))
    if not s:
        raise ValueError("a simplex needs at least one vertex")
    if len(set(s)) != len(s):
        raise ValueError(f"repeated vertex in simplex {s}")
    return s


def dimension(simplex: Simplex) -> int:
    return len(simplex) - 1


def boundary_faces(simplex: Simplex) -> list[Simplex]:
    """Codimension-one faces, in the order obtained by dropping each vertex in turn."""
    if len(simplex) == 1:
        return []
    return [simplex[:k] + simplex[k + 1:] for k in range(len(simplex))]


def default_max_dim(n_vertices: int) -> int:
    return max(0, min(n_vertices - 1, 3))


@dataclass(frozen=True)
class SimplicialComplex:
    """Downward-closed family of simplices on vertices ``0..n_vertices-1``.

    ``faces[d]`` holds the d-simplices in lexicographic order. Build instances
    with :meth:`from_simplices` (which takes the closure) or
    :func:`vietoris_rips`; the raw constructor validates but does not close.
    """

    n_vertices: int
    faces: tuple[tuple[Simplex, ...], ...]

    def __post_init__(self):
        for d, layer in enumerate(self.faces):
            for s in layer:
                if len(s) != d + 1 or list(s) != sorted(set(s)):
                    raise ValueError(f"bad {d}-simplex {s}")
                if s[0] < 0 or s[-1] >= self.n_vertices:
                    raise ValueError(f"simplex {s} has a vertex outside 0..{self.n_vertices - 1}")
        if not self.is_closed():
            raise ValueError("face set is not downward closed")

    @classmethod
    def from_simplices(cls, n_vertices: int, simplices: Iterable[Iterable[int]]) -> SimplicialComplex:
        """Closure of the given simplices, plus every vertex as a 0-face."""
        layers: list[set[Simplex]] = [set((v,) for v in range(n_vertices))]
        for raw in simplices:
            s = make_simplex(raw)
            for k in range(2, len(s) + 1):
                while len(layers) < k:
                    layers.append(set())
                layers[k - 1].update(itertools.combinations(s, k))
        return cls(n_vertices, tuple(tuple(sorted(layer)) for layer in layers))

    @property
    def max_dim(self) -> int:
        """Largest dimension with at least one face (-1 for the empty complex)."""
        for d in range(len(self.faces) - 1, -1, -1):
            if self.faces[d]:
                return d
        return -1

    def simplices(self, dim: int | None = None) -> Iterator[Simplex]:
        if dim is not None:
            if 0 <= dim < len(self.faces):
                yield from self.faces[dim]
            return
        for layer in self.faces:
            yield from layer

    @property
    def edges(self) -> tuple[Simplex, ...]:
        return self.faces[1] if len(self.faces) > 1 else ()

    def count(self, dim: int) -> int:
        return len(self.faces[dim]) if 0 <= dim < len(self.faces) else 0

    @cached_property
    def _face_set(self) -> frozenset[Simplex]:
        return frozenset(self.simplices())

    def __contains__(self, simplex) -> bool:
        return tuple(simplex) in self._face_set

    def __len__(self) -> int:
        return sum(len(layer) for layer in self.faces)

    def issubset(self, other: SimplicialComplex) -> bool:
        return all(s in other for s in self.simplices())

    def is_closed(self) -> bool:
        present = self._face_set
        return all(f in present for s in present for f in boundary_faces(s))

    def maximal_faces(self) -> list[Simplex]:
        covered: set[Simplex] = set()
        for layer in self.faces[1:]:
            for s in layer:
                covered.update(boundary_faces(s))
        return [s for s in self.simplices() if s not in covered]

    def induced(self, vertices: Sequence[int]) -> SimplicialComplex:
        """Subcomplex on ``vertices``, relabelled to ``0..len(vertices)-1`` in the given order."""
        relabel = {v: k for k, v in enumerate(vertices)}
        kept = []
        for s in self.simplices():
            if all(v in relabel for v in s):
                kept.append([relabel[v] for v in s])
        return SimplicialComplex.from_simplices(len(vertices), kept)

    def to_json(self) -> str:
        doc = {"n_vertices": self.n_vertices, "faces": [list(s) for s in self.maximal_faces()]}
        return json.dumps(doc, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> SimplicialComplex:
        doc = json.loads(text)
        return cls.from_simplices(int(doc["n_vertices"]), doc["faces"])


def _cliques(adjacent: list[set[int]], n: int, max_dim: int) -> list[list[Simplex]]:
    layers: list[list[Simplex]] = [[(v,) for v in range(n)]]
    frontier = [((v,), adjacent[v]) for v in range(n)]
    for _ in range(max_dim):
        nxt = []
        for s, common in frontier:
            for w in sorted(u for u in common if u > s[-1]):
                nxt.append((s + (w,), common & adjacent[w]))
        if not nxt:
            break
        layers.append([s for s, _ in nxt])
        frontier = nxt
    return layers


def flag_complex(n_vertices: int, edges: Iterable[Sequence[int]], max_dim: int) -> SimplicialComplex:
    """Clique complex of a graph, truncated at ``max_dim``."""
    adjacent: list[set[int]] = [set() for _ in range(n_vertices)]
    for u, v in edges:
        if u == v or not (0 <= u < n_vertices and 0 <= v < n_vertices):
            raise ValueError(f"invalid edge ({u}, {v}) on {n_vertices} vertices")
        adjacent[u].add(v)
        adjacent[v].add(u)
    layers = _cliques(adjacent, n_vertices, max_dim)
    return SimplicialComplex(n_vertices, tuple(tuple(sorted(layer)) for layer in layers))


def vietoris_rips(dist: np.ndarray, epsilon: float, max_dim: int | None = None) -> SimplicialComplex:
    """Vietoris-Rips complex at scale ``epsilon``.

    A simplex is included when all its vertices are pairwise at distance
    ``<= epsilon`` (closed threshold). The matrix only needs to be a symmetric
    dissimilarity; the triangle inequality is not required.
    """
    dist = check_distance_matrix(dist)
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    n = dist.shape[0]
    if max_dim is None:
        max_dim = default_max_dim(n)
    if max_dim < 0:
        raise ValueError("max_dim must be non-negative")
    iu, ju = np.nonzero(np.triu(dist <= epsilon, k=1))
    return flag_complex(n, zip(iu.tolist(), ju.tolist()), max_dim)


def degree(complex_: SimplicialComplex, v: int) -> int:
    """Number of edges containing vertex ``v``."""
    if not 0 <= v < complex_.n_vertices:
        raise IndexError(f"vertex {v} out of range 0..{complex_.n_vertices - 1}")
    return sum(1 for e in complex_.edges if v in e)


def connected_components(complex_: SimplicialComplex) -> list[list[int]]:
    """Components of the 1-skeleton, each sorted, listed by least vertex."""
    parent = list(range(complex_.n_vertices))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in complex_.edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    groups: dict[int, list[int]] = {}
    for v in range(complex_.n_vertices):
        groups.setdefault(find(v), []).append(v)
    return sorted(groups.values(), key=lambda g: g[0])
