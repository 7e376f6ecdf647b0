"""Vietoris-Rips filtrations and persistent homology over GF(2).

The barcode comes from standard column reduction of the filtration boundary
matrix. :func:`betti_numbers` and :func:`persistent_betti_rank` compute the
same quantities directly from ranks of explicit boundary matrices and serve as
an independent check on the reduction.

Homology is that of the filtration truncated at ``max_dim``: classes in the
top dimension can never die, so they show up as infinite bars.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .mts import check_distance_matrix
from .simplicial import Simplex, SimplicialComplex, boundary_faces, default_max_dim

logger = logging.getLogger(__name__)

INF = math.inf


@dataclass(frozen=True)
class Filtration:
    """Simplices in filtration order with the scale at which each appears."""

    simplices: tuple[Simplex, ...]
    appearances: tuple[float, ...]
    max_dim: int

    def __post_init__(self):
        if len(self.simplices) != len(self.appearances):
            raise ValueError("simplices and appearances differ in length")
        seen: set[Simplex] = set()
        prev = -INF
        for s, a in zip(self.simplices, self.appearances):
            if a < prev:
                raise ValueError("appearance values must be non-decreasing")
            for f in boundary_faces(s):
                if f not in seen:
                    raise ValueError(f"face {f} does not precede {s}")
            seen.add(s)
            prev = a

    def __len__(self) -> int:
        return len(self.simplices)

    def __iter__(self):
        return iter(zip(self.simplices, self.appearances))

    def values(self) -> list[float]:
        """Distinct appearance values in increasing order."""
        return sorted(set(self.appearances))

    def complex_at(self, value: float) -> SimplicialComplex:
        """Subcomplex of simplices that have appeared by ``value``."""
        n = sum(1 for s in self.simplices if len(s) == 1)
        return SimplicialComplex.from_simplices(n, [s for s, a in self if a <= value])

    def reordered(self, order: Sequence[int]) -> Filtration:
        """Same simplices in another order; the constructor re-validates it."""
        return Filtration(
            tuple(self.simplices[k] for k in order),
            tuple(self.appearances[k] for k in order),
            self.max_dim,
        )


def build_filtration(dist: np.ndarray, max_dim: int | None = None) -> Filtration:
    """Every simplex up to ``max_dim`` with its appearance (largest pairwise distance).

    Ties are broken by dimension, then lexicographically, so faces always come
    before cofaces.
    """
    dist = check_distance_matrix(dist)
    n = dist.shape[0]
    if max_dim is None:
        max_dim = default_max_dim(n)
    if max_dim < 0:
        raise ValueError("max_dim must be non-negative")
    d = dist.tolist()
    entries: list[tuple[float, int, Simplex]] = []

    def grow(s: Simplex, app: float):
        entries.append((app, len(s) - 1, s))
        if len(s) > max_dim:
            return
        for w in range(s[-1] + 1, n):
            grow(s + (w,), max([app] + [d[u][w] for u in s]))

    for v in range(n):
        grow((v,), 0.0)
    entries.sort()
    return Filtration(tuple(e[2] for e in entries), tuple(e[0] for e in entries), max_dim)


@dataclass(frozen=True)
class PersistencePair:
    dimension: int
    birth: float
    death: float

    @property
    def degenerate(self) -> bool:
        """Zero-length bar: born and killed at the same scale."""
        return self.birth == self.death

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.death)

    @property
    def persistence(self) -> float:
        return self.death - self.birth


@dataclass(frozen=True)
class Barcode:
    pairs: tuple[PersistencePair, ...]
    max_dim: int

    def dimension(self, p: int, include_degenerate: bool = True) -> list[PersistencePair]:
        return [q for q in self.pairs if q.dimension == p and (include_degenerate or not q.degenerate)]

    def finite_deaths(self, p: int, include_degenerate: bool = False) -> list[float]:
        return [q.death for q in self.dimension(p, include_degenerate) if q.is_finite]

    def betti_at(self, p: int, value: float) -> int:
        """Betti number of the complex at ``value`` read off the bars."""
        return sum(1 for q in self.pairs if q.dimension == p and q.birth <= value < q.death)

    def counts(self) -> dict[int, dict[str, int]]:
        out = {}
        for p in range(self.max_dim + 1):
            bars = self.dimension(p)
            out[p] = {
                "total": len(bars),
                "finite": sum(q.is_finite for q in bars),
                "infinite": sum(not q.is_finite for q in bars),
                "degenerate": sum(q.degenerate for q in bars),
            }
        return out

    def as_tuples(self) -> list[tuple[int, float, float]]:
        return [(q.dimension, q.birth, q.death) for q in self.pairs]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dimension", "birth", "death"])
        for q in self.pairs:
            w.writerow([q.dimension, repr(float(q.birth)), "inf" if not q.is_finite else repr(float(q.death))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, max_dim: int | None = None) -> Barcode:
        rows = list(csv.DictReader(io.StringIO(text)))
        pairs = [PersistencePair(int(r["dimension"]), float(r["birth"]), float(r["death"])) for r in rows]
        if max_dim is None:
            max_dim = max((q.dimension for q in pairs), default=0)
        return cls(tuple(sorted(pairs, key=_pair_key)), max_dim)


def _pair_key(q: PersistencePair):
    return (q.dimension, q.birth, q.death)


def persistence_pairs(filtration: Filtration) -> tuple[list[tuple[int, int]], list[int]]:
    """Pair creators with destroyers by left-to-right column reduction.

    Returns ``(pairs, essential)`` as indices into ``filtration.simplices``:
    each pair is ``(creator, destroyer)`` and ``essential`` lists creators that
    are never destroyed. Columns are Python ints used as GF(2) bitsets over the
    faces of one dimension lower. Dimensions are processed top-down so that
    columns known to reduce to zero are skipped (clearing).
    """
    by_dim: dict[int, list[int]] = {}
    local: dict[Simplex, int] = {}
    for g, s in enumerate(filtration.simplices):
        layer = by_dim.setdefault(len(s) - 1, [])
        local[s] = len(layer)
        layer.append(g)
    top = max(by_dim, default=-1)

    pairs: list[tuple[int, int]] = []
    creators_paired: set[int] = set()
    destroyers: set[int] = set()
    cleared: set[int] = set()
    for p in range(top, 0, -1):
        cols = by_dim[p]
        rows = by_dim[p - 1]
        pivot_col: dict[int, int] = {}
        reduced: dict[int, int] = {}
        for c, g in enumerate(cols):
            if c in cleared:
                continue
            col = 0
            for f in boundary_faces(filtration.simplices[g]):
                col ^= 1 << local[f]
            while col:
                low = col.bit_length() - 1
                other = pivot_col.get(low)
                if other is None:
                    pivot_col[low] = c
                    reduced[c] = col
                    break
                col ^= reduced[other]
        for low, c in pivot_col.items():
            pairs.append((rows[low], cols[c]))
            creators_paired.add(rows[low])
            destroyers.add(cols[c])
        cleared = set(pivot_col)
    essential = [g for g in range(len(filtration)) if g not in destroyers and g not in creators_paired]
    pairs.sort(key=lambda pr: pr[1])
    return pairs, essential


def reduce(filtration: Filtration) -> Barcode:
    """Barcode of the filtration; zero-length bars are kept (see ``PersistencePair.degenerate``)."""
    pairs, essential = persistence_pairs(filtration)
    app = filtration.appearances
    sims = filtration.simplices
    out = [PersistencePair(len(sims[b]) - 1, app[b], app[d]) for b, d in pairs]
    out += [PersistencePair(len(sims[b]) - 1, app[b], INF) for b in essential]
    return Barcode(tuple(sorted(out, key=_pair_key)), filtration.max_dim)


def compute_barcode(dist: np.ndarray, max_dim: int | None = None) -> Barcode:
    return reduce(build_filtration(dist, max_dim))


def persistent_betti(source: Barcode | Filtration, p: int, i: float, j: float) -> int:
    """Rank of H_p(K_i) -> H_p(K_j): bars of dimension p born by ``i`` and still alive after ``j``."""
    if i > j:
        raise ValueError(f"need i <= j, got i={i}, j={j}")
    barcode = reduce(source) if isinstance(source, Filtration) else source
    return sum(1 for q in barcode.pairs if q.dimension == p and q.birth <= i and q.death > j)


# --- rank oracle -----------------------------------------------------------


def rank_gf2(matrix: np.ndarray) -> int:
    """Rank over GF(2) by Gaussian elimination on a dense 0/1 matrix."""
    m = np.asarray(matrix, dtype=np.uint8) & 1
    if m.size == 0:
        return 0
    m = m.copy()
    n_rows, n_cols = m.shape
    rank = 0
    for c in range(n_cols):
        hits = np.nonzero(m[rank:, c])[0]
        if hits.size == 0:
            continue
        piv = rank + hits[0]
        if piv != rank:
            m[[rank, piv]] = m[[piv, rank]]
        below = np.nonzero(m[:, c])[0]
        below = below[below != rank]
        m[below] ^= m[rank]
        rank += 1
        if rank == n_rows:
            break
    return rank


def boundary_matrix(rows: Sequence[Simplex], cols: Sequence[Simplex]) -> np.ndarray:
    """Matrix of the boundary map from the chains on ``cols`` to those on ``rows``."""
    index = {s: k for k, s in enumerate(rows)}
    m = np.zeros((len(rows), len(cols)), dtype=np.uint8)
    for c, s in enumerate(cols):
        for f in boundary_faces(s):
            m[index[f], c] = 1
    return m


def betti_numbers(complex_: SimplicialComplex, up_to: int | None = None) -> list[int]:
    """Betti numbers b_0..b_up_to as dim ker d_p - rank d_{p+1}."""
    if up_to is None:
        up_to = max(complex_.max_dim, 0)
    faces = [list(complex_.simplices(d)) for d in range(up_to + 2)]
    ranks = [0] + [rank_gf2(boundary_matrix(faces[d - 1], faces[d])) for d in range(1, up_to + 2)]
    return [len(faces[p]) - ranks[p] - ranks[p + 1] for p in range(up_to + 1)]


def persistent_betti_rank(filtration: Filtration, p: int, i: float, j: float) -> int:
    """Rank of H_p(K_i) -> H_p(K_j) straight from boundary-matrix ranks.

    Uses dim Z_p(K_i) - dim(B_p(K_j) restricted to chains of K_i), where the
    second term is rank d_{p+1}(K_j) minus the rank of its rows outside K_i.
    """
    if i > j:
        raise ValueError(f"need i <= j, got i={i}, j={j}")

    def layer(dim, t):
        return [s for s, a in filtration if len(s) - 1 == dim and a <= t]

    cp_i = layer(p, i)
    z_i = len(cp_i) - (rank_gf2(boundary_matrix(layer(p - 1, i), cp_i)) if p > 0 else 0)
    cp_j = layer(p, j)
    d_j = boundary_matrix(cp_j, layer(p + 1, j))
    in_i = set(cp_i)
    outside = [k for k, s in enumerate(cp_j) if s not in in_i]
    b_in_i = rank_gf2(d_j) - rank_gf2(d_j[outside])
    return z_i - b_in_i


def barcode_multiset(barcode: Barcode) -> list[tuple[int, float, float]]:
    return sorted(barcode.as_tuples())


def summarize(barcode: Barcode, final_complex: SimplicialComplex) -> dict:
    """Betti numbers of the final complex plus per-dimension bar counts."""
    up_to = max(final_complex.max_dim, 0)
    return {
        "betti_final": betti_numbers(final_complex, up_to),
        "bars": {str(p): c for p, c in barcode.counts().items()},
        "degenerate_pairs": [
            [q.dimension, q.birth, q.death] for q in barcode.pairs if q.degenerate
        ],
        "max_dim": barcode.max_dim,
    }
