"""Vietoris-Rips persistent homology over the two-element field.

The filtration is the clique complex of a dissimilarity matrix: a simplex
enters at the largest pairwise distance among its vertices.  Persistence
pairs come from the standard column reduction of the boundary matrix, with
columns stored as Python integers used as bitsets (XOR is addition mod 2 and
the pivot is the highest set bit).
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import ConfigError, DataError, NumericalGuardError
from .spectral import DistanceMatrix

MAX_SIMPLICES_PER_DIM = 10**7
MAX_DIAGRAM_POINTS = 64


@dataclass
class Filtration:
    """Simplices sorted by (value, dimension, vertex tuple)."""

    simplices: list[tuple[int, ...]]
    values: np.ndarray
    dims: np.ndarray
    max_dim: int
    n_vertices: int

    def __len__(self):
        return len(self.simplices)

    @property
    def thresholds(self) -> np.ndarray:
        """Sorted distinct edge values."""
        return np.unique(self.values[self.dims == 1])

    def count(self, dim: int) -> int:
        return int(np.count_nonzero(self.dims == dim))


def _as_matrix(D) -> np.ndarray:
    if isinstance(D, DistanceMatrix):
        return D.values
    return DistanceMatrix(np.asarray(D, dtype=float)).values


def rips_filtration(D, max_dim: int = 2) -> Filtration:
    """Clique filtration with simplices up to dimension ``max_dim``.

    Homology is then exact for dimensions ``0 .. max_dim - 1``.
    """
    D = _as_matrix(D)
    if max_dim not in (1, 2, 3):
        raise ConfigError(f"max_dim must be 1, 2 or 3, got {max_dim}")
    P = D.shape[0]
    if math.comb(P, max_dim + 1) > MAX_SIMPLICES_PER_DIM:
        raise NumericalGuardError(
            f"{math.comb(P, max_dim + 1)} simplices of dimension {max_dim} for P={P} exceeds the "
            f"enumeration budget of {MAX_SIMPLICES_PER_DIM}"
        )
    blocks, vals, dims = [], [], []
    for k in range(max_dim + 1):
        combo = np.array(list(combinations(range(P), k + 1)), dtype=np.int64).reshape(-1, k + 1)
        if k == 0:
            v = np.zeros(len(combo))
        else:
            v = np.zeros(len(combo))
            for a, b in combinations(range(k + 1), 2):
                np.maximum(v, D[combo[:, a], combo[:, b]], out=v)
        padded = np.full((len(combo), max_dim + 1), -1, dtype=np.int64)
        padded[:, : k + 1] = combo
        blocks.append(padded)
        vals.append(v)
        dims.append(np.full(len(combo), k))
    verts = np.concatenate(blocks)
    values = np.concatenate(vals)
    dims = np.concatenate(dims)
    keys = [verts[:, c] for c in range(max_dim, -1, -1)] + [dims, values]
    order = np.lexsort(keys)
    verts, values, dims = verts[order], values[order], dims[order]
    simplices = [tuple(int(x) for x in row[: d + 1]) for row, d in zip(verts, dims)]
    return Filtration(simplices, values, dims, max_dim, P)


def boundary_columns(f: Filtration) -> list[int]:
    """Boundary matrix columns as bitsets over filtration indices."""
    index = {s: i for i, s in enumerate(f.simplices)}
    cols = []
    for s in f.simplices:
        if len(s) == 1:
            cols.append(0)
            continue
        c = 0
        for r in range(len(s)):
            c |= 1 << index[s[:r] + s[r + 1:]]
        cols.append(c)
    return cols


def reduce_boundary(f: Filtration, clearing: bool = True) -> dict[int, int]:
    """Column-reduce the boundary matrix; returns ``{pivot_row: column}``.

    With ``clearing`` the dimensions are processed from the top down and any
    column whose index already appeared as a pivot is zeroed without work.
    The pairing is unique, so both variants return the same mapping.
    """
    cols = boundary_columns(f)
    pivots: dict[int, int] = {}
    if clearing:
        order = [j for d in range(f.max_dim, 0, -1) for j in np.flatnonzero(f.dims == d)]
    else:
        order = range(len(cols))
    for j in order:
        j = int(j)
        if clearing and j in pivots:
            cols[j] = 0
            continue
        c = cols[j]
        while c:
            low = c.bit_length() - 1
            other = pivots.get(low)
            if other is None:
                pivots[low] = j
                break
            c ^= cols[other]
        cols[j] = c
    return pivots


@dataclass
class PersistenceDiagram:
    """Birth-death pairs per homology dimension; death may be ``inf``."""

    pairs: dict[int, np.ndarray]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k, arr in self.pairs.items():
            a = np.asarray(arr, dtype=float).reshape(-1, 2)
            if a.size:
                a = a[np.lexsort((a[:, 1], a[:, 0]))]
            clean[int(k)] = a
        self.pairs = clean

    @property
    def dims(self) -> list[int]:
        return sorted(self.pairs)

    def get(self, dim: int) -> np.ndarray:
        return self.pairs.get(dim, np.empty((0, 2)))

    def finite(self, dim: int) -> np.ndarray:
        a = self.get(dim)
        return a[np.isfinite(a[:, 1])]

    def infinite(self, dim: int) -> np.ndarray:
        a = self.get(dim)
        return a[~np.isfinite(a[:, 1]), 0]

    def persistence(self, dim: int) -> np.ndarray:
        a = self.finite(dim)
        return a[:, 1] - a[:, 0]

    def to_dict(self) -> dict:
        return {
            "dims": {str(k): self.finite(k).tolist() for k in self.dims},
            "infinite": {str(k): self.infinite(k).tolist() for k in self.dims},
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PersistenceDiagram":
        pairs = {}
        for k in set(d.get("dims", {})) | set(d.get("infinite", {})):
            fin = np.asarray(d.get("dims", {}).get(k, []), dtype=float).reshape(-1, 2)
            inf = np.asarray(d.get("infinite", {}).get(k, []), dtype=float)
            inf = np.column_stack([inf, np.full(inf.size, np.inf)])
            pairs[int(k)] = np.vstack([fin, inf])
        return cls(pairs, meta=d.get("meta", {}))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def _matrix_hash(D: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(D, dtype=float).tobytes()).hexdigest()[:16]


def persistence(f: Filtration, clearing: bool = True) -> PersistenceDiagram:
    """Persistence diagram in dimensions ``0 .. max_dim - 1``.

    Zero-length pairs (a simplex killed at the value it was born) are
    dropped.  Unpaired creators give ``inf`` deaths.
    """
    pivots = reduce_boundary(f, clearing=clearing)
    negative = set(pivots.values())
    out: dict[int, list] = {k: [] for k in range(f.max_dim)}
    for i, j in pivots.items():
        k = int(f.dims[i])
        if k < f.max_dim and f.values[j] > f.values[i]:
            out[k].append((f.values[i], f.values[j]))
    for i in range(len(f)):
        k = int(f.dims[i])
        if k < f.max_dim and i not in pivots and i not in negative:
            out[k].append((f.values[i], np.inf))
    meta = {"max_dim": f.max_dim, "n_vertices": f.n_vertices, "thresholds": f.thresholds.tolist()}
    return PersistenceDiagram(out, meta=meta)


def rips_persistence(D, max_dim: int = 2) -> PersistenceDiagram:
    """Shortcut for ``persistence(rips_filtration(D, max_dim))`` with a source hash in ``meta``."""
    M = _as_matrix(D)
    pd = persistence(rips_filtration(M, max_dim))
    pd.meta["source_hash"] = _matrix_hash(M)
    return pd


class UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y):
        x, y = self.find(x), self.find(y)
        if x == y:
            return False
        if self.rank[x] < self.rank[y]:
            x, y = y, x
        self.parent[y] = x
        if self.rank[x] == self.rank[y]:
            self.rank[x] += 1
        return True


def h0_union_find(D) -> np.ndarray:
    """Dimension-0 pairs by Kruskal's algorithm.

    Every vertex is born at 0, so the elder rule reduces to recording the
    weight of each edge that merges two components.  Returns an ``(n, 2)``
    array including the single ``inf`` bar per connected component left at
    the end.
    """
    D = _as_matrix(D)
    P = D.shape[0]
    iu, ju = np.triu_indices(P, 1)
    w = D[iu, ju]
    order = np.lexsort((ju, iu, w))
    uf = UnionFind(P)
    bars = []
    for e in order:
        if uf.union(int(iu[e]), int(ju[e])) and w[e] > 0:
            bars.append((0.0, float(w[e])))
    n_comp = len({uf.find(i) for i in range(P)})
    bars.extend([(0.0, np.inf)] * n_comp)
    return np.array(bars, dtype=float).reshape(-1, 2)


@dataclass
class BettiCurve:
    """Step functions ``eps -> beta_k(eps) = #{birth <= eps < death}``."""

    pd: PersistenceDiagram

    def __call__(self, dim: int, eps) -> np.ndarray | int:
        a = self.pd.get(dim)
        e = np.asarray(eps, dtype=float)
        b = (a[:, 0][None, :] <= e.reshape(-1, 1)) & (e.reshape(-1, 1) < a[:, 1][None, :])
        out = b.sum(axis=1)
        return int(out[0]) if e.ndim == 0 else out

    def steps(self, dim: int) -> tuple[np.ndarray, np.ndarray]:
        """Breakpoints and the value of ``beta_dim`` from each breakpoint on."""
        a = self.pd.get(dim)
        pts = np.unique(np.concatenate([a[:, 0], a[np.isfinite(a[:, 1]), 1]])) if a.size else np.zeros(0)
        return pts, self(dim, pts) if pts.size else np.zeros(0, dtype=int)

    def to_csv_rows(self) -> list[list]:
        rows = [["dim", "eps", "betti"]]
        for k in self.pd.dims:
            pts, vals = self.steps(k)
            rows.extend([k, repr(float(t)), int(v)] for t, v in zip(pts, vals))
        return rows


def betti_curve(pd: PersistenceDiagram) -> BettiCurve:
    return BettiCurve(pd)


def _split(pd, dim):
    if isinstance(pd, PersistenceDiagram):
        a = pd.get(dim)
    else:
        a = np.asarray(pd, dtype=float).reshape(-1, 2)
    fin = np.isfinite(a[:, 1])
    return a[fin], np.sort(a[~fin, 0])


def _essential_costs(ea: np.ndarray, eb: np.ndarray) -> np.ndarray | None:
    if ea.size != eb.size:
        return None
    return np.abs(ea - eb)


def _check_size(a, b):
    if len(a) > MAX_DIAGRAM_POINTS or len(b) > MAX_DIAGRAM_POINTS:
        raise NumericalGuardError(
            f"diagram sizes {len(a)} and {len(b)} exceed the exact-matching budget of {MAX_DIAGRAM_POINTS} points"
        )


def augmented_cost_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Square cost matrix for matching ``a`` to ``b`` with diagonal slots.

    Rows are points of ``a`` followed by diagonal copies of the points of
    ``b``; columns are points of ``b`` followed by diagonal copies of ``a``.
    Costs use the sup norm; a point's own diagonal slot costs half its
    persistence and diagonal-to-diagonal costs nothing.
    """
    m, n = len(a), len(b)
    C = np.full((m + n, m + n), np.inf)
    if m and n:
        C[:m, :n] = np.maximum(np.abs(a[:, None, 0] - b[None, :, 0]), np.abs(a[:, None, 1] - b[None, :, 1]))
    if m:
        C[np.arange(m), n + np.arange(m)] = (a[:, 1] - a[:, 0]) / 2
    if n:
        C[m + np.arange(n), np.arange(n)] = (b[:, 1] - b[:, 0]) / 2
    C[m:, n:] = 0.0
    return C


def _has_perfect_matching(mask: np.ndarray) -> bool:
    match = maximum_bipartite_matching(csr_matrix(mask.astype(np.int8)), perm_type="column")
    return bool(np.all(match >= 0))


def bottleneck(a, b, dim: int = 0) -> float:
    """Exact bottleneck distance between the ``dim`` parts of two diagrams.

    Infinite bars are matched among themselves (sorted births); unequal
    counts give ``inf``.
    """
    fa, ea = _split(a, dim)
    fb, eb = _split(b, dim)
    _check_size(fa, fb)
    ess = _essential_costs(ea, eb)
    if ess is None:
        return math.inf
    ess_cost = float(ess.max()) if ess.size else 0.0
    if len(fa) + len(fb) == 0:
        return ess_cost
    C = augmented_cost_matrix(fa, fb)
    cand = np.unique(C[np.isfinite(C)])
    lo, hi = 0, cand.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _has_perfect_matching(C <= cand[mid]):
            hi = mid
        else:
            lo = mid + 1
    return max(float(cand[lo]), ess_cost)


def wasserstein(a, b, dim: int = 0, p: float = 2.0) -> float:
    """p-Wasserstein distance with sup-norm ground cost and diagonal slots."""
    if p == math.inf:
        return bottleneck(a, b, dim)
    if p < 1:
        raise ConfigError(f"Wasserstein order must be >= 1, got {p}")
    fa, ea = _split(a, dim)
    fb, eb = _split(b, dim)
    _check_size(fa, fb)
    ess = _essential_costs(ea, eb)
    if ess is None:
        return math.inf
    total = float(np.sum(ess**p))
    if len(fa) + len(fb):
        C = augmented_cost_matrix(fa, fb) ** p
        r, c = linear_sum_assignment(C)
        total += float(C[r, c].sum())
    return total ** (1.0 / p)
