"""Univariate pathways: delay embedding into a point cloud, and smoothing
followed by sublevel-set (Morse) persistence of the smoothed curve."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import ConfigError, DataError
from .homology import PersistenceDiagram, UnionFind
from .spectral import DistanceMatrix


@dataclass
class PointCloud:
    points: np.ndarray
    source: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.points.shape[0]


@dataclass
class SmoothedSeries:
    values: np.ndarray
    window: int = 1


def _series(x) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise DataError("series contains non-finite values")
    return x


def delay_embed(series, m: int = 2, lag: int = 1, channel=None) -> PointCloud:
    """Rows ``(y(s), y(s - lag), ..., y(s - (m - 1) lag))`` for every admissible ``s``."""
    y = _series(series)
    if m < 2 or lag < 1:
        raise ConfigError(f"need m >= 2 and lag >= 1, got m={m}, lag={lag}")
    span = (m - 1) * lag
    if y.size <= span:
        raise DataError(f"series of length {y.size} too short for m={m}, lag={lag}")
    N = y.size - span
    cols = [y[span - j * lag: span - j * lag + N] for j in range(m)]
    return PointCloud(np.column_stack(cols), {"dimension": m, "lag": lag, "channel": channel})


def cloud_distances(cloud: PointCloud) -> DistanceMatrix:
    if cloud.N == 1:
        return DistanceMatrix(np.zeros((1, 1)))
    return DistanceMatrix(squareform(pdist(cloud.points)))


def smooth(series, window: int = 21) -> SmoothedSeries:
    """Centred moving average.

    Near the ends the window shrinks symmetrically, so sample ``i`` averages
    ``y[i - r : i + r + 1]`` with ``r = min(window // 2, i, T - 1 - i)``.
    """
    y = _series(series)
    if window < 1 or window % 2 == 0:
        raise ConfigError(f"window must be a positive odd integer, got {window}")
    if window > y.size:
        raise ConfigError(f"window {window} longer than the series ({y.size})")
    if window == 1:
        return SmoothedSeries(y.copy(), 1)
    T = y.size
    i = np.arange(T)
    r = np.minimum(window // 2, np.minimum(i, T - 1 - i))
    c = np.concatenate([[0.0], np.cumsum(y)])
    return SmoothedSeries((c[i + r + 1] - c[i - r]) / (2 * r + 1), window)


def sublevel_persistence(series) -> PersistenceDiagram:
    """0-dimensional persistence of the sublevel filtration of a sampled curve.

    Samples are added in order of (value, index), so ties are broken as if
    earlier samples were infinitesimally lower.  When two components meet,
    the one with the later-born minimum dies (elder rule).  Zero-length bars,
    which ties can produce at plateau edges, are not reported but counted in
    ``meta["zero_length_dropped"]``; the global minimum's bar never dies.
    """
    y = series.values if isinstance(series, SmoothedSeries) else _series(series)
    T = y.size
    if T < 2:
        raise DataError("sublevel persistence needs at least 2 samples")
    order = np.lexsort((np.arange(T), y))
    rank = np.empty(T, dtype=np.int64)
    rank[order] = np.arange(T)
    uf = UnionFind(T)
    oldest = {}                     # root -> index of its minimum
    added = np.zeros(T, dtype=bool)
    bars = []
    n_zero = 0
    for v in order:
        v = int(v)
        added[v] = True
        oldest[v] = v
        for u in (v - 1, v + 1):
            if 0 <= u < T and added[u]:
                ru, rv = uf.find(u), uf.find(v)
                if ru == rv:
                    continue
                mu, mv = oldest[ru], oldest[rv]
                young, old = (mu, mv) if rank[mu] > rank[mv] else (mv, mu)
                if y[v] > y[young]:
                    bars.append((y[young], y[v]))
                elif young != v:
                    n_zero += 1
                uf.union(ru, rv)
                oldest[uf.find(v)] = old
    bars.append((y[order[0]], np.inf))
    return PersistenceDiagram({0: np.array(bars, dtype=float)}, meta={"filtration": "sublevel", "zero_length_dropped": n_zero})


def local_minima_count(series) -> int:
    """Number of samples lower than both neighbours under index tie-breaking."""
    y = series.values if isinstance(series, SmoothedSeries) else _series(series)
    T = y.size
    count = 0
    for i in range(T):
        left = i == 0 or (y[i - 1], i - 1) > (y[i], i)
        right = i == T - 1 or (y[i + 1], i + 1) > (y[i], i)
        count += left and right
    return count
