"""Persistence landscapes.

Each diagram point ``(b, d)`` contributes a tent ``max(0, min(t - b, d - t))``
and the k-th landscape level is the k-th largest tent value at ``t``.  All
kinks of every level lie in the finite set ``{b_i, d_i, (b_i + d_j) / 2}``
(an ascending edge can only cross a descending one), so the levels are stored
exactly as breakpoint lists over that set.  Landscapes built from a diagram
also remember which tent realises each level on each segment, which makes
``evaluate`` reproduce the naive k-th-max computation bit for bit.

Grid-backed landscapes (e.g. group means) are a sampled view on a uniform
grid and use trapezoidal quadrature.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import trapezoid

from .errors import ConfigError
from .homology import PersistenceDiagram

DEFAULT_MAX_LEVELS = 16
DEFAULT_GRID = (0.0, 1.0, 512)


def tent_values(pairs: np.ndarray, t) -> np.ndarray:
    """Tent heights, shape ``(n_pairs, len(t))``."""
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    b, d = pairs[:, 0:1], pairs[:, 1:2]
    return np.maximum(0.0, np.minimum(t[None, :] - b, d - t[None, :]))


def _simplify(t: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Drop interior breakpoints where the slope does not change."""
    if t.size <= 2:
        return np.column_stack([t, v])
    slope = np.diff(v) / np.diff(t)
    keep = np.ones(t.size, dtype=bool)
    keep[1:-1] = ~np.isclose(slope[1:], slope[:-1], rtol=0, atol=1e-12)
    return np.column_stack([t[keep], v[keep]])


@dataclass
class PersistenceLandscape:
    """Landscape of one homology dimension.

    ``levels[k]`` is an ``(m, 2)`` array of ``(t, value)`` breakpoints of
    ``lambda_{k+1}``, linear in between and zero outside.  ``grid`` and
    ``grid_values`` hold the sampled form when the landscape is grid-backed.
    """

    dim: int
    levels: list[np.ndarray] = field(default_factory=list)
    grid: tuple[float, float, int] | None = None
    grid_values: np.ndarray | None = None
    pairs: np.ndarray | None = None
    _knots: np.ndarray | None = field(default=None, repr=False)
    _tents: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_levels(self) -> int:
        if self.grid_values is not None:
            return self.grid_values.shape[0]
        return len(self.levels)

    @property
    def is_grid(self) -> bool:
        return self.grid_values is not None

    def evaluate(self, t) -> np.ndarray:
        """Values at points ``t``, shape ``(n_levels, len(t))``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.is_grid:
            x = grid_points(self.grid)
            return np.stack([np.interp(t, x, row, left=0.0, right=0.0) for row in self.grid_values]) \
                if self.n_levels else np.zeros((0, t.size))
        if self._tents is not None:
            return self._evaluate_tents(t)
        out = np.zeros((self.n_levels, t.size))
        for k, bp in enumerate(self.levels):
            out[k] = np.interp(t, bp[:, 0], bp[:, 1], left=0.0, right=0.0)
        return out

    def _evaluate_tents(self, t: np.ndarray) -> np.ndarray:
        knots, tents = self._knots, self._tents
        seg = np.searchsorted(knots, t, side="right") - 1
        inside = (seg >= 0) & (t <= knots[-1])
        seg = np.clip(seg, 0, knots.size - 2)
        out = np.zeros((tents.shape[0], t.size))
        for k in range(tents.shape[0]):
            ids = tents[k, seg]
            ok = inside & (ids >= 0)
            if np.any(ok):
                b = self.pairs[ids[ok], 0]
                d = self.pairs[ids[ok], 1]
                out[k, ok] = np.maximum(0.0, np.minimum(t[ok] - b, d - t[ok]))
        return out

    def breakpoints(self) -> list[np.ndarray]:
        if self.is_grid:
            x = grid_points(self.grid)
            return [np.column_stack([x, row]) for row in self.grid_values]
        return self.levels

    def to_dict(self) -> dict:
        d = {"dim": self.dim, "levels": [bp.tolist() for bp in self.breakpoints()], "grid": None}
        if self.grid is not None:
            d["grid"] = {"t_min": self.grid[0], "t_max": self.grid[1], "n_points": self.grid[2]}
        if self.pairs is not None:
            d["pairs"] = self.pairs.tolist()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "PersistenceLandscape":
        dim = int(d["dim"])
        if d.get("pairs") is not None:
            pd = PersistenceDiagram({dim: np.asarray(d["pairs"], dtype=float).reshape(-1, 2)})
            return landscape_from_diagram(pd, dim, max_levels=max(len(d["levels"]), 1))
        g = d.get("grid")
        if g is not None:
            grid = (float(g["t_min"]), float(g["t_max"]), int(g["n_points"]))
            vals = np.array([[v for _, v in lvl] for lvl in d["levels"]], dtype=float).reshape(-1, grid[2])
            return cls(dim, grid=grid, grid_values=vals)
        return cls(dim, levels=[np.asarray(l, dtype=float).reshape(-1, 2) for l in d["levels"]])


def grid_points(grid) -> np.ndarray:
    t_min, t_max, n = grid
    if not t_min < t_max:
        raise ConfigError(f"grid needs t_min < t_max, got {t_min}, {t_max}")
    if n < 2:
        raise ConfigError(f"grid needs at least 2 points, got {n}")
    return np.linspace(t_min, t_max, int(n))


def landscape_from_diagram(pd, dim: int = 1, max_levels: int = DEFAULT_MAX_LEVELS,
                           inf_cap: float | None = None) -> PersistenceLandscape:
    """Exact breakpoint landscape of the ``dim`` part of a diagram.

    Infinite bars are dropped unless ``inf_cap`` is given, in which case
    their death is replaced by it.  An empty diagram gives the zero landscape.
    """
    if isinstance(pd, PersistenceDiagram):
        a = pd.get(dim)
    else:
        a = np.asarray(pd, dtype=float).reshape(-1, 2)
    if inf_cap is None:
        a = a[np.isfinite(a[:, 1])]
    else:
        a = a.copy()
        a[~np.isfinite(a[:, 1]), 1] = inf_cap
    a = a[a[:, 1] > a[:, 0]]
    if a.shape[0] == 0 or max_levels < 1:
        return PersistenceLandscape(dim, pairs=a)

    b, d = a[:, 0], a[:, 1]
    knots = np.unique(np.concatenate([b, d, ((b[:, None] + d[None, :]) / 2).ravel()]))
    knots = knots[(knots >= b.min()) & (knots <= d.max())]
    n_lev = min(max_levels, a.shape[0])

    V = tent_values(a, knots)
    at_knots = -np.sort(-V, axis=0)[:n_lev]
    mids = (knots[:-1] + knots[1:]) / 2
    M = tent_values(a, mids)
    order = np.argsort(-M, axis=0, kind="stable")[:n_lev]
    tents = np.where(np.take_along_axis(M, order, axis=0) > 0, order, -1)

    levels = []
    for k in range(n_lev):
        levels.append(_simplify(knots, at_knots[k]))
    return PersistenceLandscape(dim, levels=levels, pairs=a, _knots=knots, _tents=tents)


def evaluate(l: PersistenceLandscape, grid=DEFAULT_GRID, n_levels: int | None = None) -> np.ndarray:
    """Landscape values on a uniform grid, ``(levels, n)``.

    Rows past the stored level count are zero.
    """
    t = grid_points(grid)
    vals = l.evaluate(t)
    if n_levels is None:
        return vals
    out = np.zeros((n_levels, t.size))
    k = min(n_levels, vals.shape[0])
    out[:k] = vals[:k]
    return out


def mean_landscape(ls: Sequence[PersistenceLandscape], grid=DEFAULT_GRID) -> PersistenceLandscape:
    """Pointwise mean on ``grid``; the level count is the largest among inputs."""
    ls = list(ls)
    if not ls:
        raise ConfigError("mean of an empty landscape sequence")
    dims = {l.dim for l in ls}
    if len(dims) != 1:
        raise ConfigError(f"landscapes mix homology dimensions {sorted(dims)}")
    n_lev = max(l.n_levels for l in ls)
    acc = np.zeros((n_lev, int(grid[2])))
    for l in ls:
        acc += evaluate(l, grid, n_lev)
    return PersistenceLandscape(ls[0].dim, grid=tuple(grid), grid_values=acc / len(ls))


def _union_knots(ls: Sequence[PersistenceLandscape], k: int) -> np.ndarray:
    parts = [l.levels[k][:, 0] for l in ls if k < l.n_levels]
    return np.unique(np.concatenate(parts)) if parts else np.zeros(0)


def _level_matrix(ls: Sequence[PersistenceLandscape], k: int, knots: np.ndarray) -> np.ndarray:
    V = np.zeros((len(ls), knots.size))
    for i, l in enumerate(ls):
        if k < l.n_levels:
            bp = l.levels[k]
            V[i] = np.interp(knots, bp[:, 0], bp[:, 1], left=0.0, right=0.0)
    return V


def mean_exact(ls: Sequence[PersistenceLandscape]) -> PersistenceLandscape:
    """Pointwise mean kept in exact breakpoint form."""
    ls = list(ls)
    if not ls:
        raise ConfigError("mean of an empty landscape sequence")
    if any(l.is_grid for l in ls):
        raise ConfigError("mean_exact needs breakpoint landscapes")
    n_lev = max(l.n_levels for l in ls)
    levels = []
    for k in range(n_lev):
        knots = _union_knots(ls, k)
        levels.append(np.column_stack([knots, _level_matrix(ls, k, knots).mean(axis=0)]))
    return PersistenceLandscape(ls[0].dim, levels=levels)


def difference(a: PersistenceLandscape, b: PersistenceLandscape) -> PersistenceLandscape:
    """``a - b`` in breakpoint form (no longer a landscape, but piecewise linear)."""
    if a.is_grid or b.is_grid:
        if a.grid != b.grid:
            raise ConfigError("grid-backed landscapes need identical grids")
        n = max(a.n_levels, b.n_levels)
        va, vb = np.zeros((n, a.grid[2])), np.zeros((n, a.grid[2]))
        va[: a.n_levels], vb[: b.n_levels] = a.grid_values, b.grid_values
        return PersistenceLandscape(a.dim, grid=a.grid, grid_values=va - vb)
    levels = []
    for k in range(max(a.n_levels, b.n_levels)):
        knots = _union_knots([a, b], k)
        V = _level_matrix([a, b], k, knots)
        levels.append(np.column_stack([knots, V[0] - V[1]]))
    return PersistenceLandscape(a.dim, levels=levels)


def _segment_integral(t: np.ndarray, v: np.ndarray, p) -> float:
    h = np.diff(t)
    v0, v1 = v[:-1], v[1:]
    if p == 1:
        # sign changes inside a segment need the split point for |v|
        same = v0 * v1 >= 0
        out = np.sum(h[same] * np.abs(v0[same] + v1[same]) / 2)
        cross = ~same
        if np.any(cross):
            out += np.sum(h[cross] * (v0[cross] ** 2 + v1[cross] ** 2) / (2 * (np.abs(v0[cross]) + np.abs(v1[cross]))))
        return float(out)
    if p == 2:
        return float(np.sum(h * (v0**2 + v0 * v1 + v1**2) / 3))
    raise ConfigError(f"unsupported norm order {p!r}")


def lp_norm(l: PersistenceLandscape, p=2, levels: int | None = None) -> float:
    """``(sum_k int |lambda_k|^p dt)^(1/p)`` over the first ``levels`` levels.

    Exact piecewise integration for breakpoint landscapes; trapezoidal rule
    on the grid for grid-backed ones.  ``p`` may be 1, 2 or ``inf``.
    """
    if p not in (1, 2, np.inf, float("inf"), "inf"):
        raise ConfigError(f"norm order must be 1, 2 or inf, got {p!r}")
    p = np.inf if p == "inf" else p
    n = l.n_levels if levels is None else min(levels, l.n_levels)
    if n == 0:
        return 0.0
    if l.is_grid:
        x = grid_points(l.grid)
        vals = np.abs(l.grid_values[:n])
        if p == np.inf:
            return float(vals.max())
        return float(sum(trapezoid(row**p, x) for row in vals) ** (1.0 / p))
    if p == np.inf:
        return float(max(np.abs(bp[:, 1]).max() if bp.size else 0.0 for bp in l.levels[:n]))
    total = sum(_segment_integral(bp[:, 0], bp[:, 1], p) for bp in l.levels[:n] if bp.shape[0] > 1)
    return float(total ** (1.0 / p))


def gram_matrix(ls: Sequence[PersistenceLandscape], levels: int | None = None) -> np.ndarray:
    """Exact L2 inner products ``sum_k int lambda_k^i lambda_k^j dt``.

    On a common refinement of the breakpoints both functions are linear per
    segment, so ``int f g = h (2 f0 g0 + f0 g1 + f1 g0 + 2 f1 g1) / 6``.
    """
    ls = list(ls)
    n_lev = max((l.n_levels for l in ls), default=0)
    if levels is not None:
        n_lev = min(n_lev, levels)
    G = np.zeros((len(ls), len(ls)))
    for k in range(n_lev):
        knots = _union_knots(ls, k)
        if knots.size < 2:
            continue
        V = _level_matrix(ls, k, knots)
        w = np.diff(knots) / 6.0
        L, R = V[:, :-1] * np.sqrt(w), V[:, 1:] * np.sqrt(w)
        LR = L @ R.T
        G += 2 * (L @ L.T) + LR + LR.T + 2 * (R @ R.T)
    return G
