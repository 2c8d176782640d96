import math

import numpy as np
import pytest
from scipy.integrate import trapezoid
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import kth_tent, random_diagram
from tdats.errors import ConfigError
from tdats.homology import PersistenceDiagram
from tdats.landscape import (PersistenceLandscape, evaluate, gram_matrix, landscape_from_diagram, lp_norm,
                             mean_exact, mean_landscape)


def L(pairs, dim=1, **kw):
    return landscape_from_diagram(PersistenceDiagram({dim: pairs}), dim, **kw)


def test_single_tent():
    l = L([[0.0, 2.0]])
    assert l.n_levels == 1
    assert l.levels[0].tolist() == [[0, 0], [1, 1], [2, 0]]
    assert evaluate(l, (0, 2, 5)).tolist() == [[0, 0.5, 1, 0.5, 0]]
    assert evaluate(l, (0, 2, 5), n_levels=2)[1].tolist() == [0] * 5


def test_two_overlapping_tents():
    l = L([[0.0, 2.0], [1.0, 3.0]])
    assert l.levels[0].tolist() == [[0, 0], [1, 1], [1.5, 0.5], [2, 1], [3, 0]]
    lam2 = l.levels[1]
    assert lam2[np.argmax(lam2[:, 1])].tolist() == [1.5, 0.5]
    assert np.array_equal(l.evaluate([0.5, 1, 1.25, 1.5, 1.75, 2, 2.5])[1], [0, 0, 0.25, 0.5, 0.25, 0, 0])
    t = np.linspace(-1, 4, 2001)
    dense = evaluate(l, (-1, 4, 2001))
    for k in range(2):
        assert np.array_equal(dense[k], [kth_tent([(0, 2), (1, 3)], x, k) for x in t])


def test_adjacent_tents_from_shared_threshold():
    e1, e2, e3 = 1.0, 2.0, 3.0
    l = L([[e1, e2], [e2, e3]])
    assert l.levels[0].tolist() == [[1, 0], [1.5, 0.5], [2, 0], [2.5, 0.5], [3, 0]]
    assert l.n_levels == 2 and np.all(l.levels[1][:, 1] == 0)


def test_empty_and_infinite():
    assert L(np.empty((0, 2))).n_levels == 0
    assert evaluate(L(np.empty((0, 2))), (0, 1, 4)).shape == (0, 4)
    assert L([[0.0, np.inf]]).n_levels == 0
    capped = L([[0.0, np.inf]], inf_cap=2.0)
    assert capped.levels[0].tolist() == [[0, 0], [1, 1], [2, 0]]


def test_evaluate_at_breakpoints():
    rng = np.random.default_rng(0)
    l = L(random_diagram(rng, 7))
    for k, bp in enumerate(l.levels):
        assert np.allclose(l.evaluate(bp[:, 0])[k], bp[:, 1], atol=1e-15)


def test_pointwise_oracle_exact():
    rng = np.random.default_rng(1)
    for _ in range(50):
        pairs = random_diagram(rng, int(rng.integers(1, 9)))
        l = L(pairs, max_levels=16)
        t = rng.uniform(-0.2, 2.2, 20)
        vals = l.evaluate(t)
        for k in range(l.n_levels):
            assert all(vals[k, i] == kth_tent(pairs, x, k) for i, x in enumerate(t))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 5), st.floats(0.01, 5)), min_size=1, max_size=8),
       st.floats(-3, 3), st.lists(st.floats(-1, 11), min_size=2, max_size=20))
def test_order_lipschitz_and_shift(raw, shift, ts):
    pairs = np.array([(b, b + p) for b, p in raw])
    l = L(pairs)
    t = np.sort(np.array(ts))
    v = l.evaluate(t)
    assert np.all(v >= 0)
    assert np.all(np.diff(v, axis=0) <= 1e-12)
    dv = np.abs(np.diff(v, axis=1))
    assert np.all(dv <= np.diff(t)[None, :] + 1e-9)
    shifted = L(pairs + shift)
    assert np.allclose(shifted.evaluate(t + shift), v, atol=1e-9)


def test_evaluate_rejects_bad_grid():
    with pytest.raises(ConfigError):
        evaluate(L([[0, 1.0]]), (1, 0, 5))
    with pytest.raises(ConfigError):
        evaluate(L([[0, 1.0]]), (0, 1, 1))


def test_norms_closed_form():
    l = L([[0.0, 2.0]])
    assert lp_norm(l, 2, levels=1) == pytest.approx(math.sqrt(2 / 3), abs=1e-12)
    assert lp_norm(l, 1) == pytest.approx(1.0, abs=1e-15)
    assert lp_norm(l, np.inf) == 1.0
    assert lp_norm(L(np.empty((0, 2)))) == 0.0


def test_grid_norm_converges_to_exact():
    rng = np.random.default_rng(2)
    l = L(random_diagram(rng, 6, scale=0.5))
    exact = lp_norm(l, 2)
    m = mean_landscape([l], grid=(0.0, 1.5, 4096))
    assert abs(lp_norm(m, 2) - exact) / exact < 1e-3


def test_mean_landscape_basics():
    l = L([[0.0, 2.0], [0.5, 1.0]])
    grid = (0.0, 2.0, 9)
    assert np.allclose(mean_landscape([l], grid).grid_values, evaluate(l, grid))
    half = mean_landscape([l, L(np.empty((0, 2)))], grid)
    assert np.allclose(half.grid_values, evaluate(l, grid) / 2)
    with pytest.raises(ConfigError):
        mean_landscape([], grid)
    with pytest.raises(ConfigError):
        mean_landscape([l, L([[0, 1.0]], dim=0)], grid)


def test_mean_converges_with_batch_size():
    rng = np.random.default_rng(3)
    grid = (0.0, 1.5, 256)

    def draw(n):
        return [L(random_diagram(rng, int(rng.integers(1, 6)), scale=0.5)) for _ in range(n)]

    def sup_gap(n):
        a, b = mean_landscape(draw(n), grid), mean_landscape(draw(n), grid)
        k = min(a.n_levels, b.n_levels)
        return np.abs(a.grid_values[:k] - b.grid_values[:k]).max()

    small = [sup_gap(8) for _ in range(10)]
    large = [sup_gap(64) for _ in range(10)]
    assert np.mean(large) < np.mean(small)


def test_gram_matrix_exact():
    rng = np.random.default_rng(4)
    ls = [L(random_diagram(rng, int(rng.integers(0, 6)))) for _ in range(6)]
    G = gram_matrix(ls)
    for i, li in enumerate(ls):
        assert G[i, i] == pytest.approx(lp_norm(li, 2) ** 2, abs=1e-12)
    # inner product against a fine trapezoid rule
    grid = (-0.1, 2.2, 200001)
    V = [evaluate(l, grid, 8) for l in ls]
    t = np.linspace(*grid[:2], grid[2])
    ref = np.array([[trapezoid((a * b).sum(axis=0), t) for b in V] for a in V])
    assert np.allclose(G, ref, atol=1e-8)


def test_mean_exact_matches_grid_mean():
    rng = np.random.default_rng(5)
    ls = [L(random_diagram(rng, 4)) for _ in range(5)]
    grid = (0.0, 2.0, 101)
    assert np.allclose(evaluate(mean_exact(ls), grid, 4), mean_landscape(ls, grid).grid_values, atol=1e-12)


def test_json_round_trip():
    l = L([[0.0, 2.0], [1.0, 3.0]])
    back = PersistenceLandscape.from_dict(l.to_dict())
    t = np.linspace(0, 3, 37)
    assert np.array_equal(back.evaluate(t), l.evaluate(t))
    m = mean_landscape([l], (0, 3, 7))
    back = PersistenceLandscape.from_dict(m.to_dict())
    assert back.grid == m.grid and np.array_equal(back.grid_values, m.grid_values)
