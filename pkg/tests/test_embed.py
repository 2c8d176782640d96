import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import sublevel_components
from tdats.embed import cloud_distances, delay_embed, local_minima_count, smooth, sublevel_persistence, PointCloud
from tdats.errors import ConfigError, DataError
from tdats.homology import bottleneck, rips_persistence


def test_delay_embed_transcription():
    cloud = delay_embed([1.0, 2.0, 3.0], m=2, lag=1)
    assert cloud.points.tolist() == [[2, 1], [3, 2]]
    c3 = delay_embed(np.arange(10.0), m=3, lag=2)
    assert c3.N == 10 - 4 and c3.points[0].tolist() == [4, 2, 0]
    with pytest.raises(DataError):
        delay_embed([1.0, 2.0], m=3, lag=1)
    with pytest.raises(ConfigError):
        delay_embed([1.0, 2.0, 3.0], m=1)


def test_constant_series_has_no_loops():
    cloud = delay_embed(np.full(30, 2.0))
    assert np.all(cloud.points == 2.0)
    assert rips_persistence(cloud_distances(cloud)).finite(1).shape == (0, 2)


def test_circle_recovery():
    t = np.arange(512)
    cloud = delay_embed(np.sin(2 * np.pi * t / 64), m=2, lag=16)
    sub = PointCloud(cloud.points[::8])
    pers = np.sort(rips_persistence(cloud_distances(sub)).persistence(1))[::-1]
    assert pers.size >= 1
    assert pers.size == 1 or pers[0] >= 5 * pers[1]
    assert pers[0] > 1.0


def test_cloud_distances():
    assert cloud_distances(PointCloud(np.array([[1.0, 2.0]]))).values.tolist() == [[0.0]]
    sq = cloud_distances(PointCloud(np.array([[0, 0], [1, 0], [1, 1], [0, 1.0]]))).values
    assert sorted(sq[np.triu_indices(4, 1)]) == pytest.approx([1, 1, 1, 1, np.sqrt(2), np.sqrt(2)])
    X = np.random.default_rng(0).standard_normal((12, 3))
    D = cloud_distances(PointCloud(X)).values
    assert np.all(D[:, :, None] <= D[:, None, :] + D.T[None, :, :] + 1e-12)


def test_smooth_trivial_cases():
    y = np.random.default_rng(1).standard_normal(50)
    assert np.array_equal(smooth(y, 1).values, y)
    assert np.allclose(smooth(np.full(40, 3.0), 21).values, 3.0)
    with pytest.raises(ConfigError):
        smooth(y, 4)
    with pytest.raises(ConfigError):
        smooth(y, 51)


def test_smooth_matches_naive_average():
    y = np.random.default_rng(2).standard_normal(30)
    s = smooth(y, 7).values
    for i in range(30):
        r = min(3, i, 29 - i)
        assert s[i] == pytest.approx(y[i - r: i + r + 1].mean(), abs=1e-12)


def test_smoothing_reduces_error():
    t = np.arange(1000)
    mu = np.sin(2 * np.pi * t / 200)
    ratios = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        e = np.zeros(t.size)
        w = rng.standard_normal(t.size + 200)
        for i in range(1, w.size):
            w[i] = -0.95 * w[i - 1] + w[i]
        e = w[200:]
        y = mu + e
        ratios.append(np.mean((y - mu) ** 2) / np.mean((smooth(y, 21).values - mu) ** 2))
    assert min(ratios) >= 5


def test_sublevel_examples():
    pd = sublevel_persistence([3.0, 0.0, 2.0, 1.0, 3.0])
    assert pd.finite(0).tolist() == [[1.0, 2.0]]
    assert pd.infinite(0).tolist() == [0.0]
    mono = sublevel_persistence(np.arange(10.0))
    assert mono.finite(0).shape == (0, 2) and mono.infinite(0).tolist() == [0.0]
    assert sublevel_persistence(smooth(np.arange(10.0)[::-1], 3)).infinite(0).tolist() == [0.0]


def _with_ties(rng, n):
    return np.round(rng.standard_normal(n) * 2) / 2


@pytest.mark.parametrize("ties", [False, True])
def test_bar_count_matches_minima_and_components(ties):
    rng = np.random.default_rng(3 + ties)
    for _ in range(30):
        y = _with_ties(rng, 200) if ties else rng.standard_normal(200)
        pd = sublevel_persistence(y)
        finite = pd.finite(0)
        assert len(finite) + pd.meta["zero_length_dropped"] + 1 == local_minima_count(y)
        assert ties or pd.meta["zero_length_dropped"] == 0
        assert np.all(finite[:, 1] > finite[:, 0])
        # the number of bars alive at level a is the number of components of {y <= a}
        levels = np.unique(y)
        for a in np.concatenate([levels, (levels[:-1] + levels[1:]) / 2]):
            alive = int(np.sum((finite[:, 0] <= a) & (finite[:, 1] > a))) + 1
            assert alive == sublevel_components(y, a)


def test_random_series_without_ties_counts_strict_minima():
    y = np.random.default_rng(5).standard_normal(200)
    strict = sum((i == 0 or y[i - 1] > y[i]) and (i == 199 or y[i + 1] > y[i]) for i in range(200))
    assert len(sublevel_persistence(y).finite(0)) + 1 == strict


def test_sublevel_stability():
    rng = np.random.default_rng(6)
    delta = 0.01
    for _ in range(50):
        y = rng.standard_normal(100)
        z = y + rng.uniform(-delta, delta, y.size)
        a, b = sublevel_persistence(y), sublevel_persistence(z)
        assert bottleneck(a, b) <= delta + 1e-12
        assert abs(a.infinite(0)[0] - b.infinite(0)[0]) <= delta


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=40))
def test_sublevel_bars_property(vals):
    y = np.array(vals)
    pd = sublevel_persistence(y)
    assert len(pd.infinite(0)) == 1 and pd.infinite(0)[0] == y.min()
    f = pd.finite(0)
    assert np.all(f[:, 1] > f[:, 0])
    assert np.all(np.isin(f, y))
