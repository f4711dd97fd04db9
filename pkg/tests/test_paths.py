import numpy as np
import pytest

from mvsde.paths import StreamKey, TimeGrid, brownian_increments, stream_generator


def test_grid_nodes_uniform():
    g = TimeGrid(0.0, 1.0, 4)
    assert np.allclose(g.nodes, [0.0, 0.25, 0.5, 0.75, 1.0])
    assert g.is_uniform
    assert g.node_index(0.75) == 3
    with pytest.raises(ValueError):
        g.node_index(0.3)


def test_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(0.0, 0.0, 10)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, 0)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, 2, nodes=np.array([0.0, 0.6, 0.5]))


def test_custom_nodes():
    nodes = np.array([0.0, 0.1, 0.4, 1.0])
    g = TimeGrid(0.0, 1.0, 3, nodes=nodes)
    assert not g.is_uniform
    assert np.allclose(g.dt, [0.1, 0.3, 0.6])


def test_stream_key_validation():
    with pytest.raises(ValueError):
        StreamKey(-1)
    with pytest.raises(ValueError):
        StreamKey(0, substream=2**32)
    k = StreamKey(5, 6, 7)
    assert k.child(9).substream == 9


def test_increments_deterministic():
    grid = TimeGrid(0.0, 1.0, 64)
    key = StreamKey(123, 45, 1)
    a = brownian_increments(grid, 3, key)
    b = brownian_increments(grid, 3, key)
    assert a.shape == (64, 3)
    assert np.array_equal(a, b)


def test_increments_moments():
    # law of large numbers at n = 1e5: mean within 4 sigma, variance within 1%
    grid = TimeGrid(0.0, 100.0, 100000)
    dt = grid.dt[0]
    w = brownian_increments(grid, 1, StreamKey(7, 0, 0))[:, 0]
    assert abs(w.mean()) < 4.0 * np.sqrt(dt / len(w))
    assert abs(w.var() - dt) / dt < 0.01


def test_streams_independent():
    grid = TimeGrid(0.0, 100.0, 100000)
    a = brownian_increments(grid, 1, StreamKey(7, 1, 0))[:, 0]
    b = brownian_increments(grid, 1, StreamKey(7, 2, 0))[:, 0]
    r = np.corrcoef(a, b)[0, 1]
    assert abs(r) < 0.02


def test_substreams_differ():
    grid = TimeGrid(0.0, 1.0, 16)
    a = brownian_increments(grid, 1, StreamKey(7, 1, 0))
    b = brownian_increments(grid, 1, StreamKey(7, 1, 1))
    assert not np.array_equal(a, b)


def test_telescoping_sum():
    grid = TimeGrid(0.0, 1.0, 5000)
    w = brownian_increments(grid, 2, StreamKey(3, 0, 0))
    path_end = np.cumsum(w, axis=0)[-1]
    assert np.allclose(path_end, w.sum(axis=0), atol=1e-12)


def test_generator_prefix_consistency():
    # drawing a shorter block yields a prefix of the longer draw
    key = StreamKey(11, 2, 3)
    long = stream_generator(key).random((10, 2))
    short = stream_generator(key).random((4, 2))
    assert np.array_equal(long[:4], short)
