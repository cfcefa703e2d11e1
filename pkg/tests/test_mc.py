"""Determinism contracts for the chunked generators."""

import numpy as np

from blscales.mc import CHUNK, ball_volume, chunk_generator, iter_chunks, uniform_ball, uniform_box


def test_same_key_same_numbers():
    a = chunk_generator(seed=3, stream=5, chunk_index=2).random(100)
    b = chunk_generator(seed=3, stream=5, chunk_index=2).random(100)
    assert np.array_equal(a, b)


def test_chunks_are_disjoint_streams():
    a = chunk_generator(seed=3, stream=5, chunk_index=0).random(1000)
    b = chunk_generator(seed=3, stream=5, chunk_index=1).random(1000)
    c = chunk_generator(seed=3, stream=6, chunk_index=0).random(1000)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_chunk_order_independent_assembly():
    # assembling chunk results out of order must give the same totals
    total = 3 * CHUNK + 17
    sizes = list(iter_chunks(total))
    assert sum(n for _, n in sizes) == total
    fwd = [chunk_generator(9, 1, i).random(n).sum() for i, n in sizes]
    rev = [chunk_generator(9, 1, i).random(n).sum() for i, n in reversed(sizes)]
    assert np.allclose(sorted(fwd), sorted(rev), rtol=0, atol=0)


def test_iter_chunks_covers_exactly():
    assert list(iter_chunks(10)) == [(0, 10)]
    pairs = list(iter_chunks(2 * CHUNK))
    assert pairs == [(0, CHUNK), (1, CHUNK)]


def test_uniform_box_bounds():
    gen = chunk_generator(0, 0, 0)
    lo = np.array([-1.0, 2.0])
    hi = np.array([0.5, 3.0])
    pts = uniform_box(gen, 5000, lo, hi)
    assert pts.shape == (5000, 2)
    assert np.all(pts >= lo) and np.all(pts <= hi)
    # mean of each coordinate near the box midpoint
    assert np.allclose(pts.mean(axis=0), (lo + hi) / 2, atol=0.02)


def test_uniform_ball_radius_law():
    gen = chunk_generator(1, 2, 0)
    center = np.array([1.0, -1.0, 0.5])
    pts = uniform_ball(gen, 20000, center, 2.0)
    r = np.linalg.norm(pts - center, axis=1)
    assert r.max() <= 2.0 + 1e-12
    # E|x| = d/(d+1) * R for the uniform ball
    assert abs(r.mean() - 2.0 * 3 / 4) < 0.02


def test_ball_volume_known_values():
    assert np.isclose(ball_volume(1, 1.0), 2.0)
    assert np.isclose(ball_volume(2, 1.0), np.pi)
    assert np.isclose(ball_volume(3, 2.0), 4 / 3 * np.pi * 8)
