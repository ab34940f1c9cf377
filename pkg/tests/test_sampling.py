import logging

import numpy as np
import pytest

from tentlablib.errors import ContractViolation
from tentlablib.sampling import (
    THREADS_ENV,
    CapBox,
    SphereMixture,
    ball_array,
    derive_seed,
    focused_boxes,
    parallel_map,
    sphere_array,
    stream,
    worker_count,
)


def test_sampling_stream_is_reproducible():
    first = stream(42, 1, 3).random(5)
    second = stream(42, 1, 3).random(5)
    other = stream(42, 1, 4).random(5)
    assert np.array_equal(first, second)
    assert not np.array_equal(first, other)
    assert derive_seed(42, 1) == derive_seed(42, 1)


def test_sampling_stream_rejects_bad_seeds():
    with pytest.raises(ContractViolation):
        stream(-1)
    with pytest.raises(ContractViolation):
        stream(2**64)


def test_sampling_worker_count_defaults_to_one(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert worker_count() == 1
    monkeypatch.setenv(THREADS_ENV, "4")
    assert worker_count() == 4


def test_sampling_worker_count_warns_on_invalid(monkeypatch, caplog):
    monkeypatch.setenv(THREADS_ENV, "many")
    with caplog.at_level(logging.WARNING, logger="tentlab"):
        assert worker_count() == 1
    assert "TENTLAB_THREADS" in caplog.text
    monkeypatch.setenv(THREADS_ENV, "0")
    assert worker_count() == 1


def test_sampling_parallel_map_keeps_order():
    items = list(range(20))
    assert parallel_map(lambda x: x * x, items, workers=4) == [x * x for x in items]
    assert parallel_map(lambda x: x + 1, items, workers=1) == [x + 1 for x in items]


def test_sampling_points_lie_in_ball_and_sphere():
    rng = stream(1, 1)
    sphere = sphere_array(rng, 100, 3)
    ball = ball_array(rng, 100, 3, radius=0.5)
    assert np.allclose(np.linalg.norm(sphere, axis=1), 1.0)
    assert np.all(np.linalg.norm(ball, axis=1) <= 0.5)


def test_sampling_whole_box():
    box = CapBox(np.array([1.0, 0.0], dtype=complex), 0.75)
    assert box.whole and box.mass == 1.0


def test_sampling_box_contains_cap():
    center = np.array([0.6, 0.8j])
    box = CapBox(center, 0.1)
    xi = sphere_array(stream(2, 1), 20000, 2)
    in_cap = np.abs(1.0 - xi @ np.conj(center)) < 0.1
    assert in_cap.any()
    assert np.all(box.contains(xi)[in_cap])
    drawn = box.sample(stream(2, 2), 500)
    assert np.all(box.contains(drawn))
    assert np.allclose(np.linalg.norm(drawn, axis=1), 1.0)


def test_sampling_mixture_weights_are_unbiased():
    center = np.array([1.0, 0.0], dtype=complex)
    mixture = SphereMixture(2, focused_boxes([center], 1e-3))
    sample = mixture.sample(stream(3, 1), 20000)
    mean, error = sample.estimate(np.ones(sample.count))
    assert abs(mean - 1.0) <= 5 * error + 1e-9
