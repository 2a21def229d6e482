import numpy as np
import pytest

from pathforge.parallel import max_workers, parallel_map
from pathforge.simulate import SimParams, evaluate


def test_default_is_serial(monkeypatch):
    monkeypatch.delenv("PATHFORGE_THREADS", raising=False)
    assert max_workers() == 1


def test_env_var_parsed(monkeypatch):
    monkeypatch.setenv("PATHFORGE_THREADS", "3")
    assert max_workers() == 3
    monkeypatch.setenv("PATHFORGE_THREADS", "zero")
    with pytest.raises(ValueError):
        max_workers()


def test_order_preserved_serial(monkeypatch):
    monkeypatch.delenv("PATHFORGE_THREADS", raising=False)
    assert parallel_map(lambda v: v * v, range(6)) == [0, 1, 4, 9, 16, 25]


def test_parallel_matches_serial(monkeypatch):
    params = SimParams(n_frames=30001, stationary=True)
    monkeypatch.delenv("PATHFORGE_THREADS", raising=False)
    serial = evaluate(params, reps=4, base_seed=5)
    monkeypatch.setenv("PATHFORGE_THREADS", "2")
    try:
        parallel = evaluate(params, reps=4, base_seed=5)
    except OSError:
        pytest.skip("process pools unavailable in this environment")
    for method in serial.methods:
        assert np.array_equal(serial.theta_hat[method], parallel.theta_hat[method])
        assert np.array_equal(serial.p_hat[method], parallel.p_hat[method])
