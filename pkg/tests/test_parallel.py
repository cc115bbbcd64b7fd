import numpy as np
import pytest

from framelet_restore.parallel import ordered_map, worker_count


def test_worker_count_defaults_to_serial(monkeypatch):
    monkeypatch.delenv("FRAMELET_THREADS", raising=False)
    assert worker_count() == 1
    monkeypatch.setenv("FRAMELET_THREADS", "   ")
    assert worker_count() == 1


def test_worker_count_reads_environment(monkeypatch):
    monkeypatch.setenv("FRAMELET_THREADS", "4")
    assert worker_count() == 4
    monkeypatch.setenv("FRAMELET_THREADS", "0")
    assert worker_count() == 1   # clamped to serial
    monkeypatch.setenv("FRAMELET_THREADS", "-2")
    assert worker_count() == 1


def test_worker_count_rejects_garbage(monkeypatch):
    monkeypatch.setenv("FRAMELET_THREADS", "many")
    with pytest.raises(ValueError):
        worker_count()


def test_ordered_map_preserves_order(monkeypatch):
    monkeypatch.delenv("FRAMELET_THREADS", raising=False)
    assert ordered_map(lambda x: x * x, range(10)) == [x * x for x in range(10)]
    assert ordered_map(lambda x: x, []) == []


def test_ordered_map_threaded_matches_serial(monkeypatch):
    rng = np.random.default_rng(0)
    mats = [rng.standard_normal((32, 32)) for _ in range(8)]

    def work(m):
        return float(np.linalg.norm(m @ m.T))

    monkeypatch.delenv("FRAMELET_THREADS", raising=False)
    serial = ordered_map(work, mats)
    monkeypatch.setenv("FRAMELET_THREADS", "3")
    threaded = ordered_map(work, mats)
    assert threaded == serial
