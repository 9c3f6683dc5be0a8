import threading
import time

import pytest

from core.i18n import I18N, t
from core.parallel import default_threads, gather_threads
from core.timings import StageTimer


def test_gather_threads_keeps_task_order():
    def make(i):
        def task():
            time.sleep(0.01 * (5 - i))
            return i, threading.get_ident()

        return task

    results = gather_threads([make(i) for i in range(5)], threads=3)
    assert [i for i, _ in results] == list(range(5))
    assert gather_threads([], threads=2) == []


def test_gather_threads_propagates_errors():
    def boom():
        raise RuntimeError("boom")

    with pytest.raises(RuntimeError):
        gather_threads([lambda: 1, boom], threads=2)


def test_default_threads_from_environment(monkeypatch):
    monkeypatch.setenv("SPECTRALSHAPE_THREADS", "2")
    assert default_threads() == 2
    monkeypatch.setenv("SPECTRALSHAPE_THREADS", "many")
    assert default_threads() >= 1


def test_stage_timer():
    timer = StageTimer()
    with timer.stage("a"):
        pass
    with timer.stage("b"):
        pass
    assert [s.stage for s in timer.stages()] == ["a", "b"]
    assert timer.total() >= 0.0

    off = StageTimer(enabled=False)
    with off.stage("a"):
        pass
    assert off.total() is None
    assert off.to_dict() == [{"stage": "a", "seconds": None}]


def test_stage_timer_records_failing_stage():
    timer = StageTimer()
    with pytest.raises(ValueError):
        with timer.stage("broken"):
            raise ValueError
    assert timer.stages()[0].stage == "broken"


def test_translation_falls_back():
    try:
        I18N.set_language("pl")
        assert t("report_written", path="x") == "Raport zapisano w x"
        assert t("no-such-key") == "no-such-key"
        I18N.set_language("de")
        assert I18N.get_language() == "en"
        assert t("report_written") == "Report written to {path}"
    finally:
        I18N.set_language("en")
