import numpy as np
import pytest

from bilstm_seizure.dataset import EegClip, Label


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def make_clip(samples, rate=400.0, clip_id="c0", label=Label.UNKNOWN):
    return EegClip("s", clip_id, label, rate, np.asarray(samples, dtype=np.float32))


ACCEPTANCE_LINES: list[str] = []


class _Detail:
    text = ""


@pytest.fixture
def criterion(request):
    """Report one PASS/FAIL line for a test marked ``@pytest.mark.criterion(number, title)``.

    The test may set ``criterion.text`` to add measured values to the line.
    """
    marker = request.node.get_closest_marker("criterion")
    detail = _Detail()
    yield detail
    rep = getattr(request.node, "rep_call", None)
    ok = rep is not None and rep.passed
    number, title = marker.args if marker else (request.node.name, "")
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {number}. {title} {detail.text}".rstrip())


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
