from __future__ import annotations

import shutil
from pathlib import Path

import pytest

from bizsynth.demo import build_database, build_demo_pack
from bizsynth.domain import BusinessLogicInstance, DomainSpec, FunctionalArea, Kpi, Persona, WorkflowTask, WorkScenario


@pytest.fixture(scope="session")
def retail_db(tmp_path_factory) -> Path:
    return build_database(tmp_path_factory.mktemp("db") / "retail.db")


@pytest.fixture(scope="session")
def demo_pack(tmp_path_factory) -> Path:
    """Directory holding config.yaml, retail.db and recorded fixtures. Treat as read-only."""
    root = tmp_path_factory.mktemp("pack")
    build_demo_pack(root)
    return root


@pytest.fixture()
def pack_copy(demo_pack, tmp_path) -> Path:
    """A writable copy of the demo pack for tests that run the pipeline."""
    dest = tmp_path / "pack"
    shutil.copytree(demo_pack, dest, ignore=shutil.ignore_patterns("out"))
    return dest


@pytest.fixture(scope="session")
def demo_run(demo_pack, tmp_path_factory) -> Path:
    """Output directory of one full offline replay of the demo."""
    from bizsynth.config import load_config
    from bizsynth.pipeline import Pipeline

    out = tmp_path_factory.mktemp("demo_out")
    Pipeline(load_config(demo_pack / "config.yaml", out_dir=out)).run_all()
    return out


@pytest.fixture()
def spec() -> DomainSpec:
    return DomainSpec("Omnichannel Retail", (FunctionalArea("Store Operations", "Runs the stores."),))


@pytest.fixture()
def instance() -> BusinessLogicInstance:
    persona = Persona(
        "Store Manager", "manager", "Runs one store.", ("Hit target",), ("Late reports",), ("Net revenue",),
        department="Store Operations",
    )
    return BusinessLogicInstance(
        "inst-1",
        persona,
        WorkScenario("Weekly Store Performance Review", "Review last week's results.", "weekly"),
        (WorkflowTask("Gather figures", "", 0), WorkflowTask("Share outcome", "", 1)),
        (Kpi("Net revenue"),),
    )


# --- one summary line per acceptance criterion ------------------------------------

_CRITERIA: dict[int, tuple[str, bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (report.when != "call" and not report.failed):
        return
    number, title = marker.args
    previous = _CRITERIA.get(number, (title, True))[1]
    _CRITERIA[number] = (title, previous and not report.failed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}")
