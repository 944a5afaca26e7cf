import pytest

from uavrelay import planner
from uavrelay.scenario import default_flight_area, default_mission, generate_scenario


def make_scenario(seed=1, lambda_mbs=2.0, lambda_ue=20.0, T=240.0, **kw):
    area = (0.0, 0.0, 1.0, 1.0)
    return generate_scenario(
        area, lambda_mbs, lambda_ue, default_mission(T), seed, flight_area=default_flight_area(area), **kw
    )


@pytest.fixture(scope="session")
def scenario():
    return make_scenario()


@pytest.fixture(scope="session")
def problem(scenario):
    return planner.prepare(scenario)


ACCEPTANCE_LINES: list[str] = []


def report(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
