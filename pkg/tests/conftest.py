import pytest

from cumord.suites import registry_models

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def registry():
    return registry_models()


@pytest.fixture(scope="session")
def class_c(registry):
    return {k: m for k, m in registry.items() if m.in_class_C}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
