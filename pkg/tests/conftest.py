import pytest

from ltvgain import examples


@pytest.fixture(scope="session")
def g1():
    return examples.g1()


@pytest.fixture(scope="session")
def g2():
    return examples.g2()


@pytest.fixture(scope="session")
def sine_ltv():
    return examples.sine_ltv()


@pytest.fixture(scope="session")
def scalar():
    return examples.scalar_decay()


@pytest.fixture(scope="session")
def memoryless():
    return examples.memoryless(3.0)


# Criterion lines recorded by the acceptance module, echoed after the run.
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
