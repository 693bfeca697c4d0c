import pytest

from nomo_lab import heavy_center_transform, make_lambda_model

ACCEPTANCE_LINES = []


@pytest.fixture
def lam1():
    model = make_lambda_model(1.0)
    return model, heavy_center_transform(model)


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
