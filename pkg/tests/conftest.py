import numpy as np
import pytest

from exgraph.field import ScalarField

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: list[str] = []


def random_field(shape, seed, integer=False) -> ScalarField:
    rng = np.random.default_rng(seed)
    if integer:
        return ScalarField.from_array(rng.integers(0, 6, size=shape).astype(np.int16))
    return ScalarField.from_array(rng.random(shape))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda l: int(l.split()[1])):
            terminalreporter.write_line(line)
