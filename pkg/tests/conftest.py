import math

import numpy as np
import pytest

SQRT2 = math.sqrt(2.0)


def square_distances() -> np.ndarray:
    """Corners of a unit square, in cyclic order."""
    return np.array([
        [0.0, 1.0, SQRT2, 1.0],
        [1.0, 0.0, 1.0, SQRT2],
        [SQRT2, 1.0, 0.0, 1.0],
        [1.0, SQRT2, 1.0, 0.0],
    ])


def random_distances(rng: np.random.Generator, n: int, tie_levels: int | None = None) -> np.ndarray:
    """Random symmetric dissimilarity matrix; ``tie_levels`` quantizes entries to force ties."""
    if tie_levels:
        upper = rng.integers(1, tie_levels + 1, size=(n, n)).astype(float)
    else:
        upper = rng.uniform(0.05, 2.0, size=(n, n))
    d = np.triu(upper, 1)
    return d + d.T


def write_long_csv(path, header, rows):
    lines = [",".join(header)] + [",".join(str(c) for c in r) for r in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def square():
    return square_distances()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
