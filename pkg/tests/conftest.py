import math

import numpy as np
import pytest

from cckit.family import TwistedPrismParams, build
from cckit.geometry import Configuration

SQRT2 = math.sqrt(2.0)

# Filled by test_acceptance; printed at the end of the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


@pytest.fixture
def octahedron():
    return build(TwistedPrismParams.equal(SQRT2, 1.0, 1.0, 0.0))


def random_config(rng, n, mass_range=(0.1, 10.0)):
    """Random non-degenerate configuration with well-separated bodies."""
    while True:
        pos = rng.normal(size=(n, 3))
        diff = pos[:, None] - pos[None, :]
        d = np.sqrt((diff**2).sum(-1))[np.triu_indices(n, 1)]
        if d.min() > 0.2:
            return Configuration(rng.uniform(*mass_range, size=n), pos)


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def tetrahedron_plus_center(m=1.0, m0=1.0, scale=1.0, rotation=None):
    verts = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    pos = np.vstack([verts, np.zeros(3)]) * scale
    if rotation is not None:
        pos = pos @ rotation.T
    return Configuration([m, m, m, m, m0], pos)
