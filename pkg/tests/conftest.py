import numpy as np
import pytest

from mesofd.lattice import CATALOG, build_lattice

# criterion -> (passed, message), filled by test_acceptance
ACCEPTANCE_LINES = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_lattice(rng, name=None, cs2=1.0):
    """Catalog lattice with random admissible per-axis ``d0``."""
    if name is None:
        name = rng.choice(sorted(CATALOG))
    e = CATALOG[name.lower()]
    while True:
        if e.equal_d0:
            d0 = np.full(e.dim, rng.uniform(0.05, 0.95))
        else:
            d0 = rng.uniform(0.05, 0.95, e.dim)
        try:
            return build_lattice(name, d0, np.sqrt(cs2 / d0))
        except ValueError:
            continue


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        ok, msg = ACCEPTANCE_LINES[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {key}: {msg}")
