import numpy as np
import pytest

from causalbands.canon import CanonicalScm, build_response_space, observational_joint
from causalbands.dist import make_rng

# (criterion number, passed, detail) rows filled in by test_acceptance
ACCEPTANCE = []


def random_scm(g, seed, concentration=1.0):
    space = build_response_space(g)
    rng = make_rng(seed)
    return CanonicalScm(g, {c.members: rng.dirichlet(np.full(c.n_profiles, concentration)) for c in space.components})


def random_compatible_joint(g, seed):
    return observational_joint(random_scm(g, seed))


@pytest.fixture
def rng():
    return make_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
