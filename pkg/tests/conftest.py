"""Shared fixtures.

The Hopf crossing at ell = 20 is the workhorse configuration of half the
suite and costs a few determinant Newton iterations, so it is computed
once per session.  Everything here is deterministic; caching changes
timings only.
"""

import pytest

from triggerfront import ModelParams, closed_form_spreading, find_hopf_crossing


@pytest.fixture(scope="session")
def spreading_alpha1():
    return closed_form_spreading(1.0)


@pytest.fixture(scope="session")
def crossing_ell20():
    return find_hopf_crossing(ModelParams(c=1.5, ell=20.0))


@pytest.fixture(scope="session")
def crossing_ell10():
    return find_hopf_crossing(ModelParams(c=1.4, ell=10.0))
