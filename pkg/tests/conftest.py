import logging
import pytest

from curvedrt.cases import get_case
from curvedrt.meshes import (generate_quarter_annulus, quarter_annulus_domain,
                             generate_unit_square, unit_square_domain)


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: long refinement studies')


@pytest.fixture(autouse=True)
def _propagate_curvedrt_logs():
    # cli.main installs its own handler; caplog listens on the root logger
    logging.getLogger('curvedrt').propagate = True
    yield


@pytest.fixture
def annulus():
    def _make(L):
        domain = quarter_annulus_domain()
        return generate_quarter_annulus(L, domain), domain
    return _make


@pytest.fixture
def patch():
    def _make(n):
        case = get_case('square-patch')
        domain = case.domain()
        return generate_unit_square(n, domain), domain, case
    return _make


@pytest.fixture
def square():
    def _make(n, tags):
        domain = unit_square_domain(tags)
        return generate_unit_square(n, domain), domain
    return _make
