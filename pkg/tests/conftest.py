import pytest

from helpers import gadget_instance, strip_instance


@pytest.fixture
def strip():
    return strip_instance()


@pytest.fixture
def gadget():
    return gadget_instance()
