import pytest

from womctl.instances import (
    load_d2,
    load_d2ext,
    load_static3,
    load_static3_reindexed,
    load_wom3,
)


@pytest.fixture(scope="session")
def d2():
    return load_d2()


@pytest.fixture(scope="session")
def d2ext():
    return load_d2ext()


@pytest.fixture(scope="session")
def static3():
    return load_static3()


@pytest.fixture(scope="session")
def static3_reindexed():
    return load_static3_reindexed()


@pytest.fixture(scope="session")
def wom3():
    return load_wom3()
