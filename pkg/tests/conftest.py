from pathlib import Path

import pytest

from arrowflow.data import load_csv

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def iris():
    return load_csv(FIXTURES / "iris.csv")


@pytest.fixture(scope="session")
def wine():
    return load_csv(FIXTURES / "wine.csv")
