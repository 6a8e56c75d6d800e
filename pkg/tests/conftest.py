from pathlib import Path

import pytest

from nml.backend import Backend

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def native() -> Backend:
    return Backend.native()


@pytest.fixture(scope="session")
def emulated() -> Backend:
    return Backend.emulated()


def load_fixture_model(name: str):
    from nml.model import load_model

    return load_model((FIXTURES / name).read_bytes())


def load_fixture_dataset(name: str):
    from nml.model import load_dataset

    return load_dataset((FIXTURES / name).read_bytes())


def golden_labels(name: str) -> list[int]:
    return [int(line) for line in (FIXTURES / name).read_text().splitlines()]
