import pathlib

import pytest

from chorcc.parser import parse_program

PROGRAMS = pathlib.Path(__file__).resolve().parent.parent / "programs"
GOLDEN = pathlib.Path(__file__).resolve().parent / "golden"


def load_program(name: str):
    return parse_program((PROGRAMS / f"{name}.ac").read_text())


@pytest.fixture(scope="session")
def ping():
    return load_program("ping")


@pytest.fixture(scope="session")
def ring():
    return load_program("ring")


@pytest.fixture(scope="session")
def file_transfer():
    return load_program("file_transfer")
