import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
CASES = ROOT / "cases"
sys.path.insert(0, str(Path(__file__).parent))

from gridscreen import generate_dataset, parse_case, split_dataset  # noqa: E402


@pytest.fixture(scope="session")
def tri3_text() -> str:
    return (CASES / "tri3.case").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def tri3(tri3_text):
    return parse_case(tri3_text)


@pytest.fixture(scope="session")
def case14():
    return parse_case((CASES / "case14.case").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def tri3_dataset(tri3):
    return generate_dataset(tri3, 500, 0.1, seed=7)


@pytest.fixture(scope="session")
def tri3_base_sample(tri3):
    # magnitude 0: the single sample is the unperturbed base case
    return generate_dataset(tri3, 1, 0.0, seed=0).samples[0]


@pytest.fixture(scope="session")
def case14_dataset(case14):
    return generate_dataset(case14, 2000, 0.1, seed=11)


@pytest.fixture(scope="session")
def case14_splits(case14_dataset):
    return split_dataset(case14_dataset, (0.8, 0.1, 0.1), seed=11)
