import json
from pathlib import Path

import numpy as np
import pytest

from vqehpc.fermion import qubit_hamiltonian_from_fcidump

DATA = Path(__file__).resolve().parents[1] / "src" / "vqehpc" / "data"


def fixture_path(name: str) -> Path:
    return DATA / f"{name}.fcidump"


@pytest.fixture(scope="session")
def reference_energies():
    return json.loads((DATA / "reference_energies.json").read_text())


@pytest.fixture(scope="session")
def h2():
    return qubit_hamiltonian_from_fcidump(fixture_path("h2_sto3g"))


@pytest.fixture(scope="session")
def h2_631g():
    return qubit_hamiltonian_from_fcidump(fixture_path("h2_631g"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        ok, detail = RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
