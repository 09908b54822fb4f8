import numpy as np
import pytest

from hexnpc.dispersion import WaveTriplet, constant_index_model
from hexnpc.qpm_geometry import CrystalConfig, LatticeConfig

TOY_INDEX = 2.2


@pytest.fixture(scope="session")
def lattice():
    return LatticeConfig.litao3()


@pytest.fixture(scope="session")
def crystal():
    return CrystalConfig.hexnpc_default()


@pytest.fixture(scope="session")
def resonant_crystal(lattice):
    return CrystalConfig.hexnpc_default(q_p=-lattice.G_x)


def make_toy_crystal(lattice, n=TOY_INDEX, lambda_s=1055e-9):
    """Dispersion-free crystal: every wave sees the same constant index."""
    model = constant_index_model(n)
    return CrystalConfig(lattice, {r: model for r in ("pump", "signal", "idler")},
                         WaveTriplet.from_wavelengths(527.5e-9, lambda_s))


@pytest.fixture(scope="session")
def toy_crystal(lattice):
    return make_toy_crystal(lattice)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# ---------------------------------------------------------------- acceptance
_ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def acceptance():
    """Record one verdict per acceptance criterion; printed at the end of the run."""

    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        _ACCEPTANCE[number] = (title, bool(passed), detail)
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:>2}. {title}: {detail}")
