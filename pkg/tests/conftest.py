"""Pytest fixtures for anosov-forge tests."""

import pytest

from anosov_forge.catalog import CatalogEntry, lahn_qi_non_anosov, rho2, schottky
from anosov_forge.config import Settings
from anosov_forge.perturb import CommutatorSetup, planted_instance

SETTINGS_MODULES = (
    "anosov_forge.config",
    "anosov_forge.represent",
    "anosov_forge.pingpong",
    "anosov_forge.suspension",
    "anosov_forge.perturb",
    "anosov_forge.flagdyn",
    "anosov_forge.catalog",
    "anosov_forge.__main__",
)


@pytest.fixture
def test_settings() -> Settings:
    """Create test settings with a single worker and a fixed seed."""
    return Settings(workers=1, seed=0)


@pytest.fixture(autouse=True)
def patched_settings(
    test_settings: Settings, monkeypatch: pytest.MonkeyPatch
) -> Settings:
    """Patch the global settings in every module that reads them."""
    for module in SETTINGS_MODULES:
        monkeypatch.setattr(f"{module}.settings", test_settings)
    return test_settings


@pytest.fixture
def planted() -> CommutatorSetup:
    """Planted instance with a p = 1 incidence near t = 0.175."""
    return planted_instance()


@pytest.fixture(scope="session")
def rho2_entry() -> CatalogEntry:
    """Catalog rho2: a -> g^7, b -> f^7."""
    return rho2()


@pytest.fixture(scope="session")
def lahn_entry() -> CatalogEntry:
    """Derived-from-Barbot suspension with Lahn witness ratio 2/3."""
    return lahn_qi_non_anosov()


@pytest.fixture(scope="session")
def schottky_entry() -> CatalogEntry:
    """Ping-pong family with stored cones."""
    return schottky()
