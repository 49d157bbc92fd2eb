"""Shared fixtures for the covertslot test suite"""

from pathlib import Path

import pytest
import yaml

from src.bounds import AchievabilityParams
from src.info_core import AwgnPair, DmcPair
from src.settings import init_settings

EXPERIMENTS_DIR = Path(__file__).parent / "src" / "experiments"


@pytest.fixture(autouse=True)
def runtime_settings(monkeypatch):
    """Fresh settings per test, independent of the caller's environment"""
    for var in ("COVERTSLOT_THREADS", "COVERTSLOT_LOG_LEVEL", "COVERTSLOT_MAX_CODEWORDS"):
        monkeypatch.delenv(var, raising=False)
    return init_settings(threads=2, log_level="WARNING")


@pytest.fixture
def bsc_pair() -> DmcPair:
    """Keyless BSC pair: Bob BSC(0.05), Willie BSC(0.1)"""
    return DmcPair.from_bsc(0.05, 0.1)


@pytest.fixture
def awgn_pair() -> AwgnPair:
    return AwgnPair(sigma_b2=0.25, sigma_w2=1.0)


@pytest.fixture
def desk_params() -> AchievabilityParams:
    return AchievabilityParams(delta=0.5, nu1=0.25, delta1=0.25)


@pytest.fixture
def write_manifest(tmp_path):
    """Write a manifest dict as YAML under tmp_path and return its path"""

    def _write(data: dict, name: str = "manifest.yaml") -> Path:
        path = tmp_path / name
        data = {"output_dir": str(tmp_path / "results"), **data}
        path.write_text(yaml.safe_dump(data))
        return path

    return _write
