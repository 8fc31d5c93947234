import json
import logging

import numpy as np
import pytest

from additive.config import get_settings


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    for name in ("ADDITIVE_DFT_METHOD", "ADDITIVE_DIRECT_LIMIT", "ADDITIVE_SEED",
                 "ADDITIVE_LOG_LEVEL", "ADDITIVE_DENSITY_TOL", "ADDITIVE_OUTPUT_DIR"):
        monkeypatch.delenv(name, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
    logger = logging.getLogger("additive")
    for handler in [h for h in logger.handlers if getattr(h, "_additive", False)]:
        logger.removeHandler(handler)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def write_function(tmp_path):
    def _write(values, name="f.json"):
        path = tmp_path / name
        path.write_text(json.dumps({"modulus": len(values), "values": [float(v) for v in values]}))
        return str(path)
    return _write
