from pathlib import Path

import pytest

from ctxcode.synthetic import stage_scenario

ROOT = Path(__file__).resolve().parent.parent
CUSTOMBLOCK = ROOT / "scenarios" / "customblock"


@pytest.fixture
def customblock(tmp_path):
    return stage_scenario(CUSTOMBLOCK, tmp_path)
