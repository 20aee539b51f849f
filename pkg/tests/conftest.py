import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from radarlabel.pipeline import GenerateConfig, generate_dataset
from radarlabel.scenario import corridor_mini_config, generate_scenario


@pytest.fixture(scope="session")
def mini_manifest(tmp_path_factory):
    out = tmp_path_factory.mktemp("mini_rec")
    return generate_scenario(corridor_mini_config(), out)


@pytest.fixture(scope="session")
def mini_dataset(tmp_path_factory, mini_manifest):
    out = tmp_path_factory.mktemp("mini_ds")
    cfg = GenerateConfig(seed=1, window_secs=4.0)
    summary = generate_dataset(mini_manifest, out, cfg)
    assert summary["failures"] == 0
    return out
