import json
import subprocess
import sys
from pathlib import Path

import pytest


@pytest.fixture(scope="session")
def mini_dataset(tmp_path_factory):
    """A small dataset produced through the annotation pipeline's CLI,
    with loss weights and an 8-item overfit split."""
    base = tmp_path_factory.mktemp("trainer_data")
    rec = base / "rec"
    ds = base / "ds"

    def run(*args):
        proc = subprocess.run([sys.executable, "-m", "radarlabel.cli",
                               *args], capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        return proc

    run("simulate", "--scenario", "corridor_mini", "--out", str(rec))
    run("generate", "--manifest", str(rec / "manifest.json"),
        "--out", str(ds), "--seed", "1", "--window-secs", "4")
    run("stats", "--dataset", str(ds))

    index = [json.loads(l) for l in (ds / "index.jsonl").read_text()
             .splitlines() if l.strip()]
    (ds / "splits").mkdir(exist_ok=True)
    (ds / "splits" / "overfit.txt").write_text(
        "".join(r["item"] + "\n" for r in index[:8]))
    return ds
