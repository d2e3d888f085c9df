import runpy
import sys
from pathlib import Path

import pytest

DEMOS = Path(__file__).resolve().parents[1] / "demos"


@pytest.mark.parametrize("name", ["dissipativity_basics", "clone_chain_controller",
                                  "network_example"])
def test_demo_runs(name, capsys):
    runpy.run_path(str(DEMOS / f"{name}.py"), run_name="__main__")
    assert capsys.readouterr().out


def test_sweep_demo_writes_results(tmp_path, monkeypatch):
    monkeypatch.setattr(sys, "argv", ["small_sweep.py", str(tmp_path / "res")])
    runpy.run_path(str(DEMOS / "small_sweep.py"), run_name="__main__")
    assert (tmp_path / "res" / "trials.csv").exists()
