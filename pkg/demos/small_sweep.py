"""
A desk-scale training-set sweep
===============================

Runs the chain benchmark on a handful of systems and writes the per-trial
CSV and the aggregate summary.  The same call with the preset sizes
reproduces the full sweep; so does ``python -m dissipative_bc experiment chain``.
"""

import json
import sys
from pathlib import Path

from dissipative_bc.experiments import chain_config, emit_results, run_experiment

out = Path(sys.argv[1] if len(sys.argv) > 1 else "results_demo")
cfg = chain_config(grid=(1, 5, 25), n_systems=4, n_eval_trajectories=10, seed=0)
reports = run_experiment(cfg)
csv_path, summary_path = emit_results(reports, out)

for point in json.loads(summary_path.read_text())["points"]:
    print("{sweep_value:>3} {learner:16s} median {median:>10} stable {stability_rate:.0%}"
          .format(**point))
print("wrote", csv_path)
