"""
Coverage as the degree grows
============================

Runs the harness over a small degree sweep, writes the CSV and plots mean
coverage.  Needs matplotlib, which the library itself does not.
"""

import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tfpack import ExperimentSpec, GenSpec, run_experiment
from tfpack.harness import write_csv

degrees = [16, 24, 32, 48, 64]
spec = ExperimentSpec(
    instances=[GenSpec("random_regular", 1500, d, d) for d in degrees],
    pattern=["C3", "C4"],
    repetitions=3,
)
rows = run_experiment(spec)
write_csv(rows, "degree_sweep.csv")

for pattern in spec.patterns:
    means = [np.mean([r["coverage"] for r in rows if r["d"] == d and r["pattern"] == pattern]) for d in degrees]
    plt.plot(degrees, means, marker="o", label=pattern)
plt.xlabel("degree d")
plt.ylabel("mean coverage")
plt.legend()
out = sys.argv[1] if len(sys.argv) > 1 else "degree_sweep.png"
plt.savefig(out, dpi=120)
print("wrote degree_sweep.csv and", out)
