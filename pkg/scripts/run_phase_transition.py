#!/usr/bin/env python3
"""Reproduce the recovery phase diagram at desk scale.

Writes phase.csv / phase_summary.json / manifest.json into --out-dir.
The full grid (n = 20..30, s = 20..150, 20 trials) takes a while; the
default here is the acceptance grid n in {20, 25, 30}.  Plot the CSV with
any tool, e.g. success rate per (n, s) cell against the overlay curve
n^2/4 - n - 25.
"""

import sys

from rankone_nnls.cli import main

CONFIG = {
    "seed": 2026,
    "n_values": [20, 25, 30],
    "s_values": list(range(20, 151, 10)),
    "trials": 20,
    "entries": "real",
    "algorithm": "projected-gradient",
}

if __name__ == "__main__":
    import json
    import tempfile

    out_dir = sys.argv[1] if len(sys.argv) > 1 else "phase_out"
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(CONFIG, fh)
        cfg_path = fh.name
    sys.exit(main(["phase", "--config", cfg_path, "--out-dir", out_dir]))
