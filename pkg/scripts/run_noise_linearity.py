#!/usr/bin/env python3
"""Error-versus-noise sweep: mean recovery error against the noise norm.

Ten scales over two decades at n = 25, N = 2400, s = 20; the summary JSON
reports the through-origin fit (R^2, slope) and whether every observed
error stays below the closed-form error bound.
"""

import json
import sys
import tempfile

from rankone_nnls.cli import main

CONFIG = {"seed": 314, "n": 25, "N": 2400, "s": 20, "trials": 5}

if __name__ == "__main__":
    out_dir = sys.argv[1] if len(sys.argv) > 1 else "noise_out"
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(CONFIG, fh)
        cfg_path = fh.name
    sys.exit(main(["noise", "--config", cfg_path, "--out-dir", out_dir]))
