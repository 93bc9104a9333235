"""Time the compiled kernels against their pure-numpy fallbacks.

Each configuration runs in a fresh interpreter because the backend is
chosen once at import time from ARTIFACT_DISABLE_NUMBA.

    python benchmarks/bench_numba.py
"""

import json
import os
import subprocess
import sys

WORKER = r"""
import json, time
import numpy as np
from artifact._accel import NUMBA_ENABLED
from artifact.hull import envelope_on_grid
from artifact.montecarlo import invert_log_survival

rng = np.random.default_rng(0)
x = np.linspace(0.0, 1.0, 20001)
y = np.sin(7 * x) + 0.1 * rng.standard_normal(x.size)
t = np.linspace(0.0, 40.0, 801)
log_s = -0.3 * t
targets = np.log(rng.uniform(size=10000))

def best(f, reps):
    f()
    out = []
    for _ in range(reps):
        a = time.perf_counter(); f(); out.append(time.perf_counter() - a)
    return min(out)

print(json.dumps({
    "numba": NUMBA_ENABLED,
    "envelope_20001": best(lambda: envelope_on_grid(x, y), 5),
    "invert_10000": best(lambda: invert_log_survival(t, log_s, targets), 5),
    "checksum": float(envelope_on_grid(x, y).sum() + invert_log_survival(t, log_s, targets)[np.isfinite(invert_log_survival(t, log_s, targets))].sum()),
}))
"""


def run(disable):
    env = dict(os.environ, ARTIFACT_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", WORKER], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    fast, slow = run(False), run(True)
    print(f"{'kernel':<16}{'numba (s)':>12}{'numpy (s)':>12}{'speedup':>10}")
    for key in ("envelope_20001", "invert_10000"):
        print(f"{key:<16}{fast[key]:>12.5f}{slow[key]:>12.5f}{slow[key] / fast[key]:>10.1f}")
    same = abs(fast["checksum"] - slow["checksum"]) <= 1e-9 * max(1.0, abs(slow["checksum"]))
    print(f"results agree: {same}")


if __name__ == "__main__":
    main()
