"""Compare the numba kernels with the pure-numpy fallback.

Each mode runs in its own interpreter because ``PATHSUM_NO_NUMBA`` is read
at import time. Timings exclude the first call (JIT compilation or cache
load)::

    python benchmarks/bench_kernels.py --sizes 4 6 8 --repeats 3
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from pathsum import InformationModel, full_covariance
from pathsum import _kernels as K

sizes, repeats, density = json.loads(sys.argv[1])
rng = np.random.default_rng(0)
rows = []
for n in sizes:
    mask = np.triu(rng.random((n, n)) < density, 1)
    W = rng.normal(size=(n, n)) * mask
    W = W + W.T
    J = W + np.diag(np.full(n, abs(np.linalg.eigvalsh(W).min()) + 1.0))
    m = InformationModel(J)
    full_covariance(m, backend="kernel")
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        S = full_covariance(m, backend="kernel")
        best = min(best, time.perf_counter() - t0)
    err = float(np.abs(S - np.linalg.inv(J)).max())
    rows.append({"n": n, "seconds": best, "max_abs_error": err})
print(json.dumps({"numba": K.USE_NUMBA, "rows": rows}))
"""


def run_mode(pure, sizes, repeats, density):
    env = dict(os.environ)
    if pure:
        env["PATHSUM_NO_NUMBA"] = "1"
    else:
        env.pop("PATHSUM_NO_NUMBA", None)
    out = subprocess.run([sys.executable, "-c", WORKER, json.dumps([sizes, repeats, density])],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[4, 6, 8, 9])
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--density", type=float, default=1.0, help="edge fill of the random models")
    args = p.parse_args()
    fast = run_mode(False, args.sizes, args.repeats, args.density)
    slow = run_mode(True, args.sizes, args.repeats, args.density)
    print(f"{'n':>3} {'numba s':>10} {'numpy s':>10} {'speedup':>8} {'max |err|':>10}")
    for a, b in zip(fast["rows"], slow["rows"]):
        print(f"{a['n']:>3} {a['seconds']:>10.4f} {b['seconds']:>10.4f} "
              f"{b['seconds'] / a['seconds']:>8.1f} {max(a['max_abs_error'], b['max_abs_error']):>10.1e}")


if __name__ == "__main__":
    main()
