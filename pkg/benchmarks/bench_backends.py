"""Compare the numba kernels with the numpy fallback.

Each backend runs in its own interpreter because the choice is fixed at
import time by ``CONGESTION_AP_DISABLE_NUMBA``. Kernel timings exclude the
first (compiling) call; the end-to-end run includes everything.

    python3 benchmarks/bench_backends.py [--repeat 5] [--n 200000]
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _best(fn, repeat):
    fn()  # warm-up / compile
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def child(repeat, n):
    from congestion_ap import kernels
    from congestion_ap.harness import RunConfig, run
    from congestion_ap.pressure import PressureLaw

    law = PressureLaw(epsilon=1e-4)
    rng = np.random.default_rng(0)
    rho = rng.uniform(0.05, 0.99, n)
    q = rng.uniform(-1, 1, n)
    y = rng.uniform(0, 1e3, n)
    side = int(np.sqrt(n))
    r2, a2, b2 = (rng.uniform(0.05, 0.99, (side, side)), rng.uniform(-1, 1, (side, side)),
                  rng.uniform(-1, 1, (side, side)))

    out = {"backend": kernels.backend_name()}
    out["flux_1d"] = _best(lambda: kernels.flux_1d(rho, q, law.epsilon, law.params), repeat)
    out["s_of_p1"] = _best(lambda: kernels.s_of_p1(y, law.params), repeat)
    out["flux_2d"] = _best(lambda: kernels.flux_2d(r2, a2, b2, law.epsilon, law.params), repeat)
    t0 = time.perf_counter()
    run(RunConfig(case="P1", scheme="direct", dx=1 / 800, dt=1 / 4000, t_end=0.025))
    out["run_P1_800"] = time.perf_counter() - t0
    print(json.dumps(out))


def launch(disable, repeat, n):
    env = dict(os.environ)
    if disable:
        env["CONGESTION_AP_DISABLE_NUMBA"] = "1"
    else:
        env.pop("CONGESTION_AP_DISABLE_NUMBA", None)
    res = subprocess.run([sys.executable, __file__, "--child", "--repeat", str(repeat), "--n", str(n)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.child:
        child(args.repeat, args.n)
        return

    fast = launch(False, args.repeat, args.n)
    slow = launch(True, args.repeat, args.n)
    print(f"{'benchmark':<12}{fast['backend']:>12}{slow['backend']:>12}{'speedup':>10}")
    for key in ("flux_1d", "s_of_p1", "flux_2d", "run_P1_800"):
        print(f"{key:<12}{fast[key]:>11.4f}s{slow[key]:>11.4f}s{slow[key] / fast[key]:>9.2f}x")


if __name__ == "__main__":
    main()
