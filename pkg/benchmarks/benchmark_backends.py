"""Compare the numba-jitted kernels against the pure-numpy fallback.

Each backend runs in its own subprocess (the path is chosen at import time
via BIVIRUS_NUMBA), timing the two hot kernels: trajectory integration and
the power-iteration eigensolve.

Run: python benchmarks/benchmark_backends.py [--repeats N]
"""

import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json
import time
import numpy as np
import bivirus as bv

repeats = %(repeats)d

c6 = bv.cycle_graph(24)
ring = bv.wheel_graph(24)
sys_ = bv.BiVirusSystem(
    graph_a=c6, graph_b=ring,
    infection1=bv.LogInfection(c6, 2.0),
    recovery1=bv.PolyRecovery(24, 2.0),
    infection2=bv.LogInfection(ring, 1.5),
    recovery2=bv.PolyRecovery(24, 2.0))
s0 = bv.StateD(np.full(24, 0.3), np.full(24, 0.2))

# warm-up (JIT compile / first-touch) excluded from timing
bv.integrate(sys_, s0, t_max=1.0, conv_tol=0.0)
rng = np.random.default_rng(0)
big = bv.Graph.from_edges(
    [(i, (i + 1) %% 400) for i in range(400)]
    + [(int(a), int(b)) for a, b in rng.integers(0, 400, (300, 2)) if a != b])
bv.pf_eigen(big.adjacency)

t0 = time.perf_counter()
for _ in range(repeats):
    traj = bv.integrate(sys_, s0, t_max=200.0, conv_tol=0.0)
t_int = (time.perf_counter() - t0) / repeats

t0 = time.perf_counter()
for _ in range(repeats):
    spec = bv.pf_eigen(big.adjacency, tol=1e-12)
t_eig = (time.perf_counter() - t0) / repeats

print(json.dumps({"backend": bv.BACKEND, "integrate_s": t_int,
                  "eigen_s": t_eig, "steps": len(traj),
                  "lambda": spec.value}))
"""


def run(numba_flag: str, repeats: int) -> dict:
    env = dict(os.environ, BIVIRUS_NUMBA=numba_flag)
    out = subprocess.run([sys.executable, "-c", WORKLOAD % {"repeats": repeats}],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    fast = run("1", args.repeats)
    slow = run("0", args.repeats)
    if fast["backend"] == slow["backend"]:
        print("numba unavailable; only the numpy path was measured")

    print(f"{'kernel':<28}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for key, label in (("integrate_s", "rkf45 integrate (t=200)"),
                       ("eigen_s", "power iteration (n=400)")):
        ratio = slow[key] / fast[key] if fast[key] > 0 else float("inf")
        print(f"{label:<28}{fast[key]:>11.4f}s{slow[key]:>11.4f}s"
              f"{ratio:>9.1f}x")
    gap = abs(fast["lambda"] - slow["lambda"])
    print(f"\nsteps: {fast['steps']} vs {slow['steps']}; "
          f"eigenvalue agreement: {gap:.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
