"""
Compare the numba SSA kernel against the pure-Python fallback.

Each backend runs in its own interpreter (SPLITSWITCH_NO_JIT is read at
import time).  Both run the same seeded trajectory on the double-well network
with Bernoulli splitting; the first `--check` events must agree exactly, then
throughput is timed separately per backend.

    python3 benchmarks/bench_ssa.py [--N 1000] [--events 200000] [--kernel bern]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]

WORKER = r"""
import json, sys, time
from splitswitch.dsl import load_network
from splitswitch.splitting import GammaExpr, SplitRateSpec, SplittingKernel
from splitswitch.ssa import simulate
from splitswitch._jit import backend_name

net_path, kind, N, events, check = sys.argv[1], sys.argv[2], int(sys.argv[3]), int(sys.argv[4]), int(sys.argv[5])
net = load_network(net_path)
kern = SplittingKernel(kind)
rate = SplitRateSpec(GammaExpr.parse("0.5*N^2"), None, 0.02)

def run(n):
    return simulate(net, kern, rate, N // 4, 1e12, 2024, N=N, max_events=n, n_snapshots=16)

ref = run(check)                     # also triggers compilation
start = time.perf_counter()
tr = run(events)
wall = time.perf_counter() - start
print(json.dumps({
    "backend": backend_name(),
    "events": tr.n_events,
    "wall_s": wall,
    "check": [ref.t_end, ref.final_state, ref.n_events],
}))
"""


def run_backend(jit: bool, args) -> dict:
    env = dict(os.environ)
    if jit:
        env.pop("SPLITSWITCH_NO_JIT", None)
    else:
        env["SPLITSWITCH_NO_JIT"] = "1"
    events = args.events if jit else max(args.check, args.events // args.python_fraction)
    cmd = [sys.executable, "-c", WORKER, str(ROOT / "experiments" / "dw.crn"), args.kernel,
           str(args.N), str(events), str(args.check)]
    out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--N", type=int, default=1000)
    p.add_argument("--kernel", default="bern", choices=("bern", "bin", "hg"))
    p.add_argument("--events", type=int, default=2_000_000, help="events timed for the numba backend")
    p.add_argument("--python-fraction", type=int, default=20, help="the Python backend times events/this many")
    p.add_argument("--check", type=int, default=20_000, help="events that must match exactly")
    args = p.parse_args(argv)

    jit = run_backend(True, args)
    py = run_backend(False, args)
    same = jit["check"] == py["check"]
    rows = []
    for r in (jit, py):
        ns = 1e9 * r["wall_s"] / max(r["events"], 1)
        rows.append((r["backend"], r["events"], r["wall_s"], ns))
        print(f"{r['backend']:>7}: {r['events']:>10d} events in {r['wall_s']:8.3f} s  {ns:10.1f} ns/event")
    print(f"speedup: {rows[1][3] / rows[0][3]:.1f}x")
    print(f"first {args.check} events identical across backends: {same}")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
