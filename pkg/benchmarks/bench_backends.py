#!/usr/bin/env python3
"""Throughput comparison of the compiled geometry kernels against the
pure-numpy fallback.

Run:  python benchmarks/bench_backends.py [--drops 200]

The backend is chosen at import time, so the fallback is timed in a
subprocess with IRSNET_PURE_PYTHON=1.
"""

import argparse
import json
import os
import subprocess
import sys
import time


def run_workload(n_drops: int, n_queries: int) -> dict:
    import numpy as np

    from irsnet.mc import sim
    from irsnet.mc.geometry import BACKEND
    from irsnet.mc.world import generate_world
    from irsnet.scenario import default_scenario

    sc = default_scenario()
    world = generate_world(sc, 2000.0, seed=1)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1800, 1800, (n_queries, 4))

    t0 = time.perf_counter()
    hits = 0
    for ax, ay, bx, by in pts:
        hits += world.segs.blocked(ax, ay, bx, by)
    t_query = time.perf_counter() - t0

    t0 = time.perf_counter()
    for i in range(n_drops):
        sim.run_drop(sc, "handover", (12345, i))
    t_drop = time.perf_counter() - t0

    t0 = time.perf_counter()
    sim.estimate_density(sc, 100.0, 20 * n_drops, seed=3)
    t_density = time.perf_counter() - t0

    return {
        "backend": BACKEND,
        "occlusion_queries_per_s": n_queries / t_query,
        "handover_drops_per_s": n_drops / t_drop,
        "density_trials_per_s": 20 * n_drops / t_density,
        "hits": int(hits),
    }


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--drops", type=int, default=200)
    parser.add_argument("--queries", type=int, default=3000)
    parser.add_argument("--emit-json", action="store_true", help="internal")
    args = parser.parse_args()

    if args.emit_json:
        print(json.dumps(run_workload(args.drops, args.queries)))
        return 0

    results = [run_workload(args.drops, args.queries)]
    env = dict(os.environ, IRSNET_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, __file__, "--emit-json",
         "--drops", str(max(10, args.drops // 20)),
         "--queries", str(max(100, args.queries // 10))],
        env=env, capture_output=True, text=True, check=True,
    )
    results.append(json.loads(out.stdout.strip().splitlines()[-1]))
    if results[0]["hits"] * results[1]["hits"] == 0:
        print("warning: occlusion workload produced no hits on one backend")

    print(f"{'backend':<10} {'occlusion q/s':>15} {'handover drops/s':>18} "
          f"{'density trials/s':>18}")
    for r in results:
        print(f"{r['backend']:<10} {r['occlusion_queries_per_s']:>15.0f} "
              f"{r['handover_drops_per_s']:>18.1f} "
              f"{r['density_trials_per_s']:>18.0f}")
    if results[0]["backend"] == results[1]["backend"]:
        print("note: compiled backend unavailable; both rows ran the fallback")
    else:
        speedup = (results[0]["handover_drops_per_s"]
                   / results[1]["handover_drops_per_s"])
        print(f"compiled/pure speedup on drops: {speedup:.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
