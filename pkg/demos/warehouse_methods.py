"""Run one warehouse layout under all four methods and tabulate the outcome.

The four methods share the same world, humans, gain map, and intent-derived
configuration; they differ only in what they send and when they decide:

  stop_and_go   halt before every potentially occupied cell, no offload loop
  lorc_p        closed loop with raw camera frames, map-predicted link
  lorc_sc       closed loop with token payloads, reactive link estimate
  lorc_sc_p     closed loop with token payloads and map-predicted link
"""

import argparse

import numpy as np

from r2xsim.scenarios import bundled_scenario_path, load_scenario, run_one


def main():
    ap = argparse.ArgumentParser(description="warehouse method comparison")
    ap.add_argument("--scenario", default="warehouse-s1",
                    help="bundled scenario name (warehouse-s1 .. warehouse-s4)")
    ap.add_argument("--seeds", type=int, default=5,
                    help="how many of the bundled seeds to run")
    args = ap.parse_args()

    scn = load_scenario(bundled_scenario_path(args.scenario))
    seeds = scn.seeds[: args.seeds]
    print(f"{scn.id}: {len(seeds)} seeds, {len(scn.methods)} methods")
    print(f"intent: {scn.params['intent_text']!r}")
    print()
    print(f"{'method':<12} {'completion s (median)':>22} {'halt s':>8} {'stops':>6}")
    for method in scn.methods:
        comp = []
        halts = []
        stops = []
        for seed in seeds:
            m = run_one(scn, method, seed)["metrics"]
            comp.append(m["completion_time_s"])
            halts.append(m["halt_s"])
            stops.append(m["stop_events"])
        print(
            f"{method:<12} {np.median(comp):>22.2f} {np.median(halts):>8.2f} "
            f"{np.median(stops):>6.0f}"
        )
    print()
    print("lorc_sc_p sends 5160 B tokens instead of 6.2 MB frames and budgets")
    print("power from the gain map one cell ahead, so its loop closes inside")
    print("the cell transition and the robots rarely halt.")


if __name__ == "__main__":
    main()
