#!/usr/bin/env python3
"""Measure per-alert detection latency on a million-event dataset."""

import argparse
import sys
import time

from adhound import EventStore, run_detection
from adhound.forge import forge, perf_scenario
from adhound.metrics import percentile


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--scale", type=float, default=90.0,
                    help="benign rate multiplier; 90 is about 1M events")
    args = ap.parse_args()

    t0 = time.perf_counter()
    res = forge(perf_scenario(seed=args.seed, scale=args.scale))
    print(f"forged {len(res.events):,} events in "
          f"{time.perf_counter() - t0:.1f}s")

    store = EventStore()
    t0 = time.perf_counter()
    store.add_events(res.events)
    print(f"indexed in {time.perf_counter() - t0:.1f}s")

    t0 = time.perf_counter()
    result = run_detection(store)
    m = result.manifest
    print(f"detection ran in {time.perf_counter() - t0:.1f}s: "
          f"{m.alert_count} alerts, {m.verdict_count} verdicts")
    for stage, xs in (("stage 1", m.stage1_per_alert_ms),
                      ("stage 2", m.stage2_per_alert_ms)):
        if xs:
            print(f"{stage} per-alert ms: p50={percentile(xs, 50):.2f} "
                  f"p99={percentile(xs, 99):.2f} max={max(xs):.2f}")
    print(f"stage-1 queries: {m.stage1_queries}, "
          f"stage-2 queries: {m.stage2_queries}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
