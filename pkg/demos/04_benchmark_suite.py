#!/usr/bin/env python3
"""The shipped benchmark: eight perturbation conditions vs reward monitoring.

Runs the default suite (three actuator-noise levels, two observation-noise
levels, two force levels, one dynamics scaling) across seeds, plus the
all-NONE control suite whose "detections" are false positives. Prints the
summary table: detection rate and median latency per channel, union first.

Seeds default to 3 to keep the demo quick; pass an integer argument for
more (the shipped acceptance run uses 5).
"""

import sys
import time

from idt import all_none_suite, default_suite, run_benchmark
from idt.streamio import format_summary_text

seeds = range(int(sys.argv[1]) if len(sys.argv) > 1 else 3)

t0 = time.time()
result = run_benchmark(default_suite(), seeds=seeds, threshold=3.0)
print(f"== default suite: 8 conditions x {len(seeds)} seeds ({time.time() - t0:.0f}s) ==")
print(format_summary_text(result.summary))

print("\nper-condition union detection:")
by_label = {}
for tr in result.trials:
    by_label.setdefault(tr.condition, []).append(tr)
for label, trials in by_label.items():
    hits = [t.outcome.union.latency_windows for t in trials if t.outcome.union.detected]
    print(f"  {label:<26} {len(hits)}/{len(trials)} detected, latencies {sorted(hits)}")

t0 = time.time()
control = run_benchmark(all_none_suite(), seeds=seeds, threshold=3.0)
print(f"\n== all-NONE control ({time.time() - t0:.0f}s): rates below are false positives ==")
print(format_summary_text(control.summary))
print("\nReading the tables: the union of the four information channels catches")
print("more conditions, sooner, than the reward channel under the identical")
print("protocol, while staying quiet on the unperturbed control suite.")
