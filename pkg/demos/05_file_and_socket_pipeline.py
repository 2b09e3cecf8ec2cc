#!/usr/bin/env python3
"""The deployment-shaped pipeline: files, sockets, and the idt CLI.

A producer writes newline-delimited transition records; `idt calibrate`
freezes a baseline bundle from the nominal prefix; `idt monitor` replays the
stream against it, writing one metrics record per window and a detection
event at each channel's first crossing. The same monitor can sit on a TCP
socket and watch a live exporter.
"""

import json
import socket
import tempfile
import threading
import time
from pathlib import Path

from idt.cli import main
from idt.streamio import transition_to_line
from idt.synthloop import (
    Perturbation,
    PerturbationKind,
    Side,
    default_linear_config,
    run_linear_loop,
)

workdir = Path(tempfile.mkdtemp(prefix="idt-demo-"))
stream_path = workdir / "stream.jsonl"

config = default_linear_config(seed=1, episode_length=500)
perturbation = Perturbation(
    kind=PerturbationKind.OBSERVATION_NOISE, magnitude=0.03, onset_episode=11, side=Side.AGENT
)
run = run_linear_loop(config, perturbation, episodes=13)
stream_path.write_text("".join(transition_to_line(tr) + "\n" for tr in run.transitions))
print(f"wrote {len(run.transitions)} records to {stream_path}")
print("first record:", stream_path.read_text().splitlines()[0][:100], "...")

print("\n$ idt calibrate --input stream.jsonl --calib-steps 5000 --out baseline.json")
main(["calibrate", "--input", str(stream_path), "--calib-steps", "5000",
      "--out", str(workdir / "baseline.json")])

print("\n$ idt monitor --input stream.jsonl --baseline baseline.json --onset-step 5000 ...")
main(["monitor", "--input", str(stream_path), "--baseline", str(workdir / "baseline.json"),
      "--onset-step", "5000",
      "--metrics-out", str(workdir / "metrics.jsonl"),
      "--events-out", str(workdir / "events.jsonl")])
n_windows = len((workdir / "metrics.jsonl").read_text().splitlines())
print(f"monitor emitted {n_windows} metric records")
for line in (workdir / "events.jsonl").read_text().splitlines():
    ev = json.loads(line)
    print(f"  event: channel {ev['channel']:<7} window {ev['window_index']} "
          f"z={ev['z']:+.1f} latency={ev.get('latency_windows')}")

print("\n== same monitor, live over TCP ==")
with socket.socket() as probe:
    probe.bind(("127.0.0.1", 0))
    port = probe.getsockname()[1]


def exporter():
    # the agent side connects to the listening monitor and pushes records
    for attempt in range(100):
        try:
            with socket.create_connection(("127.0.0.1", port), timeout=0.2) as conn:
                for tr in run.transitions[:2000]:
                    conn.sendall((transition_to_line(tr) + "\n").encode())
                return
        except OSError:
            time.sleep(0.05)


threading.Thread(target=exporter, daemon=True).start()
main(["monitor", "--input", f"tcp://127.0.0.1:{port}",
      "--baseline", str(workdir / "baseline.json"),
      "--metrics-out", str(workdir / "live_metrics.jsonl")])
live = len((workdir / "live_metrics.jsonl").read_text().splitlines())
print(f"live monitor emitted {live} metric records before the exporter closed")
print(f"\nartifacts in {workdir}")
