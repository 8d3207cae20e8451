#!/usr/bin/env python3
"""Voice-kit analog experiment: cluster 5 synthetic states, score vs truth.

Simulates the 5-state fixture (100 windows per state by default), runs the
full pipeline with each clustering algorithm, and prints the confusion
matrix plus precision/recall/F1 per algorithm.
"""

import argparse
import json
import tempfile
import time
from pathlib import Path

from statescope import clustering, pipeline, synth
from statescope.store import SessionStore


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--windows-per-state", type=int, default=100)
    ap.add_argument("--window-ms", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--noise-scale", type=float, default=1.0)
    ap.add_argument("--emanation", default="peaks", help="peaks | raw")
    args = ap.parse_args()

    session = synth.simulate(
        synth.voice_kit_fixture(),
        synth.voice_kit_script(windows_per_state=args.windows_per_state, window_ms=args.window_ms),
        window_ms=args.window_ms,
        seed=args.seed,
        params=synth.SimulationParams(noise_scale=args.noise_scale),
        session_id=f"voice-{args.seed}",
    )
    truth = [w.annotation for w in session.windows]
    print(f"simulated {len(session.windows)} windows, {len(session.events)} events, "
          f"{len(session.labels)} states\n")

    for algorithm in ("dbscan", "kmeans", "gmm"):
        store = SessionStore(Path(tempfile.mkdtemp()) / algorithm)
        store.create(session)
        config = pipeline.PipelineConfig(algorithm=algorithm, seed=args.seed,
                                         emanation=args.emanation)
        t0 = time.monotonic()
        pipeline.run_pipeline(store, session.session_id, config)
        elapsed = time.monotonic() - t0
        clusters = json.loads(store.load_artifact(session.session_id, "clusters.json"))
        report = clustering.evaluate(clusters["labels"], truth)
        print(f"=== {algorithm} (k={clusters['k']}, {elapsed:.1f}s) ===")
        print(report.format_confusion())
        print(f"precision {report.precision:.3f}  recall {report.recall:.3f}  "
              f"f1 {report.f1:.3f}  accuracy {report.accuracy:.3f}\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
