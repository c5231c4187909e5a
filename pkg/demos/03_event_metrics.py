"""From frame probabilities to scored events.

Builds a toy two-class activation track, walks it through the timestamp
postprocessing pipeline (threshold, 250 ms median filter, run extraction,
minimum-duration pruning), and scores the result against a reference with
the tolerance-matched event F-measure.
"""

import numpy as np

from hearness.metrics import (
    FrameActivations,
    event_fmeasure,
    frames_to_events,
    median_filter,
)
from hearness.task import Event

hop_ms = 50.0
n_frames = 40
timestamps = np.arange(n_frames) * hop_ms / 1000.0

probs = np.zeros((n_frames, 2))
probs[4:14, 0] = 0.9        # a clean 500 ms event for class 0
probs[20, 0] = 0.8          # an isolated single-frame spike (should vanish)
probs[24:30, 1] = 0.7       # a 300 ms event for class 1
probs[31:33, 1] = 0.6       # a 100 ms blip (too short to keep)

print("raw class-0 track :", (probs[:, 0] >= 0.5).astype(int).tolist())
filtered = median_filter((probs[:, 0] >= 0.5).astype(float), 250.0, hop_ms)
print("after median filter:", filtered.astype(int).tolist())

for min_dur in (125.0, 250.0):
    events = frames_to_events(
        FrameActivations(timestamps, probs), min_duration_ms=min_dur
    )
    print(f"\nextracted events (min duration {min_dur:.0f} ms):")
    for ev in events:
        print(f"  class {ev.label}: [{ev.onset:.2f}, {ev.offset:.2f}) s")

reference = [Event(0.18, 0.70, 0), Event(1.22, 1.55, 1)]
estimated = frames_to_events(FrameActivations(timestamps, probs), min_duration_ms=125.0)

scores = event_fmeasure(reference, estimated, onset_tol_ms=200.0)
print(f"\nonset-only F-measure at 200 ms tolerance: {scores.f:.3f} "
      f"(precision {scores.precision:.2f}, recall {scores.recall:.2f})")

strict = event_fmeasure(reference, estimated, onset_tol_ms=50.0)
print(f"same events at 50 ms tolerance: {strict.f:.3f}")

with_offsets = event_fmeasure(
    reference, estimated, onset_tol_ms=200.0, require_offset=True,
    offset_tol_ms=50.0, duration_ratio=0.2,
)
print(f"onset+offset (50 ms / 20% duration rule): {with_offsets.f:.3f}")
