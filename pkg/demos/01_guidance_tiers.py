"""
Two-stage guidance on a synthetic detection
===========================================

Walks a bounding box from a frame corner to the center and prints what the
user would hear and feel at each position: a spoken dominant-axis command
while the box is far out, then faster and faster vibration pulses as it
closes in, then the continuous "locked" buzz.
"""
import math

from hapticseek.guidance import (
    SPEECH_TEXT,
    Detection,
    FrameGeometry,
    directional_command,
    haptic_tier,
    normalized_center_distance,
)

frame = FrameGeometry(640, 480)

# Slide the box center along the diagonal from the corner to dead center.
for step in range(11):
    f = 1.0 - step / 10.0  # 1 -> corner, 0 -> center
    cx = 320.0 + f * 300.0
    cy = 240.0 + f * 220.0
    det = Detection(class_id=41, confidence=0.97,
                    bbox=(cx - 30, cy - 30, cx + 30, cy + 30))

    d = normalized_center_distance(det, frame)
    tier, pattern = haptic_tier(d)
    command = directional_command(det, frame)

    if pattern.continuous:
        cadence = "continuous buzz"
    else:
        period = pattern.on_ms + pattern.off_ms
        cadence = f"{pattern.on_ms}/{pattern.off_ms} ms ({1000 / period:.2f} Hz)"
    spoken = f'  say "{SPEECH_TEXT[command]}"' if command else ""
    print(f"d={d:.3f}  {tier.value:<12} {cadence}{spoken}")

# The same thresholds in numbers: the coarse stage hands over at 0.35 and
# the continuous buzz starts below 0.10 of the half-diagonal.
print()
print("half-diagonal px:", math.hypot(320, 240))
