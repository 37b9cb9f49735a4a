"""
Talking to the offload server over newline-delimited JSON
=========================================================

Starts the server in-process on a free port, then exercises each request
kind over a plain TCP socket: describe the scene, read text, find the cup,
and drive a steer/tick session until the guidance locks. Latency is the
full-size profile scaled by 0.001 so the demo finishes in about a second
while keeping realistic proportions between the three backends.
"""
from pathlib import Path

from hapticseek.offload.backends import FixtureStore
from hapticseek.offload.client import OffloadClient
from hapticseek.offload.protocol import Request
from hapticseek.offload.service import serve
from hapticseek.worldsim import load_scene

here = Path(__file__).parent / "data"
service = serve(
    scene=load_scene(here / "desk_scene.json"),
    fixtures=FixtureStore.from_file(here / "fixtures.json"),
    seed=2024,
    scale=0.001,
)
print(f"server on 127.0.0.1:{service.port}\n")

with OffloadClient("127.0.0.1", service.port).connect() as client:
    # Scene description: canned text, question defaults to the standard
    # "what is this" prompt.
    r = client.call(Request(id="q1", kind="scene", fixture="office_desk"))
    print(f'scene  -> "{r.result}"')
    print(f"          prompt: {r.prompt!r}")
    print(f"          server {r.server_ms:.2f} ms, queue {r.queue_ms:.2f} ms, "
          f"e2e {r.e2e_ms:.2f} ms, seq {r.seq} completed as {r.completed_index}")

    r = client.call(Request(id="q2", kind="ocr", fixture="street_sign"))
    print(f'ocr    -> "{r.result}"')

    # Object detection against the live scene at a given pose.
    r = client.call(Request(id="q3", kind="find", target_class=41, pose=(0.0, 0.0)))
    cups = [b for b in r.result if b["class_id"] == 41]
    print(f"find   -> {len(r.result)} detection(s), cup bbox "
          f"{[round(v, 1) for v in cups[0]['bbox']]}")

    # Steer/tick session: pan toward the cup, then tilt, and watch the
    # guidance feedback change tier until the lock confirms.
    moves = ["right"] * 5 + ["up"] * 2 + [None] * 3
    for i, direction in enumerate(moves):
        if direction is not None:
            client.call(Request(id=f"s{i}", kind="steer", direction=direction,
                                gain_deg=2.0))
        r = client.call(Request(id=f"t{i}", kind="tick"))
        g = r.result
        speech = f'  "{g["speech"]}"' if g.get("speech") else ""
        tone = "  *ding*" if g["locked_tone"] else ""
        d = f"{g['d']:.3f}" if g["d"] is not None else "-"
        print(f"tick {i}:  pose {g['pose']['pan_deg']:+5.1f}/"
              f"{g['pose']['tilt_deg']:+5.1f}  d={d}"
              f"  phase={g['phase']}{speech}{tone}")
        if g["locked_tone"]:
            break

print(f"\n{service.processed_count} requests processed, strictly in arrival order")
service.stop()
