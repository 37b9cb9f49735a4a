"""
Latency table from sequential trials
====================================

Reproduces the three-row runtime table: 20 strictly sequential trials per
request kind against a live server, reporting server compute and end-to-end
time as mean +/- sample standard deviation, plus the throughput framing for
the detector (fps = 1 / mean end-to-end seconds).

The server runs the full-size latency profile scaled by 0.01 so all sixty
trials finish in a few seconds; means stay in the same proportions.
"""
from pathlib import Path

from hapticseek.bench import RUNTIME_KINDS, render_runtime_table, run_runtime_eval
from hapticseek.offload.backends import FixtureStore
from hapticseek.offload.service import serve
from hapticseek.worldsim import load_scene

here = Path(__file__).parent / "data"
service = serve(
    scene=load_scene(here / "desk_scene.json"),
    fixtures=FixtureStore.from_file(here / "fixtures.json"),
    seed=99,
    scale=0.01,
)
endpoint = f"127.0.0.1:{service.port}"

rows = [run_runtime_eval(endpoint, kind, trials=20) for kind in RUNTIME_KINDS]
service.stop()

print(render_runtime_table(rows))
print()
for r in rows:
    if r.fps is not None:
        print(f"{r.kind}: e2e mean {r.e2e_mean_s:.4f} s -> {r.fps:.2f} fps")
    # Queueing never contributes here: trials are sequential by design, so
    # e2e - server is pure transport and scheduling overhead.
    overhead_ms = (r.e2e_mean_s - r.server_mean_s) * 1000.0
    print(f"{r.kind}: transport overhead {overhead_ms:.2f} ms/request")
