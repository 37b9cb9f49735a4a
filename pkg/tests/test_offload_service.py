import json
import os
import socket
import threading
import time

import numpy as np
import pytest

from ws_client import WsTestClient
from hapticseek.guidance import FrameGeometry
from hapticseek.offload import (
    OffloadClient,
    OffloadConnectionError,
    OffloadService,
    Request,
    call_endpoint,
    serve,
)
from hapticseek.offload.backends import (
    DEFAULT_FIXTURES,
    OCR_PROMPT,
    VQA_PROMPT,
    BackendProfile,
    FixtureStore,
    LatencyModel,
)
from hapticseek.offload.protocol import encode_frame
from hapticseek.worldsim import NO_NOISE, CameraPose, Scene, SceneObject, project

FRAME = FrameGeometry(640, 480)

SCENE = Scene(
    objects=(
        SceneObject(class_id=41, pan_deg=10.0, tilt_deg=-4.0, angular_size_deg=8.0),
        SceneObject(class_id=80, pan_deg=-150.0, tilt_deg=0.0, angular_size_deg=30.0),
    ),
    camera=CameraPose(0.0, 0.0),
    noise=NO_NOISE,
    target_class=41,
)


def fast_profile():
    # Sub-millisecond deterministic latencies keep the suite quick.
    return BackendProfile(
        scene=LatencyModel(0.0005, 0.0),
        ocr=LatencyModel(0.0005, 0.0),
        find=LatencyModel(0.0002, 0.0),
    )


@pytest.fixture()
def service():
    svc = serve(profile=fast_profile(), scene=SCENE,
                fixtures=FixtureStore(DEFAULT_FIXTURES), seed=0)
    yield svc
    svc.stop()


@pytest.fixture()
def client(service):
    with OffloadClient(port=service.port) as c:
        yield c


# -- request handling ---------------------------------------------------------


def test_find_detects_at_requested_pose(client):
    resp = client.call(Request(id="f1", kind="find", target_class=41, pose=(10.0, -4.0)))
    assert resp.ok
    assert len(resp.result) == 1
    det = resp.result[0]
    assert det["class_id"] == 41
    expected = project(SCENE.objects[0], CameraPose(10.0, -4.0), FRAME)
    assert det["bbox"] == pytest.approx(list(expected.bbox))
    # and an aimless pose sees nothing
    resp = client.call(Request(id="f2", kind="find", target_class=41, pose=(90.0, 0.0)))
    assert resp.ok and resp.result == []


def test_scene_and_ocr_fixtures_and_prompts(client):
    resp = client.call(Request(id="s1", kind="scene", fixture="office_desk"))
    assert resp.ok
    assert resp.result == DEFAULT_FIXTURES["office_desk"]
    assert resp.prompt == VQA_PROMPT

    resp = client.call(Request(id="s2", kind="scene", fixture="office_desk",
                               question="How many cups?"))
    assert resp.prompt == "How many cups?"

    resp = client.call(Request(id="o1", kind="ocr", fixture="street_sign"))
    assert resp.ok
    assert resp.result == "CARRER DE L'ARTISTA FOGUERER."
    assert resp.prompt == OCR_PROMPT


def test_error_codes(client):
    assert client.call(Request(id="e1", kind="find", target_class=200)).error == "unknown_class"
    assert client.call(Request(id="e2", kind="find")).error == "unknown_class"
    assert client.call(Request(id="e3", kind="scene", fixture="nope")).error == "unknown_fixture"
    assert client.call(Request(id="e4", kind="ocr")).error == "unknown_fixture"


def test_tick_without_any_target_errors():
    targetless = Scene(objects=SCENE.objects, camera=SCENE.camera, noise=NO_NOISE)
    svc = serve(profile=fast_profile(), scene=targetless)
    try:
        with OffloadClient(port=svc.port) as c:
            assert c.call(Request(id="e5", kind="tick")).error == "no_target"
            # naming a target on the tick itself recovers
            assert c.call(Request(id="e6", kind="tick", target_class=41)).ok
    finally:
        svc.stop()


def test_malformed_frames_answered_without_dropping_connection(service, client):
    raw = client._sock
    cases = [
        b"this is not json\n",
        b"[1,2,3]\n",
        b'{"kind":"scene"}\n',
        b'{"id":"x","kind":"warp"}\n',
        b'{"id":"x","kind":"scene","bogus":true}\n',
    ]
    for payload in cases:
        raw.sendall(payload)
        resp = client.recv()
        assert not resp.ok
        assert resp.error.startswith("bad_frame")
    # the line protocol resynchronizes: a valid request still succeeds
    resp = client.call(Request(id="ok", kind="scene", fixture="empty"))
    assert resp.ok and resp.result == ""


def test_bad_frames_never_consume_sequence_numbers(service, client):
    before = service.arrival_count
    client._sock.sendall(b"garbage\n")
    assert not client.recv().ok
    resp = client.call(Request(id="q", kind="scene", fixture="empty"))
    assert resp.seq == before
    assert service.arrival_count == before + 1


def test_oversized_line_errors_and_closes(service):
    with OffloadClient(port=service.port) as c:
        c._sock.sendall(b"x" * (2 << 20) + b"\n")
        resp = c.recv()
        assert not resp.ok and "too large" in resp.error
        with pytest.raises(OffloadConnectionError):
            c.recv()


# -- FIFO discipline -----------------------------------------------------------


def test_pipelined_requests_complete_in_order(client):
    ids = [f"p{i}" for i in range(8)]
    for rid in ids:
        client.send(Request(id=rid, kind="scene", fixture="empty"))
    responses = [client.recv() for _ in ids]
    assert [r.id for r in responses] == ids
    seqs = [r.seq for r in responses]
    assert seqs == sorted(seqs)
    assert all(r.completed_index == r.seq for r in responses)


def test_fifo_across_connections(service):
    with OffloadClient(port=service.port) as c1, OffloadClient(port=service.port) as c2:
        order = []
        for i in range(10):
            sender = c1 if i % 2 == 0 else c2
            rid = f"x{i}"
            base = service.arrival_count
            sender.send(Request(id=rid, kind="find", target_class=41, pose=(0.0, 0.0)))
            # wait until the reader thread has sequenced this frame before the
            # next send, so arrival order is externally defined
            deadline = time.monotonic() + 5.0
            while service.arrival_count <= base:
                assert time.monotonic() < deadline
                time.sleep(0.0005)
            order.append(rid)
        got1 = [c1.recv() for _ in range(5)]
        got2 = [c2.recv() for _ in range(5)]
    by_id = {r.id: r for r in got1 + got2}
    assert all(r.completed_index == r.seq for r in by_id.values())
    completion = sorted(order, key=lambda rid: by_id[rid].completed_index)
    assert completion == order
    assert service.processed_ids[-10:] == order


def test_processing_is_exclusive_one_at_a_time(service):
    """Overlapping requests from many threads: completed_index is a permutation
    of seq and matches it exactly, so nothing overtook anything."""
    results = []
    lock = threading.Lock()

    def worker(n):
        with OffloadClient(port=service.port) as c:
            for i in range(10):
                r = c.call(Request(id=f"t{n}-{i}", kind="find", target_class=41,
                                   pose=(0.0, 0.0)))
                with lock:
                    results.append(r)

    threads = [threading.Thread(target=worker, args=(n,)) for n in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(results) == 40
    assert all(r.ok for r in results)
    assert all(r.completed_index == r.seq for r in results)
    assert len({r.seq for r in results}) == 40


# -- timing accounting -----------------------------------------------------------


def test_timing_fields_present_and_sane(client):
    resp = client.call(Request(id="t1", kind="scene", fixture="empty"))
    assert resp.server_ms == pytest.approx(0.5)  # deterministic: std 0
    assert resp.queue_ms is not None and resp.queue_ms >= 0.0
    assert resp.e2e_ms is not None
    assert resp.e2e_ms > resp.server_ms


def test_queue_time_accumulates_for_pipelined_burst(service):
    with OffloadClient(port=service.port) as c:
        for i in range(3):
            c.send(Request(id=f"q{i}", kind="scene", fixture="empty"))
        responses = [c.recv() for _ in range(3)]
    # each 0.5 ms job delays its successor; queue time must grow monotonically
    qs = [r.queue_ms for r in responses]
    assert qs[0] <= qs[1] <= qs[2]
    assert qs[2] >= 0.8  # two predecessors at 0.5 ms each, minus scheduling slack


def test_server_ms_bit_exact_across_instances():
    """Same seed, same request order => identical sampled latencies."""
    def run():
        svc = serve(profile=BackendProfile().scaled(1e-6), scene=SCENE,
                    fixtures=FixtureStore(DEFAULT_FIXTURES), seed=1234)
        try:
            with OffloadClient(port=svc.port) as c:
                out = []
                for i in range(10):
                    kind = ("scene", "ocr", "find")[i % 3]
                    req = (Request(id=str(i), kind=kind, fixture="empty")
                           if kind != "find"
                           else Request(id=str(i), kind="find", target_class=41,
                                        pose=(0.0, 0.0)))
                    out.append(c.call(req).server_ms)
                return out
        finally:
            svc.stop()

    assert run() == run()


def test_sampled_latency_matches_profile_statistics():
    """Server-side means track the censored-Gaussian model (scaled 100x down)."""
    scale = 0.01
    svc = serve(profile=BackendProfile().scaled(scale), scene=SCENE,
                fixtures=FixtureStore(DEFAULT_FIXTURES), seed=99)
    try:
        samples = {"scene": [], "ocr": [], "find": []}
        with OffloadClient(port=svc.port) as c:
            for kind in samples:
                for i in range(40):
                    req = (Request(id=f"{kind}{i}", kind=kind, fixture="empty")
                           if kind != "find"
                           else Request(id=f"find{i}", kind="find", target_class=41,
                                        pose=(0.0, 0.0)))
                    resp = c.call(req)
                    samples[kind].append(resp.server_ms / 1000.0)
    finally:
        svc.stop()
    profile = BackendProfile().scaled(scale)
    for kind, xs in samples.items():
        want_mean, want_std = profile.for_kind(kind).censored_moments()
        se = want_std / np.sqrt(len(xs))
        assert np.mean(xs) == pytest.approx(want_mean, abs=4 * se), kind
        assert min(xs) >= 0.0


# -- steering sessions ------------------------------------------------------------


def test_steer_sessions_are_per_connection(service):
    with OffloadClient(port=service.port) as c1, OffloadClient(port=service.port) as c2:
        r1 = c1.call(Request(id="s1", kind="steer", direction="right", gain_deg=5.0))
        r2 = c1.call(Request(id="s2", kind="steer", direction="right", gain_deg=5.0))
        other = c2.call(Request(id="s3", kind="steer", direction="down", gain_deg=2.0))
    assert r1.result["pose"] == {"pan_deg": 5.0, "tilt_deg": 0.0}
    assert r2.result["pose"] == {"pan_deg": 10.0, "tilt_deg": 0.0}
    assert other.result["pose"] == {"pan_deg": 0.0, "tilt_deg": 2.0}


def test_steer_requires_direction(client):
    assert client.call(Request(id="s0", kind="steer")).error.startswith("bad_steer")


def test_tick_reports_guidance_feedback(service):
    with OffloadClient(port=service.port) as c:
        first = c.call(Request(id="t0", kind="tick", target_class=41))
        assert first.ok
        # target at (10, -4): d = hypot(10/30*320, -4/22.5*240)/400 ~ 0.284
        assert first.result["phase"] == "approaching"
        assert first.result["pattern"] == {"on_ms": 200, "off_ms": 100, "continuous": False}
        assert 0.1 <= first.result["d"] < 0.35
        assert first.result["detections"]

        # steer onto the target (pan +10, tilt -4), then three ticks lock it
        c.call(Request(id="s1", kind="steer", direction="right", gain_deg=10.0))
        c.call(Request(id="s2", kind="steer", direction="up", gain_deg=4.0))
        phases = []
        tones = []
        for i in range(3):
            r = c.call(Request(id=f"t{i+1}", kind="tick"))
            phases.append(r.result["phase"])
            tones.append(r.result["locked_tone"])
        assert phases == ["approaching", "approaching", "locked"]
        assert tones == [False, False, True]
        assert r.result["pattern"]["continuous"] is True
        # once locked, the tone never repeats
        r = c.call(Request(id="t9", kind="tick"))
        assert r.result["phase"] == "locked" and r.result["locked_tone"] is False


def test_tick_speaks_in_coarse_region(service):
    far_scene = Scene(
        objects=(SceneObject(class_id=41, pan_deg=-25.0, tilt_deg=0.0, angular_size_deg=8.0),),
        camera=CameraPose(0.0, 0.0),
        noise=NO_NOISE,
        target_class=41,
    )
    svc = serve(profile=fast_profile(), scene=far_scene,
                fixtures=FixtureStore(DEFAULT_FIXTURES), seed=0)
    try:
        with OffloadClient(port=svc.port) as c:
            r = c.call(Request(id="t", kind="tick"))
            assert r.result["phase"] == "coarse"
            assert r.result["speech"] == "Move camera to the left"
            assert r.result["pattern"] == {"on_ms": 200, "off_ms": 300, "continuous": False}
    finally:
        svc.stop()


# -- websocket and static ui -------------------------------------------------------


def test_websocket_round_trip(service):
    ws = WsTestClient("127.0.0.1", service.port)
    try:
        ws.send_text(json.dumps({"id": "w1", "kind": "scene", "fixture": "office_desk"}))
        reply = json.loads(ws.recv_text())
        assert reply["id"] == "w1"
        assert reply["result"] == DEFAULT_FIXTURES["office_desk"]
        assert reply["completed_index"] == reply["seq"]
        # malformed text frame -> error, connection lives
        ws.send_text("not json")
        err = json.loads(ws.recv_text())
        assert err["error"].startswith("bad_frame")
        ws.send_text(json.dumps({"id": "w2", "kind": "ocr", "fixture": "street_sign"}))
        assert json.loads(ws.recv_text())["result"] == "CARRER DE L'ARTISTA FOGUERER."
        assert ws.ping(b"abc") == b"abc"
    finally:
        ws.close()


def test_websocket_and_tcp_share_the_fifo(service):
    ws = WsTestClient("127.0.0.1", service.port)
    try:
        with OffloadClient(port=service.port) as tcp:
            base = service.arrival_count
            ws.send_text(json.dumps({"id": "both-ws", "kind": "scene", "fixture": "empty"}))
            deadline = time.monotonic() + 5.0
            while service.arrival_count <= base:
                assert time.monotonic() < deadline
                time.sleep(0.0005)
            tcp_resp = tcp.call(Request(id="both-tcp", kind="scene", fixture="empty"))
            ws_resp = json.loads(ws.recv_text())
        assert ws_resp["seq"] == base
        assert tcp_resp.seq == base + 1
        assert ws_resp["completed_index"] < tcp_resp.completed_index
    finally:
        ws.close()


def test_static_ui_serving(tmp_path):
    (tmp_path / "index.html").write_text("<html><body>steer</body></html>")
    (tmp_path / "app.js").write_text("console.log('hi')")
    svc = serve(profile=fast_profile(), scene=SCENE, ui_dir=tmp_path)
    try:
        def http_get(path):
            with socket.create_connection(("127.0.0.1", svc.port), timeout=10) as s:
                s.sendall(f"GET {path} HTTP/1.1\r\nHost: x\r\n\r\n".encode())
                data = b""
                while True:
                    chunk = s.recv(65536)
                    if not chunk:
                        break
                    data += chunk
            head, _, body = data.partition(b"\r\n\r\n")
            return head.split(b" ", 2)[1], head, body

        status, head, body = http_get("/")
        assert status == b"200" and b"steer" in body
        assert b"text/html" in head
        status, head, body = http_get("/app.js")
        assert status == b"200" and b"javascript" in head
        status, _, _ = http_get("/missing.js")
        assert status == b"404"
        status, _, _ = http_get("/../../etc/passwd")
        assert status == b"404"
    finally:
        svc.stop()


def test_http_404_without_ui(service):
    with socket.create_connection(("127.0.0.1", service.port), timeout=10) as s:
        s.sendall(b"GET / HTTP/1.1\r\nHost: x\r\n\r\n")
        assert b"404" in s.recv(4096)


# -- lifecycle and robustness --------------------------------------------------------


def test_clean_idle_shutdown():
    svc = serve(profile=fast_profile(), scene=SCENE)
    port = svc.port
    assert svc.processed_count == 0
    svc.stop()
    svc.stop()  # idempotent
    with pytest.raises(OffloadConnectionError):
        OffloadClient(port=port, timeout_s=0.5).connect()


def test_call_endpoint_convenience(service):
    resp = call_endpoint(f"127.0.0.1:{service.port}",
                         Request(id="one", kind="scene", fixture="empty"))
    assert resp.ok and resp.result == ""


def test_fuzzed_lines_never_kill_the_service(service):
    rng = np.random.default_rng(0)
    with OffloadClient(port=service.port) as c:
        for i in range(60):
            blob = bytes(rng.integers(0, 256, size=int(rng.integers(1, 80)), dtype=np.uint8))
            blob = blob.replace(b"\n", b"_")
            c._sock.sendall(blob + b"\n")
            resp = c.recv()  # always answered
            assert resp.error is not None
        final = c.call(Request(id="alive", kind="scene", fixture="empty"))
        assert final.ok
