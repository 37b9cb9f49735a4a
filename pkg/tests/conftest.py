import pytest

from hapticseek.guidance import FrameGeometry
from hapticseek.worldsim import NO_NOISE, CameraPose, Scene, SceneObject


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    rows = []
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" in nodeid and getattr(report, "when", "call") == "call":
                name = nodeid.split("::", 1)[-1]
                rows.append((name, "PASS" if status == "passed" else "FAIL"))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict in sorted(rows):
        terminalreporter.write_line(f"{verdict}  {name}")


@pytest.fixture
def frame():
    return FrameGeometry(640, 480)


@pytest.fixture
def square_frame():
    return FrameGeometry(640, 640)


@pytest.fixture
def cup_scene():
    """One cup right-and-below the start pose; deterministic detector."""
    return Scene(
        objects=(SceneObject(class_id=41, pan_deg=10.0, tilt_deg=-4.0, angular_size_deg=8.0),),
        camera=CameraPose(0.0, 0.0),
        noise=NO_NOISE,
        target_class=41,
    )
