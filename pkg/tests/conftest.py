import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from slimevote.agents import AgentParams, Particle, WorldState

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_world(cells, width=12, height=12, seed=0, heading=0.0, moved=False):
    """World with one particle at the centre of every ``(x, y)`` cell."""
    world = WorldState.empty(width, height, seed)
    for x, y in cells:
        world.add(Particle(x + 0.5, y + 0.5, heading, moved_last_step=moved))
    return world


def brute_count(cells, cx, cy, window, width, height):
    """Occupied cells in a ``window x window`` block, x wrapped, y clipped."""
    occupied = {(x % width, y) for x, y in cells}
    half = window // 2
    return sum(
        ((cx + dx) % width, cy + dy) in occupied
        for dy in range(-half, half + 1)
        for dx in range(-half, half + 1)
        if 0 <= cy + dy < height
    )


@pytest.fixture
def params():
    return AgentParams()


_CRITERIA = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """``report(number, title, ok, detail)`` prints and records one PASS/FAIL line."""
    lines = request.config.stash.setdefault(_CRITERIA, [])

    def report(number, title, ok, detail):
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} [{detail}]"
        lines.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_CRITERIA, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
