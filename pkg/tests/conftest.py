import math

import pytest

from roversim.cli import resolve_map_text
from roversim.simcore import SonarScan
from roversim.world import RobotGeometry, SonarConfig, load_map

RECT_ROOM = """
START 0 0 0
LINE -4 -3  4 -3
LINE  4 -3  4  3
LINE  4  3 -4  3
LINE -4  3 -4 -3
"""


@pytest.fixture
def rect_room():
    return load_map(RECT_ROOM, name="rect_room")


@pytest.fixture
def sonar_cfg():
    return SonarConfig()


@pytest.fixture
def geom():
    return RobotGeometry()


def rect_room_range(angle_deg: float, half_w: float = 4.0, half_h: float = 3.0,
                    min_range: float = 0.1, max_range: float = 5.0) -> float:
    """Analytic range from the rectangle-room center along one beam."""
    a = math.radians(angle_deg)
    c, s = math.cos(a), math.sin(a)
    candidates = []
    if c != 0.0:
        candidates.append(half_w / abs(c))
    if s != 0.0:
        candidates.append(half_h / abs(s))
    return min(max_range, max(min_range, min(candidates)))


def make_scan(cfg: SonarConfig, default: float = 5.0, t_sim: float = 0.0,
              **by_angle: float) -> SonarScan:
    """Build a scan with readings overridden per beam angle (p90 = +90, m50 = -50)."""
    ranges = [default] * len(cfg.angles)
    for key, value in by_angle.items():
        sign = -1.0 if key.startswith("m") else 1.0
        ranges[cfg.beam_index(sign * float(key[1:]))] = value
    return SonarScan(tuple(ranges), t_sim)


def bundled_map(name: str):
    return load_map(resolve_map_text(name), name=name)
