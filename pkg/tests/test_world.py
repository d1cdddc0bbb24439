import math

import pytest
from hypothesis import given, strategies as st

from roversim.world import (
    LineSegment,
    MapParseError,
    MapValidationError,
    Pose,
    RobotGeometry,
    SonarConfig,
    Twist,
    WorldMap,
    load_map,
    normalize_angle,
    serialize_map,
)

from conftest import RECT_ROOM


class TestNormalizeAngle:
    def test_identity(self):
        assert normalize_angle(0.0) == 0.0

    def test_periodicity(self):
        assert normalize_angle(3 * math.pi) == pytest.approx(math.pi, abs=1e-12)

    def test_half_open_boundary(self):
        assert normalize_angle(-math.pi) == math.pi
        assert normalize_angle(math.pi) == math.pi

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            normalize_angle(math.nan)
        with pytest.raises(ValueError):
            normalize_angle(math.inf)

    @given(st.floats(min_value=-1e6, max_value=1e6))
    def test_idempotent_and_in_range(self, x):
        once = normalize_angle(x)
        assert -math.pi < once <= math.pi
        assert normalize_angle(once) == once

    @given(st.floats(min_value=-1e6, max_value=1e6))
    def test_congruent_mod_tau(self, x):
        r = normalize_angle(x)
        turns = (x - r) / (2 * math.pi)
        assert abs(turns - round(turns)) * 2 * math.pi < 1e-9


class TestTypes:
    def test_pose_normalizes_theta(self):
        assert Pose(1.0, 2.0, 3 * math.pi).theta == pytest.approx(math.pi, abs=1e-12)

    def test_pose_rejects_non_finite(self):
        with pytest.raises(ValueError):
            Pose(math.nan, 0, 0)

    def test_twist_rejects_non_finite(self):
        with pytest.raises(ValueError):
            Twist(0.0, math.inf)

    def test_segment_rejects_degenerate(self):
        with pytest.raises(ValueError):
            LineSegment(1.0, 1.0, 1.0, 1.0)

    def test_segment_distance(self):
        seg = LineSegment(1.0, -1.0, 1.0, 1.0)
        assert seg.distance_to(0.0, 0.0) == pytest.approx(1.0)
        assert seg.distance_to(1.0, 3.0) == pytest.approx(2.0)  # beyond endpoint
        assert seg.distance_to(2.0, 0.5) == pytest.approx(1.0)

    def test_geometry_rejects_non_positive(self):
        with pytest.raises(ValueError):
            RobotGeometry(body_radius=0.0)

    def test_sonar_config_validates(self):
        with pytest.raises(ValueError):
            SonarConfig(angles=(0.0,) * 16)  # not distinct
        with pytest.raises(ValueError):
            SonarConfig(angles=tuple(range(15)))  # wrong count
        with pytest.raises(ValueError):
            SonarConfig(min_range=1.0, max_range=0.5)

    def test_beam_index(self):
        cfg = SonarConfig()
        assert cfg.beam_index(-90.0) == 0
        assert cfg.beam_index(90.0) == 7
        with pytest.raises(ValueError):
            cfg.beam_index(42.0)

    def test_worldmap_requires_segments(self):
        with pytest.raises(MapValidationError):
            WorldMap("empty", (), Pose(0, 0, 0))


class TestLoadMap:
    def test_rectangle_room(self):
        world = load_map(RECT_ROOM, name="rect")
        assert len(world.segments) == 4
        assert world.start == Pose(0.0, 0.0, 0.0)

    def test_comments_and_blanks_skipped(self):
        world = load_map("# hi\n\nSTART 0 0 90\nLINE 2 -1 2 1\n")
        assert world.start.theta == pytest.approx(math.pi / 2)

    def test_zero_length_segment(self):
        with pytest.raises(MapValidationError, match="line 3"):
            load_map("START 0 0 0\nLINE 2 -1 2 1\nLINE 1 1 1 1\n")

    def test_start_in_collision(self):
        # point-segment distance 0.1 < body radius 0.22
        with pytest.raises(MapValidationError, match="start pose"):
            load_map("START 0.9 0 0\nLINE 1 -1 1 1\n")

    def test_start_clear_of_wall(self):
        world = load_map("START 0.7 0 0\nLINE 1 -1 1 1\n")
        assert world.clearance(0.7, 0.0) == pytest.approx(0.3)

    def test_unknown_keyword(self):
        with pytest.raises(MapParseError, match="line 2.*WALL"):
            load_map("START 0 0 0\nWALL 1 2 3 4\n")

    def test_bad_number(self):
        with pytest.raises(MapParseError, match="line 1"):
            load_map("START x 0 0\nLINE 2 -1 2 1\n")

    def test_duplicate_start(self):
        with pytest.raises(MapParseError, match="duplicate START"):
            load_map("START 0 0 0\nSTART 1 1 0\nLINE 2 -1 2 1\n")

    def test_missing_start(self):
        with pytest.raises(MapParseError, match="START"):
            load_map("LINE 2 -1 2 1\n")

    def test_no_segments(self):
        with pytest.raises(MapValidationError):
            load_map("START 0 0 0\n")

    def test_wrong_arity(self):
        with pytest.raises(MapParseError, match="line 2"):
            load_map("START 0 0 0\nLINE 1 2 3\n")


class TestRoundTrip:
    def test_rectangle(self):
        world = load_map(RECT_ROOM, name="rect")
        again = load_map(serialize_map(world), name="rect")
        assert again.segments == world.segments
        assert again.start.x == pytest.approx(world.start.x, abs=1e-12)
        assert again.start.y == pytest.approx(world.start.y, abs=1e-12)
        assert again.start.theta == pytest.approx(world.start.theta, abs=1e-12)

    def test_random_maps(self):
        import random

        rng = random.Random(7)
        for _ in range(50):
            segs = tuple(
                LineSegment(rng.uniform(-9, 9), rng.uniform(-9, 9),
                            rng.uniform(-9, 9), rng.uniform(-9, 9))
                for _ in range(rng.randint(1, 6))
            )
            start = Pose(100.0, 100.0, rng.uniform(-math.pi, math.pi))
            world = WorldMap("rand", segs, start)
            again = load_map(serialize_map(world), name="rand")
            assert again.segments == world.segments
            assert again.start.theta == pytest.approx(world.start.theta, abs=1e-12)


def test_bundled_maps_load():
    from roversim.cli import resolve_map_text

    for name in ("rect_room", "l_corridor", "maze"):
        world = load_map(resolve_map_text(name), name=name)
        assert len(world.segments) >= 4
