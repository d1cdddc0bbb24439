import math
import random

import pytest

from roversim.simcore import (
    SonarScan,
    check_collision,
    init_state,
    integrate_unicycle,
    raycast,
    scan_sonars,
    step,
)
from roversim.world import (
    LineSegment,
    Pose,
    RobotGeometry,
    SonarConfig,
    Twist,
    WorldMap,
    load_map,
)

from conftest import RECT_ROOM, rect_room_range


def euler_integrate(pose, cmd, dt, substeps=1000):
    """Independent fine-step Euler oracle for the arc integrator."""
    h = dt / substeps
    x, y, th = pose.x, pose.y, pose.theta
    for _ in range(substeps):
        x += cmd.v * math.cos(th) * h
        y += cmd.v * math.sin(th) * h
        th += cmd.w * h
    return x, y, th


class TestIntegrateUnicycle:
    def test_straight_line(self):
        p = integrate_unicycle(Pose(0, 0, 0), Twist(0.5, 0.0), 0.1)
        assert (p.x, p.y, p.theta) == pytest.approx((0.05, 0.0, 0.0), abs=1e-15)

    def test_rotation_in_place(self):
        p = integrate_unicycle(Pose(2, 3, 0), Twist(0.0, math.pi), 0.5)
        assert (p.x, p.y) == pytest.approx((2.0, 3.0), abs=1e-15)
        assert p.theta == pytest.approx(math.pi / 2, abs=1e-12)

    def test_quarter_circle(self):
        p = integrate_unicycle(Pose(0, 0, 0), Twist(1.0, 1.0), math.pi / 2)
        assert (p.x, p.y) == pytest.approx((1.0, 1.0), abs=1e-12)
        assert p.theta == pytest.approx(math.pi / 2, abs=1e-12)

    def test_rejects_bad_dt(self):
        with pytest.raises(ValueError):
            integrate_unicycle(Pose(0, 0, 0), Twist(0.1, 0.0), 0.0)
        with pytest.raises(ValueError):
            integrate_unicycle(Pose(0, 0, 0), Twist(0.1, 0.0), -0.1)

    def test_matches_euler_oracle(self):
        rng = random.Random(42)
        worst = 0.0
        for _ in range(200):
            pose = Pose(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-math.pi, math.pi))
            cmd = Twist(rng.uniform(-0.75, 0.75), rng.uniform(-1.5, 1.5))
            dt = rng.uniform(0.001, 0.1)
            exact = integrate_unicycle(pose, cmd, dt)
            ex, ey, _ = euler_integrate(pose, cmd, dt)
            worst = max(worst, math.hypot(exact.x - ex, exact.y - ey))
        assert worst <= 1e-4


class TestRaycast:
    WALL = WorldMap("wall", (LineSegment(2, -5, 2, 5),), Pose(0, 0, 0))

    def test_perpendicular_hit(self):
        assert raycast((0, 0), 0.0, self.WALL, 10.0) == pytest.approx(2.0, abs=1e-12)

    def test_diagonal_hit(self):
        t = raycast((0, 0), math.pi / 4, self.WALL, 10.0)
        assert t == pytest.approx(2.8284271, abs=1e-6)
        assert t == pytest.approx(2 * math.sqrt(2), abs=1e-12)

    def test_wall_behind_misses(self):
        assert raycast((0, 0), math.pi, self.WALL, 10.0) is None

    def test_beyond_max_range_misses(self):
        assert raycast((0, 0), 0.0, self.WALL, 1.5) is None

    def test_nearest_of_many(self):
        world = WorldMap(
            "two", (LineSegment(3, -1, 3, 1), LineSegment(2, -1, 2, 1)), Pose(0, 0, 0)
        )
        assert raycast((0, 0), 0.0, world, 10.0) == pytest.approx(2.0)

    def test_agrees_with_shapely_oracle(self):
        from shapely.geometry import LineString, Point

        rng = random.Random(11)
        worst = 0.0
        for _ in range(200):
            segs = []
            while len(segs) < 4:
                x1, y1, x2, y2 = (rng.uniform(-6, 6) for _ in range(4))
                if math.hypot(x2 - x1, y2 - y1) > 1e-6:
                    segs.append(LineSegment(x1, y1, x2, y2))
            world = WorldMap("rand", tuple(segs), Pose(50, 50, 0))
            ox, oy = rng.uniform(-6, 6), rng.uniform(-6, 6)
            d = rng.uniform(-math.pi, math.pi)
            max_range = 8.0
            mine = raycast((ox, oy), d, world, max_range)
            ray = LineString(
                [(ox, oy), (ox + max_range * math.cos(d), oy + max_range * math.sin(d))]
            )
            best = None
            for seg in segs:
                inter = ray.intersection(LineString([(seg.ax, seg.ay), (seg.bx, seg.by)]))
                if not inter.is_empty:
                    dist = Point(ox, oy).distance(inter)
                    best = dist if best is None else min(best, dist)
            a = max_range if mine is None else mine
            b = max_range if best is None else best
            worst = max(worst, abs(a - b))
        assert worst <= 1e-6


class TestScanSonars:
    def test_room_center_analytic(self, rect_room, sonar_cfg):
        scan = scan_sonars(Pose(0, 0, 0), sonar_cfg, rect_room)
        assert scan.ranges[sonar_cfg.beam_index(90.0)] == pytest.approx(3.0, abs=1e-12)
        assert scan.ranges[sonar_cfg.beam_index(-90.0)] == pytest.approx(3.0, abs=1e-12)
        assert scan.ranges[sonar_cfg.beam_index(-10.0)] == pytest.approx(
            4.0617064475429805, abs=1e-9
        )
        for i, angle in enumerate(sonar_cfg.angles):
            assert scan.ranges[i] == pytest.approx(rect_room_range(angle), abs=1e-9)

    def test_far_field_clamps_to_max(self, sonar_cfg):
        big = load_map("START 0 0 0\nLINE -40 -40 40 -40\nLINE -40 40 40 40\n")
        scan = scan_sonars(Pose(0, 0, 0), sonar_cfg, big)
        assert all(r == 5.0 for r in scan.ranges)

    def test_near_wall_clamps_to_min(self, sonar_cfg):
        wall = WorldMap("w", (LineSegment(1, -5, 1, 5),), Pose(0, 0, 0))
        scan = scan_sonars(Pose(0.95, 0, 0), sonar_cfg, wall)
        assert scan.ranges[sonar_cfg.beam_index(-10.0)] == 0.1

    def test_translation_invariance(self, sonar_cfg):
        rng = random.Random(3)
        base = load_map(RECT_ROOM)
        for _ in range(20):
            dx, dy = rng.uniform(-50, 50), rng.uniform(-50, 50)
            moved = WorldMap(
                "moved",
                tuple(
                    LineSegment(s.ax + dx, s.ay + dy, s.bx + dx, s.by + dy)
                    for s in base.segments
                ),
                Pose(dx, dy, 0),
            )
            pose = Pose(rng.uniform(-2, 2), rng.uniform(-1.5, 1.5), rng.uniform(-3, 3))
            a = scan_sonars(pose, sonar_cfg, base)
            b = scan_sonars(Pose(pose.x + dx, pose.y + dy, pose.theta), sonar_cfg, moved)
            for ra, rb in zip(a.ranges, b.ranges):
                assert ra == pytest.approx(rb, abs=1e-9)

    def test_scan_requires_16(self):
        with pytest.raises(ValueError):
            SonarScan((1.0, 2.0))


class TestCheckCollision:
    WALL = WorldMap("w", (LineSegment(1, -1, 1, 1),), Pose(0, 0, 0))

    def test_clear(self, geom):
        assert not check_collision(Pose(0, 0, 0), geom, self.WALL)

    def test_hit(self, geom):
        assert check_collision(Pose(0.9, 0, 0), geom, self.WALL)

    def test_boundary_is_strict(self):
        # distance exactly equal to the radius (both exactly representable)
        geom = RobotGeometry(body_radius=0.25)
        assert not check_collision(Pose(0.75, 0, 0), geom, self.WALL)


class TestStep:
    def test_straight_displacement(self, rect_room, sonar_cfg, geom):
        state = init_state(rect_room, sonar_cfg)
        for _ in range(100):
            state = step(state, Twist(0.5, 0.0), geom, sonar_cfg, rect_room, 0.05)
        assert state.pose.x == pytest.approx(2.5, abs=1e-9)
        assert state.odom == state.pose
        assert state.tick == 100
        assert state.t_sim == 100 * 0.05

    def test_command_clamped(self, rect_room, sonar_cfg, geom):
        state = init_state(rect_room, sonar_cfg)
        nxt = step(state, Twist(2.0, 0.0), geom, sonar_cfg, rect_room, 0.1)
        assert nxt.pose.x == pytest.approx(0.075, abs=1e-12)

    def test_collision_freezes_and_latches(self, sonar_cfg, geom):
        world = load_map("START 0 0 0\nLINE 0.5 -2 0.5 2\nLINE -4 -2 -4 2\n")
        state = init_state(world, sonar_cfg)
        for _ in range(40):
            state = step(state, Twist(0.75, 0.0), geom, sonar_cfg, world, 0.1)
        assert state.collided
        assert world.clearance(state.pose.x, state.pose.y) >= geom.body_radius
        # frozen pose, but odometry kept integrating
        assert state.odom.x > state.pose.x
        # flag stays latched after stopping
        state = step(state, Twist(0.0, 0.0), geom, sonar_cfg, world, 0.1)
        assert state.collided

    def test_never_penetrates(self, rect_room, sonar_cfg, geom):
        rng = random.Random(5)
        state = init_state(rect_room, sonar_cfg)
        for _ in range(500):
            cmd = Twist(rng.uniform(-1, 1), rng.uniform(-2, 2))
            state = step(state, cmd, geom, sonar_cfg, rect_room, 0.05)
            assert rect_room.clearance(state.pose.x, state.pose.y) >= geom.body_radius

    def test_deterministic(self, rect_room, sonar_cfg, geom):
        rng = random.Random(9)
        cmds = [Twist(rng.uniform(-0.5, 0.5), rng.uniform(-1, 1)) for _ in range(200)]

        def run():
            state = init_state(rect_room, sonar_cfg)
            out = []
            for cmd in cmds:
                state = step(state, cmd, geom, sonar_cfg, rect_room, 0.02)
                out.append((state.pose, state.odom, state.scan.ranges, state.t_sim))
            return out

        assert run() == run()

    def test_rejects_bad_dt(self, rect_room, sonar_cfg, geom):
        state = init_state(rect_room, sonar_cfg)
        with pytest.raises(ValueError):
            step(state, Twist(0, 0), geom, sonar_cfg, rect_room, 0.0)

    def test_t_sim_is_tick_times_dt(self, rect_room, sonar_cfg, geom):
        state = init_state(rect_room, sonar_cfg)
        for _ in range(37):
            state = step(state, Twist(0.1, 0.3), geom, sonar_cfg, rect_room, 0.02)
        assert state.t_sim == state.tick * 0.02
