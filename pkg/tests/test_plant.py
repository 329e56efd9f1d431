"""Plant simulation: kinematics, contact, thread law, faults, collisions."""

from math import pi

import numpy as np
import pytest
from hypothesis import given, strategies as st

from boltsim.errors import NoConvergence
from boltsim.geometry import Pose, Wrench, compose
from boltsim.plant import (BoltModel, ContactParams, FaultInjection,
                           PlantState, RobotModel, UR5E_DH,
                           check_self_collision, compute_contact_wrench,
                           forward_kinematics, identify_bolt,
                           inverse_kinematics, link_segments,
                           make_initial_state, step, thread_torque)

TOOL = compose(Pose.from_translation(0, 0, 0.18),
               Pose.from_axis_angle((1, 0, 0), pi))
UR5E = RobotModel(tool_transform=TOOL)
HOME = (0.0, -pi / 2, -pi / 2, -pi / 2, pi / 2, 0.0)

# planar 2R-ish test model: two unit links in the xy plane
PLANAR = RobotModel(
    dh_parameters=((1.0, 0.0, 0.0, 0.0), (1.0, 0.0, 0.0, 0.0),
                   (0.0, 0.0, 0.0, 0.0), (0.0, 0.0, 0.0, 0.0),
                   (0.0, 0.0, 0.0, 0.0), (0.0, 0.0, 0.0, 0.0)),
    link_radii=(0.05,) * 7)


def dh_matrix(a, d, alpha, theta):
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alpha), np.sin(alpha)
    return np.array([
        [ct, -st * ca, st * sa, a * ct],
        [st, ct * ca, -ct * sa, a * st],
        [0.0, sa, ca, d],
        [0.0, 0.0, 0.0, 1.0],
    ])


class TestForwardKinematics:
    def test_zero_chain_returns_tool(self):
        model = RobotModel(
            dh_parameters=tuple((0.0, 0.0, 0.0, 0.0) for _ in range(6)),
            tool_transform=Pose.from_translation(0.1, 0.2, 0.3))
        pose = forward_kinematics(model, (0.0,) * 6)
        assert np.allclose(pose.position, (0.1, 0.2, 0.3), atol=1e-15)

    def test_matches_per_joint_matrix_product(self):
        # independent oracle: multiply the per-joint homogeneous matrices
        rng = np.random.default_rng(5)
        for _ in range(100):
            q = rng.uniform(-pi, pi, size=6)
            m = np.eye(4)
            for (a, d, alpha, off), theta in zip(UR5E_DH, q):
                m = m @ dh_matrix(a, d, alpha, theta + off)
            w, x, y, z = TOOL.orientation
            tool_m = np.eye(4)
            from scipy.spatial.transform import Rotation
            tool_m[:3, :3] = Rotation.from_quat([x, y, z, w]).as_matrix()
            tool_m[:3, 3] = TOOL.position
            m = m @ tool_m
            got = forward_kinematics(UR5E, tuple(q))
            assert np.allclose(got.position, m[:3, 3], atol=1e-9)
            gw, gx, gy, gz = got.orientation
            rm = Rotation.from_quat([gx, gy, gz, gw]).as_matrix()
            assert np.allclose(rm, m[:3, :3], atol=1e-9)

    def test_base_rotation_flips_xy(self):
        p0 = forward_kinematics(PLANAR, (0.0,) * 6)
        p1 = forward_kinematics(PLANAR, (pi, 0.0, 0.0, 0.0, 0.0, 0.0))
        assert np.allclose(p1.position[:2],
                           (-p0.position[0], -p0.position[1]), atol=1e-12)


class TestInverseKinematics:
    def test_fixed_point(self):
        target = forward_kinematics(UR5E, HOME)
        joints = inverse_kinematics(UR5E, target, HOME)
        assert np.allclose(joints, HOME, atol=1e-6)

    def test_round_trip_with_noisy_seed(self):
        rng = np.random.default_rng(19)
        for _ in range(50):
            q = np.array(HOME) + rng.uniform(-0.4, 0.4, size=6)
            target = forward_kinematics(UR5E, tuple(q))
            seed = tuple(q + rng.uniform(-0.05, 0.05, size=6))
            sol = inverse_kinematics(UR5E, target, seed)
            fk = forward_kinematics(UR5E, sol)
            err = np.linalg.norm(np.subtract(fk.position, target.position))
            assert err <= 1e-4

    def test_unreachable_raises(self):
        target = Pose.from_translation(10.0, 0.0, 0.0)
        with pytest.raises(NoConvergence):
            inverse_kinematics(UR5E, target, HOME)

    def test_round_trip_property_1000(self):
        # module invariant: 1000 random reachable targets round-trip
        rng = np.random.default_rng(101)
        worst_pos, worst_rot = 0.0, 0.0
        for _ in range(1000):
            q = np.array(HOME) + rng.uniform(-0.5, 0.5, size=6)
            target = forward_kinematics(UR5E, tuple(q))
            seed = tuple(q + rng.uniform(-0.1, 0.1, size=6))
            sol = inverse_kinematics(UR5E, target, seed)
            fk = forward_kinematics(UR5E, sol)
            pos_err = np.linalg.norm(np.subtract(fk.position, target.position))
            w = abs(sum(a * b for a, b in
                        zip(fk.orientation, target.orientation)))
            rot_err = 2.0 * np.arccos(min(1.0, w))
            worst_pos = max(worst_pos, pos_err)
            worst_rot = max(worst_rot, rot_err)
        assert worst_pos <= 1e-4
        assert worst_rot <= 1e-3


class TestThreadTorque:
    BOLT = BoltModel(free_run_angle=2 * pi, thread_stiffness=4.0)

    def test_free_run(self):
        assert thread_torque(self.BOLT, 0.0) == 0.0
        assert thread_torque(self.BOLT, 2 * pi) == 0.0

    def test_linear_ramp(self):
        assert thread_torque(self.BOLT, 2 * pi + 0.5) == pytest.approx(2.0)

    @given(st.floats(-0.3, 30.0), st.floats(-0.3, 30.0))
    def test_monotone(self, a, b):
        lo, hi = sorted((a, b))
        assert thread_torque(self.BOLT, lo) <= thread_torque(self.BOLT, hi)
        assert thread_torque(self.BOLT, lo) >= 0.0


BOLT = BoltModel(true_pose=Pose(position=(0.5, 0.0, 0.2)),
                 free_run_angle=0.5, thread_stiffness=4.0)
CONTACT = ContactParams()


class TestContact:
    def socket_at(self, dx=0.0, dy=0.0, dz=0.0):
        return Pose(position=(0.5 + dx, 0.0 + dy, 0.2 + dz))

    def test_separation_zero(self):
        w, depth, _, _ = compute_contact_wrench(self.socket_at(dz=0.10), BOLT,
                                                CONTACT)
        assert w.force == (0.0, 0.0, 0.0)
        assert depth == 0.0

    def test_aligned_engagement(self):
        w, depth, _, captured = compute_contact_wrench(
            self.socket_at(dz=-0.001), BOLT, CONTACT)
        assert captured
        assert depth == pytest.approx(0.001)
        assert np.allclose(w.force, (0.0, 0.0, 0.0), atol=1e-12)

    def test_lateral_miss_penalty_force(self):
        w, depth, _, captured = compute_contact_wrench(
            self.socket_at(dx=0.005, dz=-0.001), BOLT, CONTACT)
        assert not captured
        assert depth == 0.0
        # spring-only evaluation: 2e4 N/m * 1 mm = 20 N along +z
        assert w.force_norm() == pytest.approx(20.0)

    def test_normal_force_never_negative(self):
        # retracting fast: damping would pull, clamp holds it at zero
        w, _, _, _ = compute_contact_wrench(
            self.socket_at(dx=0.005, dz=-0.0005), BOLT, CONTACT,
            prev_penetration=0.005, dt=0.002)
        z = BOLT.true_pose.z_axis()
        axial = sum(f * c for f, c in zip(w.force, z))
        assert axial >= 0.0

    def test_outside_plane_radius_free(self):
        w, depth, _, _ = compute_contact_wrench(
            self.socket_at(dx=0.3, dz=-0.01), BOLT, CONTACT)
        assert w.force == (0.0, 0.0, 0.0)


class TestIdentifyBolt:
    def test_healthy_returns_actual(self):
        faults = FaultInjection()
        assert identify_bolt(BOLT, faults) == BOLT.true_pose

    def test_offset_composes(self):
        faults = FaultInjection(
            identified_pose_offset=Pose.from_translation(0.02, 0, 0))
        est = identify_bolt(BOLT, faults)
        assert np.allclose(est.position,
                           np.add(BOLT.true_pose.position, (0.02, 0, 0)))

    def test_misalignment_visible_to_vision(self):
        mis = Pose.from_translation(0.0, 0.005, 0.0)
        faults = FaultInjection(bolt_misalignment=mis)
        est = identify_bolt(BOLT, faults)
        assert np.allclose(est.position, (0.5, 0.005, 0.2), atol=1e-12)


def loop_kwargs():
    return dict(model=UR5E, bolt=BOLT, contact=CONTACT)


class TestStep:
    def initial(self):
        return make_initial_state(UR5E, HOME)

    def test_equilibrium_only_time_advances(self):
        s0 = self.initial()
        s1 = step(s0, s0.socket_pose, 0.0, FaultInjection(), 0.002,
                  **loop_kwargs())
        assert s1.joints == s0.joints
        assert s1.bolt_rotation == s0.bolt_rotation
        assert s1.time == pytest.approx(0.002)

    def engaged_state(self):
        bolt_pose = BOLT.true_pose
        tip = Pose(position=(0.5, 0.0, 0.2 - 0.003),
                   orientation=bolt_pose.orientation)
        joints = inverse_kinematics(UR5E, tip, HOME)
        s = make_initial_state(UR5E, joints)
        # one settling step so engagement state is populated
        return step(s, s.socket_pose, 0.0, FaultInjection(), 0.002,
                    **loop_kwargs())

    def test_engaged_driver_integrates_rotation(self):
        s = self.engaged_state()
        assert s.engagement_depth > 0.0
        s2 = step(s, s.socket_pose, 1.0, FaultInjection(), 0.002,
                  **loop_kwargs())
        assert s2.bolt_rotation == pytest.approx(s.bolt_rotation + 0.002)

    def test_dead_driver_freezes_bolt(self):
        s = self.engaged_state()
        dead = FaultInjection(driver_dead=True)
        s2 = step(s, s.socket_pose, 5.0, dead, 0.002, **loop_kwargs())
        assert s2.bolt_rotation == s.bolt_rotation
        assert s2.bolt_torque == s.bolt_torque
        assert s2.driver_angle == s.driver_angle

    def test_dead_driver_constant_over_sequences(self):
        s = self.engaged_state()
        dead = FaultInjection(driver_dead=True)
        rot0 = s.bolt_rotation
        for v in (0.5, -2.0, 3.0, 0.0, 1.0):
            s = step(s, s.socket_pose, v, dead, 0.002, **loop_kwargs())
        assert s.bolt_rotation == rot0

    def test_determinism_bitwise(self):
        def run():
            s = self.initial()
            target = Pose(position=(0.5, 0.0, 0.26),
                          orientation=s.socket_pose.orientation)
            out = []
            for i in range(200):
                s = step(s, target, 0.7, FaultInjection(), 0.002,
                         **loop_kwargs())
                out.append((s.joints, s.socket_pose.to_flat(), s.bolt_rotation,
                            s.contact_wrench.to_flat(), s.time))
            return out
        assert run() == run()


class TestSelfCollision:
    def test_home_configuration_free(self):
        assert not check_self_collision(UR5E, HOME)

    def test_folded_planar_model_collides(self):
        # second link folded back onto the first
        assert check_self_collision(PLANAR, (0.0, pi * 0.98, 0, 0, 0, 0))
        assert not check_self_collision(PLANAR, (0.0, pi / 2, 0, 0, 0, 0))

    def test_against_dense_sampling_oracle(self):
        # brute force: min distance via dense point sampling of each segment
        rng = np.random.default_rng(23)
        checked = 0
        for _ in range(150):
            q = tuple(rng.uniform(-pi, pi, size=6))
            segs = link_segments(UR5E, q)
            pts = [np.linspace(a, b, 60) for a, b in segs]
            min_clear = np.inf
            for i in range(len(segs)):
                for j in range(i + 2, len(segs)):
                    d = np.min(np.linalg.norm(
                        pts[i][:, None, :] - pts[j][None, :, :], axis=2))
                    clear = d - (UR5E.link_radii[i] + UR5E.link_radii[j])
                    min_clear = min(min_clear, clear)
            if abs(min_clear) > 0.005:  # ignore boundary cases within 5 mm
                assert check_self_collision(UR5E, q) == (min_clear < 0)
                checked += 1
        assert checked > 100
