"""Fixed-step simulation of the follower arm, the bolted workpiece and the
socket/bolt contact.

The robot is kinematic: joints chase the IK solution of the commanded pose
under a per-joint speed limit. Contact is a penalty model with a capture
cone for socket engagement. Everything is deterministic; faults show up in
the state, never as exceptions.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import isfinite, pi

from boltsim._speedup import kernels as _k
from boltsim.errors import JointLimitViolation, NoConvergence
from boltsim.geometry import Pose, Wrench

# Universal Robots UR5e, classic DH (a, d, alpha, theta_offset)
UR5E_DH = (
    (0.0, 0.1625, pi / 2, 0.0),
    (-0.425, 0.0, 0.0, 0.0),
    (-0.3922, 0.0, 0.0, 0.0),
    (0.0, 0.1333, pi / 2, 0.0),
    (0.0, 0.0997, -pi / 2, 0.0),
    (0.0, 0.0996, 0.0, 0.0),
)

IK_MAX_ITERS = 500
IK_TOL_POS = 1e-4      # m
IK_TOL_ROT = 1e-3      # rad
IK_DAMPING = 0.05
IK_MAX_STEP = 0.3      # rad per iteration

# in-loop tracking solve: must resolve well below the per-tick commanded
# motion (~20 um at 10 mm/s) or the joints move in visible stair-steps
TRACK_TOL_POS = 1e-7
TRACK_TOL_ROT = 1e-6
TRACK_ITERS = 10


@dataclass(frozen=True)
class RobotModel:
    """Arm kinematics plus the flange-to-socket-tip transform."""

    dh_parameters: tuple = UR5E_DH
    joint_limits: tuple = tuple((-2.0 * pi, 2.0 * pi) for _ in range(6))
    tool_transform: Pose = Pose()
    max_joint_speed: float = pi  # rad/s
    link_radii: tuple = (0.08, 0.06, 0.05, 0.045, 0.045, 0.045, 0.04)

    def __post_init__(self):
        dh = tuple(tuple(float(v) for v in row) for row in self.dh_parameters)
        if len(dh) != 6 or any(len(r) != 4 for r in dh):
            raise ValueError("dh_parameters must be 6 rows of (a, d, alpha, offset)")
        limits = tuple((float(lo), float(hi)) for lo, hi in self.joint_limits)
        if len(limits) != 6 or any(not lo < hi for lo, hi in limits):
            raise ValueError("joint_limits must be 6 (min, max) pairs with min < max")
        object.__setattr__(self, "dh_parameters", dh)
        object.__setattr__(self, "joint_limits", limits)
        object.__setattr__(self, "link_radii", tuple(float(r) for r in self.link_radii))

    @property
    def lower_limits(self):
        return tuple(lo for lo, _ in self.joint_limits)

    @property
    def upper_limits(self):
        return tuple(hi for _, hi in self.joint_limits)


@dataclass(frozen=True)
class BoltModel:
    """Bolt head pose (axis = +z, origin at the head top center) and thread law."""

    true_pose: Pose = Pose()
    head_across_flats: float = 0.017      # m
    free_run_angle: float = 2.0 * pi      # rad before threads load up
    thread_stiffness: float = 4.0         # N m / rad past free run
    target_torque: float = 8.0            # N m
    release_back_angle: float = 0.35      # rad

    def __post_init__(self):
        if self.free_run_angle < 0.0:
            raise ValueError("free_run_angle must be >= 0")
        if not self.thread_stiffness > 0.0:
            raise ValueError("thread_stiffness must be > 0")
        if not self.target_torque > 0.0:
            raise ValueError("target_torque must be > 0")


@dataclass(frozen=True)
class ContactParams:
    normal_stiffness: float = 2.0e4      # N/m
    normal_damping: float = 50.0         # N s/m
    lateral_stiffness: float = 1.0e4     # N/m
    torsional_friction: float = 0.05     # N m
    capture_radius: float = 0.002        # m
    capture_angle: float = 0.12          # rad
    plane_radius: float = 0.15           # m, lateral extent of the flange plane

    def __post_init__(self):
        for name in ("normal_stiffness", "normal_damping", "lateral_stiffness",
                     "torsional_friction", "capture_radius", "capture_angle",
                     "plane_radius"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True)
class FaultInjection:
    """identified_pose_offset skews the vision stub; driver_dead freezes the
    driver shaft; bolt_misalignment displaces the physical bolt."""

    identified_pose_offset: Pose = Pose()
    driver_dead: bool = False
    bolt_misalignment: Pose = Pose()

    def healthy(self):
        return (not self.driver_dead
                and self.identified_pose_offset == Pose()
                and self.bolt_misalignment == Pose())


@dataclass(frozen=True)
class PlantState:
    joints: tuple
    socket_pose: Pose
    bolt_rotation: float = 0.0       # rad, cumulative at the bolt
    bolt_torque: float = 0.0         # N m
    engagement_depth: float = 0.0    # m
    contact_wrench: Wrench = Wrench()
    safety_tripped: bool = False
    time: float = 0.0
    driver_angle: float = 0.0        # rad, driver shaft encoder
    contact_penetration: float = 0.0  # m, un-captured overlap (damping memory)
    socket_yaw: float = 0.0          # rad about the bolt axis, last evaluated

    def cartesian_speed_from(self, previous):
        """Socket translational speed estimated against an earlier state."""
        dt = self.time - previous.time
        if dt <= 0.0:
            return 0.0
        a = self.socket_pose.position
        b = previous.socket_pose.position
        dx = a[0] - b[0]
        dy = a[1] - b[1]
        dz = a[2] - b[2]
        return (dx * dx + dy * dy + dz * dz) ** 0.5 / dt


def forward_kinematics(model: RobotModel, joints) -> Pose:
    """Socket tip pose for a joint vector."""
    joints = tuple(float(j) for j in joints)
    if len(joints) != 6 or any(not isfinite(j) for j in joints):
        raise ValueError("joints must be 6 finite values")
    tool = model.tool_transform
    p, q = _k.fk_pose(model.dh_parameters, joints, tool.position, tool.orientation)
    return Pose(position=p, orientation=q)


def inverse_kinematics(model: RobotModel, target: Pose, seed) -> tuple:
    """Damped-least-squares IK; raises when the target cannot be reached."""
    tool = model.tool_transform
    joints, _, pos_err, rot_err = _k.ik_damped_ls(
        model.dh_parameters, tool.position, tool.orientation,
        target.position, target.orientation, tuple(float(j) for j in seed),
        model.lower_limits, model.upper_limits,
        IK_MAX_ITERS, IK_TOL_POS, IK_TOL_ROT, IK_DAMPING, IK_MAX_STEP)
    if pos_err <= IK_TOL_POS and rot_err <= IK_TOL_ROT:
        return joints
    at_limit = any(
        j <= lo + 1e-9 or j >= hi - 1e-9
        for j, (lo, hi) in zip(joints, model.joint_limits))
    if at_limit:
        raise JointLimitViolation(
            f"target needs a joint beyond its limit (residual {pos_err:.2e} m)")
    raise NoConvergence(
        f"IK residual {pos_err:.2e} m / {rot_err:.2e} rad after {IK_MAX_ITERS} iters")


def actual_bolt_pose(bolt: BoltModel, faults: FaultInjection) -> Pose:
    """Where the bolt physically is (misalignment applied)."""
    return bolt.true_pose @ faults.bolt_misalignment


def identify_bolt(bolt: BoltModel, faults: FaultInjection) -> Pose:
    """Vision stub: the estimated bolt pose the pipeline plans against."""
    return faults.identified_pose_offset @ (bolt.true_pose @ faults.bolt_misalignment)


def thread_torque(bolt: BoltModel, bolt_rotation: float) -> float:
    """Zero through the free run, then a linear ramp; never negative."""
    loaded = bolt_rotation - bolt.free_run_angle
    if loaded <= 0.0:
        return 0.0
    return bolt.thread_stiffness * loaded


def compute_contact_wrench(socket_pose: Pose, bolt: BoltModel,
                           params: ContactParams, *, faults=None,
                           prev_penetration=0.0, dt=None):
    """Tool-frame contact wrench and engagement depth.

    Damping on the collision normal needs the previous penetration and dt;
    both default to the stateless (spring-only) evaluation.
    """
    bolt_pose = bolt.true_pose if faults is None else actual_bolt_pose(bolt, faults)
    force_w, depth, pen, captured = _k.contact_eval(
        socket_pose.position, socket_pose.orientation,
        bolt_pose.position, bolt_pose.orientation,
        params.normal_stiffness,
        params.normal_damping if dt else 0.0,
        params.lateral_stiffness,
        params.capture_radius, params.capture_angle, params.plane_radius,
        prev_penetration, dt if dt else 1.0)
    q_inv = _k.quat_conjugate(socket_pose.orientation)
    force_tool = _k.quat_rotate(q_inv, force_w)
    return Wrench(force=force_tool), depth, pen, captured


def make_initial_state(model: RobotModel, home_joints) -> PlantState:
    pose = forward_kinematics(model, home_joints)
    return PlantState(joints=tuple(float(j) for j in home_joints), socket_pose=pose)


def step(state: PlantState, commanded_pose: Pose, driver_velocity: float,
         faults: FaultInjection, dt: float, *, model: RobotModel,
         bolt: BoltModel, contact: ContactParams,
         safety_tripped: bool = False, bolt_pose: Pose = None) -> PlantState:
    """Advance the plant one tick.

    Joint motion is rate-limited toward IK(commanded_pose). The driver only
    turns the bolt while engaged; a dead driver freezes the shaft, in which
    case socket yaw about the bolt axis ratchets the bolt instead (the
    octagonal socket is rotationally locked to a seized driver). The caller
    supplies the latched safety verdict for this tick, and may pass the
    precomputed actual bolt pose to skip recomputing it every cycle.
    """
    if not 0.0 < dt <= 0.01:
        raise ValueError("dt must be in (0, 0.01]")

    tool = model.tool_transform
    target, _, pos_err, _ = _k.ik_damped_ls(
        model.dh_parameters, tool.position, tool.orientation,
        commanded_pose.position, commanded_pose.orientation, state.joints,
        model.lower_limits, model.upper_limits,
        TRACK_ITERS, TRACK_TOL_POS, TRACK_TOL_ROT, IK_DAMPING, IK_MAX_STEP)
    if pos_err > 0.05:
        target = state.joints  # commanded pose out of reach: hold

    max_dq = model.max_joint_speed * dt
    joints = []
    for j, t in zip(state.joints, target):
        d = t - j
        if d > max_dq:
            d = max_dq
        elif d < -max_dq:
            d = -max_dq
        joints.append(j + d)
    joints = tuple(joints)

    socket = forward_kinematics(model, joints)
    if bolt_pose is None:
        bolt_pose = actual_bolt_pose(bolt, faults)
    force_w, depth, pen, captured = _k.contact_eval(
        socket.position, socket.orientation,
        bolt_pose.position, bolt_pose.orientation,
        contact.normal_stiffness, contact.normal_damping,
        contact.lateral_stiffness, contact.capture_radius,
        contact.capture_angle, contact.plane_radius,
        state.contact_penetration, dt)

    engaged = depth > 0.0 and captured
    yaw = _k.yaw_about_axis(bolt_pose.orientation, socket.orientation)

    rotation = state.bolt_rotation
    driver_angle = state.driver_angle
    spinning = 0.0
    if faults.driver_dead:
        if engaged and state.engagement_depth > 0.0:
            d_yaw = _k.wrap_angle(yaw - state.socket_yaw)
            rotation += d_yaw
            spinning = d_yaw
    else:
        driver_angle += driver_velocity * dt
        if engaged:
            rotation += driver_velocity * dt
            spinning = driver_velocity * dt
    if rotation < -bolt.release_back_angle:
        rotation = -bolt.release_back_angle
    torque = thread_torque(bolt, rotation)

    # reaction torque about the bolt axis while engaged, tool frame
    tq_w = (0.0, 0.0, 0.0)
    if engaged:
        react = torque
        if spinning > 0.0:
            react += contact.torsional_friction
        elif spinning < 0.0:
            react -= contact.torsional_friction
        zb = _k.quat_rotate(bolt_pose.orientation, (0.0, 0.0, 1.0))
        tq_w = (-react * zb[0], -react * zb[1], -react * zb[2])

    q_inv = _k.quat_conjugate(socket.orientation)
    wrench = Wrench(force=_k.quat_rotate(q_inv, force_w),
                    torque=_k.quat_rotate(q_inv, tq_w))

    return PlantState(
        joints=joints,
        socket_pose=socket,
        bolt_rotation=rotation,
        bolt_torque=torque,
        engagement_depth=depth,
        contact_wrench=wrench,
        safety_tripped=state.safety_tripped or safety_tripped,
        time=state.time + dt,
        driver_angle=driver_angle,
        contact_penetration=pen,
        socket_yaw=yaw,
    )


def link_segments(model: RobotModel, joints):
    """Capsule axes: base..flange origins plus the tool tip."""
    origins, _, fp, fq = _k.fk_frames(model.dh_parameters, joints)
    tool = model.tool_transform
    tip, _ = _k.pose_compose(fp, fq, tool.position, tool.orientation)
    pts = list(origins) + [tip]
    return [(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]


def _share_endpoint(sa, sb):
    for p in sa:
        for q in sb:
            if (abs(p[0] - q[0]) < 1e-9 and abs(p[1] - q[1]) < 1e-9
                    and abs(p[2] - q[2]) < 1e-9):
                return True
    return False


@lru_cache(maxsize=8)
def _collision_pairs(model: RobotModel):
    """Non-adjacent capsule pairs worth testing.

    Pairs that share an endpoint (structurally connected through
    zero-length wrist links) never collide and are skipped. DH segment
    lengths do not depend on the configuration, so this topology is
    computed once per model.
    """
    segs = link_segments(model, (0.0,) * 6)
    radii = model.link_radii
    pairs = []
    n = len(segs)
    for i in range(n):
        for j in range(i + 2, n):
            if _share_endpoint(segs[i], segs[j]):
                continue
            pairs.append((i, j, radii[i] + radii[j]))
    return tuple(pairs)


def check_self_collision(model: RobotModel, joints) -> bool:
    """Coarse capsule test over non-adjacent links."""
    segs = link_segments(model, joints)
    dist = _k.segment_distance
    for i, j, reach in _collision_pairs(model):
        if dist(segs[i][0], segs[i][1], segs[j][0], segs[j][1]) < reach:
            return True
    return False
