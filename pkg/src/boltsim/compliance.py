"""Admittance control, reference generation and the latched safety monitor.

The admittance law renders the follower as a per-axis virtual
mass-spring-damper driven by the measured wrench. References that jump too
far are discarded and the last accepted one is held, which keeps the
commanded pose continuous through reference dropouts and gives a stable
hold behavior on communication loss.
"""

from dataclasses import dataclass, replace

from boltsim._speedup import kernels as _k
from boltsim.geometry import Pose, TimedTrajectory, Twist, Wrench, pose_error, sample


def _vec6(v, name):
    t = tuple(float(c) for c in v)
    if len(t) != 6:
        raise ValueError(f"{name} must have 6 components")
    return t


@dataclass(frozen=True)
class AdmittanceParams:
    """Diagonal virtual dynamics. First three axes translational (kg, N s/m,
    N/m), last three rotational (kg m^2, N m s/rad, N m/rad)."""

    virtual_mass: tuple = (8.0, 8.0, 8.0, 0.5, 0.5, 0.5)
    virtual_damping: tuple = (180.0, 180.0, 180.0, 6.0, 6.0, 6.0)
    virtual_stiffness: tuple = (1000.0, 1000.0, 1000.0, 25.0, 25.0, 25.0)
    reference_jump_threshold: tuple = (0.05, 0.25)  # m, rad
    rigid_mode: bool = False
    gate_against: str = "reference"  # or "current"

    def __post_init__(self):
        m = _vec6(self.virtual_mass, "virtual_mass")
        d = _vec6(self.virtual_damping, "virtual_damping")
        k = _vec6(self.virtual_stiffness, "virtual_stiffness")
        if any(v <= 0.0 for v in m) or any(v <= 0.0 for v in d):
            raise ValueError("virtual mass and damping must be > 0")
        if any(v < 0.0 for v in k):
            raise ValueError("virtual stiffness must be >= 0")
        thr = (float(self.reference_jump_threshold[0]),
               float(self.reference_jump_threshold[1]))
        if thr[0] <= 0.0 or thr[1] <= 0.0:
            raise ValueError("reference_jump_threshold must be > 0")
        if self.gate_against not in ("reference", "current"):
            raise ValueError("gate_against must be 'reference' or 'current'")
        object.__setattr__(self, "virtual_mass", m)
        object.__setattr__(self, "virtual_damping", d)
        object.__setattr__(self, "virtual_stiffness", k)
        object.__setattr__(self, "reference_jump_threshold", thr)


@dataclass(frozen=True)
class AdmittanceState:
    virtual_pose: Pose
    virtual_twist: Twist
    last_reference: Pose
    last_reference_time: float = 0.0
    time: float = 0.0

    @staticmethod
    def at(pose: Pose):
        """Rest state holding the given pose as its reference."""
        return AdmittanceState(virtual_pose=pose, virtual_twist=Twist(),
                               last_reference=pose)


def _norm3(v):
    return (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) ** 0.5


def admittance_update(state: AdmittanceState, params: AdmittanceParams,
                      reference, measured: Wrench, dt: float):
    """One control cycle; returns (new state, commanded pose).

    A present reference is gated: if it is farther than the jump threshold
    (position or rotation) from the gating base it is discarded. An absent
    reference means hold-last. The virtual pose then integrates
    M x'' + D x' + K x = F in the 6-D offset coordinate about the accepted
    reference (position + rotation vector), with the tool-frame wrench
    rotated into that coordinate.
    """
    if not 0.0 < dt <= 0.01:
        raise ValueError("dt must be in (0, 0.01]")
    now = state.time + dt

    ref = state.last_reference
    ref_time = state.last_reference_time
    if reference is not None:
        base = ref if params.gate_against == "reference" else state.virtual_pose
        dp, dr = pose_error(reference, base)
        thr_pos, thr_rot = params.reference_jump_threshold
        if _norm3(dp) <= thr_pos and _norm3(dr) <= thr_rot:
            ref = reference
            ref_time = now

    if params.rigid_mode:
        new = replace(state, virtual_pose=ref, virtual_twist=Twist(),
                      last_reference=ref, last_reference_time=ref_time, time=now)
        return new, ref

    # offset of the virtual pose from the (possibly re-anchored) reference
    vp = state.virtual_pose
    ex = vp.position[0] - ref.position[0]
    ey = vp.position[1] - ref.position[1]
    ez = vp.position[2] - ref.position[2]
    rel = _k.quat_mul(vp.orientation, _k.quat_conjugate(ref.orientation))
    rx, ry, rz = _k.quat_rotvec(rel)

    f = _k.quat_rotate(vp.orientation, measured.force)
    t = _k.quat_rotate(vp.orientation, measured.torque)

    e, v = _k.admittance_step(
        (ex, ey, ez, rx, ry, rz),
        state.virtual_twist.linear + state.virtual_twist.angular,
        f + t,
        params.virtual_mass, params.virtual_damping, params.virtual_stiffness, dt)

    pos = (ref.position[0] + e[0], ref.position[1] + e[1], ref.position[2] + e[2])
    ori = _k.quat_mul(_k.quat_from_rotvec((e[3], e[4], e[5])), ref.orientation)
    virtual = Pose(position=pos, orientation=ori)
    new = AdmittanceState(
        virtual_pose=virtual,
        virtual_twist=Twist(linear=v[:3], angular=v[3:]),
        last_reference=ref,
        last_reference_time=ref_time,
        time=now)
    return new, virtual


def offset_from_reference(state: AdmittanceState):
    """6-D offset coordinate of the virtual pose about the reference."""
    vp, ref = state.virtual_pose, state.last_reference
    rel = _k.quat_mul(vp.orientation, _k.quat_conjugate(ref.orientation))
    r = _k.quat_rotvec(rel)
    return (vp.position[0] - ref.position[0],
            vp.position[1] - ref.position[1],
            vp.position[2] - ref.position[2],
            r[0], r[1], r[2])


def stored_energy(state: AdmittanceState, params: AdmittanceParams) -> float:
    """V = 1/2 v' M v + 1/2 e' K e about the current reference."""
    e = offset_from_reference(state)
    v = state.virtual_twist.linear + state.virtual_twist.angular
    total = 0.0
    for i in range(6):
        total += 0.5 * params.virtual_mass[i] * v[i] * v[i]
        total += 0.5 * params.virtual_stiffness[i] * e[i] * e[i]
    return total


def rgc_tick(traj: TimedTrajectory, elapsed: float) -> Pose:
    """Automatic-mode reference stream: the trajectory's timing law,
    holding the final pose past the end."""
    if elapsed < 0.0:
        raise ValueError("elapsed must be >= 0")
    return sample(traj, elapsed)


@dataclass(frozen=True)
class SafetyMonitor:
    """Latched high-wrench stop. Trips on force or torque magnitude; only an
    explicit operator acknowledgment clears it."""

    force_threshold: float = 50.0   # N
    torque_threshold: float = 12.0  # N m
    tripped: bool = False

    def __post_init__(self):
        if not self.force_threshold > 0.0 or not self.torque_threshold > 0.0:
            raise ValueError("safety thresholds must be > 0")


def safety_check(monitor: SafetyMonitor, wrench: Wrench) -> SafetyMonitor:
    if monitor.tripped:
        return monitor
    if (wrench.force_norm() > monitor.force_threshold
            or wrench.torque_norm() > monitor.torque_threshold):
        return replace(monitor, tripped=True)
    return monitor


def safety_reset(monitor: SafetyMonitor, operator_ack: bool) -> SafetyMonitor:
    if operator_ack and monitor.tripped:
        return replace(monitor, tripped=False)
    return monitor
