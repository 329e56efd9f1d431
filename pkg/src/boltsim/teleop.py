"""Bilateral manual control: device-to-follower motion mapping with
tremor filtering, engagement gating and clutch indexing, plus the
impedance-style feedback wrench rendered back on the input device.
"""

from dataclasses import dataclass
from collections import deque

from boltsim._speedup import kernels as _k
from boltsim.compliance import AdmittanceState
from boltsim.errors import NotEngaged
from boltsim.geometry import Pose, Wrench, pose_error


@dataclass(frozen=True)
class InputDeviceSample:
    pose: Pose
    clutch: bool = True
    time: float = 0.0


@dataclass(frozen=True)
class TeleopMapping:
    """Device-to-camera frame correspondence and engagement gate."""

    camera_alignment: tuple = (1.0, 0.0, 0.0, 0.0)  # quaternion, device -> camera
    motion_scale: float = 1.0
    filter_window: int = 10
    engage_angle_tolerance: float = 0.15  # rad

    def __post_init__(self):
        if not self.motion_scale > 0.0:
            raise ValueError("motion_scale must be > 0")
        if self.filter_window < 1:
            raise ValueError("filter_window must be >= 1")
        object.__setattr__(self, "camera_alignment",
                           _k.quat_canonical(tuple(float(c) for c in self.camera_alignment)))


@dataclass(frozen=True)
class FeedbackParams:
    feedback_stiffness: tuple = (200.0, 200.0, 200.0, 2.0, 2.0, 2.0)
    feedback_damping: tuple = (8.0, 8.0, 8.0, 0.1, 0.1, 0.1)
    force_cap: float = 4.0  # N

    def __post_init__(self):
        ks = tuple(float(v) for v in self.feedback_stiffness)
        kd = tuple(float(v) for v in self.feedback_damping)
        if len(ks) != 6 or len(kd) != 6:
            raise ValueError("feedback gains must have 6 components")
        if any(v < 0.0 for v in ks + kd):
            raise ValueError("feedback gains must be >= 0")
        if not self.force_cap > 0.0:
            raise ValueError("force_cap must be > 0")
        object.__setattr__(self, "feedback_stiffness", ks)
        object.__setattr__(self, "feedback_damping", kd)


def filter_device(stream_window, window: int) -> Pose:
    """Moving-average pose over the last `window` samples.

    Positions average arithmetically; orientations use the normalized
    quaternion mean with signs aligned to the first sample of the slice
    (valid for the small angular spread of hand tremor).
    """
    samples = list(stream_window)[-window:]
    if not samples:
        raise ValueError("need at least one sample")
    n = len(samples)
    px = py = pz = 0.0
    ref = samples[0].pose.orientation
    qw = qx = qy = qz = 0.0
    for s in samples:
        x, y, z = s.pose.position
        px += x
        py += y
        pz += z
        w, a, b, c = s.pose.orientation
        if w * ref[0] + a * ref[1] + b * ref[2] + c * ref[3] < 0.0:
            w, a, b, c = -w, -a, -b, -c
        qw += w
        qx += a
        qy += b
        qz += c
    return Pose(position=(px / n, py / n, pz / n), orientation=(qw, qx, qy, qz))


def mapped_orientation(device_pose: Pose, mapping: TeleopMapping):
    """Device orientation expressed in the camera frame."""
    return _k.quat_mul(mapping.camera_alignment, device_pose.orientation)


def try_engage(device_pose: Pose, socket_pose: Pose, mapping: TeleopMapping) -> bool:
    """True when the mapped device orientation matches the socket within the
    tolerance (inclusive)."""
    angle = _k.quat_angle(mapped_orientation(device_pose, mapping),
                          socket_pose.orientation)
    return angle <= mapping.engage_angle_tolerance


def map_motion(filtered_device: Pose, anchor_device, anchor_socket,
               mapping: TeleopMapping) -> Pose:
    """Follower reference for the current device pose.

    Device displacement since the anchor is rotated into the camera frame,
    scaled, and applied to the anchored follower reference; orientation
    displacement applies unscaled.
    """
    if anchor_device is None or anchor_socket is None:
        raise NotEngaged("motion mapping requested before engagement")
    ca = mapping.camera_alignment
    dp = (filtered_device.position[0] - anchor_device.position[0],
          filtered_device.position[1] - anchor_device.position[1],
          filtered_device.position[2] - anchor_device.position[2])
    dx, dy, dz = _k.quat_rotate(ca, dp)
    s = mapping.motion_scale
    pos = (anchor_socket.position[0] + s * dx,
           anchor_socket.position[1] + s * dy,
           anchor_socket.position[2] + s * dz)
    dq = _k.quat_mul(filtered_device.orientation,
                     _k.quat_conjugate(anchor_device.orientation))
    dq_cam = _k.quat_mul(_k.quat_mul(ca, dq), _k.quat_conjugate(ca))
    return Pose(position=pos,
                orientation=_k.quat_mul(dq_cam, anchor_socket.orientation))


def feedback_force(admittance_state: AdmittanceState,
                   params: FeedbackParams,
                   mapping: TeleopMapping = TeleopMapping()) -> Wrench:
    """Spring-damper wrench on the admittance motion error, expressed in the
    device frame and norm-capped on the force part (direction preserved)."""
    e_pos, e_rot = pose_error(admittance_state.last_reference,
                              admittance_state.virtual_pose)
    tw = admittance_state.virtual_twist
    e = e_pos + e_rot
    de = tuple(-v for v in (tw.linear + tw.angular))
    ks = params.feedback_stiffness
    kd = params.feedback_damping
    w = tuple(ks[i] * e[i] + kd[i] * de[i] for i in range(6))
    ca_inv = _k.quat_conjugate(mapping.camera_alignment)
    force = _k.quat_rotate(ca_inv, w[:3])
    torque = _k.quat_rotate(ca_inv, w[3:])
    fn = (force[0] ** 2 + force[1] ** 2 + force[2] ** 2) ** 0.5
    if fn > params.force_cap:
        scale = params.force_cap / fn
        force = (force[0] * scale, force[1] * scale, force[2] * scale)
        torque = (torque[0] * scale, torque[1] * scale, torque[2] * scale)
    return Wrench(force=force, torque=torque)


class TeleopSession:
    """Runner-side state for one manual-control stint.

    Consumes jog deltas, keeps the filter window, anchors on engagement and
    rebases the anchors over clutch cycles (motion indexing). Returns a
    follower reference per tick while engaged, None otherwise.
    """

    def __init__(self, mapping: TeleopMapping, feedback: FeedbackParams,
                 device_pose: Pose = Pose()):
        self.mapping = mapping
        self.feedback = feedback
        self.device_pose = device_pose
        self.window = deque(maxlen=max(1, mapping.filter_window))
        self.engaged = False
        self.clutch = True
        self.anchor_device = None
        self.anchor_socket = None
        self._last_reference = None

    def reset(self, device_pose=None):
        if device_pose is not None:
            self.device_pose = device_pose
        self.window.clear()
        self.engaged = False
        self.anchor_device = None
        self.anchor_socket = None
        self._last_reference = None

    def push_jog(self, delta, clutch, time):
        """Apply a device-frame pose delta (dx dy dz, rotation vector)."""
        dp = delta[:3]
        dr = delta[3:6]
        pos = tuple(a + b for a, b in zip(self.device_pose.position, dp))
        ori = _k.quat_mul(_k.quat_from_rotvec(tuple(dr)), self.device_pose.orientation)
        self.device_pose = Pose(position=pos, orientation=ori)
        self.window.append(InputDeviceSample(pose=self.device_pose,
                                             clutch=clutch, time=time))
        self.clutch = clutch

    def tick(self, socket_pose: Pose, current_reference: Pose, time: float):
        """Per-cycle mapping; returns the new reference or None (hold)."""
        if not self.window:
            self.window.append(InputDeviceSample(pose=self.device_pose, time=time))
        filtered = filter_device(self.window, self.mapping.filter_window)
        if not self.engaged:
            if try_engage(filtered, socket_pose, self.mapping):
                self.engaged = True
                self.anchor_device = filtered
                # anchor the *reference*, not the measured pose, so the
                # follower command is continuous at the engage instant
                self.anchor_socket = current_reference
                self._last_reference = current_reference
            return None
        if not self.clutch:
            # indexing: rebase so disengaged motion does not move the follower
            self.anchor_device = filtered
            if self._last_reference is not None:
                self.anchor_socket = self._last_reference
            return None
        ref = map_motion(filtered, self.anchor_device, self.anchor_socket,
                         self.mapping)
        self._last_reference = ref
        return ref
