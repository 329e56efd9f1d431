"""Rigid-body poses, wrenches, twists and timed trajectories.

These are the value types every other module trades in. All of them are
immutable after construction and safe to share across threads.
"""

from dataclasses import dataclass
from math import isfinite

from boltsim._speedup import kernels as _k
from boltsim.errors import NonPositiveDuration

_QUAT_TOL = 1e-9


def _vec3(v):
    x, y, z = (float(c) for c in v)
    if not (isfinite(x) and isfinite(y) and isfinite(z)):
        raise ValueError(f"non-finite vector {v!r}")
    return (x, y, z)


@dataclass(frozen=True)
class Pose:
    """Position (m) plus unit quaternion (w, x, y, z).

    The quaternion is renormalized and sign-canonicalized (w >= 0) on
    construction, so two Poses describing the same rigid placement compare
    equal componentwise.
    """

    position: tuple = (0.0, 0.0, 0.0)
    orientation: tuple = (1.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        # fast path: float tuples straight from the kernels
        p = self.position
        if not (type(p) is tuple and len(p) == 3
                and type(p[0]) is float and type(p[1]) is float
                and type(p[2]) is float):
            p = _vec3(p)
            object.__setattr__(self, "position", p)
        if not (isfinite(p[0]) and isfinite(p[1]) and isfinite(p[2])):
            raise ValueError(f"non-finite position {p!r}")
        q = self.orientation
        if not (type(q) is tuple and len(q) == 4
                and type(q[0]) is float and type(q[1]) is float
                and type(q[2]) is float and type(q[3]) is float):
            q = tuple(float(c) for c in q)
        if len(q) != 4 or not (isfinite(q[0]) and isfinite(q[1])
                               and isfinite(q[2]) and isfinite(q[3])):
            raise ValueError(f"bad quaternion {self.orientation!r}")
        n = q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]
        if n < 1e-12:
            raise ValueError("zero quaternion")
        object.__setattr__(self, "orientation", _k.quat_canonical(q))

    @staticmethod
    def identity():
        return Pose()

    @staticmethod
    def from_translation(x, y, z):
        return Pose(position=(x, y, z))

    @staticmethod
    def from_axis_angle(axis, angle):
        ax, ay, az = _vec3(axis)
        n = (ax * ax + ay * ay + az * az) ** 0.5
        return Pose(orientation=_k.quat_from_rotvec(
            (ax / n * angle, ay / n * angle, az / n * angle)))

    @staticmethod
    def from_flat(flat):
        """[x, y, z, qw, qx, qy, qz] as used on the wire and in scenario files."""
        if len(flat) != 7:
            raise ValueError(f"flat pose needs 7 values, got {len(flat)}")
        return Pose(position=tuple(flat[:3]), orientation=tuple(flat[3:]))

    def to_flat(self):
        return list(self.position) + list(self.orientation)

    def inverse(self):
        p, q = _k.pose_inverse(self.position, self.orientation)
        return Pose(position=p, orientation=q)

    def rotate(self, v):
        return _k.quat_rotate(self.orientation, _vec3(v))

    def transform(self, v):
        rx, ry, rz = _k.quat_rotate(self.orientation, _vec3(v))
        px, py, pz = self.position
        return (px + rx, py + ry, pz + rz)

    def z_axis(self):
        return _k.quat_rotate(self.orientation, (0.0, 0.0, 1.0))

    def __matmul__(self, other):
        return compose(self, other)


def _coerce3(obj, attr):
    v = getattr(obj, attr)
    if not (type(v) is tuple and len(v) == 3 and type(v[0]) is float
            and type(v[1]) is float and type(v[2]) is float):
        v = _vec3(v)
        object.__setattr__(obj, attr, v)
    if not (isfinite(v[0]) and isfinite(v[1]) and isfinite(v[2])):
        raise ValueError(f"non-finite {attr} {v!r}")


@dataclass(frozen=True)
class Twist:
    """Linear (m/s) and angular (rad/s) velocity."""

    linear: tuple = (0.0, 0.0, 0.0)
    angular: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        _coerce3(self, "linear")
        _coerce3(self, "angular")


@dataclass(frozen=True)
class Wrench:
    """Force (N) and torque (N m)."""

    force: tuple = (0.0, 0.0, 0.0)
    torque: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        _coerce3(self, "force")
        _coerce3(self, "torque")

    @staticmethod
    def from_flat(flat):
        return Wrench(force=tuple(flat[:3]), torque=tuple(flat[3:6]))

    def to_flat(self):
        return list(self.force) + list(self.torque)

    def force_norm(self):
        fx, fy, fz = self.force
        return (fx * fx + fy * fy + fz * fz) ** 0.5

    def torque_norm(self):
        tx, ty, tz = self.torque
        return (tx * tx + ty * ty + tz * tz) ** 0.5


@dataclass(frozen=True)
class TimedTrajectory:
    """Ordered (t, Pose) samples; t strictly increasing from 0."""

    samples: tuple

    def __post_init__(self):
        samples = tuple((float(t), p) for t, p in self.samples)
        if len(samples) < 2:
            raise ValueError("trajectory needs at least 2 samples")
        if samples[0][0] != 0.0:
            raise ValueError("trajectory must start at t=0")
        for (t0, _), (t1, _) in zip(samples, samples[1:]):
            if not t1 > t0:
                raise ValueError("timestamps must be strictly increasing")
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self):
        return self.samples[-1][0]

    @property
    def start(self):
        return self.samples[0][1]

    @property
    def end(self):
        return self.samples[-1][1]


def compose(a: Pose, b: Pose) -> Pose:
    """a then b: b's frame expressed through a."""
    p, q = _k.pose_compose(a.position, a.orientation, b.position, b.orientation)
    return Pose(position=p, orientation=q)


def pose_error(target: Pose, current: Pose):
    """(position error, orientation error as rotation vector, angle in [0, pi])."""
    tp, cp = target.position, current.position
    dp = (tp[0] - cp[0], tp[1] - cp[1], tp[2] - cp[2])
    rel = _k.quat_mul(target.orientation, _k.quat_conjugate(current.orientation))
    return dp, _k.quat_rotvec(rel)


def orientation_angle(a: Pose, b: Pose) -> float:
    return _k.quat_angle(a.orientation, b.orientation)


def interpolate(a: Pose, b: Pose, u: float) -> Pose:
    """Linear position blend + shorter-arc slerp; u in [0, 1]."""
    pa, pb = a.position, b.position
    p = (pa[0] + (pb[0] - pa[0]) * u,
         pa[1] + (pb[1] - pa[1]) * u,
         pa[2] + (pb[2] - pa[2]) * u)
    return Pose(position=p, orientation=_k.quat_slerp(a.orientation, b.orientation, u))


def sample(traj: TimedTrajectory, t: float) -> Pose:
    """Pose at time t; clamps to the endpoints (hold semantics past the end)."""
    samples = traj.samples
    if t <= 0.0:
        return samples[0][1]
    if t >= traj.duration:
        return samples[-1][1]
    # bisect over timestamps
    lo, hi = 0, len(samples) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if samples[mid][0] <= t:
            lo = mid
        else:
            hi = mid
    t0, p0 = samples[lo]
    t1, p1 = samples[hi]
    return interpolate(p0, p1, (t - t0) / (t1 - t0))


def linear_trajectory(start: Pose, goal: Pose, duration: float,
                      n_samples: int = 2) -> TimedTrajectory:
    """Uniformly timed straight-line interpolation from start to goal."""
    if not duration > 0.0:
        raise NonPositiveDuration(f"duration {duration!r} must be > 0")
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    pts = []
    for i in range(n_samples):
        u = i / (n_samples - 1)
        pts.append((u * duration, interpolate(start, goal, u)))
    return TimedTrajectory(samples=tuple(pts))
