"""Pure-Python scalar kernels for the 500 Hz control loop.

Quaternion algebra, DH chains, damped-least-squares IK, socket/bolt
contact evaluation and the admittance integrator. All values are plain
floats and tuples; no numpy in the hot path.

``boltsim._speedup._native`` is the compiled twin of this module. The two
backends must stay expression-for-expression identical (same operation
order, same libm calls) so that runs are bit-reproducible regardless of
which one is loaded. The test suite enforces exact agreement.
"""

from math import acos, atan2, cos, floor, sin, sqrt

_EPS = 1e-12


# ---------------------------------------------------------------------------
# quaternions (w, x, y, z) and 3-vectors (x, y, z)

def quat_normalize(q):
    w, x, y, z = q
    n = sqrt(w * w + x * x + y * y + z * z)
    return (w / n, x / n, y / n, z / n)


def quat_canonical(q):
    """Unit norm with w >= 0 (double-cover canonical form)."""
    w, x, y, z = q
    n = sqrt(w * w + x * x + y * y + z * z)
    if w < 0.0:
        n = -n
    return (w / n, x / n, y / n, z / n)


def quat_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_conjugate(q):
    w, x, y, z = q
    return (w, -x, -y, -z)


def quat_rotate(q, v):
    """Rotate vector v by unit quaternion q."""
    w, x, y, z = q
    vx, vy, vz = v
    # t = 2 q_vec x v
    tx = 2.0 * (y * vz - z * vy)
    ty = 2.0 * (z * vx - x * vz)
    tz = 2.0 * (x * vy - y * vx)
    # v' = v + w t + q_vec x t
    return (
        vx + w * tx + (y * tz - z * ty),
        vy + w * ty + (z * tx - x * tz),
        vz + w * tz + (x * ty - y * tx),
    )


def quat_from_rotvec(v):
    vx, vy, vz = v
    angle = sqrt(vx * vx + vy * vy + vz * vz)
    if angle < _EPS:
        return quat_normalize((1.0, 0.5 * vx, 0.5 * vy, 0.5 * vz))
    half = 0.5 * angle
    s = sin(half) / angle
    return (cos(half), vx * s, vy * s, vz * s)


def quat_rotvec(q):
    """Rotation vector (axis * angle) of q, angle in [0, pi]."""
    w, x, y, z = q
    if w < 0.0:
        w, x, y, z = -w, -x, -y, -z
    s = sqrt(x * x + y * y + z * z)
    if s < _EPS:
        return (2.0 * x, 2.0 * y, 2.0 * z)
    scale = 2.0 * atan2(s, w) / s
    return (x * scale, y * scale, z * scale)


def quat_angle(a, b):
    """Relative rotation angle between two unit quaternions, in [0, pi]."""
    d = a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
    if d < 0.0:
        d = -d
    if d > 1.0:
        d = 1.0
    return 2.0 * acos(d)


def quat_slerp(a, b, u):
    """Spherical interpolation along the shorter arc."""
    bw, bx, by, bz = b
    d = a[0] * bw + a[1] * bx + a[2] * by + a[3] * bz
    if d < 0.0:
        bw, bx, by, bz = -bw, -bx, -by, -bz
        d = -d
    if d > 0.9999995:
        # near-parallel: linear blend, renormalized
        return quat_normalize((
            a[0] + (bw - a[0]) * u,
            a[1] + (bx - a[1]) * u,
            a[2] + (by - a[2]) * u,
            a[3] + (bz - a[3]) * u,
        ))
    theta = acos(d)
    st = sin(theta)
    ka = sin((1.0 - u) * theta) / st
    kb = sin(u * theta) / st
    return (
        ka * a[0] + kb * bw,
        ka * a[1] + kb * bx,
        ka * a[2] + kb * by,
        ka * a[3] + kb * bz,
    )


def pose_compose(pa, qa, pb, qb):
    px, py, pz = quat_rotate(qa, pb)
    return (
        (pa[0] + px, pa[1] + py, pa[2] + pz),
        quat_mul(qa, qb),
    )


def pose_inverse(p, q):
    qi = quat_conjugate(q)
    px, py, pz = quat_rotate(qi, p)
    return ((-px, -py, -pz), qi)


# ---------------------------------------------------------------------------
# serial chain kinematics (classic DH: RotZ(theta) TransZ(d) TransX(a) RotX(alpha))

def fk_frames(dh, joints):
    """Walk the DH chain.

    dh is ((a, d, alpha, theta_offset) * n). Returns (origins, axes, p, q)
    where origins has n+1 entries (base .. flange), axes[i] is the world
    z-axis joint i rotates about, and (p, q) is the flange pose.
    """
    p = (0.0, 0.0, 0.0)
    q = (1.0, 0.0, 0.0, 0.0)
    origins = [p]
    axes = []
    for i in range(len(joints)):
        a, d, alpha, off = dh[i]
        axes.append(quat_rotate(q, (0.0, 0.0, 1.0)))
        theta = joints[i] + off
        ct = cos(theta)
        st = sin(theta)
        c2t = cos(0.5 * theta)
        s2t = sin(0.5 * theta)
        c2a = cos(0.5 * alpha)
        s2a = sin(0.5 * alpha)
        # Rz(theta) Tz(d) Tx(a) Rx(alpha) as a pose
        step_p = (a * ct, a * st, d)
        step_q = (c2t * c2a, c2t * s2a, s2t * s2a, s2t * c2a)
        p, q = pose_compose(p, q, step_p, step_q)
        origins.append(p)
    return tuple(origins), tuple(axes), p, q


def fk_pose(dh, joints, tool_p, tool_q):
    _, _, p, q = fk_frames(dh, joints)
    return pose_compose(p, q, tool_p, tool_q)


def _solve_spd6(A, b):
    """Solve A x = b for symmetric positive definite 6x6 A (Cholesky)."""
    L = [[0.0] * 6 for _ in range(6)]
    for i in range(6):
        for j in range(i + 1):
            s = A[i][j]
            for k in range(j):
                s -= L[i][k] * L[j][k]
            if i == j:
                L[i][j] = sqrt(s)
            else:
                L[i][j] = s / L[j][j]
    y = [0.0] * 6
    for i in range(6):
        s = b[i]
        for k in range(i):
            s -= L[i][k] * y[k]
        y[i] = s / L[i][i]
    x = [0.0] * 6
    for i in range(5, -1, -1):
        s = y[i]
        for k in range(i + 1, 6):
            s -= L[k][i] * x[k]
        x[i] = s / L[i][i]
    return x


def ik_damped_ls(dh, tool_p, tool_q, target_p, target_q, seed, lo, hi,
                 max_iters, tol_pos, tol_rot, damping, max_step):
    """Damped-least-squares IK for a 6R chain.

    Joint limits are enforced by clamping after every update. Returns
    (joints, iterations, pos_err, rot_err); the caller decides whether the
    residual errors count as convergence.
    """
    q = list(seed)
    lam2 = damping * damping
    it = 0
    while True:
        origins, axes, fp, fq = fk_frames(dh, q)
        tip_p, tip_q = pose_compose(fp, fq, tool_p, tool_q)
        ex = target_p[0] - tip_p[0]
        ey = target_p[1] - tip_p[1]
        ez = target_p[2] - tip_p[2]
        rx, ry, rz = quat_rotvec(quat_mul(target_q, quat_conjugate(tip_q)))
        pos_err = sqrt(ex * ex + ey * ey + ez * ez)
        rot_err = sqrt(rx * rx + ry * ry + rz * rz)
        if (pos_err <= tol_pos and rot_err <= tol_rot) or it >= max_iters:
            return tuple(q), it, pos_err, rot_err
        it += 1
        # geometric jacobian, columns z_i x (p_tip - o_i) ; z_i
        J = [[0.0] * 6 for _ in range(6)]
        for c in range(6):
            zx, zy, zz = axes[c]
            ox, oy, oz = origins[c]
            dx = tip_p[0] - ox
            dy = tip_p[1] - oy
            dz = tip_p[2] - oz
            J[0][c] = zy * dz - zz * dy
            J[1][c] = zz * dx - zx * dz
            J[2][c] = zx * dy - zy * dx
            J[3][c] = zx
            J[4][c] = zy
            J[5][c] = zz
        A = [[0.0] * 6 for _ in range(6)]
        for i in range(6):
            for j in range(i + 1):
                s = 0.0
                for k in range(6):
                    s += J[i][k] * J[j][k]
                if i == j:
                    s += lam2
                A[i][j] = s
                A[j][i] = s
        e = (ex, ey, ez, rx, ry, rz)
        y = _solve_spd6(A, e)
        for c in range(6):
            dq = 0.0
            for r in range(6):
                dq += J[r][c] * y[r]
            if dq > max_step:
                dq = max_step
            elif dq < -max_step:
                dq = -max_step
            v = q[c] + dq
            if v < lo[c]:
                v = lo[c]
            elif v > hi[c]:
                v = hi[c]
            q[c] = v


# ---------------------------------------------------------------------------
# socket / bolt contact

def contact_eval(sp, sq, bp, bq, normal_k, normal_c, lateral_k,
                 capture_radius, capture_angle, plane_radius, prev_pen, dt):
    """Penalty contact between socket tip and the bolt head / flange plane.

    Returns (force_world, engagement_depth, penetration, captured).
    Inside the capture cone the socket slides over the head: axial travel
    becomes engagement depth and a lateral recentering force applies.
    Outside it, axial overlap within the (finite) flange extent is a
    collision with the plane; past plane_radius there is nothing to hit.
    """
    zbx, zby, zbz = quat_rotate(bq, (0.0, 0.0, 1.0))
    rx = sp[0] - bp[0]
    ry = sp[1] - bp[1]
    rz = sp[2] - bp[2]
    axial = rx * zbx + ry * zby + rz * zbz
    lx = rx - axial * zbx
    ly = ry - axial * zby
    lz = rz - axial * zbz
    lat = sqrt(lx * lx + ly * ly + lz * lz)
    zsx, zsy, zsz = quat_rotate(sq, (0.0, 0.0, 1.0))
    d = zsx * zbx + zsy * zby + zsz * zbz
    if d > 1.0:
        d = 1.0
    elif d < -1.0:
        d = -1.0
    tilt = acos(d)
    overlap = -axial
    if overlap <= 0.0 or lat > plane_radius:
        return (0.0, 0.0, 0.0), 0.0, 0.0, False
    if lat <= capture_radius and tilt <= capture_angle:
        # engaged: free axial slide, lateral spring recenters the socket
        return (-lateral_k * lx, -lateral_k * ly, -lateral_k * lz), overlap, 0.0, True
    rate = (overlap - prev_pen) / dt
    fn = normal_k * overlap + normal_c * rate
    if fn < 0.0:
        fn = 0.0
    return (fn * zbx, fn * zby, fn * zbz), 0.0, overlap, False


def yaw_about_axis(bq, sq):
    """Angle of the socket x-axis around the bolt z-axis, in (-pi, pi]."""
    rel = quat_mul(quat_conjugate(bq), sq)
    xx, xy, _ = quat_rotate(rel, (1.0, 0.0, 0.0))
    return atan2(xy, xx)


def wrap_angle(d):
    """Wrap to (-pi, pi] identically in C and Python (floor, not fmod)."""
    two_pi = 6.283185307179586
    return d - two_pi * floor((d + 3.141592653589793) / two_pi)


# ---------------------------------------------------------------------------
# admittance integrator (semi-implicit Euler, per-axis diagonal law)

def admittance_step(e, v, f, m, d, k, dt):
    """One step of M ddx + D dx + K x = F per axis.

    e, v are the 6-D offset from the reference and its rate; returns the
    updated pair. Velocity first, then position (dissipative for D > 0).
    """
    e_out = []
    v_out = []
    for i in range(6):
        a = (f[i] - d[i] * v[i] - k[i] * e[i]) / m[i]
        vi = v[i] + a * dt
        v_out.append(vi)
        e_out.append(e[i] + vi * dt)
    return tuple(e_out), tuple(v_out)


# ---------------------------------------------------------------------------
# capsule support for the self-collision test

def segment_distance(p0, p1, q0, q1):
    """Minimum distance between segments [p0,p1] and [q0,q1]."""
    ux = p1[0] - p0[0]
    uy = p1[1] - p0[1]
    uz = p1[2] - p0[2]
    vx = q1[0] - q0[0]
    vy = q1[1] - q0[1]
    vz = q1[2] - q0[2]
    wx = p0[0] - q0[0]
    wy = p0[1] - q0[1]
    wz = p0[2] - q0[2]
    a = ux * ux + uy * uy + uz * uz
    b = ux * vx + uy * vy + uz * vz
    c = vx * vx + vy * vy + vz * vz
    d = ux * wx + uy * wy + uz * wz
    e = vx * wx + vy * wy + vz * wz
    den = a * c - b * b
    if den > _EPS:
        s = (b * e - c * d) / den
    else:
        s = 0.0
    if s < 0.0:
        s = 0.0
    elif s > 1.0:
        s = 1.0
    if c > _EPS:
        t = (b * s + e) / c
    else:
        t = 0.0
    if t < 0.0:
        t = 0.0
        if a > _EPS:
            s = -d / a
            if s < 0.0:
                s = 0.0
            elif s > 1.0:
                s = 1.0
    elif t > 1.0:
        t = 1.0
        if a > _EPS:
            s = (b - d) / a
            if s < 0.0:
                s = 0.0
            elif s > 1.0:
                s = 1.0
    dx = wx + s * ux - t * vx
    dy = wy + s * uy - t * vy
    dz = wz + s * uz - t * vz
    return sqrt(dx * dx + dy * dy + dz * dz)
