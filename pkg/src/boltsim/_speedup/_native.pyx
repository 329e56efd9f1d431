# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of boltsim._speedup._pure.

Every function mirrors the pure module expression-for-expression (same
operation order, same libm calls) so both backends produce bit-identical
doubles. Compiled with -ffp-contract=off; do not enable fast-math.
"""

from libc.math cimport acos, atan2, cos, floor, sin, sqrt

cdef double _EPS = 1e-12


def quat_normalize(q):
    cdef double w = q[0], x = q[1], y = q[2], z = q[3]
    cdef double n = sqrt(w * w + x * x + y * y + z * z)
    return (w / n, x / n, y / n, z / n)


def quat_canonical(q):
    """Unit norm with w >= 0 (double-cover canonical form)."""
    cdef double w = q[0], x = q[1], y = q[2], z = q[3]
    cdef double n = sqrt(w * w + x * x + y * y + z * z)
    if w < 0.0:
        n = -n
    return (w / n, x / n, y / n, z / n)


cdef inline void _qmul(double aw, double ax, double ay, double az,
                       double bw, double bx, double by, double bz,
                       double* o) nogil:
    o[0] = aw * bw - ax * bx - ay * by - az * bz
    o[1] = aw * bx + ax * bw + ay * bz - az * by
    o[2] = aw * by - ax * bz + ay * bw + az * bx
    o[3] = aw * bz + ax * by - ay * bx + az * bw


cdef inline void _qrot(double w, double x, double y, double z,
                       double vx, double vy, double vz, double* o) nogil:
    cdef double tx = 2.0 * (y * vz - z * vy)
    cdef double ty = 2.0 * (z * vx - x * vz)
    cdef double tz = 2.0 * (x * vy - y * vx)
    o[0] = vx + w * tx + (y * tz - z * ty)
    o[1] = vy + w * ty + (z * tx - x * tz)
    o[2] = vz + w * tz + (x * ty - y * tx)


cdef inline void _qrotvec(double w, double x, double y, double z,
                          double* o) nogil:
    cdef double s, scale
    if w < 0.0:
        w = -w; x = -x; y = -y; z = -z
    s = sqrt(x * x + y * y + z * z)
    if s < _EPS:
        o[0] = 2.0 * x; o[1] = 2.0 * y; o[2] = 2.0 * z
        return
    scale = 2.0 * atan2(s, w) / s
    o[0] = x * scale; o[1] = y * scale; o[2] = z * scale


def quat_mul(a, b):
    cdef double o[4]
    _qmul(a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3], o)
    return (o[0], o[1], o[2], o[3])


def quat_conjugate(q):
    return (q[0], -q[1], -q[2], -q[3])


def quat_rotate(q, v):
    """Rotate vector v by unit quaternion q."""
    cdef double o[3]
    _qrot(q[0], q[1], q[2], q[3], v[0], v[1], v[2], o)
    return (o[0], o[1], o[2])


def quat_from_rotvec(v):
    cdef double vx = v[0], vy = v[1], vz = v[2]
    cdef double angle = sqrt(vx * vx + vy * vy + vz * vz)
    cdef double half, s
    if angle < _EPS:
        return quat_normalize((1.0, 0.5 * vx, 0.5 * vy, 0.5 * vz))
    half = 0.5 * angle
    s = sin(half) / angle
    return (cos(half), vx * s, vy * s, vz * s)


def quat_rotvec(q):
    """Rotation vector (axis * angle) of q, angle in [0, pi]."""
    cdef double o[3]
    _qrotvec(q[0], q[1], q[2], q[3], o)
    return (o[0], o[1], o[2])


def quat_angle(a, b):
    """Relative rotation angle between two unit quaternions, in [0, pi]."""
    cdef double d = a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
    if d < 0.0:
        d = -d
    if d > 1.0:
        d = 1.0
    return 2.0 * acos(d)


def quat_slerp(a, b, u_in):
    """Spherical interpolation along the shorter arc."""
    cdef double u = u_in
    cdef double bw = b[0], bx = b[1], by = b[2], bz = b[3]
    cdef double d = a[0] * bw + a[1] * bx + a[2] * by + a[3] * bz
    cdef double theta, st, ka, kb
    if d < 0.0:
        bw = -bw; bx = -bx; by = -by; bz = -bz
        d = -d
    if d > 0.9999995:
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
    cdef double r[3]
    cdef double o[4]
    _qrot(qa[0], qa[1], qa[2], qa[3], pb[0], pb[1], pb[2], r)
    _qmul(qa[0], qa[1], qa[2], qa[3], qb[0], qb[1], qb[2], qb[3], o)
    return ((pa[0] + r[0], pa[1] + r[1], pa[2] + r[2]),
            (o[0], o[1], o[2], o[3]))


def pose_inverse(p, q):
    cdef double w = q[0], x = -q[1], y = -q[2], z = -q[3]
    cdef double r[3]
    _qrot(w, x, y, z, p[0], p[1], p[2], r)
    return ((-r[0], -r[1], -r[2]), (w, x, y, z))


cdef void _fk(double* dh, double* joints, int n,
              double* origins, double* axes, double* pq) nogil:
    """origins: (n+1)*3, axes: n*3, pq: [px py pz qw qx qy qz] flange."""
    cdef double px = 0.0, py = 0.0, pz = 0.0
    cdef double qw = 1.0, qx = 0.0, qy = 0.0, qz = 0.0
    cdef double a, d, alpha, off, theta, ct, st, c2t, s2t, c2a, s2a
    cdef double sp[3]
    cdef double sq[4]
    cdef double r[3]
    cdef double o[4]
    cdef int i
    origins[0] = px; origins[1] = py; origins[2] = pz
    for i in range(n):
        a = dh[4 * i]; d = dh[4 * i + 1]
        alpha = dh[4 * i + 2]; off = dh[4 * i + 3]
        _qrot(qw, qx, qy, qz, 0.0, 0.0, 1.0, r)
        axes[3 * i] = r[0]; axes[3 * i + 1] = r[1]; axes[3 * i + 2] = r[2]
        theta = joints[i] + off
        ct = cos(theta)
        st = sin(theta)
        c2t = cos(0.5 * theta)
        s2t = sin(0.5 * theta)
        c2a = cos(0.5 * alpha)
        s2a = sin(0.5 * alpha)
        sp[0] = a * ct; sp[1] = a * st; sp[2] = d
        sq[0] = c2t * c2a; sq[1] = c2t * s2a; sq[2] = s2t * s2a; sq[3] = s2t * c2a
        _qrot(qw, qx, qy, qz, sp[0], sp[1], sp[2], r)
        _qmul(qw, qx, qy, qz, sq[0], sq[1], sq[2], sq[3], o)
        px = px + r[0]; py = py + r[1]; pz = pz + r[2]
        qw = o[0]; qx = o[1]; qy = o[2]; qz = o[3]
        origins[3 * (i + 1)] = px
        origins[3 * (i + 1) + 1] = py
        origins[3 * (i + 1) + 2] = pz
    pq[0] = px; pq[1] = py; pq[2] = pz
    pq[3] = qw; pq[4] = qx; pq[5] = qy; pq[6] = qz


cdef void _unpack_dh(dh, double* out, int n):
    cdef int i
    for i in range(n):
        row = dh[i]
        out[4 * i] = row[0]
        out[4 * i + 1] = row[1]
        out[4 * i + 2] = row[2]
        out[4 * i + 3] = row[3]


def fk_frames(dh, joints):
    """Walk the DH chain; see the pure twin for the contract."""
    cdef int n = len(joints)
    cdef double cdh[24]
    cdef double q[6]
    cdef double origins[21]
    cdef double axes[18]
    cdef double pq[7]
    cdef int i
    _unpack_dh(dh, cdh, n)
    for i in range(n):
        q[i] = joints[i]
    _fk(cdh, q, n, origins, axes, pq)
    return (
        tuple((origins[3 * i], origins[3 * i + 1], origins[3 * i + 2])
              for i in range(n + 1)),
        tuple((axes[3 * i], axes[3 * i + 1], axes[3 * i + 2])
              for i in range(n)),
        (pq[0], pq[1], pq[2]),
        (pq[3], pq[4], pq[5], pq[6]),
    )


def fk_pose(dh, joints, tool_p, tool_q):
    cdef int n = len(joints)
    cdef double cdh[24]
    cdef double q[6]
    cdef double origins[21]
    cdef double axes[18]
    cdef double pq[7]
    cdef double r[3]
    cdef double o[4]
    cdef int i
    _unpack_dh(dh, cdh, n)
    for i in range(n):
        q[i] = joints[i]
    _fk(cdh, q, n, origins, axes, pq)
    _qrot(pq[3], pq[4], pq[5], pq[6], tool_p[0], tool_p[1], tool_p[2], r)
    _qmul(pq[3], pq[4], pq[5], pq[6], tool_q[0], tool_q[1], tool_q[2], tool_q[3], o)
    return ((pq[0] + r[0], pq[1] + r[1], pq[2] + r[2]),
            (o[0], o[1], o[2], o[3]))


cdef bint _solve_spd6(double* A, double* b, double* x) nogil:
    """Cholesky solve of a 6x6 SPD system, row-major A."""
    cdef double L[36]
    cdef double y[6]
    cdef double s
    cdef int i, j, k
    for i in range(36):
        L[i] = 0.0
    for i in range(6):
        for j in range(i + 1):
            s = A[6 * i + j]
            for k in range(j):
                s -= L[6 * i + k] * L[6 * j + k]
            if i == j:
                L[6 * i + j] = sqrt(s)
            else:
                L[6 * i + j] = s / L[6 * j + j]
    for i in range(6):
        s = b[i]
        for k in range(i):
            s -= L[6 * i + k] * y[k]
        y[i] = s / L[6 * i + i]
    for i in range(5, -1, -1):
        s = y[i]
        for k in range(i + 1, 6):
            s -= L[6 * k + i] * x[k]
        x[i] = s / L[6 * i + i]
    return True


def ik_damped_ls(dh, tool_p, tool_q, target_p, target_q, seed, lo, hi,
                 max_iters, tol_pos, tol_rot, damping, max_step):
    """Damped-least-squares IK for a 6R chain; see the pure twin."""
    cdef int n = len(seed)
    cdef double cdh[24]
    cdef double q[6]
    cdef double clo[6]
    cdef double chi[6]
    cdef double origins[21]
    cdef double axes[18]
    cdef double pq[7]
    cdef double tp[3]
    cdef double tq[4]
    cdef double r[3]
    cdef double o[4]
    cdef double rel[4]
    cdef double rv[3]
    cdef double J[36]
    cdef double A[36]
    cdef double e[6]
    cdef double y[6]
    cdef double ex, ey, ez, pos_err, rot_err, s, dq, v
    cdef double c_tol_pos = tol_pos, c_tol_rot = tol_rot
    cdef double c_damping = damping, c_max_step = max_step
    cdef double lam2 = c_damping * c_damping
    cdef double tpx = tool_p[0], tpy = tool_p[1], tpz = tool_p[2]
    cdef double tqw = tool_q[0], tqx = tool_q[1], tqy = tool_q[2], tqz = tool_q[3]
    cdef double gx = target_p[0], gy = target_p[1], gz = target_p[2]
    cdef double gqw = target_q[0], gqx = target_q[1], gqy = target_q[2], gqz = target_q[3]
    cdef int c_max_iters = max_iters
    cdef int it = 0, i, j, k, c
    cdef double zx, zy, zz, ox, oy, oz, dx, dy, dz
    _unpack_dh(dh, cdh, n)
    for i in range(n):
        q[i] = seed[i]
        clo[i] = lo[i]
        chi[i] = hi[i]
    while True:
        _fk(cdh, q, n, origins, axes, pq)
        _qrot(pq[3], pq[4], pq[5], pq[6], tpx, tpy, tpz, r)
        _qmul(pq[3], pq[4], pq[5], pq[6], tqw, tqx, tqy, tqz, o)
        tp[0] = pq[0] + r[0]; tp[1] = pq[1] + r[1]; tp[2] = pq[2] + r[2]
        tq[0] = o[0]; tq[1] = o[1]; tq[2] = o[2]; tq[3] = o[3]
        ex = gx - tp[0]
        ey = gy - tp[1]
        ez = gz - tp[2]
        _qmul(gqw, gqx, gqy, gqz, tq[0], -tq[1], -tq[2], -tq[3], rel)
        _qrotvec(rel[0], rel[1], rel[2], rel[3], rv)
        pos_err = sqrt(ex * ex + ey * ey + ez * ez)
        rot_err = sqrt(rv[0] * rv[0] + rv[1] * rv[1] + rv[2] * rv[2])
        if (pos_err <= c_tol_pos and rot_err <= c_tol_rot) or it >= c_max_iters:
            return ((q[0], q[1], q[2], q[3], q[4], q[5]), it, pos_err, rot_err)
        it += 1
        for c in range(6):
            zx = axes[3 * c]; zy = axes[3 * c + 1]; zz = axes[3 * c + 2]
            ox = origins[3 * c]; oy = origins[3 * c + 1]; oz = origins[3 * c + 2]
            dx = tp[0] - ox
            dy = tp[1] - oy
            dz = tp[2] - oz
            J[6 * 0 + c] = zy * dz - zz * dy
            J[6 * 1 + c] = zz * dx - zx * dz
            J[6 * 2 + c] = zx * dy - zy * dx
            J[6 * 3 + c] = zx
            J[6 * 4 + c] = zy
            J[6 * 5 + c] = zz
        for i in range(6):
            for j in range(i + 1):
                s = 0.0
                for k in range(6):
                    s += J[6 * i + k] * J[6 * j + k]
                if i == j:
                    s += lam2
                A[6 * i + j] = s
                A[6 * j + i] = s
        e[0] = ex; e[1] = ey; e[2] = ez
        e[3] = rv[0]; e[4] = rv[1]; e[5] = rv[2]
        _solve_spd6(A, e, y)
        for c in range(6):
            dq = 0.0
            for i in range(6):
                dq += J[6 * i + c] * y[i]
            if dq > c_max_step:
                dq = c_max_step
            elif dq < -c_max_step:
                dq = -c_max_step
            v = q[c] + dq
            if v < clo[c]:
                v = clo[c]
            elif v > chi[c]:
                v = chi[c]
            q[c] = v


def contact_eval(sp, sq, bp, bq, normal_k, normal_c, lateral_k,
                 capture_radius, capture_angle, plane_radius, prev_pen, dt):
    """Penalty contact between socket tip and the bolt head / flange plane;
    see the pure twin for the contract."""
    cdef double zb[3]
    cdef double zs[3]
    _qrot(bq[0], bq[1], bq[2], bq[3], 0.0, 0.0, 1.0, zb)
    cdef double rx = sp[0] - bp[0]
    cdef double ry = sp[1] - bp[1]
    cdef double rz = sp[2] - bp[2]
    cdef double axial = rx * zb[0] + ry * zb[1] + rz * zb[2]
    cdef double lx = rx - axial * zb[0]
    cdef double ly = ry - axial * zb[1]
    cdef double lz = rz - axial * zb[2]
    cdef double lat = sqrt(lx * lx + ly * ly + lz * lz)
    _qrot(sq[0], sq[1], sq[2], sq[3], 0.0, 0.0, 1.0, zs)
    cdef double d = zs[0] * zb[0] + zs[1] * zb[1] + zs[2] * zb[2]
    if d > 1.0:
        d = 1.0
    elif d < -1.0:
        d = -1.0
    cdef double tilt = acos(d)
    cdef double overlap = -axial
    cdef double c_lateral_k = lateral_k, c_normal_k = normal_k
    cdef double c_normal_c = normal_c, c_prev = prev_pen, c_dt = dt
    cdef double rate, fn
    if overlap <= 0.0 or lat > <double> plane_radius:
        return (0.0, 0.0, 0.0), 0.0, 0.0, False
    if lat <= <double> capture_radius and tilt <= <double> capture_angle:
        return ((-c_lateral_k * lx, -c_lateral_k * ly, -c_lateral_k * lz),
                overlap, 0.0, True)
    rate = (overlap - c_prev) / c_dt
    fn = c_normal_k * overlap + c_normal_c * rate
    if fn < 0.0:
        fn = 0.0
    return ((fn * zb[0], fn * zb[1], fn * zb[2]), 0.0, overlap, False)


def yaw_about_axis(bq, sq):
    """Angle of the socket x-axis around the bolt z-axis, in (-pi, pi]."""
    cdef double rel[4]
    cdef double xv[3]
    _qmul(bq[0], -bq[1], -bq[2], -bq[3], sq[0], sq[1], sq[2], sq[3], rel)
    _qrot(rel[0], rel[1], rel[2], rel[3], 1.0, 0.0, 0.0, xv)
    return atan2(xv[1], xv[0])


def wrap_angle(d):
    """Wrap to (-pi, pi] identically in C and Python (floor, not fmod)."""
    cdef double two_pi = 6.283185307179586
    cdef double cd = d
    return cd - two_pi * floor((cd + 3.141592653589793) / two_pi)


def admittance_step(e, v, f, m, d, k, dt):
    """One step of M ddx + D dx + K x = F per axis; see the pure twin."""
    cdef double ce[6]
    cdef double cv[6]
    cdef double a
    cdef double c_dt = dt
    cdef int i
    for i in range(6):
        a = (<double> f[i] - <double> d[i] * <double> v[i]
             - <double> k[i] * <double> e[i]) / <double> m[i]
        cv[i] = <double> v[i] + a * c_dt
        ce[i] = <double> e[i] + cv[i] * c_dt
    return ((ce[0], ce[1], ce[2], ce[3], ce[4], ce[5]),
            (cv[0], cv[1], cv[2], cv[3], cv[4], cv[5]))


def segment_distance(p0, p1, q0, q1):
    """Minimum distance between segments [p0,p1] and [q0,q1]."""
    cdef double ux = p1[0] - p0[0]
    cdef double uy = p1[1] - p0[1]
    cdef double uz = p1[2] - p0[2]
    cdef double vx = q1[0] - q0[0]
    cdef double vy = q1[1] - q0[1]
    cdef double vz = q1[2] - q0[2]
    cdef double wx = p0[0] - q0[0]
    cdef double wy = p0[1] - q0[1]
    cdef double wz = p0[2] - q0[2]
    cdef double a = ux * ux + uy * uy + uz * uz
    cdef double b = ux * vx + uy * vy + uz * vz
    cdef double c = vx * vx + vy * vy + vz * vz
    cdef double d = ux * wx + uy * wy + uz * wz
    cdef double e = vx * wx + vy * wy + vz * wz
    cdef double den = a * c - b * b
    cdef double s, t, dx, dy, dz
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
