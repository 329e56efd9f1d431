/** Minimal forward kinematics for rendering the arm from joint values. */

import type { Flat7 } from "./protocol.js";

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number]; // w x y z

export function quatMul(a: Quat, b: Quat): Quat {
    const [aw, ax, ay, az] = a;
    const [bw, bx, by, bz] = b;
    return [
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ];
}

export function quatRotate(q: Quat, v: Vec3): Vec3 {
    const [w, x, y, z] = q;
    const [vx, vy, vz] = v;
    const tx = 2 * (y * vz - z * vy);
    const ty = 2 * (z * vx - x * vz);
    const tz = 2 * (x * vy - y * vx);
    return [
        vx + w * tx + (y * tz - z * ty),
        vy + w * ty + (z * tx - x * tz),
        vz + w * tz + (x * ty - y * tx),
    ];
}

export function quatFromRotvec(v: Vec3): Quat {
    const angle = Math.hypot(v[0], v[1], v[2]);
    if (angle < 1e-12) {
        return [1, 0.5 * v[0], 0.5 * v[1], 0.5 * v[2]];
    }
    const s = Math.sin(angle / 2) / angle;
    return [Math.cos(angle / 2), v[0] * s, v[1] * s, v[2] * s];
}

export function quatAngle(a: Quat, b: Quat): number {
    let d = a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
    d = Math.min(1, Math.abs(d));
    return 2 * Math.acos(d);
}

/** Joint origins base..flange plus the tool tip, for the stick figure. */
export function linkPoints(
    dh: [number, number, number, number][],
    joints: number[],
    tool: Flat7,
): Vec3[] {
    let p: Vec3 = [0, 0, 0];
    let q: Quat = [1, 0, 0, 0];
    const pts: Vec3[] = [[0, 0, 0]];
    for (let i = 0; i < joints.length; i++) {
        const [a, d, alpha, off] = dh[i];
        const theta = joints[i] + off;
        const stepP: Vec3 = [a * Math.cos(theta), a * Math.sin(theta), d];
        const h = theta / 2;
        const g = alpha / 2;
        const stepQ: Quat = [
            Math.cos(h) * Math.cos(g),
            Math.cos(h) * Math.sin(g),
            Math.sin(h) * Math.sin(g),
            Math.sin(h) * Math.cos(g),
        ];
        const r = quatRotate(q, stepP);
        p = [p[0] + r[0], p[1] + r[1], p[2] + r[2]];
        q = quatMul(q, stepQ);
        pts.push(p);
    }
    const tr = quatRotate(q, [tool[0], tool[1], tool[2]]);
    pts.push([p[0] + tr[0], p[1] + tr[1], p[2] + tr[2]]);
    return pts;
}

export function socketPose(
    dh: [number, number, number, number][],
    joints: number[],
    tool: Flat7,
): { position: Vec3; orientation: Quat } {
    let p: Vec3 = [0, 0, 0];
    let q: Quat = [1, 0, 0, 0];
    for (let i = 0; i < joints.length; i++) {
        const [a, d, alpha, off] = dh[i];
        const theta = joints[i] + off;
        const r = quatRotate(q, [a * Math.cos(theta), a * Math.sin(theta), d]);
        p = [p[0] + r[0], p[1] + r[1], p[2] + r[2]];
        const h = theta / 2;
        const g = alpha / 2;
        q = quatMul(q, [
            Math.cos(h) * Math.cos(g),
            Math.cos(h) * Math.sin(g),
            Math.sin(h) * Math.sin(g),
            Math.sin(h) * Math.cos(g),
        ]);
    }
    const tr = quatRotate(q, [tool[0], tool[1], tool[2]]);
    return {
        position: [p[0] + tr[0], p[1] + tr[1], p[2] + tr[2]],
        orientation: quatMul(q, [tool[3], tool[4], tool[5], tool[6]]),
    };
}
