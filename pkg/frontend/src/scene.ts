/** Schematic scene: the arm as a stick figure with two fixed viewports,
 * a side elevation and a bolt-axis-aligned top view that makes coupling
 * misses visible. Pure geometry here; canvas drawing lives in app.ts. */

import { linkPoints, quatRotate, type Vec3 } from "./fk.js";
import type { HelloData, TelemetryFrame, TrajectoryData } from "./protocol.js";

export interface Segment2D {
    x0: number; y0: number; x1: number; y1: number;
    width: number;
    kind: "link" | "tool" | "trajectory" | "bolt" | "axis";
}

export interface Marker2D {
    x: number; y: number; r: number;
    kind: "joint" | "bolt" | "socket" | "engaged";
}

export interface SceneGraph {
    segments: Segment2D[];
    markers: Marker2D[];
    view: "side" | "top";
}

export interface Camera {
    scale: number;      // px per meter
    cx: number;         // canvas center x
    cy: number;         // canvas center y
    center: Vec3;       // world point at the canvas center
}

function projectSide(p: Vec3, cam: Camera): [number, number] {
    // side elevation: world x to the right, world z up
    return [
        cam.cx + (p[0] - cam.center[0]) * cam.scale,
        cam.cy - (p[2] - cam.center[2]) * cam.scale,
    ];
}

function projectTop(p: Vec3, cam: Camera): [number, number] {
    // down the bolt axis: world x right, world y up the screen
    return [
        cam.cx + (p[0] - cam.center[0]) * cam.scale,
        cam.cy - (p[1] - cam.center[1]) * cam.scale,
    ];
}

export function renderScene(
    hello: HelloData,
    frame: TelemetryFrame,
    trajectory: TrajectoryData | null,
    cam: Camera,
    view: "side" | "top",
): SceneGraph {
    const proj = view === "side" ? projectSide : projectTop;
    const segments: Segment2D[] = [];
    const markers: Marker2D[] = [];

    const pts = linkPoints(hello.robot.dh, frame.joints, hello.robot.tool_transform);
    for (let i = 0; i + 1 < pts.length; i++) {
        const [x0, y0] = proj(pts[i], cam);
        const [x1, y1] = proj(pts[i + 1], cam);
        segments.push({
            x0, y0, x1, y1,
            width: Math.max(2, (hello.robot.link_radii[i] ?? 0.03) * cam.scale * 0.6),
            kind: i === pts.length - 2 ? "tool" : "link",
        });
        markers.push({ x: x0, y: y0, r: 3, kind: "joint" });
    }

    const bolt = hello.bolt.pose;
    const boltP: Vec3 = [bolt[0], bolt[1], bolt[2]];
    const boltQ: [number, number, number, number] = [bolt[3], bolt[4], bolt[5], bolt[6]];
    const axis = quatRotate(boltQ, [0, 0, 1]);
    const tip: Vec3 = [
        boltP[0] + axis[0] * 0.05,
        boltP[1] + axis[1] * 0.05,
        boltP[2] + axis[2] * 0.05,
    ];
    const [bx, by] = proj(boltP, cam);
    const [tx, ty] = proj(tip, cam);
    segments.push({ x0: bx, y0: by, x1: tx, y1: ty, width: 2, kind: "axis" });
    markers.push({
        x: bx, y: by,
        r: Math.max(3, hello.bolt.head_across_flats * 0.5 * cam.scale),
        kind: "bolt",
    });

    const sock = frame.socket_pose;
    const [sx, sy] = proj([sock[0], sock[1], sock[2]], cam);
    markers.push({
        x: sx, y: sy, r: 5,
        kind: frame.engagement_depth > 0 ? "engaged" : "socket",
    });

    if (trajectory !== null && trajectory.samples.length > 1) {
        for (let i = 0; i + 1 < trajectory.samples.length; i++) {
            const a = trajectory.samples[i];
            const b = trajectory.samples[i + 1];
            const [x0, y0] = proj([a[1], a[2], a[3]], cam);
            const [x1, y1] = proj([b[1], b[2], b[3]], cam);
            segments.push({ x0, y0, x1, y1, width: 1, kind: "trajectory" });
        }
    }
    return { segments, markers, view };
}

/** Endpoints of the trajectory polyline in world coordinates, used by
 * tests to confirm the drawn polyline matches the loaded trajectory. */
export function trajectoryEndpoints(traj: TrajectoryData): [Vec3, Vec3] {
    const a = traj.samples[0];
    const b = traj.samples[traj.samples.length - 1];
    return [[a[1], a[2], a[3]], [b[1], b[2], b[3]]];
}
