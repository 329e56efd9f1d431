import { describe, expect, it } from "vitest";
import { dragToDelta, DEFAULT_JOG, JogThrottle, keyToDelta } from "../src/jog.js";
import { renderScene, trajectoryEndpoints, type Camera } from "../src/scene.js";
import { chartGeometry } from "../src/plots.js";
import { RingBuffer } from "../src/viewmodel.js";
import { makeFrame } from "./viewmodel.test.js";
import type { HelloData } from "../src/protocol.js";
import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";

const here = dirname(fileURLToPath(import.meta.url));
const fk = JSON.parse(readFileSync(join(here, "fixtures", "fk_cases.json"), "utf-8"));

const HELLO: HelloData = {
    name: "t", variant: "", dt: 0.002, rate_limit_hz: 30,
    robot: { dh: fk.dh, tool_transform: fk.tool_transform,
             link_radii: [0.08, 0.06, 0.05, 0.045, 0.045, 0.045, 0.04] },
    bolt: { pose: [0.4919, -0.1333, 0.16, 0.70710678, 0, 0, -0.70710678],
            head_across_flats: 0.017, target_torque: 8 },
    safety: { force_threshold: 50, torque_threshold: 12 },
};

describe("jog mapping", () => {
    it("drag right 100 px at 0.1 mm/px is +10 mm x", () => {
        const d = dragToDelta(100, 0, DEFAULT_JOG);
        expect(d[0]).toBeCloseTo(0.01, 12);
        expect(d.slice(1).every((v) => v === 0)).toBe(true);
    });

    it("screen up is +y", () => {
        const d = dragToDelta(0, -50, DEFAULT_JOG);
        expect(d[1]).toBeCloseTo(0.005, 12);
    });

    it("keyboard steps map to axes", () => {
        expect(keyToDelta("ArrowRight")![0]).toBeGreaterThan(0);
        expect(keyToDelta("PageDown")![2]).toBeLessThan(0);
        expect(keyToDelta("]")![5]).toBeGreaterThan(0);
        expect(keyToDelta("x")).toBeNull();
    });

    it("throttle merges deltas and caps the rate", () => {
        const th = new JogThrottle(1000 / 60);
        th.add([0.001, 0, 0, 0, 0, 0]);
        th.add([0.002, 0.001, 0, 0, 0, 0]);
        const first = th.take(0);
        expect(first![0]).toBeCloseTo(0.003, 12);
        th.add([0.001, 0, 0, 0, 0, 0]);
        expect(th.take(5)).toBeNull();     // too soon
        expect(th.take(17)![0]).toBeCloseTo(0.001, 12);
        expect(th.take(100)).toBeNull();   // nothing pending
    });
});

describe("scene graph", () => {
    const cam: Camera = { scale: 400, cx: 200, cy: 200, center: [0.25, 0, 0.3] };

    it("renders one segment per link plus tool, bolt and socket markers", () => {
        const frame = makeFrame(0);
        const graph = renderScene(HELLO, frame, null, cam, "side");
        // 7 arm segments (6 links + tool) and the bolt axis segment
        expect(graph.segments.filter((s) => s.kind !== "trajectory").length).toBe(8);
        expect(graph.markers.some((m) => m.kind === "bolt")).toBe(true);
        expect(graph.markers.some((m) => m.kind === "socket")).toBe(true);
    });

    it("engaged socket is flagged", () => {
        const frame = makeFrame(0, { engagement_depth: 0.003 });
        const graph = renderScene(HELLO, frame, null, cam, "top");
        expect(graph.markers.some((m) => m.kind === "engaged")).toBe(true);
    });

    it("trajectory polyline endpoints equal the trajectory's", () => {
        const traj = {
            samples: [
                [0, 0.49, -0.13, 0.3, 1, 0, 0, 0],
                [1, 0.49, -0.13, 0.24, 1, 0, 0, 0],
                [2, 0.4919, -0.1333, 0.156, 1, 0, 0, 0],
            ] as [number, ...number[]][],
        };
        const [a, b] = trajectoryEndpoints(traj);
        expect(a).toEqual([0.49, -0.13, 0.3]);
        expect(b).toEqual([0.4919, -0.1333, 0.156]);
        const graph = renderScene(HELLO, makeFrame(0), traj, cam, "side");
        const polys = graph.segments.filter((s) => s.kind === "trajectory");
        expect(polys.length).toBe(2);
    });
});

describe("chart geometry", () => {
    it("empty buffers produce an empty chart without errors", () => {
        const geo = chartGeometry([{ buffer: new RingBuffer(10), label: "f" }],
            [], 100, 50);
        expect(geo.lines[0].points.length).toBe(0);
    });

    it("guide lines scale into view", () => {
        const rb = new RingBuffer(100);
        for (let i = 0; i < 50; i++) {
            rb.push(i * 0.1, i * 0.2);
        }
        const geo = chartGeometry([{ buffer: rb, label: "f" }],
            [{ value: 50, label: "safety" }], 200, 100);
        expect(geo.vMax).toBeGreaterThanOrEqual(50);
        expect(geo.guides[0].y).toBeGreaterThanOrEqual(0);
        expect(geo.guides[0].y).toBeLessThanOrEqual(100);
    });
});
