/** End-to-end against a live backend: spawns `boltsim run console_manual
 * --serve`, then drives the whole session the way the UI would: buttons
 * only when the legality mirror enables them, pointer-style jogs for the
 * manual coupling rescue. Asserts bounded telemetry gaps, zero rejected
 * commands, and a completed manual coupling. */

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, type ChildProcess } from "node:child_process";
import WebSocket from "ws";
import { enabledEvents, jogAllowed } from "../src/legality.js";
import { JogThrottle } from "../src/jog.js";
import { parseServerMessage, type EventRecord, type TelemetryFrame } from "../src/protocol.js";
import { SessionViewModel } from "../src/viewmodel.js";

const PORT = 8941;
let server: ChildProcess;
let serverExit: Promise<number>;
let serverOut = "";

beforeAll(async () => {
    server = spawn(
        "python3",
        ["-m", "boltsim.cli", "run", "console_manual", "--serve",
         "--port", String(PORT), "--seed", "0"],
        { cwd: "..", env: { ...process.env, PYTHONPATH: "src", PYTHONUNBUFFERED: "1" } },
    );
    server.stdout!.on("data", (b) => { serverOut += String(b); });
    server.stderr!.on("data", (b) => { serverOut += String(b); });
    serverExit = new Promise((resolve) => server.on("exit", (code) => resolve(code ?? -1)));
    await new Promise<void>((resolve, reject) => {
        const t0 = Date.now();
        const poll = () => {
            if (serverOut.includes("serving ws://")) {
                resolve();
            } else if (Date.now() - t0 > 20000) {
                reject(new Error(`backend did not serve:\n${serverOut}`));
            } else {
                setTimeout(poll, 100);
            }
        };
        poll();
    });
}, 30000);

afterAll(() => {
    if (server.exitCode === null) {
        server.kill();
    }
});

function lateralError(frame: TelemetryFrame, boltPose: number[]): number {
    // the bolt axis is +z up in this scenario; lateral error is the xy offset
    const dx = frame.socket_pose[0] - boltPose[0];
    const dy = frame.socket_pose[1] - boltPose[1];
    return Math.hypot(dx, dy);
}

describe("console against a live backend", () => {
    it("runs the vision-fault rescue end to end", async () => {
        const vm = new SessionViewModel("itest");
        const ws = new WebSocket(`ws://127.0.0.1:${PORT}`);
        const events: EventRecord[] = [];
        const sent: string[] = [];
        const throttle = new JogThrottle();
        let lastClickKey = "";
        let tookManual = false;
        let jogging = false;

        const send = (env: unknown, label: string) => {
            ws.send(JSON.stringify(env));
            sent.push(label);
        };

        const drive = () => {
            const f = vm.frame;
            if (f === null) {
                return;
            }
            const legal = enabledEvents(f);
            const key = `${f.step}:${f.phase}:${f.mode}:${f.after_fault}`;

            if (legal.has("StartOperation") && key !== lastClickKey) {
                lastClickKey = key;
                send(vm.operatorCommand("StartOperation"), "StartOperation");
                return;
            }
            if (legal.has("Validate") && f.mode === "Automatic"
                    && key !== lastClickKey) {
                lastClickKey = key;
                send(vm.operatorCommand("Validate"), "Validate");
                return;
            }
            if (!tookManual && f.step === "Coupling" && f.phase === "Executing"
                    && vm.hello !== null
                    && lateralError(f, vm.hello.bolt.pose) > 0.01
                    && legal.has("TakeManualControl")) {
                tookManual = true;
                lastClickKey = key;
                send(vm.operatorCommand("TakeManualControl"), "TakeManualControl");
                return;
            }
            if (tookManual && jogAllowed(f) && vm.hello !== null) {
                jogging = true;
                const bolt = vm.hello.bolt.pose;
                const lat = lateralError(f, bolt);
                const step = 0.0004; // ~24 mm/s at 60 Hz, pointer-drag scale
                if (lat > 0.0005) {
                    const dx = bolt[0] - f.socket_pose[0];
                    const dy = bolt[1] - f.socket_pose[1];
                    const k = Math.min(step / lat, 1);
                    throttle.add([dx * k, dy * k, 0, 0, 0, 0]);
                } else if (f.engagement_depth < 0.002) {
                    throttle.add([0, 0, -step, 0, 0, 0]);
                }
                const jog = throttle.take(Date.now());
                if (jog !== null) {
                    send(vm.jogCommand(jog, true), "jog");
                }
            }
        };

        const done = new Promise<void>((resolve, reject) => {
            const timeout = setTimeout(
                () => reject(new Error(`timed out; log:\n${serverOut}`)), 90000);
            ws.on("message", (raw) => {
                const msg = parseServerMessage(String(raw));
                if (msg.type === "hello") {
                    vm.applyHello(msg.data);
                } else if (msg.type === "telemetry") {
                    vm.applyFrame(msg.data, Date.now());
                    drive();
                } else if (msg.type === "event") {
                    events.push(msg.data);
                } else if (msg.type === "trajectory") {
                    vm.applyTrajectory(msg.data);
                }
            });
            ws.on("close", () => {
                clearTimeout(timeout);
                resolve(); // run finished server-side
            });
            ws.on("error", (err) => {
                clearTimeout(timeout);
                reject(err);
            });
        });

        await done;
        const code = await serverExit;

        // the backend matched its expected outcome (Success) and said so
        expect(code).toBe(0);
        expect(serverOut).toContain("outcome=Success");

        // frames rendered with bounded gaps: ceil(500/30) = 17
        expect(vm.frame).not.toBeNull();
        expect(vm.maxSeqGap).toBeLessThanOrEqual(17);
        expect(vm.frame!.engagement_depth).toBeGreaterThanOrEqual(0.002);

        // every enabled-button command was accepted; nothing was rejected
        const rejected = events.filter((e) => !e.accepted);
        expect(rejected).toEqual([]);
        for (const name of ["StartOperation", "TakeManualControl"]) {
            expect(sent.filter((s) => s === name).length).toBe(1);
            expect(events.some((e) => e.event === name && e.accepted)).toBe(true);
        }
        const validatesSent = sent.filter((s) => s === "Validate").length;
        const validatesAccepted = events.filter(
            (e) => e.event === "Validate" && e.accepted).length;
        expect(validatesAccepted).toBe(validatesSent);
        expect(validatesSent).toBeGreaterThanOrEqual(2); // approach + identification

        // the jog session did the coupling, so manual mode was reached
        expect(jogging).toBe(true);
        expect(events.some((e) => e.event === "ModeSwitched")).toBe(true);
    }, 120000);
});
