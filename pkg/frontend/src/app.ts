/** Browser wiring: socket, canvases, the command panel and jog capture.
 * Configuration via URL query: ?host=127.0.0.1&port=8930 */

import { quatAngle, socketPose, type Quat } from "./fk.js";
import { dragToDelta, dragToVertical, DEFAULT_JOG, JogThrottle, keyToDelta } from "./jog.js";
import { enabledEvents, jogAllowed } from "./legality.js";
import { chartGeometry } from "./plots.js";
import { renderScene, type Camera, type SceneGraph } from "./scene.js";
import { OPERATOR_EVENTS, parseServerMessage, type OperatorEventName } from "./protocol.js";
import { SessionViewModel } from "./viewmodel.js";

const params = new URLSearchParams(window.location.search);
const host = params.get("host") ?? window.location.hostname ?? "127.0.0.1";
const port = params.get("port") ?? "8930";

const vm = new SessionViewModel();
const throttle = new JogThrottle();
let socket: WebSocket | null = null;

const COLORS: Record<string, string> = {
    link: "#8fa3bf", tool: "#e8b84a", trajectory: "#4a90d9",
    axis: "#d96459", bolt: "#d96459", socket: "#e8b84a",
    engaged: "#7ac74f", joint: "#c0c8d4",
};

function $(id: string): HTMLElement {
    const el = document.getElementById(id);
    if (el === null) {
        throw new Error(`missing #${id}`);
    }
    return el;
}

function connect(): void {
    const url = `ws://${host}:${port}`;
    $("status").textContent = `connecting to ${url}`;
    socket = new WebSocket(url);
    socket.onopen = () => {
        vm.connected = true;
        $("status").textContent = url;
    };
    socket.onclose = () => {
        vm.connected = false;
        $("status").textContent = "disconnected";
        setTimeout(connect, 1500);
    };
    socket.onmessage = (ev) => {
        const msg = parseServerMessage(String(ev.data));
        if (msg.type === "hello") {
            vm.applyHello(msg.data);
        } else if (msg.type === "telemetry") {
            vm.applyFrame(msg.data, performance.now());
        } else if (msg.type === "event") {
            vm.applyEvent(msg.data);
            renderEventLog();
        } else if (msg.type === "trajectory") {
            vm.applyTrajectory(msg.data);
        } else {
            banner(`command rejected: ${msg.data.reason}`);
        }
    };
}

function send(envelope: unknown): void {
    if (socket === null || socket.readyState !== WebSocket.OPEN) {
        banner("not connected; command dropped");
        return;
    }
    socket.send(JSON.stringify(envelope));
}

function banner(text: string): void {
    const el = $("banner");
    el.textContent = text;
    el.classList.add("visible");
    setTimeout(() => el.classList.remove("visible"), 2500);
}

// -- command panel ----------------------------------------------------------

const panel = $("panel");
const buttons = new Map<OperatorEventName, HTMLButtonElement>();
for (const name of OPERATOR_EVENTS) {
    const btn = document.createElement("button");
    btn.textContent = name.replace(/([A-Z])/g, " $1").trim();
    btn.dataset.event = name;
    btn.disabled = true;
    btn.onclick = () => send(vm.operatorCommand(name));
    panel.appendChild(btn);
    buttons.set(name, btn);
}

function renderPanel(): void {
    const legal = enabledEvents(vm.frame);
    for (const [name, btn] of buttons) {
        btn.disabled = !legal.has(name);
    }
    const f = vm.frame;
    $("step").textContent = f ? f.step : "-";
    $("phase").textContent = f ? f.phase : "-";
    $("mode").textContent = f ? f.mode : "-";
    $("torque").textContent = f ? `${f.bolt_torque.toFixed(2)} N.m` : "-";
    $("engagement").textContent = f ? `${(f.engagement_depth * 1000).toFixed(1)} mm` : "-";
    const trip = $("trip");
    trip.textContent = f && f.safety_tripped ? "SAFETY STOP" : "";
    const badge = $("stale");
    badge.classList.toggle("visible", vm.stale(performance.now()));
}

function renderEventLog(): void {
    const el = $("events");
    el.textContent = vm.events.slice(-12).map((e) =>
        `${e.time.toFixed(2)}s ${e.event}${e.accepted ? "" : " (rejected)"} ${e.detail}`,
    ).join("\n");
}

// -- alignment indicator (engagement gate) -----------------------------------

function renderAlignment(): void {
    const f = vm.frame;
    const h = vm.hello;
    const el = $("gate");
    if (f === null || h === null) {
        el.textContent = "";
        return;
    }
    if (!jogAllowed(f)) {
        el.textContent = "jog locked: manual mode required";
        return;
    }
    const sock = socketPose(h.robot.dh, f.joints, h.robot.tool_transform);
    const boltQ: Quat = [h.bolt.pose[3], h.bolt.pose[4], h.bolt.pose[5], h.bolt.pose[6]];
    const tilt = quatAngle(sock.orientation, boltQ);
    el.textContent = `jog live, axis alignment ${(tilt * 180 / Math.PI).toFixed(1)} deg`;
}

// -- jog capture --------------------------------------------------------------

const sceneCanvas = $("scene") as HTMLCanvasElement;
let dragging = false;
let lastX = 0;
let lastY = 0;

sceneCanvas.addEventListener("pointerdown", (ev) => {
    dragging = true;
    lastX = ev.clientX;
    lastY = ev.clientY;
    sceneCanvas.setPointerCapture(ev.pointerId);
});
sceneCanvas.addEventListener("pointermove", (ev) => {
    if (!dragging || !jogAllowed(vm.frame)) {
        return;
    }
    const dx = ev.clientX - lastX;
    const dy = ev.clientY - lastY;
    lastX = ev.clientX;
    lastY = ev.clientY;
    throttle.add(ev.shiftKey ? dragToVertical(dy) : dragToDelta(dx, dy));
});
sceneCanvas.addEventListener("pointerup", () => {
    dragging = false;
    if (jogAllowed(vm.frame)) {
        send(vm.jogCommand([0, 0, 0, 0, 0, 0], false)); // clutch out: index
    }
});
window.addEventListener("keydown", (ev) => {
    if (!jogAllowed(vm.frame)) {
        return;
    }
    const delta = keyToDelta(ev.key, DEFAULT_JOG);
    if (delta !== null) {
        throttle.add(delta);
        ev.preventDefault();
    }
});

// -- canvases -----------------------------------------------------------------

function drawScene(): void {
    const ctx = sceneCanvas.getContext("2d");
    const f = vm.frame;
    const h = vm.hello;
    if (ctx === null) {
        return;
    }
    ctx.clearRect(0, 0, sceneCanvas.width, sceneCanvas.height);
    if (f === null || h === null) {
        return;
    }
    const half = sceneCanvas.width / 2;
    const bolt = h.bolt.pose;
    const side: Camera = {
        scale: 380, cx: half / 2, cy: sceneCanvas.height * 0.58,
        center: [bolt[0] * 0.5, 0, 0.3],
    };
    const top: Camera = {
        scale: 2600, cx: half + half / 2, cy: sceneCanvas.height / 2,
        center: [bolt[0], bolt[1], bolt[2]],
    };
    paint(ctx, renderScene(h, f, vm.trajectory, side, "side"));
    paint(ctx, renderScene(h, f, vm.trajectory, top, "top"));
    ctx.strokeStyle = "#2a3240";
    ctx.beginPath();
    ctx.moveTo(half, 0);
    ctx.lineTo(half, sceneCanvas.height);
    ctx.stroke();
    ctx.fillStyle = "#5a677a";
    ctx.fillText("side", 8, 14);
    ctx.fillText("bolt axis view", half + 8, 14);
}

function paint(ctx: CanvasRenderingContext2D, graph: SceneGraph): void {
    for (const seg of graph.segments) {
        ctx.strokeStyle = COLORS[seg.kind];
        ctx.lineWidth = seg.width;
        ctx.setLineDash(seg.kind === "trajectory" ? [4, 4] : []);
        ctx.beginPath();
        ctx.moveTo(seg.x0, seg.y0);
        ctx.lineTo(seg.x1, seg.y1);
        ctx.stroke();
    }
    ctx.setLineDash([]);
    for (const m of graph.markers) {
        ctx.strokeStyle = COLORS[m.kind];
        ctx.fillStyle = m.kind === "engaged" ? COLORS[m.kind] : "transparent";
        ctx.lineWidth = 2;
        ctx.beginPath();
        ctx.arc(m.x, m.y, m.r, 0, Math.PI * 2);
        ctx.fill();
        ctx.stroke();
    }
}

function drawCharts(): void {
    const h = vm.hello;
    if (h === null) {
        return;
    }
    drawChart("forces", [
        { buffer: vm.forceNorm, label: "|F|" },
        { buffer: vm.forceAxes[0], label: "Fx" },
        { buffer: vm.forceAxes[1], label: "Fy" },
        { buffer: vm.forceAxes[2], label: "Fz" },
    ], [{ value: h.safety.force_threshold, label: "safety" }]);
    drawChart("torques", [
        { buffer: vm.boltTorque, label: "bolt torque" },
    ], [{ value: h.bolt.target_torque, label: "target" }]);
}

const CHART_COLORS = ["#e8e3d3", "#d96459", "#7ac74f", "#4a90d9"];

function drawChart(
    id: string,
    series: { buffer: import("./viewmodel.js").RingBuffer; label: string }[],
    guides: { value: number; label: string }[],
): void {
    const canvas = $(id) as HTMLCanvasElement;
    const ctx = canvas.getContext("2d");
    if (ctx === null) {
        return;
    }
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    const geo = chartGeometry(series, guides, canvas.width, canvas.height - 14);
    for (const g of geo.guides) {
        ctx.strokeStyle = "#d9646088";
        ctx.setLineDash([6, 4]);
        ctx.beginPath();
        ctx.moveTo(0, g.y);
        ctx.lineTo(canvas.width, g.y);
        ctx.stroke();
        ctx.setLineDash([]);
    }
    geo.lines.forEach((line, i) => {
        ctx.strokeStyle = CHART_COLORS[i % CHART_COLORS.length];
        ctx.lineWidth = i === 0 ? 1.8 : 1;
        ctx.beginPath();
        line.points.forEach(([x, y], j) => (j === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
        ctx.stroke();
        ctx.fillStyle = ctx.strokeStyle;
        ctx.fillText(line.label, 6 + i * 40, canvas.height - 3);
    });
}

// -- main loop ----------------------------------------------------------------

function tick(): void {
    const jog = throttle.take(performance.now());
    if (jog !== null && jogAllowed(vm.frame)) {
        send(vm.jogCommand(jog, true));
    }
    renderPanel();
    renderAlignment();
    drawScene();
    drawCharts();
    requestAnimationFrame(tick);
}

connect();
requestAnimationFrame(tick);
