/** Client-side session state: latest frame, plot ring buffers, sequence
 * bookkeeping and command numbering. Stateless with respect to the
 * control system; reloading the console never touches a run. */

import type {
    CommandEnvelope, EventRecord, Flat6, HelloData, OperatorEventName,
    TelemetryFrame, TrajectoryData,
} from "./protocol.js";

export class RingBuffer {
    private data: { t: number; v: number }[] = [];

    constructor(readonly capacity: number) {
        if (capacity < 1) {
            throw new Error("capacity must be >= 1");
        }
    }

    push(t: number, v: number): void {
        this.data.push({ t, v });
        if (this.data.length > this.capacity) {
            this.data.shift();
        }
    }

    get length(): number {
        return this.data.length;
    }

    values(): readonly { t: number; v: number }[] {
        return this.data;
    }

    latest(): { t: number; v: number } | null {
        return this.data.length ? this.data[this.data.length - 1] : null;
    }
}

export const PLOT_CAPACITY = 900; // 30 s at 30 Hz
export const STALE_AFTER_MS = 500;

export class SessionViewModel {
    hello: HelloData | null = null;
    frame: TelemetryFrame | null = null;
    trajectory: TrajectoryData | null = null;
    events: EventRecord[] = [];
    connected = false;
    lastFrameAt = 0; // ms clock
    maxSeqGap = 0;
    droppedOutOfOrder = 0;

    readonly forceNorm = new RingBuffer(PLOT_CAPACITY);
    readonly forceAxes = [
        new RingBuffer(PLOT_CAPACITY),
        new RingBuffer(PLOT_CAPACITY),
        new RingBuffer(PLOT_CAPACITY),
    ];
    readonly boltTorque = new RingBuffer(PLOT_CAPACITY);

    private nextSeq = 1;

    constructor(readonly clientId: string = `console-${Math.floor(Math.random() * 1e6)}`) {}

    applyHello(data: HelloData): void {
        this.hello = data;
        this.connected = true;
    }

    applyFrame(data: TelemetryFrame, nowMs: number): boolean {
        if (this.frame !== null && data.seq <= this.frame.seq) {
            this.droppedOutOfOrder += 1;
            return false; // displayed seq stays monotone
        }
        if (this.frame !== null) {
            this.maxSeqGap = Math.max(this.maxSeqGap, data.seq - this.frame.seq);
        }
        this.frame = data;
        this.lastFrameAt = nowMs;
        const [fx, fy, fz] = data.contact_wrench;
        this.forceNorm.push(data.time, Math.hypot(fx, fy, fz));
        this.forceAxes[0].push(data.time, fx);
        this.forceAxes[1].push(data.time, fy);
        this.forceAxes[2].push(data.time, fz);
        this.boltTorque.push(data.time, data.bolt_torque);
        return true;
    }

    applyEvent(data: EventRecord): void {
        this.events.push(data);
        if (this.events.length > 200) {
            this.events.shift();
        }
    }

    applyTrajectory(data: TrajectoryData): void {
        this.trajectory = data;
    }

    stale(nowMs: number): boolean {
        return this.frame !== null && nowMs - this.lastFrameAt > STALE_AFTER_MS;
    }

    operatorCommand(event: OperatorEventName): CommandEnvelope {
        return {
            type: "command",
            client_id: this.clientId,
            seq: this.nextSeq++,
            data: { kind: "operator", event },
        };
    }

    jogCommand(delta: Flat6, clutch: boolean): CommandEnvelope {
        return {
            type: "command",
            client_id: this.clientId,
            seq: this.nextSeq++,
            data: { kind: "device_jog", delta, clutch },
        };
    }

    get pendingSeq(): number {
        return this.nextSeq;
    }
}
