/** Pointer/keyboard jog input: pixel drags and arrow keys become
 * device-frame pose deltas at a bounded rate. */

import type { Flat6 } from "./protocol.js";

export const JOG_RATE_HZ = 60;
export const MM_PER_PX = 0.1; // pointer gain: 0.1 mm per pixel

export interface JogConfig {
    mmPerPx: number;
    keyStepM: number;   // per key repeat
    yawStepRad: number; // per key repeat, about the bolt axis
}

export const DEFAULT_JOG: JogConfig = {
    mmPerPx: MM_PER_PX,
    keyStepM: 0.0015,
    yawStepRad: 0.02,
};

/** Horizontal plane drag: +x right, +y up the screen maps to world x/y. */
export function dragToDelta(dxPx: number, dyPx: number, cfg: JogConfig = DEFAULT_JOG): Flat6 {
    const m = cfg.mmPerPx / 1000;
    return [dxPx * m, -dyPx * m, 0, 0, 0, 0];
}

/** Vertical drag with a modifier held: screen up = world +z. */
export function dragToVertical(dyPx: number, cfg: JogConfig = DEFAULT_JOG): Flat6 {
    const m = cfg.mmPerPx / 1000;
    return [0, 0, -dyPx * m, 0, 0, 0];
}

export function keyToDelta(key: string, cfg: JogConfig = DEFAULT_JOG): Flat6 | null {
    const s = cfg.keyStepM;
    switch (key) {
        case "ArrowLeft": return [-s, 0, 0, 0, 0, 0];
        case "ArrowRight": return [s, 0, 0, 0, 0, 0];
        case "ArrowUp": return [0, s, 0, 0, 0, 0];
        case "ArrowDown": return [0, -s, 0, 0, 0, 0];
        case "PageUp": return [0, 0, s, 0, 0, 0];
        case "PageDown": return [0, 0, -s, 0, 0, 0];
        case "[": return [0, 0, 0, 0, 0, -cfg.yawStepRad];
        case "]": return [0, 0, 0, 0, 0, cfg.yawStepRad];
        default: return null;
    }
}

/** Accumulates input and releases at most one jog per 1/60 s, merging
 * whatever arrived in between (latest-rate limiting, no queue growth). */
export class JogThrottle {
    private pending: Flat6 | null = null;
    private lastEmit = -Infinity;

    constructor(readonly minIntervalMs: number = 1000 / JOG_RATE_HZ) {}

    add(delta: Flat6): void {
        if (this.pending === null) {
            this.pending = [...delta] as Flat6;
        } else {
            for (let i = 0; i < 6; i++) {
                this.pending[i] += delta[i];
            }
        }
    }

    /** Returns a merged delta when the rate budget allows, else null. */
    take(nowMs: number): Flat6 | null {
        if (this.pending === null || nowMs - this.lastEmit < this.minIntervalMs) {
            return null;
        }
        const out = this.pending;
        this.pending = null;
        this.lastEmit = nowMs;
        return out;
    }

    get hasPending(): boolean {
        return this.pending !== null;
    }
}
