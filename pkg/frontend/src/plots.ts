/** Scrolling chart geometry for the live force/torque plots. Returns
 * polylines plus horizontal guide lines (safety threshold, target
 * torque); drawing is left to the canvas layer. */

import type { RingBuffer } from "./viewmodel.js";

export interface Polyline {
    points: [number, number][];
    label: string;
}

export interface GuideLine {
    y: number;
    label: string;
}

export interface ChartGeometry {
    lines: Polyline[];
    guides: GuideLine[];
    tMin: number;
    tMax: number;
    vMin: number;
    vMax: number;
}

export function chartGeometry(
    series: { buffer: RingBuffer; label: string }[],
    guides: { value: number; label: string }[],
    width: number,
    height: number,
    windowS = 30,
): ChartGeometry {
    let tMax = 0;
    for (const s of series) {
        const last = s.buffer.latest();
        if (last !== null) {
            tMax = Math.max(tMax, last.t);
        }
    }
    const tMin = Math.max(0, tMax - windowS);
    let vMin = 0;
    let vMax = 1e-6;
    for (const g of guides) {
        vMax = Math.max(vMax, g.value * 1.15);
    }
    for (const s of series) {
        for (const { t, v } of s.buffer.values()) {
            if (t >= tMin) {
                vMin = Math.min(vMin, v);
                vMax = Math.max(vMax, v);
            }
        }
    }
    const sx = (t: number) => ((t - tMin) / Math.max(tMax - tMin, 1e-9)) * width;
    const sy = (v: number) => height - ((v - vMin) / (vMax - vMin)) * height;
    return {
        lines: series.map((s) => ({
            label: s.label,
            points: s.buffer.values()
                .filter(({ t }) => t >= tMin)
                .map(({ t, v }) => [sx(t), sy(v)] as [number, number]),
        })),
        guides: guides.map((g) => ({ y: sy(g.value), label: g.label })),
        tMin, tMax, vMin, vMax,
    };
}
