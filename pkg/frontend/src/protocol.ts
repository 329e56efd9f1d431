/** Wire types for the gateway protocol (see ../docs/protocol.md). */

export type Flat7 = [number, number, number, number, number, number, number];
export type Flat6 = [number, number, number, number, number, number];

export interface BdcSummary {
    mode: string;
    measured_torque: number;
    rotated: number;
    complete: boolean;
    interrupted: boolean;
    driver_fault: boolean;
    velocity_command: number;
}

export interface TelemetryFrame {
    seq: number;
    time: number;
    joints: number[];
    socket_pose: Flat7;
    bolt_rotation: number;
    bolt_torque: number;
    engagement_depth: number;
    contact_wrench: Flat6;
    safety_tripped: boolean;
    step: string;
    phase: string;
    mode: string;
    after_fault: boolean;
    bdc: BdcSummary;
    reference_pose: Flat7;
    virtual_pose: Flat7;
    virtual_twist: Flat6;
    feedback_wrench: Flat6;
    driver_angle: number;
    driver_dead: boolean;
}

export interface HelloData {
    name: string;
    variant: string;
    dt: number;
    rate_limit_hz: number;
    robot: {
        dh: [number, number, number, number][];
        tool_transform: Flat7;
        link_radii: number[];
    };
    bolt: { pose: Flat7; head_across_flats: number; target_torque: number };
    safety: { force_threshold: number; torque_threshold: number };
}

export interface EventRecord {
    time: number;
    event: string;
    accepted: boolean;
    step: string;
    phase: string;
    mode: string;
    detail: string;
}

export interface TrajectoryData {
    samples: [number, ...number[]][];
}

export type ServerMessage =
    | { type: "hello"; data: HelloData }
    | { type: "telemetry"; data: TelemetryFrame }
    | { type: "event"; data: EventRecord }
    | { type: "trajectory"; data: TrajectoryData }
    | { type: "error"; data: { reason: string } }
    | { type: "stale"; data: { reason: string } };

export const OPERATOR_EVENTS = [
    "StartOperation", "Validate", "Repeat", "TakeManualControl",
    "ReturnToAutomatic", "EmergencyStop", "AckSafetyReset",
] as const;

export type OperatorEventName = (typeof OPERATOR_EVENTS)[number];

export interface CommandEnvelope {
    type: "command";
    client_id: string;
    seq: number;
    data:
        | { kind: "operator"; event: OperatorEventName }
        | { kind: "device_jog"; delta: Flat6; clutch: boolean }
        | { kind: "param_update"; path: string; value: unknown };
}

export function parseServerMessage(raw: string): ServerMessage {
    const msg = JSON.parse(raw);
    if (typeof msg !== "object" || msg === null || typeof msg.type !== "string") {
        throw new Error(`not a server message: ${raw.slice(0, 80)}`);
    }
    return msg as ServerMessage;
}
