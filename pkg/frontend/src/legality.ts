/** Mirror of the supervisor's event legality, keyed on the displayed
 * frame. A button enabled here is never rejected as an invalid
 * transition in nominal operation. */

import type { OperatorEventName, TelemetryFrame } from "./protocol.js";

export function enabledEvents(frame: TelemetryFrame | null): Set<OperatorEventName> {
    const out = new Set<OperatorEventName>();
    if (frame === null) {
        return out;
    }
    const { phase, mode, after_fault: afterFault, step } = frame;
    const switching = phase === "SwitchingMode";

    if (!switching) {
        out.add("EmergencyStop");
        if (mode !== "Manual") {
            out.add("TakeManualControl");
        }
    }
    if (phase === "Idle" && step === "Approach") {
        out.add("StartOperation");
    }
    if (phase === "AwaitingValidation") {
        out.add("Repeat");
        if (!afterFault) {
            out.add("Validate");
        }
    }
    if (mode === "Manual" && phase === "Executing") {
        out.add("Validate"); // operator announces manual step completion
    }
    if (mode === "Manual" && !switching) {
        out.add("ReturnToAutomatic");
    }
    if (phase === "Faulted") {
        out.add("AckSafetyReset");
    }
    return out;
}

export function jogAllowed(frame: TelemetryFrame | null): boolean {
    return frame !== null && frame.mode === "Manual" && frame.phase === "Executing";
}
