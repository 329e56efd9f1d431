"""Scripted operator: turns a scenario timeline into operator events, fault
flips and device-jog streams, reproducing a human supervising (and when
needed rescuing) the pipeline deterministically.

A timeline entry is {"when": <condition>, "do": <action>}. One-shot actions
fire the first tick their condition holds; program actions (auto_validate,
jog_couple, ratchet, jog_program) install standing behaviors that keep
emitting until done.
"""

from boltsim.errors import SpecError
from boltsim.supervisor import ControlMode, OperatorEvent, Phase, Step

OPERATOR_EVENTS = {e.value: e for e in OperatorEvent}


class SimView:
    """Read-only snapshot the scripts see: what an operator could observe
    on the console plus the world truth a human would see through the
    camera (the actual bolt location)."""

    def __init__(self, plant, sup_state, bdc_status, adm_state, monitor,
                 actual_bolt, teleop_enabled):
        self.plant = plant
        self.sup = sup_state
        self.bdc = bdc_status
        self.adm = adm_state
        self.monitor = monitor
        self.actual_bolt = actual_bolt
        self.teleop_enabled = teleop_enabled

    @property
    def time(self):
        return self.plant.time

    def lateral_error(self):
        """Socket offset from the actual bolt axis, perpendicular component."""
        z = self.actual_bolt.z_axis()
        bp = self.actual_bolt.position
        sp = self.plant.socket_pose.position
        r = (sp[0] - bp[0], sp[1] - bp[1], sp[2] - bp[2])
        ax = r[0] * z[0] + r[1] * z[1] + r[2] * z[2]
        lx = r[0] - ax * z[0]
        ly = r[1] - ax * z[1]
        lz = r[2] - ax * z[2]
        return (lx * lx + ly * ly + lz * lz) ** 0.5

    def axial_height(self):
        """Socket tip height above the bolt head plane (signed)."""
        z = self.actual_bolt.z_axis()
        bp = self.actual_bolt.position
        sp = self.plant.socket_pose.position
        return ((sp[0] - bp[0]) * z[0] + (sp[1] - bp[1]) * z[1]
                + (sp[2] - bp[2]) * z[2])


def _check_condition(cond, view: SimView) -> bool:
    kind = cond.get("type")
    if kind == "time":
        return view.time >= float(cond["t"])
    if kind == "phase_is":
        ok = view.sup.phase.value == cond["phase"]
        if ok and "step" in cond:
            ok = view.sup.step.value == cond["step"]
        return ok
    if kind == "step_begins":
        return (view.sup.step.value == cond["step"]
                and view.sup.phase is Phase.EXECUTING)
    if kind == "awaiting_after_fault":
        return view.sup.phase is Phase.AWAITING_VALIDATION and view.sup.after_fault
    if kind == "coupling_lateral_error_gt":
        return (view.sup.step is Step.COUPLING
                and view.sup.phase is Phase.EXECUTING
                and view.lateral_error() > float(cond["value"]))
    if kind == "manual_ready":
        return (view.sup.mode is ControlMode.MANUAL
                and view.sup.phase is Phase.EXECUTING
                and view.teleop_enabled)
    if kind == "driver_fault":
        return view.bdc is not None and view.bdc.driver_fault
    if kind == "bolt_torque_ge":
        return view.plant.bolt_torque >= float(cond["value"])
    raise SpecError(f"unknown condition type {kind!r}", field="timeline.when")


# ---------------------------------------------------------------------------
# standing behaviors

class AutoValidate:
    """Validate each AwaitingValidation entry after a short reaction delay.
    Post-fault validations are never auto-issued (those demand an explicit
    Repeat or TakeManualControl from the script)."""

    def __init__(self, spec, dt):
        self.delay = float(spec.get("delay", 0.1))
        self._armed_at = None
        self._last_round = -1

    def emit(self, view):
        sup = view.sup
        if sup.phase is not Phase.AWAITING_VALIDATION or sup.after_fault:
            self._armed_at = None
            return []
        if sup.transition_count == self._last_round:
            return []
        if self._armed_at is None:
            self._armed_at = view.time
        if view.time - self._armed_at >= self.delay:
            self._armed_at = None
            self._last_round = sup.transition_count
            return [("operator", OperatorEvent.VALIDATE)]
        return []

    @property
    def done(self):
        return False


class JogCouple:
    """Manual coupling rescue: align laterally over the actual bolt, then
    descend along its axis until the socket is engaged to the target depth."""

    def __init__(self, spec, dt):
        self.speed = float(spec.get("speed", 0.005))
        self.target_depth = float(spec.get("target_depth", 0.002))
        self.align_tol = float(spec.get("align_tol", 0.0005))
        self.dt = dt
        self.finished = False

    def emit(self, view):
        if self.finished:
            return []
        if view.plant.engagement_depth >= self.target_depth:
            self.finished = True
            return []
        if not view.teleop_enabled:
            return []
        z = view.actual_bolt.z_axis()
        bp = view.actual_bolt.position
        sp = view.plant.socket_pose.position
        step = self.speed * self.dt
        if view.lateral_error() > self.align_tol:
            r = (bp[0] - sp[0], bp[1] - sp[1], bp[2] - sp[2])
            ax = r[0] * z[0] + r[1] * z[1] + r[2] * z[2]
            lx = r[0] - ax * z[0]
            ly = r[1] - ax * z[1]
            lz = r[2] - ax * z[2]
            n = (lx * lx + ly * ly + lz * lz) ** 0.5
            if n > step:
                lx, ly, lz = lx / n * step, ly / n * step, lz / n * step
            return [("jog", (lx, ly, lz, 0.0, 0.0, 0.0), True)]
        # descend against the axis
        return [("jog", (-z[0] * step, -z[1] * step, -z[2] * step,
                         0.0, 0.0, 0.0), True)]

    @property
    def done(self):
        return self.finished


class Ratchet:
    """Manual tightening with a dead driver: twist the engaged socket about
    the bolt axis, lift clear, twist back, re-couple, repeat until the
    thread torque reaches the target."""

    def __init__(self, spec, dt):
        self.yaw_step = float(spec.get("yaw_step", 1.2))
        self.yaw_rate = float(spec.get("yaw_rate", 2.0))
        self.lift = float(spec.get("lift", 0.012))
        self.travel_speed = float(spec.get("travel_speed", 0.05))
        self.target = float(spec["target_torque"])
        self.dt = dt
        self.state = "twist"
        self.progress = 0.0
        self.finished = False

    def emit(self, view):
        if self.finished:
            return []
        if view.plant.bolt_torque >= self.target:
            self.finished = True
            return []
        if not view.teleop_enabled:
            return []
        z = view.actual_bolt.z_axis()
        if self.state == "twist":
            d = min(self.yaw_rate * self.dt, self.yaw_step - self.progress)
            self.progress += d
            if self.progress >= self.yaw_step:
                self.state, self.progress = "lift", 0.0
            return [("jog", (0.0, 0.0, 0.0, z[0] * d, z[1] * d, z[2] * d), True)]
        if self.state == "lift":
            d = min(self.travel_speed * self.dt, self.lift - self.progress)
            self.progress += d
            if self.progress >= self.lift:
                self.state, self.progress = "untwist", 0.0
            return [("jog", (z[0] * d, z[1] * d, z[2] * d, 0.0, 0.0, 0.0), True)]
        if self.state == "untwist":
            d = min(self.yaw_rate * self.dt, self.yaw_step - self.progress)
            self.progress += d
            if self.progress >= self.yaw_step:
                self.state, self.progress = "descend", 0.0
            return [("jog", (0.0, 0.0, 0.0, -z[0] * d, -z[1] * d, -z[2] * d), True)]
        # descend
        d = min(self.travel_speed * self.dt, self.lift - self.progress)
        self.progress += d
        if self.progress >= self.lift:
            self.state, self.progress = "twist", 0.0
        return [("jog", (-z[0] * d, -z[1] * d, -z[2] * d, 0.0, 0.0, 0.0), True)]

    @property
    def done(self):
        return self.finished


class JogProgram:
    """Sequential world-frame moves (translation + rotation vector per move)
    executed at a constant speed; used to script pathological excursions."""

    def __init__(self, spec, dt):
        self.moves = list(spec.get("moves", []))
        self.dt = dt
        self.idx = 0
        self.progress = 0.0

    def emit(self, view):
        if self.idx >= len(self.moves) or not view.teleop_enabled:
            return []
        move = self.moves[self.idx]
        delta = [float(v) for v in move["delta"]]
        speed = float(move.get("speed", 0.05))
        dist = sum(v * v for v in delta) ** 0.5
        if dist == 0.0:
            self.idx += 1
            return []
        step = min(speed * self.dt, dist - self.progress)
        self.progress += step
        if self.progress >= dist:
            self.idx += 1
            self.progress = 0.0
        f = step / dist
        return [("jog", tuple(v * f for v in delta), True)]

    @property
    def done(self):
        return self.idx >= len(self.moves)


_PROGRAMS = {
    "auto_validate": AutoValidate,
    "jog_couple": JogCouple,
    "ratchet": Ratchet,
    "jog_program": JogProgram,
}


class ScriptedOperator:
    """Evaluates the timeline each tick and emits ordered events:
    ("operator", OperatorEvent) | ("set_fault", field, value) |
    ("jog", delta6, clutch)."""

    def __init__(self, timeline, dt, target_torque):
        self.entries = [dict(e, fired=False) for e in timeline]
        self.dt = dt
        self.target_torque = target_torque
        self.programs = []

    def poll(self, view: SimView):
        out = []
        for entry in self.entries:
            if entry["fired"]:
                continue
            if not _check_condition(entry["when"], view):
                continue
            entry["fired"] = True
            do = entry["do"]
            kind = do.get("type")
            if kind == "operator":
                name = do.get("event")
                if name not in OPERATOR_EVENTS:
                    raise SpecError(f"unknown operator event {name!r}",
                                    field="timeline.do")
                out.append(("operator", OPERATOR_EVENTS[name]))
            elif kind == "set_fault":
                out.append(("set_fault", do["field"], do["value"]))
            elif kind in _PROGRAMS:
                cfg = dict(do)
                if kind == "ratchet" and "target_torque" not in cfg:
                    cfg["target_torque"] = self.target_torque
                self.programs.append(_PROGRAMS[kind](cfg, self.dt))
            else:
                raise SpecError(f"unknown action type {kind!r}",
                                field="timeline.do")
        for prog in self.programs:
            out.extend(prog.emit(view))
        self.programs = [p for p in self.programs if not p.done]
        return out

    def recovery_pending(self):
        """True while an un-fired AckSafetyReset entry remains: a tripped
        run may still be rescued by the script."""
        for entry in self.entries:
            if entry["fired"]:
                continue
            do = entry["do"]
            if (do.get("type") == "operator"
                    and do.get("event") == OperatorEvent.ACK_SAFETY_RESET.value):
                return True
        return False
