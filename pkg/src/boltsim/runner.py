"""Headless scenario execution: the 500 Hz loop wiring plant, admittance,
bolt driver, teleop and supervisor together, with full-rate telemetry and
event logging, per-run reports and seeded batch aggregation.

Runs are deterministic: identical spec + seed produce byte-identical logs.
"""

import csv
import json
import time as _time
from dataclasses import dataclass, replace
from math import ceil
from pathlib import Path
from random import Random

from boltsim import plant as plant_mod
from boltsim._speedup import kernels as _k
from boltsim.bolt_driver import BdcCommand, BdcStatus, bdc_tick
from boltsim.compliance import (AdmittanceState, admittance_update, rgc_tick,
                                safety_check, safety_reset)
from boltsim.errors import SpecError
from boltsim.geometry import Pose, Wrench
from boltsim.scenario import CONTROL_DT, ScenarioSpec
from boltsim.scripted import ScriptedOperator, SimView
from boltsim.supervisor import (STEP_ORDER, BdcStart, ControlMode,
                                EnableTeleop, IdentifiedPose, LoadTrajectory,
                                Phase, RequestIdentify, ResetSafety, SetMode,
                                StopMotion, Supervisor, SupervisorState)
from boltsim.teleop import TeleopSession, feedback_force


@dataclass
class RunReport:
    outcome: str
    peak_normal_force: float
    final_bolt_torque: float   # highest driving torque achieved in the run
    coupling_error: float      # final lateral offset from the actual bolt, m
    safety_trip_count: int
    sim_time: float
    seed: int
    name: str
    variant: str = ""
    event_log: str = ""
    telemetry: str = ""

    def to_dict(self):
        return {
            "outcome": self.outcome,
            "peak_normal_force": self.peak_normal_force,
            "final_bolt_torque": self.final_bolt_torque,
            "coupling_error": self.coupling_error,
            "safety_trip_count": self.safety_trip_count,
            "sim_time": self.sim_time,
            "seed": self.seed,
            "name": self.name,
            "variant": self.variant,
            "event_log": self.event_log,
            "telemetry": self.telemetry,
        }


def _dumps(obj):
    return json.dumps(obj, separators=(",", ":"))


class ScenarioRun:
    """One seeded execution of a resolved scenario."""

    def __init__(self, spec: ScenarioSpec, seed=None, out_dir=None,
                 gateway=None, realtime=False):
        self.spec = spec
        self.seed = spec.seed if seed is None else int(seed)
        self.out_dir = Path(out_dir) if out_dir else None
        self.gateway = gateway
        self.realtime = realtime
        self.dt = CONTROL_DT

        self.faults = spec.seeded_faults(self.seed)
        self.model = spec.robot
        self.bolt = spec.bolt
        self.contact = spec.contact
        self.adm_params = spec.admittance
        self.monitor = spec.safety
        self.plant = plant_mod.make_initial_state(self.model, spec.home_joints)
        self.sup = Supervisor(spec.supervisor, self.model, spec.home_joints)
        self.sup_state = SupervisorState()
        self.adm = AdmittanceState.at(self.plant.socket_pose)
        self.bdc_status = BdcStatus()
        self.active_cmd = BdcCommand.idle()
        self.teleop = TeleopSession(spec.teleop_mapping, spec.feedback)
        self.teleop_enabled = False
        self.scripted = ScriptedOperator(spec.timeline, self.dt,
                                         spec.bolt.target_torque)
        self._actual_bolt = plant_mod.actual_bolt_pose(self.bolt, self.faults)
        self.feedback_wrench = Wrench()
        self._noise = Random(self.seed ^ 0x5EED) if spec.wrench_noise > 0 else None

        self.peak_normal = 0.0
        self.peak_torque = 0.0
        self.trip_count = 0
        self._tripped_before = False
        self._event_cursor = 0
        self._frames = None
        self._events = None
        # ceil(control rate / broadcast limit): published seq gaps stay bounded
        self.publish_stride = gateway.stride if gateway is not None else 17

    # -- helpers ------------------------------------------------------------

    def actual_bolt(self) -> Pose:
        return self._actual_bolt

    def _apply_actions(self, actions):
        for act in actions:
            if isinstance(act, LoadTrajectory):
                if self.gateway is not None:
                    self.gateway.broadcast_trajectory(act.trajectory)
            elif isinstance(act, BdcStart):
                v = self.spec.bdc.drive_velocity
                if act.kind == "tighten":
                    self.active_cmd = BdcCommand.tighten(act.target_torque, v)
                elif act.kind == "rotate_by":
                    self.active_cmd = BdcCommand.rotate_by(act.rotation_amount, v)
                elif act.kind == "stop":
                    self.active_cmd = BdcCommand.stop()
                else:
                    self.active_cmd = BdcCommand.idle()
            elif isinstance(act, EnableTeleop):
                self.teleop_enabled = act.enabled
                if act.enabled:
                    # align the stylus with the socket so the engagement
                    # gate can close; a live console shows this alignment
                    aligned = Pose(orientation=_k.quat_mul(
                        _k.quat_conjugate(self.spec.teleop_mapping.camera_alignment),
                        self.plant.socket_pose.orientation))
                    self.teleop.reset(device_pose=aligned)
            elif isinstance(act, ResetSafety):
                self.monitor = safety_reset(self.monitor, True)
            elif isinstance(act, RequestIdentify):
                pose = plant_mod.identify_bolt(self.bolt, self.faults)
                self.sup_state, more = self.sup.handle(
                    self.sup_state, IdentifiedPose(pose), self.plant)
                self._apply_actions(more)
            elif isinstance(act, (StopMotion, SetMode)):
                pass  # trajectory/mode state lives in the supervisor
            else:
                raise TypeError(f"unknown action {act!r}")

    def _handle_event(self, ev):
        kind = ev[0]
        if kind == "operator":
            self.sup_state, actions = self.sup.handle(self.sup_state, ev[1],
                                                      self.plant)
            self._apply_actions(actions)
        elif kind == "set_fault":
            _, field_name, value = ev
            if field_name == "driver_dead":
                self.faults = replace(self.faults, driver_dead=bool(value))
            elif field_name == "identified_pose_offset":
                self.faults = replace(self.faults,
                                      identified_pose_offset=Pose.from_flat(value))
            elif field_name == "bolt_misalignment":
                self.faults = replace(self.faults,
                                      bolt_misalignment=Pose.from_flat(value))
            else:
                raise SpecError(f"unknown fault field {field_name!r}")
            self._actual_bolt = plant_mod.actual_bolt_pose(self.bolt, self.faults)
        elif kind == "jog":
            if self.teleop_enabled:
                _, delta, clutch = ev
                self.teleop.push_jog(delta, clutch, self.plant.time)
        elif kind == "param_update":
            self._apply_param(ev[1], ev[2])
        else:
            raise TypeError(f"unknown scripted event {ev!r}")

    def _apply_param(self, path, value):
        if path == "admittance.virtual_damping":
            self.adm_params = replace(self.adm_params,
                                      virtual_damping=tuple(value))
        elif path == "admittance.virtual_stiffness":
            self.adm_params = replace(self.adm_params,
                                      virtual_stiffness=tuple(value))
        # unknown paths are ignored: they are operator-tunables only

    def _measured_wrench(self) -> Wrench:
        w = self.plant.contact_wrench
        if self._noise is None:
            return w
        a = self.spec.wrench_noise
        n = self._noise
        return Wrench(
            force=tuple(f + n.uniform(-a, a) for f in w.force),
            torque=tuple(t + n.uniform(-a, a) for t in w.torque))

    def _frame(self, seq):
        p = self.plant
        s = self.sup_state
        b = self.bdc_status
        ref = self.adm.last_reference
        return {
            "seq": seq,
            "time": round(p.time, 9),
            "joints": list(p.joints),
            "socket_pose": p.socket_pose.to_flat(),
            "bolt_rotation": p.bolt_rotation,
            "bolt_torque": p.bolt_torque,
            "engagement_depth": p.engagement_depth,
            "contact_wrench": p.contact_wrench.to_flat(),
            "safety_tripped": p.safety_tripped,
            "step": s.step.value,
            "phase": s.phase.value,
            "mode": s.mode.value,
            "after_fault": s.after_fault,
            "bdc": {
                "mode": b.mode.value,
                "measured_torque": b.measured_torque,
                "rotated": b.rotated,
                "complete": b.complete,
                "interrupted": b.interrupted,
                "driver_fault": b.driver_fault,
                "velocity_command": b.velocity_command,
            },
            "reference_pose": ref.to_flat(),
            "virtual_pose": self.adm.virtual_pose.to_flat(),
            "virtual_twist": list(self.adm.virtual_twist.linear
                                  + self.adm.virtual_twist.angular),
            "feedback_wrench": self.feedback_wrench.to_flat(),
            "driver_angle": p.driver_angle,
            "driver_dead": self.faults.driver_dead,
        }

    def _normal_force(self) -> float:
        """Axial contact force magnitude along the actual bolt axis."""
        f_tool = self.plant.contact_wrench.force
        fw = _k.quat_rotate(self.plant.socket_pose.orientation, f_tool)
        z = self.actual_bolt().z_axis()
        return abs(fw[0] * z[0] + fw[1] * z[1] + fw[2] * z[2])

    def _lateral_error(self) -> float:
        bolt = self.actual_bolt()
        z = bolt.z_axis()
        bp = bolt.position
        sp = self.plant.socket_pose.position
        r = (sp[0] - bp[0], sp[1] - bp[1], sp[2] - bp[2])
        ax = r[0] * z[0] + r[1] * z[1] + r[2] * z[2]
        l2 = sum((r[i] - ax * z[i]) ** 2 for i in range(3))
        return l2 ** 0.5

    def _success(self) -> bool:
        cond = self.spec.success
        if cond.kind == "pipeline_complete":
            return self.sup_state.completed
        if cond.kind == "step_validated":
            names = [s.value for s in STEP_ORDER]
            want = names.index(cond.step)
            have = names.index(self.sup_state.step.value)
            return self.sup_state.completed or have > want
        if cond.kind == "torque_reached":
            return self.plant.bolt_torque >= self.bolt.target_torque
        if cond.kind == "engagement_depth":
            return self.plant.engagement_depth >= cond.min_depth
        return False

    # -- main loop ----------------------------------------------------------

    def run(self) -> RunReport:
        spec = self.spec
        dt = self.dt
        max_ticks = int(round(spec.duration_limit / dt))
        outcome = None

        tele_path = ev_path = ""
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            tele_path = str(self.out_dir / "telemetry.jsonl")
            ev_path = str(self.out_dir / "events.jsonl")
            self._frames = open(tele_path, "w", encoding="utf-8")
            self._events = open(ev_path, "w", encoding="utf-8")

        wall_start = _time.perf_counter()
        try:
            for seq in range(max_ticks):
                view = SimView(self.plant, self.sup_state, self.bdc_status,
                               self.adm, self.monitor, self.actual_bolt(),
                               self.teleop_enabled)
                events = self.scripted.poll(view)
                if self.gateway is not None:
                    events.extend(self.gateway.drain_commands())
                for ev in events:
                    self._handle_event(ev)

                self.sup_state, actions = self.sup.tick(
                    self.sup_state, self.plant, self.bdc_status)
                self._apply_actions(actions)

                # reference selection: teleop in manual, RGC otherwise
                reference = None
                if (self.teleop_enabled
                        and self.sup_state.mode is ControlMode.MANUAL
                        and self.sup_state.phase is Phase.EXECUTING):
                    reference = self.teleop.tick(self.plant.socket_pose,
                                                 self.adm.last_reference,
                                                 self.plant.time)
                elif self.sup_state.active_trajectory is not None:
                    reference = rgc_tick(
                        self.sup_state.active_trajectory,
                        self.plant.time - self.sup_state.trajectory_start)

                measured = self._measured_wrench()
                self.bdc_status, drive_velocity = bdc_tick(
                    self.bdc_status, self.active_cmd, self.plant.bolt_torque,
                    self.plant.driver_angle, dt,
                    fault_window=spec.bdc.fault_window)

                self.adm, commanded = admittance_update(
                    self.adm, self.adm_params, reference, measured, dt)

                self.monitor = safety_check(self.monitor, measured)
                if self.monitor.tripped and not self._tripped_before:
                    self.trip_count += 1
                self._tripped_before = self.monitor.tripped

                self.plant = plant_mod.step(
                    self.plant, commanded, drive_velocity, self.faults, dt,
                    model=self.model, bolt=self.bolt, contact=self.contact,
                    safety_tripped=self.monitor.tripped,
                    bolt_pose=self._actual_bolt)

                if self.teleop_enabled:
                    self.feedback_wrench = feedback_force(
                        self.adm, spec.feedback, spec.teleop_mapping)
                else:
                    self.feedback_wrench = Wrench()

                nf = self._normal_force()
                if nf > self.peak_normal:
                    self.peak_normal = nf
                if self.plant.bolt_torque > self.peak_torque:
                    self.peak_torque = self.plant.bolt_torque

                self._flush_logs(seq)
                if self.gateway is not None and seq % self.publish_stride == 0:
                    self.gateway.offer_frame(self._frame(seq))

                # capsule sweep every 10 ms: interpenetration grows over many
                # ticks, so a 5-tick stride cannot miss a real strike
                if seq % 5 == 0 and plant_mod.check_self_collision(
                        self.model, self.plant.joints):
                    outcome = "SelfCollision"
                    break
                if self._success():
                    outcome = "Success"
                    break
                if self.monitor.tripped and not self.scripted.recovery_pending():
                    outcome = "SafetyTrip"
                    break

                if self.realtime:
                    target = wall_start + (seq + 1) * dt
                    lag = target - _time.perf_counter()
                    if lag > 0:
                        _time.sleep(lag)

            if outcome is None:
                outcome = "SafetyTrip" if self.monitor.tripped else "Timeout"
            if self.gateway is not None:
                # clients always see the terminal state, whatever the stride
                self.gateway.offer_frame(self._frame(seq))
        finally:
            if self._frames is not None:
                self._frames.close()
                self._events.close()

        report = RunReport(
            outcome=outcome,
            peak_normal_force=self.peak_normal,
            final_bolt_torque=self.peak_torque,
            coupling_error=self._lateral_error(),
            safety_trip_count=self.trip_count,
            sim_time=round(self.plant.time, 9),
            seed=self.seed,
            name=spec.name,
            variant=spec.variant,
            event_log=ev_path,
            telemetry=tele_path,
        )
        if self.out_dir is not None:
            with open(self.out_dir / "report.json", "w", encoding="utf-8") as fh:
                json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
                fh.write("\n")
        return report

    def _flush_logs(self, seq):
        log = self.sup_state.event_log
        if self._frames is not None:
            self._frames.write(_dumps(self._frame(seq)))
            self._frames.write("\n")
            while self._event_cursor < len(log):
                rec = log[self._event_cursor]
                self._events.write(_dumps({
                    "time": round(rec.time, 9),
                    "event": rec.event,
                    "accepted": rec.accepted,
                    "step": rec.step,
                    "phase": rec.phase,
                    "mode": rec.mode,
                    "detail": rec.detail,
                }))
                self._events.write("\n")
                self._event_cursor += 1
        if self.gateway is not None:
            self.gateway.offer_events(log, seq)


def run_scenario(spec: ScenarioSpec, seed=None, out_dir=None, gateway=None,
                 realtime=False) -> RunReport:
    """Execute one scenario to completion; see ScenarioRun."""
    return ScenarioRun(spec, seed=seed, out_dir=out_dir, gateway=gateway,
                       realtime=realtime).run()


def report_from_logs(telemetry_path, spec: ScenarioSpec, seed,
                     event_log_path="") -> RunReport:
    """Recompute a run's report purely from its telemetry log."""
    peak_normal = 0.0
    peak_torque = 0.0
    trips = 0
    tripped_prev = False
    last = None
    bolt = plant_mod.actual_bolt_pose(spec.bolt, spec.seeded_faults(seed))
    z = bolt.z_axis()
    with open(telemetry_path, "r", encoding="utf-8") as fh:
        for line in fh:
            fr = json.loads(line)
            last = fr
            sp = Pose.from_flat(fr["socket_pose"])
            f_tool = tuple(fr["contact_wrench"][:3])
            fw = _k.quat_rotate(sp.orientation, f_tool)
            nf = abs(fw[0] * z[0] + fw[1] * z[1] + fw[2] * z[2])
            peak_normal = max(peak_normal, nf)
            peak_torque = max(peak_torque, fr["bolt_torque"])
            if fr["safety_tripped"] and not tripped_prev:
                trips += 1
            tripped_prev = fr["safety_tripped"]
    if last is None:
        raise SpecError("empty telemetry log")
    sp = Pose.from_flat(last["socket_pose"])
    z = bolt.z_axis()
    r = tuple(sp.position[i] - bolt.position[i] for i in range(3))
    ax = sum(r[i] * z[i] for i in range(3))
    lat = sum((r[i] - ax * z[i]) ** 2 for i in range(3)) ** 0.5

    # outcome classification mirrors the live loop
    if last["safety_tripped"]:
        outcome = "SafetyTrip"
    elif plant_mod.check_self_collision(spec.robot, tuple(last["joints"])):
        outcome = "SelfCollision"
    else:
        cond = spec.success
        ok = False
        if cond.kind == "torque_reached":
            ok = last["bolt_torque"] >= spec.bolt.target_torque
        elif cond.kind == "engagement_depth":
            ok = last["engagement_depth"] >= cond.min_depth
        elif cond.kind == "pipeline_complete":
            ok = last["phase"] == "Idle" and last["step"] == "Distancing"
        elif cond.kind == "step_validated":
            names = [s.value for s in STEP_ORDER]
            ok = names.index(last["step"]) > names.index(cond.step)
        outcome = "Success" if ok else "Timeout"
    return RunReport(
        outcome=outcome, peak_normal_force=peak_normal,
        final_bolt_torque=peak_torque, coupling_error=lat,
        safety_trip_count=trips, sim_time=last["time"], seed=seed,
        name=spec.name, variant=spec.variant,
        event_log=event_log_path, telemetry=str(telemetry_path))


# ---------------------------------------------------------------------------
# batches

def run_batch(doc_or_spec, n, seed_base=0, out_dir=None, variants=None):
    """n seeded runs per variant; returns {variant: [RunReport]} and writes
    runs.csv + summary.json when out_dir is given."""
    from boltsim.scenario import build_spec, resolve_variant, variant_names

    if isinstance(doc_or_spec, ScenarioSpec):
        specs = {doc_or_spec.variant or "": doc_or_spec}
    else:
        names = variants if variants is not None else variant_names(doc_or_spec)
        if names:
            specs = {v: build_spec(resolve_variant(doc_or_spec, v)) for v in names}
        else:
            specs = {"": build_spec(resolve_variant(doc_or_spec))}

    out_dir = Path(out_dir) if out_dir else None
    results = {}
    for variant, spec in sorted(specs.items()):
        reports = []
        for i in range(n):
            seed = seed_base + i
            run_dir = None
            if out_dir is not None:
                sub = f"{variant or 'base'}_seed{seed}"
                run_dir = out_dir / sub
            reports.append(run_scenario(spec, seed=seed, out_dir=run_dir))
        results[variant] = reports

    if out_dir is not None:
        _write_batch_outputs(out_dir, results)
    return results


def _mean(xs):
    return sum(xs) / len(xs) if xs else 0.0


def _std(xs):
    if len(xs) < 2:
        return 0.0
    m = _mean(xs)
    return (sum((x - m) ** 2 for x in xs) / (len(xs) - 1)) ** 0.5


def batch_summary(results):
    out = {}
    for variant, reports in sorted(results.items()):
        forces = [r.peak_normal_force for r in reports]
        out[variant or "base"] = {
            "runs": len(reports),
            "trip_rate": _mean([1.0 if r.outcome == "SafetyTrip" else 0.0
                                for r in reports]),
            "trips": sum(r.safety_trip_count for r in reports),
            "success_rate": _mean([1.0 if r.outcome == "Success" else 0.0
                                   for r in reports]),
            "peak_normal_force_mean": _mean(forces),
            "peak_normal_force_std": _std(forces),
        }
    return out


def _write_batch_outputs(out_dir: Path, results):
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "runs.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["variant", "seed", "outcome", "peak_normal_force",
                    "final_bolt_torque", "coupling_error",
                    "safety_trip_count", "sim_time"])
        for variant, reports in sorted(results.items()):
            for r in reports:
                w.writerow([variant or "base", r.seed, r.outcome,
                            repr(r.peak_normal_force),
                            repr(r.final_bolt_torque),
                            repr(r.coupling_error),
                            r.safety_trip_count, repr(r.sim_time)])
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(batch_summary(results), fh, indent=2, sort_keys=True)
        fh.write("\n")
