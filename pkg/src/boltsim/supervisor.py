"""High-level supervision of the tightening pipeline.

The pipeline is a fixed sequence of steps; every advance requires an
explicit operator validation. Faults (safety trip, dead driver, tracking
divergence, emergency stop) land in a single Faulted phase from which the
operator acknowledges a reset back to the last validated configuration and
then either repeats the step or takes manual control. Mode switches go
through a dedicated phase that waits for the arm to stand still.

The supervisor is a pure transition system: handle()/tick() map an
immutable state plus inputs to a new state and a list of actions for the
control loop to execute.
"""

import enum
from dataclasses import dataclass, replace

from boltsim.compliance import rgc_tick
from boltsim.errors import UnreachableTarget
from boltsim.geometry import (Pose, TimedTrajectory, linear_trajectory,
                              pose_error)
from boltsim.plant import NoConvergence, JointLimitViolation, RobotModel, inverse_kinematics


class Step(enum.Enum):
    APPROACH = "Approach"
    BOLT_IDENTIFICATION = "BoltIdentification"
    COUPLING = "Coupling"
    TIGHTENING = "Tightening"
    RELEASING = "Releasing"
    DISTANCING = "Distancing"


STEP_ORDER = (Step.APPROACH, Step.BOLT_IDENTIFICATION, Step.COUPLING,
              Step.TIGHTENING, Step.RELEASING, Step.DISTANCING)

MOTION_STEPS = (Step.APPROACH, Step.COUPLING, Step.DISTANCING)


class Phase(enum.Enum):
    IDLE = "Idle"
    EXECUTING = "Executing"
    AWAITING_VALIDATION = "AwaitingValidation"
    FAULTED = "Faulted"
    SAFE_RESET = "SafeReset"
    SWITCHING_MODE = "SwitchingMode"


class ControlMode(enum.Enum):
    AUTOMATIC = "Automatic"
    MANUAL = "Manual"


class OperatorEvent(enum.Enum):
    VALIDATE = "Validate"
    REPEAT = "Repeat"
    TAKE_MANUAL_CONTROL = "TakeManualControl"
    RETURN_TO_AUTOMATIC = "ReturnToAutomatic"
    EMERGENCY_STOP = "EmergencyStop"
    ACK_SAFETY_RESET = "AckSafetyReset"
    START_OPERATION = "StartOperation"


class FaultSignal(enum.Enum):
    SAFETY_TRIP = "SafetyTrip"
    DRIVER_FAULT = "DriverFault"
    TRACKING_DIVERGED = "TrackingDiverged"


@dataclass(frozen=True)
class IdentifiedPose:
    """Result of the bolt identification stub, fed back by the loop."""
    pose: Pose


# ---------------------------------------------------------------------------
# actions emitted toward the control loop

@dataclass(frozen=True)
class StopMotion:
    pass


@dataclass(frozen=True)
class LoadTrajectory:
    trajectory: TimedTrajectory


@dataclass(frozen=True)
class BdcStart:
    kind: str            # "tighten" | "rotate_by" | "stop" | "idle"
    target_torque: float = 0.0
    rotation_amount: float = 0.0


@dataclass(frozen=True)
class EnableTeleop:
    enabled: bool


@dataclass(frozen=True)
class SetMode:
    mode: ControlMode


@dataclass(frozen=True)
class RequestIdentify:
    pass


@dataclass(frozen=True)
class ResetSafety:
    pass


@dataclass(frozen=True)
class EventRecord:
    time: float
    event: str
    accepted: bool
    step: str
    phase: str
    mode: str
    detail: str = ""


@dataclass(frozen=True)
class SupervisorConfig:
    standoff_distance: float = 0.08   # m above the bolt along its axis
    approach_speed: float = 0.05      # m/s
    coupling_speed: float = 0.01      # m/s
    distancing_speed: float = 0.05    # m/s
    engagement_target_depth: float = 0.004  # m of socket travel past the head plane
    settle_time: float = 1.0          # s added after a trajectory before completion
    arrival_tolerance: float = 1e-3   # m, SafeReset arrival check
    switch_speed_tolerance: float = 1e-3  # m/s, stand-still gate for mode switches
    tracking_fault_distance: float = 0.1   # m, 2x the reference jump threshold
    tracking_fault_angle: float = 0.5      # rad
    min_segment_duration: float = 0.2  # s, floor for degenerate moves
    home_pose: Pose = Pose()
    nominal_bolt_pose: Pose = Pose()
    target_torque: float = 8.0
    release_back_angle: float = 0.35


@dataclass(frozen=True)
class SupervisorState:
    step: Step = Step.APPROACH
    phase: Phase = Phase.IDLE
    mode: ControlMode = ControlMode.AUTOMATIC
    safe_snapshot: tuple = None        # (Pose, joints) at the last validation
    pending_target: Pose = None        # identified bolt pose
    event_log: tuple = ()
    after_fault: bool = False          # AwaitingValidation reached via SafeReset
    active_trajectory: TimedTrajectory = None
    trajectory_start: float = 0.0
    switch_target: ControlMode = None
    completed: bool = False
    transition_count: int = 0
    last_plant_position: tuple = None
    last_plant_time: float = 0.0
    speed_estimate: float = 0.0   # smoothed Cartesian speed, m/s
    speed_samples: int = 0


def _log(state, plant_time, event, accepted, detail=""):
    rec = EventRecord(time=plant_time, event=event, accepted=accepted,
                      step=state.step.value, phase=state.phase.value,
                      mode=state.mode.value, detail=detail)
    return replace(state, event_log=state.event_log + (rec,),
                   transition_count=state.transition_count + (1 if accepted else 0))


def _standoff_pose(target: Pose, distance: float) -> Pose:
    ax = target.z_axis()
    return Pose(position=(target.position[0] + distance * ax[0],
                          target.position[1] + distance * ax[1],
                          target.position[2] + distance * ax[2]),
                orientation=target.orientation)


def _engage_pose(target: Pose, depth: float) -> Pose:
    return _standoff_pose(target, -depth)


class Supervisor:
    """Transition logic bound to one scenario configuration."""

    def __init__(self, config: SupervisorConfig, robot: RobotModel = None,
                 seed_joints=None):
        self.config = config
        self.robot = robot
        self.seed_joints = tuple(seed_joints) if seed_joints is not None else None

    # -- trajectory planning ------------------------------------------------

    def _check_reachable(self, pose: Pose):
        if self.robot is None or self.seed_joints is None:
            return
        try:
            inverse_kinematics(self.robot, pose, self.seed_joints)
        except (NoConvergence, JointLimitViolation) as exc:
            raise UnreachableTarget(str(exc)) from exc

    def _segment(self, a: Pose, b: Pose, speed: float) -> float:
        dp, _ = pose_error(b, a)
        dist = (dp[0] ** 2 + dp[1] ** 2 + dp[2] ** 2) ** 0.5
        return max(dist / speed, self.config.min_segment_duration)

    def plan_step_trajectory(self, step: Step, current: Pose,
                             target: Pose) -> TimedTrajectory:
        """Straight-line plan for a motion step.

        Approach ends at the standoff point above the target, Coupling
        descends onto it, Distancing retreats to standoff and then home.
        """
        cfg = self.config
        if step is Step.APPROACH:
            goal = _standoff_pose(target, cfg.standoff_distance)
            self._check_reachable(goal)
            return linear_trajectory(current, goal,
                                     self._segment(current, goal, cfg.approach_speed))
        if step is Step.COUPLING:
            goal = _engage_pose(target, cfg.engagement_target_depth)
            self._check_reachable(goal)
            return linear_trajectory(current, goal,
                                     self._segment(current, goal, cfg.coupling_speed))
        if step is Step.DISTANCING:
            mid = _standoff_pose(target, cfg.standoff_distance)
            home = cfg.home_pose
            self._check_reachable(home)
            t1 = self._segment(current, mid, cfg.coupling_speed)
            t2 = self._segment(mid, home, cfg.distancing_speed)
            samples = ((0.0, current), (t1, mid), (t1 + t2, home))
            return TimedTrajectory(samples=samples)
        raise ValueError(f"{step} is not a motion step")

    # -- event handling -----------------------------------------------------

    def handle(self, state: SupervisorState, event, plant):
        """Process one operator/plant event; returns (state, actions)."""
        if isinstance(event, OperatorEvent):
            return self._handle_operator(state, event, plant)
        if isinstance(event, FaultSignal):
            return self._handle_fault(state, event, plant)
        if isinstance(event, IdentifiedPose):
            return self._handle_identified(state, event, plant)
        raise TypeError(f"unsupported event {event!r}")

    def _reject(self, state, plant, name, why):
        return _log(state, plant.time, name, False, why), []

    def _handle_operator(self, state, event, plant):
        name = event.value
        cfg = self.config

        if event is OperatorEvent.EMERGENCY_STOP:
            if state.phase is Phase.SWITCHING_MODE:
                return self._reject(state, plant, name, "switching in progress")
            new = replace(state, phase=Phase.FAULTED, active_trajectory=None,
                          switch_target=None)
            new = _log(new, plant.time, name, True)
            return new, [StopMotion(), BdcStart(kind="stop"), EnableTeleop(False)]

        if event is OperatorEvent.TAKE_MANUAL_CONTROL:
            if state.phase is Phase.SWITCHING_MODE:
                return self._reject(state, plant, name, "switching in progress")
            if state.mode is ControlMode.MANUAL:
                return _log(state, plant.time, name, True, "already manual"), []
            new = replace(state, phase=Phase.SWITCHING_MODE,
                          switch_target=ControlMode.MANUAL,
                          active_trajectory=None, after_fault=False)
            new = _log(new, plant.time, name, True)
            return new, [StopMotion(), BdcStart(kind="stop")]

        if event is OperatorEvent.RETURN_TO_AUTOMATIC:
            if state.mode is not ControlMode.MANUAL or state.phase is Phase.SWITCHING_MODE:
                return self._reject(state, plant, name, "not in manual control")
            new = replace(state, phase=Phase.SWITCHING_MODE,
                          switch_target=ControlMode.AUTOMATIC)
            new = _log(new, plant.time, name, True)
            return new, [StopMotion(), EnableTeleop(False)]

        if event is OperatorEvent.START_OPERATION:
            if state.phase is not Phase.IDLE or state.completed:
                return self._reject(state, plant, name, "operation already active")
            snapshot = (plant.socket_pose, plant.joints)
            target = state.pending_target or cfg.nominal_bolt_pose
            try:
                traj = self.plan_step_trajectory(Step.APPROACH,
                                                 plant.socket_pose, target)
            except UnreachableTarget as exc:
                return self._reject(state, plant, name, f"unreachable: {exc}")
            new = replace(state, step=Step.APPROACH, phase=Phase.EXECUTING,
                          safe_snapshot=snapshot, pending_target=target,
                          active_trajectory=traj, trajectory_start=plant.time)
            new = _log(new, plant.time, name, True)
            return new, [LoadTrajectory(traj)]

        if event is OperatorEvent.ACK_SAFETY_RESET:
            if state.phase is not Phase.FAULTED:
                return self._reject(state, plant, name, "no fault to acknowledge")
            if state.safe_snapshot is None:
                new = replace(state, phase=Phase.IDLE)
                new = _log(new, plant.time, name, True, "no snapshot, back to idle")
                return new, [ResetSafety()]
            snap_pose, _ = state.safe_snapshot
            traj = linear_trajectory(
                plant.socket_pose, snap_pose,
                self._segment(plant.socket_pose, snap_pose, cfg.approach_speed))
            new = replace(state, phase=Phase.SAFE_RESET, active_trajectory=traj,
                          trajectory_start=plant.time)
            new = _log(new, plant.time, name, True)
            return new, [ResetSafety(), LoadTrajectory(traj)]

        if event is OperatorEvent.VALIDATE:
            manual_exec = (state.mode is ControlMode.MANUAL
                           and state.phase is Phase.EXECUTING)
            if state.phase is not Phase.AWAITING_VALIDATION and not manual_exec:
                return self._reject(state, plant, name, "nothing awaiting validation")
            if state.after_fault:
                return self._reject(state, plant, name,
                                    "faulted step: repeat or take manual control")
            return self._advance(state, plant)

        if event is OperatorEvent.REPEAT:
            if state.phase is not Phase.AWAITING_VALIDATION:
                return self._reject(state, plant, name, "nothing awaiting validation")
            new = replace(state, after_fault=False)
            new = _log(new, plant.time, name, True)
            return self._emit_step_actions(new, plant)

        raise TypeError(f"unhandled operator event {event!r}")

    def _advance(self, state, plant):
        """Validation accepted: snapshot, move to the next step, start it."""
        snapshot = (plant.socket_pose, plant.joints)
        state = replace(state, safe_snapshot=snapshot)
        if state.step is Step.DISTANCING:
            new = replace(state, phase=Phase.IDLE, completed=True,
                          active_trajectory=None)
            new = _log(new, plant.time, "Validate", True, "pipeline complete")
            return new, [StopMotion()]
        nxt = STEP_ORDER[STEP_ORDER.index(state.step) + 1]
        new = replace(state, step=nxt)
        new = _log(new, plant.time, "Validate", True, f"advance to {nxt.value}")
        if new.mode is ControlMode.MANUAL:
            # the operator executes the step; nothing to orchestrate
            return replace(new, phase=Phase.EXECUTING, active_trajectory=None), []
        return self._emit_step_actions(new, plant)

    def _emit_step_actions(self, state, plant):
        """Enter Executing for the current step and emit its actions."""
        cfg = self.config
        step = state.step
        if step in MOTION_STEPS:
            target = state.pending_target or cfg.nominal_bolt_pose
            try:
                traj = self.plan_step_trajectory(step, plant.socket_pose, target)
            except UnreachableTarget as exc:
                new = replace(state, phase=Phase.FAULTED)
                new = _log(new, plant.time, "PlanFailure", True, str(exc))
                return new, [StopMotion()]
            new = replace(state, phase=Phase.EXECUTING, active_trajectory=traj,
                          trajectory_start=plant.time)
            return new, [LoadTrajectory(traj)]
        if step is Step.BOLT_IDENTIFICATION:
            new = replace(state, phase=Phase.EXECUTING, active_trajectory=None)
            return new, [RequestIdentify()]
        if step is Step.TIGHTENING:
            new = replace(state, phase=Phase.EXECUTING, active_trajectory=None)
            return new, [BdcStart(kind="tighten", target_torque=cfg.target_torque)]
        if step is Step.RELEASING:
            new = replace(state, phase=Phase.EXECUTING, active_trajectory=None)
            return new, [BdcStart(kind="rotate_by",
                                  rotation_amount=-cfg.release_back_angle)]
        raise ValueError(f"no actions for step {step}")

    def _handle_fault(self, state, signal, plant):
        if state.phase in (Phase.FAULTED,):
            return _log(state, plant.time, signal.value, True, "already faulted"), []
        new = replace(state, phase=Phase.FAULTED, active_trajectory=None,
                      switch_target=None)
        new = _log(new, plant.time, signal.value, True)
        return new, [StopMotion(), BdcStart(kind="stop")]

    def _handle_identified(self, state, event, plant):
        if (state.step is not Step.BOLT_IDENTIFICATION
                or state.phase is not Phase.EXECUTING):
            return self._reject(state, plant, "IdentifiedPose",
                                "identification not in progress")
        new = replace(state, pending_target=event.pose,
                      phase=Phase.AWAITING_VALIDATION)
        new = _log(new, plant.time, "IdentifiedPose", True,
                   "estimated pose recorded")
        return new, []

    # -- periodic polling ---------------------------------------------------

    def tick(self, state: SupervisorState, plant, bdc_status):
        """Poll completion and fault conditions; returns (state, actions)."""
        cfg = self.config
        actions = []

        speed = state.speed_estimate
        samples = state.speed_samples
        if state.last_plant_position is not None:
            dt = plant.time - state.last_plant_time
            if dt > 0.0:
                a = plant.socket_pose.position
                b = state.last_plant_position
                inst = ((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2
                        + (a[2] - b[2]) ** 2) ** 0.5 / dt
                # smoothed: a lagging estimate can only delay a switch,
                # never allow one while the arm still moves
                speed = inst if samples == 0 else 0.9 * speed + 0.1 * inst
                samples += 1
        have_speed = samples > 0
        state = replace(state, last_plant_position=plant.socket_pose.position,
                        last_plant_time=plant.time, speed_estimate=speed,
                        speed_samples=samples)

        # autonomous fault detection
        if plant.safety_tripped and state.phase not in (Phase.FAULTED,):
            return self._handle_fault(state, FaultSignal.SAFETY_TRIP, plant)
        if (state.phase is Phase.EXECUTING and state.mode is ControlMode.AUTOMATIC):
            if bdc_status is not None and bdc_status.driver_fault:
                return self._handle_fault(state, FaultSignal.DRIVER_FAULT, plant)
            # divergence builds over hundreds of ticks; probing every tenth
            # sample keeps detection latency at 20 ms for a 0.1 m threshold
            if (state.active_trajectory is not None
                    and state.speed_samples % 10 == 0):
                ref = rgc_tick(state.active_trajectory,
                               plant.time - state.trajectory_start)
                dp, dr = pose_error(ref, plant.socket_pose)
                dist = (dp[0] ** 2 + dp[1] ** 2 + dp[2] ** 2) ** 0.5
                ang = (dr[0] ** 2 + dr[1] ** 2 + dr[2] ** 2) ** 0.5
                if dist > cfg.tracking_fault_distance or ang > cfg.tracking_fault_angle:
                    return self._handle_fault(state, FaultSignal.TRACKING_DIVERGED,
                                              plant)

        if state.phase is Phase.EXECUTING and state.mode is ControlMode.AUTOMATIC:
            if state.step in MOTION_STEPS and state.active_trajectory is not None:
                elapsed = plant.time - state.trajectory_start
                if elapsed >= state.active_trajectory.duration + cfg.settle_time:
                    new = replace(state, phase=Phase.AWAITING_VALIDATION,
                                  active_trajectory=None)
                    new = _log(new, plant.time, "StepComplete", True,
                               state.step.value)
                    return new, actions
            elif state.step in (Step.TIGHTENING, Step.RELEASING):
                if bdc_status is not None and bdc_status.complete:
                    new = replace(state, phase=Phase.AWAITING_VALIDATION)
                    detail = ("tightening complete"
                              if state.step is Step.TIGHTENING
                              else "releasing complete")
                    new = _log(new, plant.time, "StepComplete", True, detail)
                    return new, [BdcStart(kind="idle")]

        elif state.phase is Phase.SAFE_RESET:
            snap_pose, _ = state.safe_snapshot
            dp, _ = pose_error(snap_pose, plant.socket_pose)
            dist = (dp[0] ** 2 + dp[1] ** 2 + dp[2] ** 2) ** 0.5
            if (dist <= cfg.arrival_tolerance and have_speed
                    and speed < cfg.switch_speed_tolerance):
                new = replace(state, phase=Phase.AWAITING_VALIDATION,
                              after_fault=True, active_trajectory=None)
                new = _log(new, plant.time, "SafeResetComplete", True)
                return new, actions

        elif state.phase is Phase.SWITCHING_MODE:
            if (have_speed and speed < cfg.switch_speed_tolerance
                    and state.switch_target is not None):
                target = state.switch_target
                if target is ControlMode.MANUAL:
                    new = replace(state, mode=target, phase=Phase.EXECUTING,
                                  switch_target=None)
                    new = _log(new, plant.time, "ModeSwitched", True,
                               target.value)
                    return new, [EnableTeleop(True), SetMode(target)]
                new = replace(state, mode=target, phase=Phase.AWAITING_VALIDATION,
                              switch_target=None)
                new = _log(new, plant.time, "ModeSwitched", True, target.value)
                return new, [EnableTeleop(False), SetMode(target)]

        return state, actions
