"""Supervisor state machine: validated transitions, fault recovery, mode
switching gates, trajectory planning, and randomized model checking."""

from dataclasses import replace
from math import pi
from random import Random

import numpy as np
import pytest

from boltsim.errors import UnreachableTarget
from boltsim.geometry import Pose, Wrench, compose
from boltsim.plant import PlantState, RobotModel, forward_kinematics
from boltsim.supervisor import (MOTION_STEPS, STEP_ORDER, BdcStart,
                                ControlMode, EnableTeleop, FaultSignal,
                                IdentifiedPose, LoadTrajectory, OperatorEvent,
                                Phase, RequestIdentify, Step, StopMotion,
                                Supervisor, SupervisorConfig, SupervisorState)

TOOL = compose(Pose.from_translation(0, 0, 0.18),
               Pose.from_axis_angle((1, 0, 0), pi))
ROBOT = RobotModel(tool_transform=TOOL)
HOME = (0.0, -pi / 2, -pi / 2, -pi / 2, pi / 2, 0.0)
HOME_POSE = forward_kinematics(ROBOT, HOME)
BOLT_POSE = Pose(position=(0.4919, -0.1333, 0.16),
                 orientation=HOME_POSE.orientation)

CFG = SupervisorConfig(home_pose=HOME_POSE, nominal_bolt_pose=BOLT_POSE,
                       target_torque=8.0, release_back_angle=0.35)


def make_plant(pose=HOME_POSE, t=0.0, tripped=False):
    return PlantState(joints=HOME, socket_pose=pose, time=t,
                      safety_tripped=tripped)


def sup():
    return Supervisor(CFG, ROBOT, HOME)


class FakeBdc:
    def __init__(self, complete=False, driver_fault=False):
        self.complete = complete
        self.driver_fault = driver_fault


def start(s=None):
    s = s or sup()
    state = SupervisorState()
    state, actions = s.handle(state, OperatorEvent.START_OPERATION, make_plant())
    return s, state, actions


def drive_to_awaiting(s, state, plant, traj=None):
    """Simulate trajectory completion: plant lands on the trajectory end and
    time advances past duration + settle."""
    traj = traj or state.active_trajectory
    t_done = state.trajectory_start + traj.duration + CFG.settle_time + 0.01
    held = replace(plant, socket_pose=traj.end, time=t_done)
    state, _ = s.tick(state, held, FakeBdc())
    # second tick with same pose so the speed estimate stays settled
    state, actions = s.tick(state, replace(held, time=t_done + 0.002), FakeBdc())
    return state, actions


class TestPipeline:
    def test_start_plans_approach(self):
        s, state, actions = start()
        assert state.step is Step.APPROACH
        assert state.phase is Phase.EXECUTING
        assert isinstance(actions[0], LoadTrajectory)
        goal = actions[0].trajectory.end
        want = np.add(BOLT_POSE.position, (0, 0, CFG.standoff_distance))
        assert np.allclose(goal.position, want, atol=1e-9)

    def test_validate_advances_with_snapshot(self):
        s, state, _ = start()
        plant = make_plant(t=5.0)
        state, _ = drive_to_awaiting(s, state, plant)
        assert state.phase is Phase.AWAITING_VALIDATION
        state, actions = s.handle(state, OperatorEvent.VALIDATE, plant)
        assert state.step is Step.BOLT_IDENTIFICATION
        assert state.safe_snapshot[0] == plant.socket_pose
        assert any(isinstance(a, RequestIdentify) for a in actions)

    def test_identification_result_recorded(self):
        s, state, _ = start()
        plant = make_plant(t=5.0)
        state, _ = drive_to_awaiting(s, state, plant)
        state, _ = s.handle(state, OperatorEvent.VALIDATE, plant)
        est = Pose(position=(0.5, -0.13, 0.16))
        state, _ = s.handle(state, IdentifiedPose(est), plant)
        assert state.pending_target == est
        assert state.phase is Phase.AWAITING_VALIDATION

    def test_full_ordered_walkthrough(self):
        s, state, _ = start()
        plant = make_plant()
        seen = [state.step]
        for _ in range(6):
            if state.phase is Phase.EXECUTING:
                if state.active_trajectory is not None:
                    state, _ = drive_to_awaiting(s, state, plant)
                elif state.step is Step.BOLT_IDENTIFICATION:
                    state, _ = s.handle(state, IdentifiedPose(BOLT_POSE), plant)
                else:
                    state, _ = s.tick(state, plant, FakeBdc(complete=True))
            if state.phase is Phase.AWAITING_VALIDATION:
                state, _ = s.handle(state, OperatorEvent.VALIDATE, plant)
                if state.step not in seen:
                    seen.append(state.step)
        assert seen == list(STEP_ORDER)
        assert state.completed

    def test_validate_in_executing_rejected(self):
        s, state, _ = start()
        plant = make_plant()
        before = (state.step, state.phase, state.mode)
        state, actions = s.handle(state, OperatorEvent.VALIDATE, plant)
        assert (state.step, state.phase, state.mode) == before
        assert actions == []
        assert not state.event_log[-1].accepted

    def test_tighten_step_commands_bdc(self):
        s, state, _ = start()
        plant = make_plant()
        state, _ = drive_to_awaiting(s, state, plant)
        state, _ = s.handle(state, OperatorEvent.VALIDATE, plant)
        state, _ = s.handle(state, IdentifiedPose(BOLT_POSE), plant)
        state, _ = s.handle(state, OperatorEvent.VALIDATE, plant)  # couple
        state, _ = drive_to_awaiting(s, state, plant)
        state, actions = s.handle(state, OperatorEvent.VALIDATE, plant)
        assert state.step is Step.TIGHTENING
        starts = [a for a in actions if isinstance(a, BdcStart)]
        assert starts and starts[0].kind == "tighten"
        assert starts[0].target_torque == 8.0
        # completion via BDC
        state, _ = s.tick(state, plant, FakeBdc(complete=True))
        assert state.phase is Phase.AWAITING_VALIDATION


class TestFaults:
    def exec_state(self):
        s, state, _ = start()
        return s, state, make_plant(t=1.0)

    def test_fault_stops_everything(self):
        s, state, plant = self.exec_state()
        state, actions = s.handle(state, FaultSignal.SAFETY_TRIP, plant)
        assert state.phase is Phase.FAULTED
        kinds = {type(a) for a in actions}
        assert StopMotion in kinds
        assert any(isinstance(a, BdcStart) and a.kind == "stop"
                   for a in actions)

    def test_tripped_plant_detected_in_tick(self):
        s, state, plant = self.exec_state()
        state, _ = s.tick(state, replace(plant, safety_tripped=True), FakeBdc())
        assert state.phase is Phase.FAULTED

    def test_driver_fault_detected_in_tick(self):
        s, state, plant = self.exec_state()
        state, _ = s.tick(state, plant, FakeBdc(driver_fault=True))
        assert state.phase is Phase.FAULTED

    def test_tracking_divergence_detected(self):
        s, state, plant = self.exec_state()
        # move the plant far away from the commanded trajectory
        lost = make_plant(Pose(position=(0.1, 0.5, 0.9),
                               orientation=HOME_POSE.orientation), t=1.0)
        state, _ = s.tick(state, lost, FakeBdc())
        assert state.phase is Phase.FAULTED

    def test_reset_returns_to_snapshot_then_choice(self):
        s, state, plant = self.exec_state()
        snap_pose = state.safe_snapshot[0]
        state, _ = s.handle(state, FaultSignal.SAFETY_TRIP, plant)
        state, actions = s.handle(state, OperatorEvent.ACK_SAFETY_RESET, plant)
        assert state.phase is Phase.SAFE_RESET
        traj = [a for a in actions if isinstance(a, LoadTrajectory)][0].trajectory
        assert np.allclose(traj.end.position, snap_pose.position, atol=1e-9)
        # robot arrives at the snapshot
        arrived = make_plant(snap_pose, t=plant.time + traj.duration + 1.0)
        state, _ = s.tick(state, arrived, FakeBdc())
        state, _ = s.tick(state, replace(arrived, time=arrived.time + 0.002),
                          FakeBdc())
        assert state.phase is Phase.AWAITING_VALIDATION
        assert state.after_fault

    def test_validate_rejected_after_fault(self):
        s, state, plant = self.exec_state()
        state, _ = s.handle(state, FaultSignal.SAFETY_TRIP, plant)
        state, _ = s.handle(state, OperatorEvent.ACK_SAFETY_RESET, plant)
        arrived = make_plant(state.safe_snapshot[0], t=plant.time + 10.0)
        state, _ = s.tick(state, arrived, FakeBdc())
        state, _ = s.tick(state, replace(arrived, time=arrived.time + 0.002),
                          FakeBdc())
        before = state.step
        state, _ = s.handle(state, OperatorEvent.VALIDATE, arrived)
        assert not state.event_log[-1].accepted
        assert state.step == before
        # Repeat is the legal way forward
        state, actions = s.handle(state, OperatorEvent.REPEAT, arrived)
        assert state.phase is Phase.EXECUTING
        assert not state.after_fault

    def test_emergency_stop_from_awaiting(self):
        s, state, plant = self.exec_state()
        state, _ = drive_to_awaiting(s, state, plant)
        state, _ = s.handle(state, OperatorEvent.EMERGENCY_STOP, plant)
        assert state.phase is Phase.FAULTED


class TestModeSwitch:
    def test_switch_waits_for_standstill(self):
        s, state, _ = start()
        plant = make_plant(t=1.0)
        state, actions = s.handle(state, OperatorEvent.TAKE_MANUAL_CONTROL, plant)
        assert state.phase is Phase.SWITCHING_MODE
        assert any(isinstance(a, StopMotion) for a in actions)
        # moving plant: no switch
        moving = make_plant(Pose(position=(0.6, -0.13, 0.3),
                                 orientation=HOME_POSE.orientation), t=1.002)
        state, actions = s.tick(state, moving, FakeBdc())
        assert state.mode is ControlMode.AUTOMATIC
        # hold still long enough for the speed estimate to decay
        t = 1.002
        for _ in range(200):
            t += 0.002
            state, actions = s.tick(state, replace(moving, time=t), FakeBdc())
            if state.mode is ControlMode.MANUAL:
                break
        assert state.mode is ControlMode.MANUAL
        assert state.phase is Phase.EXECUTING
        assert any(isinstance(a, EnableTeleop) and a.enabled for a in actions)

    def test_return_to_automatic_lands_awaiting(self):
        s, state, _ = start()
        plant = make_plant(t=1.0)
        state, _ = s.handle(state, OperatorEvent.TAKE_MANUAL_CONTROL, plant)
        for i in range(200):
            state, _ = s.tick(state, replace(plant, time=1.0 + 0.002 * (i + 1)),
                              FakeBdc())
        assert state.mode is ControlMode.MANUAL
        state, _ = s.handle(state, OperatorEvent.RETURN_TO_AUTOMATIC,
                            replace(plant, time=2.0))
        assert state.phase is Phase.SWITCHING_MODE
        for i in range(200):
            state, _ = s.tick(state,
                              replace(plant, time=2.0 + 0.002 * (i + 1)),
                              FakeBdc())
        assert state.mode is ControlMode.AUTOMATIC
        assert state.phase is Phase.AWAITING_VALIDATION

    def test_authority_everywhere_but_switching(self):
        s = sup()
        plant = make_plant()
        for phase in (Phase.IDLE, Phase.EXECUTING, Phase.AWAITING_VALIDATION,
                      Phase.FAULTED, Phase.SAFE_RESET):
            state = SupervisorState(phase=phase,
                                    safe_snapshot=(HOME_POSE, HOME))
            for ev in (OperatorEvent.TAKE_MANUAL_CONTROL,
                       OperatorEvent.EMERGENCY_STOP):
                out, _ = s.handle(state, ev, plant)
                assert out.event_log[-1].accepted, (phase, ev)
        state = SupervisorState(phase=Phase.SWITCHING_MODE)
        for ev in (OperatorEvent.TAKE_MANUAL_CONTROL,
                   OperatorEvent.EMERGENCY_STOP):
            out, _ = s.handle(state, ev, plant)
            assert not out.event_log[-1].accepted


class TestPlanning:
    def test_approach_standoff_construction(self):
        s = sup()
        traj = s.plan_step_trajectory(Step.APPROACH, HOME_POSE, BOLT_POSE)
        want = np.add(BOLT_POSE.position,
                      np.multiply(BOLT_POSE.z_axis(), CFG.standoff_distance))
        assert np.allclose(traj.end.position, want, atol=1e-9)

    def test_coupling_ends_at_engagement_depth(self):
        s = sup()
        standoff = Pose(position=np.add(BOLT_POSE.position, (0, 0, 0.08)),
                        orientation=BOLT_POSE.orientation)
        traj = s.plan_step_trajectory(Step.COUPLING, standoff, BOLT_POSE)
        want = np.add(BOLT_POSE.position,
                      (0, 0, -CFG.engagement_target_depth))
        assert np.allclose(traj.end.position, want, atol=1e-9)

    def test_distancing_ends_home(self):
        s = sup()
        engaged = Pose(position=np.add(BOLT_POSE.position, (0, 0, -0.004)),
                       orientation=BOLT_POSE.orientation)
        traj = s.plan_step_trajectory(Step.DISTANCING, engaged, BOLT_POSE)
        assert np.allclose(traj.end.position, CFG.home_pose.position, atol=1e-9)

    def test_unreachable_target_raises(self):
        s = sup()
        far = Pose(position=(5.0, 0.0, 0.0), orientation=BOLT_POSE.orientation)
        with pytest.raises(UnreachableTarget):
            s.plan_step_trajectory(Step.APPROACH, HOME_POSE, far)


# ---------------------------------------------------------------------------
# randomized model checking

EVENT_POOL = list(OperatorEvent) + list(FaultSignal)


def random_walk(seed, steps=60):
    """Drive the supervisor with random events/plants; returns the states
    and the inputs that produced them (for replay)."""
    rng = Random(seed)
    s = sup()
    state = SupervisorState()
    plant = make_plant()
    inputs = []
    states = [state]
    t = 0.0
    for _ in range(steps):
        t += 0.002
        if rng.random() < 0.55:
            ev = rng.choice(EVENT_POOL)
            if ev is FaultSignal.TRACKING_DIVERGED and rng.random() < 0.5:
                ev = OperatorEvent.VALIDATE
            inputs.append(("event", ev, t))
            state, _ = s.handle(state, ev, replace(plant, time=t))
        else:
            # synthetic plant with random speed
            moving = rng.random() < 0.5
            pose = Pose(position=(0.5 + (rng.random() * 0.01 if moving else 0.0),
                                  -0.13, 0.3),
                        orientation=HOME_POSE.orientation)
            snap = replace(plant, socket_pose=pose, time=t)
            inputs.append(("tick", pose.to_flat(), t))
            state, _ = s.tick(state, snap, FakeBdc())
        states.append(state)
    return inputs, states


def replay(inputs):
    s = sup()
    state = SupervisorState()
    states = [state]
    for kind, payload, t in inputs:
        if kind == "event":
            state, _ = s.handle(state, payload,
                                replace(make_plant(), time=t))
        else:
            snap = replace(make_plant(Pose.from_flat(payload)), time=t)
            state, _ = s.tick(state, snap, FakeBdc())
        states.append(state)
    return states


class TestModelChecking:
    def test_no_step_advance_without_validate(self):
        for seed in range(200):
            inputs, states = random_walk(seed)
            for (kind, payload, _), before, after in zip(inputs, states,
                                                         states[1:]):
                if after.step is not before.step:
                    order = list(STEP_ORDER)
                    assert kind == "event"
                    assert payload is OperatorEvent.VALIDATE
                    assert order.index(after.step) == order.index(before.step) + 1

    def test_mode_switch_only_in_switching_phase_at_standstill(self):
        for seed in range(200):
            inputs, states = random_walk(seed)
            for before, after in zip(states, states[1:]):
                if after.mode is not before.mode:
                    assert before.phase is Phase.SWITCHING_MODE
                    assert before.speed_estimate < CFG.switch_speed_tolerance

    def test_replay_reproduces_state_trajectory(self):
        for seed in range(50):
            inputs, states = random_walk(seed)
            again = replay(inputs)
            assert len(states) == len(again)
            for a, b in zip(states, again):
                assert a == b
