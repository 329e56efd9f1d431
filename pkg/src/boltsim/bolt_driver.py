"""Bolt driver controller: constant-velocity tightening to a target torque,
position-mode release rotation, and one-tick stop interruption.

The controller is a pure tick function. It flags a dead driver when it
commands motion and the shaft encoder stops answering for a full detection
window.
"""

import enum
from dataclasses import dataclass, replace


class BdcMode(enum.Enum):
    IDLE = "Idle"
    TIGHTEN_TO_TORQUE = "TightenToTorque"
    ROTATE_BY = "RotateBy"
    STOP = "Stop"


@dataclass(frozen=True)
class BdcCommand:
    mode: BdcMode = BdcMode.IDLE
    target_torque: float = 0.0     # N m, TightenToTorque
    rotation_amount: float = 0.0   # rad, RotateBy; sign = direction
    drive_velocity: float = 2.0    # rad/s, magnitude

    def __post_init__(self):
        if not self.drive_velocity > 0.0:
            raise ValueError("drive_velocity must be > 0")
        if self.mode is BdcMode.TIGHTEN_TO_TORQUE and not self.target_torque > 0.0:
            raise ValueError("target_torque must be > 0 for TightenToTorque")

    @staticmethod
    def idle():
        return BdcCommand()

    @staticmethod
    def stop():
        return BdcCommand(mode=BdcMode.STOP)

    @staticmethod
    def tighten(target_torque, drive_velocity=2.0):
        return BdcCommand(mode=BdcMode.TIGHTEN_TO_TORQUE,
                          target_torque=target_torque,
                          drive_velocity=drive_velocity)

    @staticmethod
    def rotate_by(amount, drive_velocity=2.0):
        return BdcCommand(mode=BdcMode.ROTATE_BY, rotation_amount=amount,
                          drive_velocity=drive_velocity)


@dataclass(frozen=True)
class BdcStatus:
    mode: BdcMode = BdcMode.IDLE
    measured_torque: float = 0.0
    rotated: float = 0.0            # rad since the active command started
    complete: bool = False
    interrupted: bool = False
    driver_fault: bool = False
    velocity_command: float = 0.0   # rad/s emitted on the last tick
    baseline_rotation: float = 0.0  # encoder angle when the command started
    stall_ticks: int = 0
    last_rotation: float = 0.0

    def __post_init__(self):
        if self.complete and self.interrupted:
            raise ValueError("complete and interrupted are mutually exclusive")


DEFAULT_FAULT_WINDOW = 50  # ticks (0.1 s at 500 Hz)


def bdc_tick(status: BdcStatus, cmd: BdcCommand, measured_torque: float,
             measured_rotation: float, dt: float,
             fault_window: int = DEFAULT_FAULT_WINDOW):
    """Advance the controller one tick; returns (status, velocity command).

    A command whose mode differs from the active one re-baselines progress
    and clears the completion/fault flags. Stop always zeroes the output on
    the very tick it is processed.
    """
    if not dt > 0.0:
        raise ValueError("dt must be > 0")

    if cmd.mode is not status.mode:
        status = BdcStatus(mode=cmd.mode,
                           measured_torque=measured_torque,
                           baseline_rotation=measured_rotation,
                           last_rotation=measured_rotation)

    rotated = measured_rotation - status.baseline_rotation
    velocity = 0.0
    complete = status.complete
    interrupted = status.interrupted

    if cmd.mode is BdcMode.TIGHTEN_TO_TORQUE:
        if measured_torque >= cmd.target_torque:
            complete = True
        else:
            velocity = cmd.drive_velocity
    elif cmd.mode is BdcMode.ROTATE_BY:
        if abs(rotated) >= abs(cmd.rotation_amount):
            complete = True
        else:
            velocity = cmd.drive_velocity if cmd.rotation_amount >= 0.0 else -cmd.drive_velocity
    elif cmd.mode is BdcMode.STOP:
        interrupted = True
    if complete:
        velocity = 0.0

    # dead-shaft detection: commanded motion with a frozen encoder
    if velocity != 0.0 and measured_rotation == status.last_rotation:
        stall = status.stall_ticks + 1
    else:
        stall = 0
    fault = status.driver_fault or stall >= fault_window

    new = replace(status,
                  measured_torque=measured_torque,
                  rotated=rotated,
                  complete=complete,
                  interrupted=interrupted,
                  driver_fault=fault,
                  velocity_command=velocity,
                  stall_ticks=stall,
                  last_rotation=measured_rotation)
    return new, velocity


def torque_overshoot_bound(drive_velocity: float, thread_stiffness: float,
                           dt: float) -> float:
    """Worst single-tick overshoot of the discrete threshold check."""
    return thread_stiffness * drive_velocity * dt
