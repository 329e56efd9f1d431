"""Scenario files: declarative world, controller gains, faults, scripted
operator timeline and success condition for one experiment.

A scenario is a single JSON document. An "include" key merges another file
underneath it (depth-wise), and a "variants" map holds named overlays so
one file can describe an A/B comparison. Canonical scenarios ship inside
the package and can be referenced by bare name.
"""

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from math import cos, pi, sin
from pathlib import Path
from random import Random

from boltsim.bolt_driver import DEFAULT_FAULT_WINDOW
from boltsim.compliance import AdmittanceParams, SafetyMonitor
from boltsim.errors import SpecError
from boltsim.geometry import Pose
from boltsim.plant import (BoltModel, ContactParams, FaultInjection,
                           RobotModel, forward_kinematics)
from boltsim.supervisor import SupervisorConfig
from boltsim.teleop import FeedbackParams, TeleopMapping

CONTROL_DT = 0.002  # s, shared fixed step of the whole stack

_PACKAGED = "boltsim.scenarios"


def _deep_merge(base, override):
    if not isinstance(base, dict) or not isinstance(override, dict):
        return override
    out = dict(base)
    for k, v in override.items():
        out[k] = _deep_merge(base[k], v) if k in base else v
    return out


def _load_json(path: Path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid JSON in {path}: {exc}") from exc
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc}") from exc


def locate(name_or_path) -> Path:
    """Resolve a CLI argument to a scenario file: a path as given, or a
    packaged scenario referenced by bare name."""
    p = Path(name_or_path)
    if p.exists():
        return p
    candidates = [name_or_path, f"{name_or_path}.json"]
    for cand in candidates:
        ref = resources.files(_PACKAGED).joinpath(cand)
        if ref.is_file():
            return Path(str(ref))
    raise SpecError(f"scenario {name_or_path!r} not found "
                    f"(no such file, and not a packaged scenario)")


def load_document(path) -> dict:
    """Read a scenario JSON with its include chain resolved."""
    path = Path(path)
    doc = _load_json(path)
    seen = {path.resolve()}
    while "include" in doc:
        inc = doc.pop("include")
        inc_path = (path.parent / inc) if (path.parent / inc).exists() else locate(inc)
        rp = inc_path.resolve()
        if rp in seen:
            raise SpecError(f"include cycle at {inc}")
        seen.add(rp)
        doc = _deep_merge(_load_json(inc_path), doc)
        path = inc_path
    return doc


def variant_names(doc: dict):
    return sorted(doc.get("variants", {}).keys())


def resolve_variant(doc: dict, variant=None) -> dict:
    variants = doc.get("variants", {})
    base = {k: v for k, v in doc.items() if k != "variants"}
    if variant is None:
        if variants:
            raise SpecError(
                f"scenario declares variants {sorted(variants)}; pick one")
        return base
    if variant not in variants:
        raise SpecError(f"unknown variant {variant!r}; have {sorted(variants)}")
    merged = _deep_merge(base, variants[variant])
    merged["variant"] = variant
    return merged


def _pose(value, where):
    if value is None:
        return Pose()
    try:
        return Pose.from_flat(value)
    except (TypeError, ValueError) as exc:
        raise SpecError(str(exc), field=where) from exc


def _get(doc, key, default, where, kind=None):
    v = doc.get(key, default)
    if kind is not None and v is not None and not isinstance(v, kind):
        raise SpecError(f"expected {kind.__name__}, got {type(v).__name__}",
                        field=f"{where}.{key}")
    return v


@dataclass(frozen=True)
class BdcConfig:
    drive_velocity: float = 2.0
    fault_window: int = DEFAULT_FAULT_WINDOW


@dataclass(frozen=True)
class SuccessCondition:
    kind: str = "pipeline_complete"
    step: str = ""
    min_depth: float = 0.0


@dataclass(frozen=True)
class ScenarioSpec:
    """Fully resolved runtime configuration for one run."""

    name: str
    variant: str
    robot: RobotModel
    home_joints: tuple
    bolt: BoltModel
    contact: ContactParams
    admittance: AdmittanceParams
    bdc: BdcConfig
    teleop_mapping: TeleopMapping
    feedback: FeedbackParams
    faults: FaultInjection
    seeded_lateral_offset: float
    safety: SafetyMonitor
    supervisor: SupervisorConfig
    timeline: tuple
    seed: int
    duration_limit: float
    success: SuccessCondition
    expected_outcome: str = ""
    wrench_noise: float = 0.0
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def seeded_faults(self, seed) -> FaultInjection:
        """Fault set for one trial: the scripted identification error gets a
        seed-chosen direction on the lateral circle of the bolt axis."""
        if self.seeded_lateral_offset == 0.0:
            return self.faults
        rng = Random(seed)
        theta = rng.uniform(0.0, 2.0 * pi)
        m = self.seeded_lateral_offset
        bolt_pose = self.bolt.true_pose
        # orthonormal lateral directions of the bolt axis
        u = bolt_pose.rotate((1.0, 0.0, 0.0))
        v = bolt_pose.rotate((0.0, 1.0, 0.0))
        off = tuple(m * (cos(theta) * u[i] + sin(theta) * v[i]) for i in range(3))
        extra = Pose(position=off)
        return replace(self.faults,
                       identified_pose_offset=extra @ self.faults.identified_pose_offset)


def build_spec(doc: dict) -> ScenarioSpec:
    """Validate a resolved scenario document into runtime objects."""
    if "variants" in doc:
        raise SpecError("resolve a variant before building the spec")
    name = _get(doc, "name", "unnamed", "", str)

    r = _get(doc, "robot", {}, "", dict)
    try:
        robot = RobotModel(
            dh_parameters=tuple(tuple(row) for row in r["dh"]) if "dh" in r else RobotModel.dh_parameters,
            joint_limits=tuple(tuple(p) for p in r["joint_limits"]) if "joint_limits" in r else RobotModel.joint_limits,
            tool_transform=_pose(r.get("tool_transform"), "robot.tool_transform"),
            max_joint_speed=float(r.get("max_joint_speed", pi)),
            link_radii=tuple(r.get("link_radii", RobotModel.link_radii)),
        )
    except (ValueError, TypeError) as exc:
        raise SpecError(str(exc), field="robot") from exc
    home = tuple(float(j) for j in r.get("home_joints", (0.0,) * 6))
    if len(home) != 6:
        raise SpecError("home_joints must have 6 entries", field="robot.home_joints")

    b = _get(doc, "bolt", {}, "", dict)
    try:
        bolt = BoltModel(
            true_pose=_pose(b.get("pose"), "bolt.pose"),
            head_across_flats=float(b.get("head_across_flats", 0.017)),
            free_run_angle=float(b.get("free_run_angle", 2.0 * pi)),
            thread_stiffness=float(b.get("thread_stiffness", 4.0)),
            target_torque=float(b.get("target_torque", 8.0)),
            release_back_angle=float(b.get("release_back_angle", 0.35)),
        )
    except (ValueError, TypeError) as exc:
        raise SpecError(str(exc), field="bolt") from exc

    c = _get(doc, "contact", {}, "", dict)
    try:
        contact = ContactParams(**{k: float(v) for k, v in c.items()})
    except (ValueError, TypeError) as exc:
        raise SpecError(str(exc), field="contact") from exc

    a = _get(doc, "admittance", {}, "", dict)
    try:
        admittance = AdmittanceParams(
            virtual_mass=tuple(a.get("virtual_mass", AdmittanceParams.virtual_mass)),
            virtual_damping=tuple(a.get("virtual_damping", AdmittanceParams.virtual_damping)),
            virtual_stiffness=tuple(a.get("virtual_stiffness", AdmittanceParams.virtual_stiffness)),
            reference_jump_threshold=tuple(a.get("reference_jump_threshold", (0.05, 0.25))),
            rigid_mode=bool(a.get("rigid_mode", False)),
            gate_against=a.get("gate_against", "reference"),
        )
    except (ValueError, TypeError) as exc:
        raise SpecError(str(exc), field="admittance") from exc

    d = _get(doc, "bdc", {}, "", dict)
    bdc = BdcConfig(drive_velocity=float(d.get("drive_velocity", 2.0)),
                    fault_window=int(d.get("fault_window", DEFAULT_FAULT_WINDOW)))
    if bdc.drive_velocity <= 0 or bdc.fault_window < 1:
        raise SpecError("bad bdc parameters", field="bdc")

    t = _get(doc, "teleop", {}, "", dict)
    try:
        mapping = TeleopMapping(
            camera_alignment=tuple(t.get("camera_alignment", (1.0, 0.0, 0.0, 0.0))),
            motion_scale=float(t.get("motion_scale", 1.0)),
            filter_window=int(t.get("filter_window", 10)),
            engage_angle_tolerance=float(t.get("engage_angle_tolerance", 0.15)),
        )
        feedback = FeedbackParams(
            feedback_stiffness=tuple(t.get("feedback_stiffness",
                                           FeedbackParams.feedback_stiffness)),
            feedback_damping=tuple(t.get("feedback_damping",
                                         FeedbackParams.feedback_damping)),
            force_cap=float(t.get("force_cap", 4.0)),
        )
    except (ValueError, TypeError) as exc:
        raise SpecError(str(exc), field="teleop") from exc

    f = _get(doc, "faults", {}, "", dict)
    faults = FaultInjection(
        identified_pose_offset=_pose(f.get("identified_pose_offset"),
                                     "faults.identified_pose_offset"),
        driver_dead=bool(f.get("driver_dead", False)),
        bolt_misalignment=_pose(f.get("bolt_misalignment"),
                                "faults.bolt_misalignment"),
    )
    seeded = float(f.get("seeded_lateral_offset", 0.0))

    s = _get(doc, "safety", {}, "", dict)
    try:
        safety = SafetyMonitor(force_threshold=float(s.get("force_threshold", 50.0)),
                               torque_threshold=float(s.get("torque_threshold", 12.0)))
    except (ValueError, TypeError) as exc:
        raise SpecError(str(exc), field="safety") from exc

    sv = _get(doc, "supervisor", {}, "", dict)
    home_pose = forward_kinematics(robot, home)
    thr = admittance.reference_jump_threshold
    try:
        sup = SupervisorConfig(
            standoff_distance=float(sv.get("standoff_distance", 0.08)),
            approach_speed=float(sv.get("approach_speed", 0.05)),
            coupling_speed=float(sv.get("coupling_speed", 0.01)),
            distancing_speed=float(sv.get("distancing_speed", 0.05)),
            engagement_target_depth=float(sv.get("engagement_target_depth", 0.004)),
            settle_time=float(sv.get("settle_time", 1.0)),
            arrival_tolerance=float(sv.get("arrival_tolerance", 1e-3)),
            switch_speed_tolerance=float(sv.get("switch_speed_tolerance", 1e-3)),
            tracking_fault_distance=2.0 * thr[0],
            tracking_fault_angle=2.0 * thr[1],
            home_pose=home_pose,
            nominal_bolt_pose=bolt.true_pose,
            target_torque=bolt.target_torque,
            release_back_angle=bolt.release_back_angle,
        )
    except (ValueError, TypeError) as exc:
        raise SpecError(str(exc), field="supervisor") from exc

    timeline = _get(doc, "timeline", [], "", list)
    for i, entry in enumerate(timeline):
        if not isinstance(entry, dict) or "when" not in entry or "do" not in entry:
            raise SpecError("entry needs 'when' and 'do'", field=f"timeline[{i}]")

    sc = _get(doc, "success", {"kind": "pipeline_complete"}, "", dict)
    kind = sc.get("kind", "pipeline_complete")
    if kind not in ("pipeline_complete", "step_validated", "torque_reached",
                    "engagement_depth"):
        raise SpecError(f"unknown success kind {kind!r}", field="success.kind")
    success = SuccessCondition(kind=kind, step=sc.get("step", ""),
                               min_depth=float(sc.get("min_depth", 0.0)))
    if kind == "step_validated" and not success.step:
        raise SpecError("step_validated needs 'step'", field="success")

    expected = _get(doc, "expected_outcome", "", "", str)
    if expected and expected not in ("Success", "SafetyTrip", "SelfCollision",
                                     "Timeout"):
        raise SpecError(f"unknown outcome {expected!r}", field="expected_outcome")

    noise = _get(doc, "noise", {}, "", dict)

    return ScenarioSpec(
        name=name,
        variant=doc.get("variant", ""),
        robot=robot,
        home_joints=home,
        bolt=bolt,
        contact=contact,
        admittance=admittance,
        bdc=bdc,
        teleop_mapping=mapping,
        feedback=feedback,
        faults=faults,
        seeded_lateral_offset=seeded,
        safety=safety,
        supervisor=sup,
        timeline=tuple(timeline),
        seed=int(_get(doc, "seed", 0, "", int)),
        duration_limit=float(doc.get("duration_limit", 60.0)),
        success=success,
        expected_outcome=expected,
        wrench_noise=float(noise.get("wrench_amplitude", 0.0)),
        raw=doc,
    )


def load_spec(name_or_path, variant=None) -> ScenarioSpec:
    doc = load_document(locate(name_or_path))
    return build_spec(resolve_variant(doc, variant))
