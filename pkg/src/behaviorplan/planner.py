"""Behavior planning and end-to-end pipeline orchestration.

The template planner expands keyword-matched script templates into full
behavior scripts (cyclic templates share their junction keyframe across
repetitions). The pipeline solves each keyframe into a configuration,
checks every transition constraint, in-betweens and refines gap by gap
inside sliding keyframe windows, optionally tracks the result in the
physics simulation, and scores the outcome.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .constraints import (
    BagOfPrimitivesProvider,
    ConstraintWeights,
    TransitionCostReport,
    primitive_bag,
    transition_cost,
)
from .dynamics import MotionCostReport, TrackingResult, motion_cost, simulate_tracking
from .geometry import compose_rotvec
from .inbetween import Trajectory, assemble, interpolate, motion_root_delta, refine_trajectory
from .metrics import PhysErrReport, phys_err
from .pose_solver import solve_pose
from .posecode_parser import ParseError
from .script_model import (
    BehaviorScript,
    Step,
    attach_asts,
    parse_behavior_script,
    validate_behavior_script,
)
from .skeleton import Configuration, Skeleton, tpose

__all__ = [
    "TemplateLibrary",
    "PipelineConfig",
    "PipelineError",
    "PipelineResult",
    "plan_from_template",
    "load_external_plan",
    "run_pipeline",
    "default_template_library",
]

HOLD_TRANSITION = "The person holds the pose."


class PipelineError(RuntimeError):
    def __init__(self, stage: str, step: int | None, message: str):
        prefix = f"[{stage}" + (f" step {step}" if step is not None else "") + "] "
        super().__init__(prefix + message)
        self.stage = stage
        self.step = step


@dataclass(frozen=True)
class TemplateEntry:
    name: str
    cyclic: bool
    steps: tuple[tuple[str, str], ...]  # (keyframe_text, transition_text)

    def __post_init__(self):
        if len(self.steps) < 2:
            raise ValueError(f"template {self.name!r} needs at least two keyframes")
        if self.steps[-1][1].strip():
            raise ValueError(f"template {self.name!r} must end with an empty transition")
        if self.cyclic and self.steps[0][0] != self.steps[-1][0]:
            raise ValueError(
                f"cyclic template {self.name!r} must close its keyframe cycle"
            )


@dataclass
class TemplateLibrary:
    entries: dict[str, TemplateEntry]
    aliases: dict[str, str] = field(default_factory=dict)

    def keywords(self) -> list[str]:
        return sorted(set(self.entries) | set(self.aliases))

    def lookup(self, summary: str) -> TemplateEntry:
        text = " ".join(summary.lower().split())
        best = None
        for keyword in self.keywords():
            if keyword in text and (best is None or len(keyword) > len(best)):
                best = keyword
        if best is None:
            raise KeyError(
                f"no template matches {summary!r}; known keywords: {self.keywords()}"
            )
        name = self.aliases.get(best, best)
        return self.entries[name]

    @classmethod
    def from_dict(cls, data: dict) -> "TemplateLibrary":
        entries = {
            name: TemplateEntry(
                name=name,
                cyclic=bool(spec.get("cyclic", False)),
                steps=tuple(
                    (s["keyframe"], s.get("transition", "")) for s in spec["steps"]
                ),
            )
            for name, spec in data["templates"].items()
        }
        return cls(entries=entries, aliases=dict(data.get("aliases", {})))


_LIBRARY: TemplateLibrary | None = None


def default_template_library() -> TemplateLibrary:
    global _LIBRARY
    if _LIBRARY is None:
        raw = resources.files("behaviorplan.data").joinpath("templates.json").read_text()
        _LIBRARY = TemplateLibrary.from_dict(json.loads(raw))
    return _LIBRARY


def plan_from_template(
    summary: str, lib: TemplateLibrary | None = None, repetitions: int = 1
) -> BehaviorScript:
    """Expand the template matching a behavior summary.

    Cyclic templates repeat their keyframe cycle sharing the junction
    keyframe (n keyframes repeated r times give r*(n-1)+1); other templates
    concatenate copies joined by a hold transition.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    lib = lib or default_template_library()
    entry = lib.lookup(summary)
    steps: list[Step] = []
    if entry.cyclic:
        body = entry.steps[:-1]
        for _ in range(repetitions):
            for kf, tr in body:
                steps.append(Step(keyframe_text=kf, transition_text=tr))
        steps.append(Step(keyframe_text=entry.steps[-1][0], transition_text=""))
    else:
        for rep in range(repetitions):
            last_copy = rep == repetitions - 1
            for i, (kf, tr) in enumerate(entry.steps):
                if i == len(entry.steps) - 1 and not last_copy:
                    tr = HOLD_TRANSITION
                steps.append(Step(keyframe_text=kf, transition_text=tr))
    return BehaviorScript(summary=summary, description=entry.name, steps=tuple(steps))


def load_external_plan(path: str, lenient: bool = False) -> BehaviorScript:
    """Load and grammar-check an externally produced plan file."""
    with open(path, "r", encoding="utf-8") as fh:
        script = parse_behavior_script(fh.read())
    diagnostics = validate_behavior_script(script)
    if diagnostics and not lenient:
        lines = "\n".join(d.render() for d in diagnostics)
        raise PipelineError("plan", None, f"plan fails the grammar:\n{lines}")
    return attach_asts(script, lenient=lenient)


# ---------------------------------------------------------------------------
# pipeline

@dataclass
class PipelineConfig:
    weights: ConstraintWeights = field(default_factory=ConstraintWeights)
    in_between: int = 30              # in-between frames per keyframe gap
    dt: float = 1.0 / 30.0
    window_keyframes: int = 8
    blend_frames: int = 10
    simulate: bool = False
    refine: bool = True
    soft: bool = False                # keep going past transition-cost failures
    seed: int = 0
    jobs: int | None = None

    def __post_init__(self):
        if self.window_keyframes < 2:
            raise ValueError("window_keyframes must be >= 2")
        if self.blend_frames >= self.in_between + 1:
            raise ValueError("blend_frames must be < in_between + 1")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.in_between < 0:
            raise ValueError("in_between must be >= 0")

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        data = dict(data)
        weights = data.pop("constraints", None)
        cfg = cls(**data) if not weights else cls(
            weights=ConstraintWeights.from_dict(weights), **data
        )
        return cfg

    def to_dict(self) -> dict:
        return {
            "constraints": self.weights.to_dict(),
            "in_between": self.in_between,
            "dt": self.dt,
            "window_keyframes": self.window_keyframes,
            "blend_frames": self.blend_frames,
            "simulate": self.simulate,
            "refine": self.refine,
            "soft": self.soft,
            "seed": self.seed,
            "jobs": self.jobs,
        }


@dataclass
class PipelineResult:
    trajectory: Trajectory
    transition_reports: list[TransitionCostReport]
    motion_report: MotionCostReport
    phys_report: PhysErrReport
    keyframes: list[Configuration]
    tracking: TrackingResult | None = None

    @property
    def frames(self) -> int:
        return len(self.trajectory.frames)

    def run_report(self) -> dict:
        return {
            "ct": [r.to_dict() for r in self.transition_reports],
            "cm": self.motion_report.to_dict(),
            "phys_err": self.phys_report.to_dict(),
            "frames": self.frames,
        }


def _solve_keyframes(
    script: BehaviorScript, skel: Skeleton, cfg: PipelineConfig
) -> list[Configuration]:
    """Solve keyframes in order, chaining inits and applying the root
    displacement each transition implies."""
    solved: list[Configuration] = []
    init = tpose(skel)
    for i, step in enumerate(script.steps):
        if step.keyframe_ast is None:
            raise PipelineError("solve", i, "keyframe has no parsed posecodes")
        try:
            q = solve_pose(step.keyframe_ast, skel, init, seed=cfg.seed + i)
        except Exception as exc:
            raise PipelineError("solve", i, str(exc)) from exc
        solved.append(q)
        if i < len(script.steps) - 1:
            delta, yaw = motion_root_delta(step.transition_ast, q)
            init = Configuration(
                root_position=q.root_position + delta,
                root_orientation=compose_rotvec(
                    np.array([0.0, yaw, 0.0]), q.root_orientation
                ),
                joint_rotations=q.joint_rotations.copy(),
            )
    return solved


def _check_transitions(
    script: BehaviorScript,
    keyframes: list[Configuration],
    skel: Skeleton,
    cfg: PipelineConfig,
) -> list[TransitionCostReport]:
    reports = []
    for i in range(len(keyframes) - 1):
        ast = script.steps[i].transition_ast
        if ast is None:
            raise PipelineError("transition", i, "transition has no parsed primitives")
        provider = BagOfPrimitivesProvider(reference=primitive_bag(ast))
        report = transition_cost(
            keyframes[i],
            ast,
            keyframes[i + 1],
            skel,
            provider,
            cfg.weights,
            x_prev=keyframes[i - 1] if i > 0 else None,
        )
        reports.append(report)
        if not report.satisfied and not cfg.soft:
            raise PipelineError(
                "transition",
                i,
                f"transition cost {report.total:.4g} exceeds "
                f"{cfg.weights.eps_total:.4g} (use soft mode to continue)",
            )
    return reports


def _window_spans(n_gaps: int, window_keyframes: int) -> list[tuple[int, int]]:
    """Half-open gap ranges, one per sliding window."""
    per = max(1, window_keyframes - 1)
    spans = []
    start = 0
    while start < n_gaps:
        spans.append((start, min(start + per, n_gaps)))
        start += per
    return spans


def run_pipeline(
    script: BehaviorScript, cfg: PipelineConfig, skel: Skeleton
) -> PipelineResult:
    if script.steps and script.steps[0].keyframe_ast is None:
        try:
            script = attach_asts(script)
        except ParseError as exc:
            raise PipelineError("parse", None, str(exc)) from exc

    keyframes = _solve_keyframes(script, skel, cfg)
    reports = _check_transitions(script, keyframes, skel, cfg)

    n_gaps = len(keyframes) - 1
    motions = [script.steps[i].transition_ast for i in range(n_gaps)]

    def fill_gap(i: int):
        return interpolate(keyframes[i], keyframes[i + 1], cfg.in_between, motions[i])

    spans = _window_spans(n_gaps, cfg.window_keyframes)
    gap_frames: list[list[Configuration] | None] = [None] * n_gaps
    workers = cfg.jobs or 1
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for start, end in spans:
                for i, frames in zip(
                    range(start, end), pool.map(fill_gap, range(start, end))
                ):
                    gap_frames[i] = frames
    else:
        for start, end in spans:
            for i in range(start, end):
                gap_frames[i] = fill_gap(i)

    frames: list[Configuration] = []
    keyframe_indices = []
    for i in range(n_gaps):
        keyframe_indices.append(len(frames))
        frames.append(keyframes[i])
        frames.extend(gap_frames[i])
    keyframe_indices.append(len(frames))
    frames.append(keyframes[-1])
    expected = len(keyframes) + cfg.in_between * n_gaps
    if len(frames) != expected:
        raise PipelineError(
            "assemble", None, f"frame count {len(frames)} != {expected}"
        )
    traj = Trajectory(frames=frames, dt=cfg.dt, keyframe_indices=keyframe_indices)
    if cfg.refine:
        traj = refine_trajectory(traj, skel, cfg.weights)

    tracking = None
    scored = traj
    torque_log = None
    if cfg.simulate:
        try:
            tracking = simulate_tracking(skel, traj)
        except Exception as exc:
            raise PipelineError("simulate", None, str(exc)) from exc
        scored = tracking.trajectory
        torque_log = tracking.torque_log

    motion_report = motion_cost(skel, scored, torque_log=torque_log, w=cfg.weights)
    phys_report = phys_err(skel, scored)
    return PipelineResult(
        trajectory=scored,
        transition_reports=reports,
        motion_report=motion_report,
        phys_report=phys_report,
        keyframes=keyframes,
        tracking=tracking,
    )
