"""Behavior-script data model and JSON ingestion.

Two on-disk shapes are accepted: a bare array of {"keyframe", "transition"}
steps, or an object {"summary", "description", "steps": [...]}. Text is
preserved verbatim; parsed ASTs are attached separately so that scripts
with out-of-grammar annotations remain loadable.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .posecode_parser import (
    MotionScriptAST,
    ParseError,
    PoseScriptAST,
    parse_motion_script,
    parse_pose_script,
)

__all__ = [
    "Step",
    "BehaviorScript",
    "Diagnostic",
    "ScriptError",
    "parse_behavior_script",
    "serialize_behavior_script",
    "validate_behavior_script",
    "attach_asts",
]


class ScriptError(ValueError):
    """Structural problem in a behavior-script document."""


@dataclass(frozen=True)
class Step:
    keyframe_text: str
    transition_text: str = ""
    keyframe_ast: PoseScriptAST | None = None
    transition_ast: MotionScriptAST | None = None


@dataclass(frozen=True)
class BehaviorScript:
    summary: str
    description: str
    steps: tuple[Step, ...]

    def __post_init__(self):
        if not self.steps:
            raise ScriptError("behavior script has empty steps")
        for i, step in enumerate(self.steps):
            if not step.keyframe_text.strip():
                raise ScriptError(f"step {i} has an empty keyframe")
            last = i == len(self.steps) - 1
            if last and step.transition_text.strip():
                raise ScriptError(
                    f"step {i} is last but has a non-empty transition"
                )
            if not last and not step.transition_text.strip():
                raise ScriptError(f"step {i} has an empty transition")

    @property
    def n_keyframes(self) -> int:
        return len(self.steps)

    @property
    def n_transitions(self) -> int:
        return len(self.steps) - 1


@dataclass(frozen=True)
class Diagnostic:
    step: int
    part: str        # "keyframe" or "transition"
    start: int
    end: int
    message: str

    def render(self) -> str:
        return f"step[{self.step}].{self.part}[{self.start}..{self.end}]: {self.message}"


def parse_behavior_script(document: str) -> BehaviorScript:
    """Parse JSON text into a BehaviorScript; texts are kept byte-exact."""
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ScriptError(
            f"malformed JSON at byte offset {exc.pos}: {exc.msg}"
        ) from exc
    if isinstance(data, list):
        summary, description, raw_steps = "", "", data
    elif isinstance(data, dict):
        summary = data.get("summary", "")
        description = data.get("description", "")
        raw_steps = data.get("steps")
        if raw_steps is None:
            raise ScriptError("object form requires a 'steps' array")
    else:
        raise ScriptError("document must be a JSON array or object")
    if not isinstance(raw_steps, list):
        raise ScriptError("'steps' must be an array")
    if not raw_steps:
        raise ScriptError("empty steps")
    steps = []
    for i, raw in enumerate(raw_steps):
        if not isinstance(raw, dict) or "keyframe" not in raw:
            raise ScriptError(f"step {i} must be an object with a 'keyframe'")
        steps.append(
            Step(
                keyframe_text=raw["keyframe"],
                transition_text=raw.get("transition", ""),
            )
        )
    return BehaviorScript(summary=summary, description=description, steps=tuple(steps))


def serialize_behavior_script(script: BehaviorScript) -> str:
    """Canonical combined JSON form; round-trips through parse."""
    return json.dumps(
        {
            "summary": script.summary,
            "description": script.description,
            "steps": [
                {"keyframe": s.keyframe_text, "transition": s.transition_text}
                for s in script.steps
            ],
        },
        indent=2,
    )


def validate_behavior_script(script: BehaviorScript) -> list[Diagnostic]:
    """One diagnostic per keyframe/transition fragment the grammar rejects."""
    out = []
    for i, step in enumerate(script.steps):
        try:
            parse_pose_script(step.keyframe_text)
        except ParseError as exc:
            out.append(Diagnostic(i, "keyframe", exc.start, exc.end, exc.message))
        if step.transition_text.strip():
            try:
                parse_motion_script(step.transition_text)
            except ParseError as exc:
                out.append(
                    Diagnostic(i, "transition", exc.start, exc.end, exc.message)
                )
    return out


def attach_asts(script: BehaviorScript, lenient: bool = False) -> BehaviorScript:
    """Populate the AST fields by parsing each fragment.

    In lenient mode, fragments the grammar rejects keep a None AST; in
    strict mode the first failure raises ParseError.
    """
    steps = []
    for step in script.steps:
        kf_ast = None
        tr_ast = None
        try:
            kf_ast = parse_pose_script(step.keyframe_text)
        except ParseError:
            if not lenient:
                raise
        if step.transition_text.strip():
            try:
                tr_ast = parse_motion_script(step.transition_text)
            except ParseError:
                if not lenient:
                    raise
        steps.append(replace(step, keyframe_ast=kf_ast, transition_ast=tr_ast))
    return replace(script, steps=tuple(steps))
