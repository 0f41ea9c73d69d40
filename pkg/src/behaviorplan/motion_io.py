"""Motion file formats and reproducibility plumbing.

Motion files are JSON lines: a header object {"dt", "J", "keyframes"}
followed by one object per frame {"t", "root_pos", "root_rot", "joints"}.
Torque logs are parallel JSON-lines files {"t", "tau"}. All writes go
through a temp-file rename so interrupted runs never leave truncated
output, and every writing command emits a manifest with input digests.
"""
from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .inbetween import Trajectory
from .skeleton import Configuration, Skeleton, forward_kinematics

__all__ = [
    "write_motion_jsonl",
    "read_motion_jsonl",
    "write_torque_jsonl",
    "export_positions_csv",
    "atomic_write_text",
    "RunManifest",
]

TOOL_VERSION = "behaviorplan 0.1.0"


def atomic_write_text(path: str, content: str) -> None:
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(content)
    os.replace(tmp, path)


def _floats(values) -> list:
    return np.asarray(values, dtype=float).tolist()


def motion_jsonl_text(traj: Trajectory) -> str:
    lines = [
        json.dumps(
            {
                "dt": traj.dt,
                "J": traj.frames[0].joint_rotations.shape[0],
                "keyframes": list(traj.keyframe_indices),
            }
        )
    ]
    for k, frame in enumerate(traj.frames):
        lines.append(
            json.dumps(
                {
                    "t": k * traj.dt,
                    "root_pos": _floats(frame.root_position),
                    "root_rot": _floats(frame.root_orientation),
                    "joints": _floats(frame.joint_rotations),
                }
            )
        )
    return "\n".join(lines) + "\n"


def write_motion_jsonl(path: str, traj: Trajectory) -> None:
    atomic_write_text(path, motion_jsonl_text(traj))


def read_motion_jsonl(path: str) -> Trajectory:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty motion file")
    header = json.loads(lines[0])
    frames = []
    for line in lines[1:]:
        obj = json.loads(line)
        frames.append(
            Configuration(
                root_position=np.asarray(obj["root_pos"], dtype=float),
                root_orientation=np.asarray(obj["root_rot"], dtype=float),
                joint_rotations=np.asarray(obj["joints"], dtype=float),
            )
        )
    keyframes = header.get("keyframes") or [0, len(frames) - 1]
    return Trajectory(frames=frames, dt=float(header["dt"]), keyframe_indices=keyframes)


def write_torque_jsonl(path: str, torque_log: np.ndarray, dt: float) -> None:
    lines = [
        json.dumps({"t": k * dt, "tau": _floats(row)})
        for k, row in enumerate(np.asarray(torque_log))
    ]
    atomic_write_text(path, "\n".join(lines) + "\n")


def export_positions_csv(path: str, traj: Trajectory, skel: Skeleton) -> None:
    """Wide CSV of world joint positions, one row per frame."""
    names = [j.name for j in skel.joints]
    header = ["t"] + [f"{n}_{axis}" for n in names for axis in "xyz"]
    rows = [",".join(header)]
    for k, frame in enumerate(traj.frames):
        fk = forward_kinematics(skel, frame)
        cells = [repr(k * traj.dt)] + [repr(float(v)) for v in fk.positions.ravel()]
        rows.append(",".join(cells))
    atomic_write_text(path, "\n".join(rows) + "\n")


def _digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Provenance record emitted next to every written output."""

    config: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    stage_seconds: dict = field(default_factory=dict)
    tool: str = TOOL_VERSION

    def add_input(self, path: str) -> None:
        self.inputs[path] = _digest(path)

    def add_output(self, path: str) -> None:
        if path not in self.outputs:
            self.outputs.append(path)

    def write(self, path: str) -> None:
        atomic_write_text(
            path,
            json.dumps(
                {
                    "tool": self.tool,
                    "config": self.config,
                    "inputs": self.inputs,
                    "outputs": self.outputs,
                    "stage_seconds": self.stage_seconds,
                },
                indent=2,
            )
            + "\n",
        )


class StageTimer:
    """Collects wall-clock per named stage for the manifest."""

    def __init__(self):
        self.stage_seconds: dict[str, float] = {}

    def time(self, name: str):
        timer = self

        class _Ctx:
            def __enter__(self):
                self.start = time.perf_counter()
                return self

            def __exit__(self, *exc):
                timer.stage_seconds[name] = timer.stage_seconds.get(name, 0.0) + (
                    time.perf_counter() - self.start
                )
                return False

        return _Ctx()
