"""Keyframe in-betweening: deterministic interpolation plus limit refinement.

Each keyframe gap is interpolated independently with a zero-tangent cubic
ease (the motion pauses at keyframes), so gaps can be processed in any
order or in parallel with bit-identical results. Transition scripts shape
the gap: speed tokens warp the in-between time grid, and move primitives
lay out the root translation profile phase by phase.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintWeights
from .geometry import rotvec_to_matrix
from .posecode_parser import MotionScriptAST
from .skeleton import Configuration, Skeleton

__all__ = [
    "Trajectory",
    "interpolate",
    "assemble",
    "refine_trajectory",
    "motion_root_delta",
    "MOVE_DISTANCE",
    "TURN_ANGLE",
    "SPEED_EXPONENT",
]

# meters of root travel per move primitive, by magnitude token
MOVE_DISTANCE = {"greatly": 1.0, "way over": 0.75, "slightly": 0.25, "unspecified": 0.5}
# radians of yaw per turn primitive, by magnitude token
TURN_ANGLE = {
    "greatly": np.pi,
    "way over": 0.75 * np.pi,
    "slightly": 0.25 * np.pi,
    "unspecified": 0.5 * np.pi,
}
# ease-curve exponents per speed token; < 1 front-loads the motion
SPEED_EXPONENT = {
    "very fast": 0.5,
    "fast": 0.75,
    "average pace": 1.0,
    "slow": 1.5,
    "unspecified": 1.0,
}

REFINE_ITERATIONS = 500
REFINE_STEP = 1e-2
REFINE_GRAD_TOL = 1e-6
REFINE_SMOOTHNESS = 1e-2


@dataclass
class Trajectory:
    frames: list[Configuration]
    dt: float
    keyframe_indices: list[int]

    def __post_init__(self):
        if not self.frames:
            raise ValueError("trajectory needs at least one frame")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        ki = self.keyframe_indices
        if ki:
            if ki[0] != 0 or ki[-1] != len(self.frames) - 1:
                raise ValueError("keyframe indices must span the trajectory")
            if any(b <= a for a, b in zip(ki, ki[1:])):
                raise ValueError("keyframe indices must be strictly increasing")

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def duration(self) -> float:
        return (len(self.frames) - 1) * self.dt

    def joint_array(self) -> np.ndarray:
        return np.stack([f.joint_rotations for f in self.frames])

    def root_position_array(self) -> np.ndarray:
        return np.stack([f.root_position for f in self.frames])

    def root_orientation_array(self) -> np.ndarray:
        return np.stack([f.root_orientation for f in self.frames])


def _smoothstep(t):
    return t * t * (3.0 - 2.0 * t)


def heading_frame(q: Configuration) -> tuple[np.ndarray, np.ndarray]:
    """Character left/forward unit vectors from the root yaw."""
    fwd = rotvec_to_matrix(q.root_orientation) @ np.array([0.0, 0.0, 1.0])
    fwd[1] = 0.0
    n = np.linalg.norm(fwd)
    fwd = np.array([0.0, 0.0, 1.0]) if n < 1e-9 else fwd / n
    left = np.array([fwd[2], 0.0, -fwd[0]])
    return left, fwd


def motion_root_delta(
    motion: MotionScriptAST | None, q_start: Configuration
) -> tuple[np.ndarray, float]:
    """Net root translation and yaw implied by a transition script.

    Directions are resolved in the heading frame at the start keyframe;
    yaw accumulates across turn primitives (counterclockwise positive).
    """
    delta = np.zeros(3)
    yaw = 0.0
    if motion is None:
        return delta, yaw
    left, fwd = heading_frame(q_start)
    for prim in motion.primitives():
        if prim.kind == "move_direction":
            step = MOVE_DISTANCE[prim.magnitude]
            direction = {
                "forward": fwd,
                "backward": -fwd,
                "left": left,
                "right": -left,
            }[prim.direction]
            delta = delta + step * direction
        elif prim.kind == "turn":
            angle = TURN_ANGLE[prim.magnitude]
            yaw += angle if prim.direction == "counterclockwise" else -angle
    return delta, yaw


def _phase_profile(motion: MotionScriptAST | None, q_start: Configuration):
    """Per-phase (translation delta, ease exponent) for a gap."""
    if motion is None:
        return [(np.zeros(3), 1.0)]
    left, fwd = heading_frame(q_start)
    phases = []
    for phase in motion.phases:
        delta = np.zeros(3)
        exponent = None
        for prim in phase:
            if prim.kind == "move_direction":
                direction = {
                    "forward": fwd,
                    "backward": -fwd,
                    "left": left,
                    "right": -left,
                }[prim.direction]
                delta = delta + MOVE_DISTANCE[prim.magnitude] * direction
            if exponent is None and prim.speed != "unspecified":
                exponent = SPEED_EXPONENT[prim.speed]
        phases.append((delta, 1.0 if exponent is None else exponent))
    return phases


def _warp_and_displacement(lam: float, phases) -> tuple[float, np.ndarray]:
    """Warped progress W(lam) in [0,1] and root displacement at lam."""
    n = len(phases)
    k = min(int(lam * n), n - 1)
    u = lam * n - k
    delta_k, exponent = phases[k]
    u_warp = u**exponent
    warped = (k + u_warp) / n
    disp = np.zeros(3)
    for j in range(k):
        disp = disp + phases[j][0]
    disp = disp + delta_k * _smoothstep(u_warp)
    return warped, disp


def interpolate(
    x_i: Configuration,
    x_next: Configuration,
    count: int,
    motion: MotionScriptAST | None = None,
) -> list[Configuration]:
    """count intermediate frames between two keyframes (endpoints excluded)."""
    if count < 0:
        raise ValueError("in-between count must be >= 0")
    if x_i.joint_rotations.shape != x_next.joint_rotations.shape:
        raise ValueError("keyframe dimensions differ")
    if count == 0:
        return []
    phases = _phase_profile(motion, x_i)
    total_profile = np.zeros(3)
    for delta, _ in phases:
        total_profile = total_profile + delta
    endpoint_delta = x_next.root_position - x_i.root_position
    correction = endpoint_delta - total_profile

    joints0 = x_i.joint_rotations
    joints1 = x_next.joint_rotations
    orient0 = x_i.root_orientation
    orient1 = x_next.root_orientation

    frames = []
    for k in range(1, count + 1):
        lam = k / (count + 1)
        warped, disp = _warp_and_displacement(lam, phases)
        s = _smoothstep(warped)
        frames.append(
            Configuration(
                root_position=x_i.root_position + disp + correction * s,
                root_orientation=orient0 + (orient1 - orient0) * s,
                joint_rotations=joints0 + (joints1 - joints0) * s,
            )
        )
    return frames


def assemble(
    keyframes: list[Configuration],
    motions: list[MotionScriptAST | None],
    count: int,
    dt: float,
) -> Trajectory:
    """Interleave keyframes with count in-betweens per gap.

    N keyframes yield exactly N + count * (N - 1) frames with keyframes at
    indices 0, count+1, 2*(count+1), ...
    """
    n = len(keyframes)
    if n < 2:
        raise ValueError("assembly needs at least two keyframes")
    if len(motions) != n - 1:
        raise ValueError(
            f"expected {n - 1} transitions for {n} keyframes, got {len(motions)}"
        )
    frames: list[Configuration] = []
    keyframe_indices = []
    for i in range(n - 1):
        keyframe_indices.append(len(frames))
        frames.append(keyframes[i])
        frames.extend(interpolate(keyframes[i], keyframes[i + 1], count, motions[i]))
    keyframe_indices.append(len(frames))
    frames.append(keyframes[-1])
    expected = n + count * (n - 1)
    if len(frames) != expected:
        raise AssertionError(
            f"frame count {len(frames)} violates the N + C(N-1) = {expected} law"
        )
    return Trajectory(frames=frames, dt=dt, keyframe_indices=keyframe_indices)


def _refine_gap(
    gap: np.ndarray, lo: np.ndarray, hi: np.ndarray
) -> np.ndarray:
    """Projected gradient descent on one gap's joint rotations.

    gap has shape (m+2, J, 3): first and last rows are the fixed keyframes.
    Minimizes limit violations plus second-difference smoothness; every
    iterate is clamped into limits, so violations never increase.
    """
    x = gap.copy()
    m = x.shape[0] - 2
    if m <= 0:
        return x
    for _ in range(REFINE_ITERATIONS):
        d2 = x[2:] - 2.0 * x[1:-1] + x[:-2]  # second differences at centers 1..m
        grad = np.zeros_like(x)
        grad[1:-1] += -4.0 * d2          # each frame is the -2 coefficient of its own center
        if m > 1:
            grad[2:-1] += 2.0 * d2[:-1]  # +1 coefficient of the center one frame earlier
            grad[1:-2] += 2.0 * d2[1:]   # +1 coefficient of the center one frame later
        grad = REFINE_SMOOTHNESS * grad
        over = np.maximum(0.0, x - hi)
        under = np.maximum(0.0, lo - x)
        grad += 2.0 * over - 2.0 * under
        grad[0] = 0.0
        grad[-1] = 0.0
        gnorm = float(np.linalg.norm(grad))
        if gnorm < REFINE_GRAD_TOL:
            break
        x[1:-1] = np.clip(x[1:-1] - REFINE_STEP * grad[1:-1], lo, hi)
    return x


def refine_trajectory(
    traj: Trajectory, skel: Skeleton, w: ConstraintWeights | None = None
) -> Trajectory:
    """Clamp and smooth in-between frames; keyframes are never touched."""
    lo, hi = skel.limit_arrays()
    joints = traj.joint_array()
    out = joints.copy()
    ki = traj.keyframe_indices or [0, len(traj.frames) - 1]
    for a, b in zip(ki, ki[1:]):
        out[a : b + 1] = _refine_gap(joints[a : b + 1], lo, hi)
    frames = []
    for i, f in enumerate(traj.frames):
        if i in ki:
            frames.append(f)
        else:
            frames.append(
                Configuration(f.root_position.copy(), f.root_orientation.copy(), out[i])
            )
    return Trajectory(frames=frames, dt=traj.dt, keyframe_indices=list(ki))
