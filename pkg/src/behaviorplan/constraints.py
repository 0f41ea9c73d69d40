"""Keyframe-transition penalties: joint range, joint rates, semantic drift.

All penalties are non-negative and vanish on their feasible set. A
transition is accepted when the weighted total falls below the ``eps_total``
threshold; the hard-zero reading of the constraint is relaxed to this soft
form throughout the pipeline.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .posecode_parser import (
    MOTION_KINDS,
    MAGNITUDE_TOKENS,
    SPEED_TOKENS,
    MotionScriptAST,
    vocabulary,
)
from .skeleton import Configuration, Skeleton

__all__ = [
    "ConstraintWeights",
    "BagOfPrimitivesProvider",
    "TransitionCostReport",
    "hinge_penalty",
    "range_penalty",
    "rate_penalty",
    "semantic_penalty",
    "transition_cost",
    "primitive_bag",
]


@dataclass
class ConstraintWeights:
    """Tunable penalty weights and thresholds; all strictly positive.

    ``keyframe_dt`` is the nominal time between consecutive keyframes and
    turns keyframe differences into finite-difference velocities.
    """

    w1: float = 1.0          # joint-term weight in the transition total
    w2: float = 1.0          # semantic-term weight in the transition total
    w_a: float = 1.0         # range penalty weight inside the joint term
    w_b: float = 1.0         # rate penalty weight inside the joint term
    w3: float = 1.0          # trajectory limit-violation weight
    w4: float = 1.0          # trajectory collision weight
    w5: float = 1.0          # trajectory dynamics-residual weight
    kappa: float = 5.0       # semantic sigmoid steepness
    eps_s: float = 0.25      # semantic tolerance (sigmoid center)
    kappa_c: float = 50.0    # collision sigmoid steepness
    d_min: float = 0.02      # minimum allowed collision-pair distance, meters
    keyframe_dt: float = 1.0 # seconds between keyframes
    eps_total: float = 1e-3  # acceptance threshold for the transition total
    eps_motion: float = 1e-2 # acceptance threshold for the trajectory total

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value <= 0:
                raise ValueError(f"constraint weight {name} must be > 0, got {value}")

    @classmethod
    def from_dict(cls, data: dict) -> "ConstraintWeights":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown constraint keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


def hinge_penalty(limit: float, value: float) -> float:
    """Quadratic one-sided penalty: zero at or below the limit."""
    excess = value - limit
    return excess * excess if excess > 0.0 else 0.0


def range_penalty(skel: Skeleton, q: Configuration) -> float:
    """Sum of squared limit violations over all joint rotation DOFs."""
    lo, hi = skel.limit_arrays()
    x = q.joint_rotations
    over = np.maximum(0.0, x - hi)
    under = np.maximum(0.0, lo - x)
    return float(np.sum(over * over) + np.sum(under * under))


def rate_penalty(
    skel: Skeleton,
    x_i: Configuration,
    x_next: Configuration,
    w: ConstraintWeights,
    x_prev: Configuration | None = None,
) -> float:
    """Squared violations of per-joint velocity and acceleration limits.

    Velocities are keyframe differences over ``keyframe_dt``. The
    acceleration term needs three keyframes; with only two it is zero.
    """
    dt = w.keyframe_dt
    vel = (x_next.joint_rotations - x_i.joint_rotations) / dt
    speed = np.linalg.norm(vel, axis=1)
    v_max = np.array([j.v_max for j in skel.joints])
    total = float(np.sum(np.maximum(0.0, speed - v_max) ** 2))
    if x_prev is not None:
        vel_prev = (x_i.joint_rotations - x_prev.joint_rotations) / dt
        acc = (vel - vel_prev) / dt
        acc_mag = np.linalg.norm(acc, axis=1)
        a_max = np.array([j.a_max for j in skel.joints])
        total += float(np.sum(np.maximum(0.0, acc_mag - a_max) ** 2))
    return total


# ---------------------------------------------------------------------------
# semantic features

def _bag_layout() -> list[tuple[str, str]]:
    vocab = vocabulary()
    layout: list[tuple[str, str]] = []
    layout += [("kind", k) for k in MOTION_KINDS]
    layout += [("direction", d) for d in vocab["move_direction"]]
    layout += [("direction", d) for d in vocab["turn_direction"]]
    layout += [("target", c) for c in ("angle", "distance", "ground_contact")]
    layout += [("speed", s) for s in SPEED_TOKENS]
    layout += [("magnitude", m) for m in MAGNITUDE_TOKENS]
    return layout


def primitive_bag(ast: MotionScriptAST) -> np.ndarray:
    """Token-count vector over the closed transition vocabulary."""
    layout = _bag_layout()
    index = {key: i for i, key in enumerate(layout)}
    vec = np.zeros(len(layout))
    for prim in ast.primitives():
        vec[index[("kind", prim.kind)]] += 1.0
        if prim.direction is not None:
            vec[index[("direction", prim.direction)]] += 1.0
        if prim.target is not None:
            key = ("target", prim.target.category)
            if key in index:
                vec[index[key]] += 1.0
        vec[index[("speed", prim.speed)]] += 1.0
        vec[index[("magnitude", prim.magnitude)]] += 1.0
    return vec


@dataclass
class BagOfPrimitivesProvider:
    """Maps transition scripts to token-count features.

    ``reference`` is the expected feature vector for the transition being
    scored; when omitted, the first scored script becomes its own reference
    (self-consistency mode).
    """

    reference: np.ndarray | None = None

    def features(self, ast: MotionScriptAST) -> np.ndarray:
        return primitive_bag(ast)

    def reference_features(self, ast: MotionScriptAST) -> np.ndarray:
        if self.reference is not None:
            return np.asarray(self.reference, dtype=float)
        return self.features(ast)


def semantic_penalty(
    ast: MotionScriptAST, provider, w: ConstraintWeights
) -> float:
    """Sigmoid-gated squared feature distance from the expected transition."""
    g = np.asarray(provider.features(ast), dtype=float)
    g_ref = np.asarray(provider.reference_features(ast), dtype=float)
    if g.shape != g_ref.shape:
        raise ValueError(
            f"feature dimension mismatch: {g.shape} vs reference {g_ref.shape}"
        )
    dist = float(np.linalg.norm(g - g_ref))
    return float(dist * dist / (1.0 + np.exp(-w.kappa * (dist - w.eps_s))))


@dataclass
class TransitionCostReport:
    total: float
    range_term: float      # unweighted range penalty
    rate_term: float       # unweighted rate penalty
    semantic_term: float   # unweighted semantic penalty
    satisfied: bool

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "range": self.range_term,
            "rate": self.rate_term,
            "semantic": self.semantic_term,
            "satisfied": self.satisfied,
        }


def transition_cost(
    x_i: Configuration,
    a_i: MotionScriptAST,
    x_next: Configuration,
    skel: Skeleton,
    provider,
    w: ConstraintWeights,
    x_prev: Configuration | None = None,
) -> TransitionCostReport:
    """Weighted transition penalty with its component breakdown.

    total = w1 * (w_a * range + w_b * rate) + w2 * semantic
    """
    f_range = range_penalty(skel, x_next)
    f_rate = rate_penalty(skel, x_i, x_next, w, x_prev=x_prev)
    f_sem = semantic_penalty(a_i, provider, w)
    total = w.w1 * (w.w_a * f_range + w.w_b * f_rate) + w.w2 * f_sem
    return TransitionCostReport(
        total=float(total),
        range_term=float(f_range),
        rate_term=float(f_rate),
        semantic_term=float(f_sem),
        satisfied=bool(total <= w.eps_total),
    )
