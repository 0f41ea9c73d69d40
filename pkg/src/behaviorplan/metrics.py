"""Physical-plausibility and distributional evaluation metrics.

Ground-truth neural encoders are out of scope; the feature providers here
are deterministic classical descriptors (joint angular-velocity statistics
plus a root-speed histogram for motions, token-count bags for texts), so
every metric is reproducible from a seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import capsule_surface_samples
from .inbetween import Trajectory, heading_frame
from .skeleton import CONTACT_TOLERANCE, Skeleton, forward_kinematics

__all__ = [
    "PhysErrReport",
    "SubjectiveScores",
    "phys_err",
    "mm_dist",
    "diversity",
    "multimodality",
    "r_precision",
    "fid",
    "success_rate",
    "motion_features",
    "trajectory_primitive_bag",
]


@dataclass
class PhysErrReport:
    penetrate: float
    float_err: float
    skate: float
    total: float
    contact_frames: int

    def to_dict(self) -> dict:
        return {
            "penetrate": self.penetrate,
            "float": self.float_err,
            "skate": self.skate,
            "total": self.total,
            "contact_frames": self.contact_frames,
        }


def phys_err(
    skel: Skeleton,
    traj: Trajectory,
    tol: float = CONTACT_TOLERANCE,
    skate_mode: str = "excess",
) -> PhysErrReport:
    """Penetration, floating, and foot-skating errors with a shared tolerance.

    Per frame, h is the lowest link-surface sample height. Penetration is
    max(0, -h - tol) averaged over all frames; floating is max(0, h - tol)
    averaged over the frames with no foot contact; skating is the foot
    displacement between consecutive contact frames (minus the tolerance
    unless skate_mode == "raw"), averaged over those frame pairs.
    """
    if skate_mode not in ("excess", "raw"):
        raise ValueError("skate_mode must be 'excess' or 'raw'")
    n = len(traj.frames)
    penetrate_vals = np.zeros(n)
    float_vals = []
    contact = np.zeros(n, dtype=bool)
    feet = list(skel.feet)
    foot_xy = np.zeros((n, len(feet), 3))
    foot_contact = np.zeros((n, len(feet)), dtype=bool)

    foot_links = [
        l for l in skel.links if l.joint_b in skel.feet or l.joint_a in skel.feet
    ]
    foot_of_link = [
        l.joint_b if l.joint_b in skel.feet else l.joint_a for l in foot_links
    ]

    for k, frame in enumerate(traj.frames):
        fk = forward_kinematics(skel, frame)
        h = np.inf
        for link in skel.links:
            pts = capsule_surface_samples(
                fk.positions[link.joint_a], fk.positions[link.joint_b], link.radius
            )
            h = min(h, float(pts[:, 1].min()))
        penetrate_vals[k] = max(0.0, -h - tol)
        for link, foot in zip(foot_links, foot_of_link):
            pts = capsule_surface_samples(
                fk.positions[link.joint_a], fk.positions[link.joint_b], link.radius
            )
            foot_contact[k, feet.index(foot)] = float(pts[:, 1].min()) <= tol
        contact[k] = bool(foot_contact[k].any())
        if not contact[k]:
            float_vals.append(max(0.0, h - tol))
        foot_xy[k] = fk.positions[feet]

    skate_vals = []
    for k in range(n - 1):
        if not (contact[k] and contact[k + 1]):
            continue
        best = 0.0
        any_foot = False
        for f in range(len(feet)):
            if foot_contact[k, f] and foot_contact[k + 1, f]:
                any_foot = True
                disp = foot_xy[k + 1, f] - foot_xy[k, f]
                slide = float(np.hypot(disp[0], disp[2]))
                best = max(best, slide)
        if any_foot:
            skate_vals.append(
                best if skate_mode == "raw" else max(0.0, best - tol)
            )

    penetrate = float(penetrate_vals.mean()) if n else 0.0
    float_err = float(np.mean(float_vals)) if float_vals else 0.0
    skate = float(np.mean(skate_vals)) if skate_vals else 0.0
    return PhysErrReport(
        penetrate=penetrate,
        float_err=float_err,
        skate=skate,
        total=penetrate + float_err + skate,
        contact_frames=int(contact.sum()),
    )


# ---------------------------------------------------------------------------
# feature-space metrics

def _as_matrix(feats) -> np.ndarray:
    arr = np.asarray(feats, dtype=float)
    if arr.ndim != 2:
        raise ValueError("features must be a list of equal-length vectors")
    if not np.all(np.isfinite(arr)):
        raise ValueError("features must be finite")
    return arr


def mm_dist(motion_feats, text_feats) -> float:
    """Mean cosine distance between aligned motion/text feature pairs."""
    a = _as_matrix(motion_feats)
    b = _as_matrix(text_feats)
    if a.shape != b.shape:
        raise ValueError(f"feature shapes differ: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    if np.any(na == 0.0) or np.any(nb == 0.0):
        raise ValueError("zero-norm feature vector")
    cos = np.sum(a * b, axis=1) / (na * nb)
    return float(np.mean(1.0 - cos))


def diversity(feats, samples: int, seed: int = 0) -> float:
    """Mean distance over disjoint random feature pairs."""
    arr = _as_matrix(feats)
    n = arr.shape[0]
    if n < 2:
        raise ValueError("diversity needs at least two feature vectors")
    if 2 * samples > n:
        raise ValueError(f"{samples} disjoint pairs need {2 * samples} items, have {n}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    first = order[:samples]
    second = order[samples : 2 * samples]
    return float(np.mean(np.linalg.norm(arr[first] - arr[second], axis=1)))


def multimodality(grouped: dict, subset_size: int, seed: int = 0) -> float:
    """Mean within-group distance over two disjoint sampled subsets."""
    if not grouped:
        raise ValueError("multimodality needs at least one group")
    rng = np.random.default_rng(seed)
    means = []
    for key in sorted(grouped):
        arr = _as_matrix(grouped[key])
        n = arr.shape[0]
        if n < 2 * subset_size:
            raise ValueError(
                f"group {key!r} has {n} items, needs {2 * subset_size}"
            )
        order = rng.permutation(n)
        a = arr[order[:subset_size]]
        b = arr[order[subset_size : 2 * subset_size]]
        means.append(float(np.mean(np.linalg.norm(a - b, axis=1))))
    return float(np.mean(means))


def r_precision(query_feats, gt_feats, k: int, pool_size: int = 32, seed: int = 0) -> float:
    """Fraction of queries whose true match ranks in the top k of a pool."""
    q = _as_matrix(query_feats)
    g = _as_matrix(gt_feats)
    if q.shape[0] != g.shape[0]:
        raise ValueError("query and ground-truth lists must align")
    n = q.shape[0]
    if pool_size > n:
        raise ValueError(f"pool of {pool_size} exceeds corpus of {n}")
    rng = np.random.default_rng(seed)
    hits = 0
    for i in range(n):
        others = np.array([j for j in range(n) if j != i])
        distractors = rng.choice(others, size=pool_size - 1, replace=False)
        pool = np.concatenate([[i], distractors])
        dists = np.linalg.norm(g[pool] - q[i], axis=1)
        rank = int(np.sum(dists < dists[0]))
        ties = int(np.sum(dists[1:] == dists[0]))
        if rank + ties < k:
            hits += 1
    return hits / n


def fid(feats_a, feats_b, eps: float = 1e-6) -> float:
    """Frechet distance between Gaussian fits of two feature sets."""
    a = _as_matrix(feats_a)
    b = _as_matrix(feats_b)
    mu_a, mu_b = a.mean(axis=0), b.mean(axis=0)
    cov_a = np.cov(a, rowvar=False)
    cov_b = np.cov(b, rowvar=False)
    d = a.shape[1]
    cov_a = np.atleast_2d(cov_a) + eps * np.eye(d)
    cov_b = np.atleast_2d(cov_b) + eps * np.eye(d)

    # sqrt(cov_a) via symmetric eigendecomposition
    w, v = np.linalg.eigh(cov_a)
    sqrt_a = v @ np.diag(np.sqrt(np.maximum(w, 0.0))) @ v.T
    inner = sqrt_a @ cov_b @ sqrt_a
    w2, _ = np.linalg.eigh((inner + inner.T) / 2.0)
    if np.any(w2 < -1e-8):
        raise ValueError("covariance product has significantly negative spectrum")
    trace_sqrt = float(np.sum(np.sqrt(np.maximum(w2, 0.0))))
    diff = mu_a - mu_b
    value = float(diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2.0 * trace_sqrt)
    if value < -1e-8:
        raise ValueError(f"negative squared Frechet distance {value}")
    return max(0.0, value)


# ---------------------------------------------------------------------------
# subjective success rate

@dataclass
class SubjectiveScores:
    """Eight 1-5 quality items plus a completion fraction."""

    fluidity: int
    coordination: int
    rhythm: int
    smoothness: int
    action_completeness: int
    step_completion: int
    detail: int
    alignment: int
    completion: float

    def __post_init__(self):
        for name in (
            "fluidity",
            "coordination",
            "rhythm",
            "smoothness",
            "action_completeness",
            "step_completion",
            "detail",
            "alignment",
        ):
            v = getattr(self, name)
            if not (isinstance(v, int) and 1 <= v <= 5):
                raise ValueError(f"{name} must be an integer in [1, 5], got {v!r}")
        if not 0.0 <= self.completion <= 1.0:
            raise ValueError("completion must lie in [0, 1]")

    def quality(self) -> float:
        items = (
            self.fluidity
            + self.coordination
            + self.rhythm
            + self.smoothness
            + self.action_completeness
            + self.step_completion
            + self.detail
            + self.alignment
        )
        return items / 40.0


def success_rate(scores: SubjectiveScores, w1: float = 0.5, w2: float = 0.5) -> float:
    return w1 * scores.completion + w2 * scores.quality()


# ---------------------------------------------------------------------------
# default feature providers

ROOT_SPEED_BINS = np.linspace(0.0, 3.0, 13)  # 12 bins, last one open-ended


def motion_features(traj: Trajectory) -> np.ndarray:
    """Deterministic motion descriptor: mean and std of joint angular
    velocities plus a 12-bin root-speed histogram (d = 6*J + 12)."""
    joints = traj.joint_array()
    k = joints.shape[0]
    if k < 2:
        vel = np.zeros((1,) + joints.shape[1:])
    else:
        vel = (joints[1:] - joints[:-1]) / traj.dt
    flat = vel.reshape(vel.shape[0], -1)
    mean = flat.mean(axis=0)
    std = flat.std(axis=0)
    root = traj.root_position_array()
    if k < 2:
        speeds = np.zeros(1)
    else:
        speeds = np.linalg.norm(root[1:] - root[:-1], axis=1) / traj.dt
    hist, _ = np.histogram(np.clip(speeds, 0.0, ROOT_SPEED_BINS[-1] - 1e-9), bins=ROOT_SPEED_BINS)
    hist = hist.astype(float) / max(1, len(speeds))
    return np.concatenate([mean, std, hist])


def trajectory_primitive_bag(traj: Trajectory) -> np.ndarray:
    """Describe a trajectory in the transition-token bag space.

    A deterministic stand-in captioner: per keyframe gap, the net root
    displacement in the heading frame becomes move tokens, the net yaw
    becomes turn tokens, and the gap duration picks a speed token. Enables
    motion-text alignment scores against parsed transition bags.
    """
    from .constraints import primitive_bag
    from .inbetween import MOVE_DISTANCE
    from .posecode_parser import MotionPrimitive, MotionScriptAST

    ki = traj.keyframe_indices or [0, len(traj.frames) - 1]
    prims = []
    for a, b in zip(ki, ki[1:]):
        qa, qb = traj.frames[a], traj.frames[b]
        left, fwd = heading_frame(qa)
        delta = qb.root_position - qa.root_position
        dx = float(delta @ left)
        dz = float(delta @ fwd)
        for comp, pos_dir, neg_dir in ((dz, "forward", "backward"), (dx, "left", "right")):
            if abs(comp) < 0.1:
                continue
            token = min(
                MOVE_DISTANCE,
                key=lambda t: abs(MOVE_DISTANCE[t] - abs(comp)),
            )
            prims.append(
                MotionPrimitive(
                    subject="root",
                    kind="move_direction",
                    direction=pos_dir if comp > 0 else neg_dir,
                    magnitude=token,
                    phase=0,
                )
            )
        yaw_a = float(qa.root_orientation[1])
        yaw_b = float(qb.root_orientation[1])
        if abs(yaw_b - yaw_a) > np.pi / 8:
            prims.append(
                MotionPrimitive(
                    subject="root",
                    kind="turn",
                    direction="counterclockwise" if yaw_b > yaw_a else "clockwise",
                    phase=0,
                )
            )
    if not prims:
        prims.append(MotionPrimitive(subject="root", kind="hold", phase=0))
    return primitive_bag(MotionScriptAST([prims]))
