"""Reduced 22-joint kinematic tree, forward kinematics, and pose classification.

Conventions: +Y is up, +Z is the facing direction, +X is the character's
left; the ground plane is y = 0. Joint rotations are axis-angle rotation
vectors. Hinged joints (hips, knees, shoulders, elbows) carry a designated
flexion DOF with a sign so that positive flexion is anatomically sensible
on both sides while the flexion range stays [0, max] for every joint.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .geometry import rotvec_to_matrix, rotvecs_to_matrices
from .posecode_parser import PoseCode, PoseScriptAST, PoseStatement

# shared with the metrics module: ground contact tolerance, meters
CONTACT_TOLERANCE = 0.005

# angle posecode bins, degrees over [0, 180]
ANGLE_BINS = [
    ("straight", 0.0, 25.0),
    ("slightly bent", 25.0, 65.0),
    ("partially bent", 65.0, 85.0),
    ("bent at a right angle", 85.0, 95.0),
    ("almost completely bent", 95.0, 135.0),
    ("completely bent", 135.0, 180.0),
]

# distance posecode bins, in units of shoulder width
DISTANCE_BINS = [
    ("close", 0.0, 0.5),
    ("shoulder width apart", 0.5, 1.5),
    ("spread", 1.5, 2.5),
    ("wide apart", 2.5, float("inf")),
]


def angle_bin(angle_deg: float) -> str:
    for token, lo, hi in ANGLE_BINS:
        if lo <= angle_deg < hi:
            return token
    return "completely bent"  # 180 degrees falls in the closed top bin


def angle_bin_midpoint(token: str) -> float:
    """Target bend angle for a token, radians."""
    for name, lo, hi in ANGLE_BINS:
        if name == token:
            return np.deg2rad((lo + hi) / 2.0)
    raise KeyError(token)


def distance_bin(ratio: float) -> str:
    for token, lo, hi in DISTANCE_BINS:
        if lo <= ratio < hi:
            return token
    return "wide apart"


def distance_bin_midpoint(token: str) -> float:
    """Target distance for a token, in shoulder widths."""
    for name, lo, hi in DISTANCE_BINS:
        if name == token:
            if hi == float("inf"):
                return lo + 0.5
            return (lo + hi) / 2.0
    raise KeyError(token)


@dataclass(frozen=True)
class JointDef:
    name: str
    parent: int | None
    offset: np.ndarray            # (3,) meters, in parent frame
    limits: np.ndarray            # (3, 2) radians per rotation-vector DOF
    v_max: float                  # rad/s
    a_max: float                  # rad/s^2
    hinge_dof: int | None = None
    hinge_sign: int = 1
    armature: float = 0.0
    dofs: int = 3                 # rotation DOF count: 3 (ball), 1 (axis), 0 (fixed)
    axis: np.ndarray | None = None  # rotation axis for 1-DOF joints

    @property
    def is_hinged(self) -> bool:
        return self.hinge_dof is not None

    def flexion_limits(self) -> tuple[float, float]:
        """Hinge DOF limits in flexion parameterization (positive = flex)."""
        if self.hinge_dof is None:
            raise ValueError(f"joint {self.name} has no hinge DOF")
        lo, hi = self.limits[self.hinge_dof]
        if self.hinge_sign >= 0:
            return float(lo), float(hi)
        return float(-hi), float(-lo)


@dataclass(frozen=True)
class LinkDef:
    name: str
    joint_a: int
    joint_b: int
    radius: float
    mass: float
    model: str = "capsule"  # "capsule" (uniform solid) or "point" (at joint_b)


@dataclass(frozen=True)
class Skeleton:
    name: str
    joints: tuple[JointDef, ...]
    links: tuple[LinkDef, ...]
    feet: tuple[int, ...]
    shoulder_width: float
    rest_root_position: np.ndarray
    base: str = "free"            # "free" (6-DOF root) or "fixed"
    distance_pairs: tuple[tuple[int, int], ...] = ()
    torque_limits: np.ndarray | None = None

    def __post_init__(self):
        for idx, j in enumerate(self.joints):
            if idx == 0:
                if j.parent is not None:
                    raise ValueError("joint 0 must be the root (no parent)")
            elif j.parent is None or j.parent >= idx:
                raise ValueError(f"parents must precede children (joint {j.name})")
            if np.any(j.limits[:, 0] >= j.limits[:, 1]):
                raise ValueError(f"joint {j.name} has empty limit range")
            if j.v_max <= 0 or j.a_max <= 0:
                raise ValueError(f"joint {j.name} needs positive rate limits")
        for link in self.links:
            if link.mass <= 0:
                raise ValueError(f"link {link.name} needs positive mass")

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    def joint_index(self, name: str) -> int:
        for i, j in enumerate(self.joints):
            if j.name == name:
                return i
        raise KeyError(name)

    def children(self, idx: int) -> list[int]:
        return [i for i, j in enumerate(self.joints) if j.parent == idx]

    def hinged_joints(self) -> list[int]:
        return [i for i, j in enumerate(self.joints) if j.is_hinged]

    def chain_to_root(self, idx: int) -> list[int]:
        """Joint indices from idx up to (and excluding) the root."""
        out = []
        while idx is not None and idx != 0:
            out.append(idx)
            idx = self.joints[idx].parent
        return out

    def limit_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.stack([j.limits[:, 0] for j in self.joints])
        hi = np.stack([j.limits[:, 1] for j in self.joints])
        return lo, hi


@dataclass
class Configuration:
    root_position: np.ndarray        # (3,) meters
    root_orientation: np.ndarray     # (3,) rotation vector
    joint_rotations: np.ndarray      # (J, 3); row 0 belongs to the root and stays zero

    def __post_init__(self):
        self.root_position = np.asarray(self.root_position, dtype=float)
        self.root_orientation = np.asarray(self.root_orientation, dtype=float)
        self.joint_rotations = np.asarray(self.joint_rotations, dtype=float)
        if not (
            np.all(np.isfinite(self.root_position))
            and np.all(np.isfinite(self.root_orientation))
            and np.all(np.isfinite(self.joint_rotations))
        ):
            raise ValueError("configuration entries must be finite")

    def copy(self) -> "Configuration":
        return Configuration(
            self.root_position.copy(),
            self.root_orientation.copy(),
            self.joint_rotations.copy(),
        )


def tpose(skel: Skeleton) -> Configuration:
    """Rest configuration: identity rotations, root at the rest height."""
    return Configuration(
        root_position=skel.rest_root_position.copy(),
        root_orientation=np.zeros(3),
        joint_rotations=np.zeros((skel.n_joints, 3)),
    )


def _skeleton_from_dict(data: dict) -> Skeleton:
    names = [j["name"] for j in data["joints"]]
    index = {n: i for i, n in enumerate(names)}
    joints = []
    default_armature = float(data.get("default_armature", 0.0))
    for j in data["joints"]:
        hinge = j.get("hinge")
        axis = j.get("axis")
        joints.append(
            JointDef(
                name=j["name"],
                parent=None if j["parent"] is None else index[j["parent"]],
                offset=np.asarray(j["offset"], dtype=float),
                limits=np.asarray(j["limits"], dtype=float),
                v_max=float(j["v_max"]),
                a_max=float(j["a_max"]),
                hinge_dof=None if hinge is None else int(hinge["dof"]),
                hinge_sign=1 if hinge is None else int(hinge["sign"]),
                armature=float(j.get("armature", default_armature)),
                dofs=int(j.get("dofs", 3)),
                axis=None if axis is None else np.asarray(axis, dtype=float),
            )
        )
    links = tuple(
        LinkDef(
            name=l.get("name", f"{l['joints'][0]}-{l['joints'][1]}"),
            joint_a=index[l["joints"][0]],
            joint_b=index[l["joints"][1]],
            radius=float(l["radius"]),
            mass=float(l["mass"]),
            model=l.get("model", "capsule"),
        )
        for l in data["links"]
    )
    tq = data.get("torque_limits", {})
    default_tq = float(tq.get("default", 200.0))
    torque_limits = np.array(
        [float(tq.get(n, default_tq)) for n in names]
    )
    return Skeleton(
        name=data.get("name", "skeleton"),
        joints=tuple(joints),
        links=links,
        feet=tuple(index[n] for n in data.get("feet", [])),
        shoulder_width=float(data.get("shoulder_width", 0.36)),
        rest_root_position=np.asarray(
            data.get("rest_root_position", [0.0, 0.0, 0.0]), dtype=float
        ),
        base=data.get("base", "free"),
        distance_pairs=tuple(
            (index[a], index[b]) for a, b in data.get("distance_pairs", [])
        ),
        torque_limits=torque_limits,
    )


def load_skeleton(path: str) -> Skeleton:
    with open(path, "r", encoding="utf-8") as fh:
        return _skeleton_from_dict(json.load(fh))


_DEFAULT: Skeleton | None = None


def default_skeleton() -> Skeleton:
    global _DEFAULT
    if _DEFAULT is None:
        raw = resources.files("behaviorplan.data").joinpath(
            "skeleton_humanoid22.json"
        ).read_text()
        _DEFAULT = _skeleton_from_dict(json.loads(raw))
    return _DEFAULT


# ---------------------------------------------------------------------------
# forward kinematics

@dataclass
class FKResult:
    positions: np.ndarray     # (J, 3) world joint positions
    rotations: np.ndarray     # (J, 3, 3) world joint orientations


def forward_kinematics(skel: Skeleton, q: Configuration) -> FKResult:
    n = skel.n_joints
    if q.joint_rotations.shape != (n, 3):
        raise ValueError(
            f"configuration has {q.joint_rotations.shape} joint rotations, "
            f"skeleton expects ({n}, 3)"
        )
    local = rotvecs_to_matrices(q.joint_rotations)
    positions = np.zeros((n, 3))
    rotations = np.zeros((n, 3, 3))
    root_rot = rotvec_to_matrix(q.root_orientation)
    if skel.base == "free":
        rotations[0] = root_rot
        positions[0] = q.root_position
    else:
        rotations[0] = local[0]
        positions[0] = skel.joints[0].offset
    for i in range(1, n):
        p = skel.joints[i].parent
        positions[i] = positions[p] + rotations[p] @ skel.joints[i].offset
        rotations[i] = rotations[p] @ local[i]
    return FKResult(positions=positions, rotations=rotations)


def bend_angle(skel: Skeleton, q: Configuration, joint: int) -> float:
    """Angle by which a joint's rotation tilts its child bone off rest, radians.

    Twist about the bone axis does not count as bend, so the value matches
    the hinge DOF for pure hinge rotations and is zero in the rest pose.
    """
    children = skel.children(joint)
    if not children:
        raise ValueError(f"joint {skel.joints[joint].name} has no child bone")
    u = skel.joints[children[0]].offset
    nu = np.linalg.norm(u)
    if nu < 1e-12:
        return 0.0
    u = u / nu
    r = rotvec_to_matrix(q.joint_rotations[joint])
    c = float(np.clip(u @ (r @ u), -1.0, 1.0))
    return float(np.arccos(c))


def classify_posecodes(skel: Skeleton, q: Configuration) -> PoseScriptAST:
    """Map a configuration back to posecodes: one angle code per hinged
    joint, one distance code per configured pair, ground contact per foot."""
    statements = []
    for j in skel.hinged_joints():
        angle = np.rad2deg(bend_angle(skel, q, j))
        statements.append(
            PoseStatement(skel.joints[j].name, PoseCode("angle", angle_bin(angle)))
        )
    fk = forward_kinematics(skel, q)
    for a, b in skel.distance_pairs:
        d = float(np.linalg.norm(fk.positions[a] - fk.positions[b]))
        token = distance_bin(d / skel.shoulder_width)
        statements.append(
            PoseStatement(
                (skel.joints[a].name, skel.joints[b].name),
                PoseCode("distance", token),
            )
        )
    for f in skel.feet:
        link = next((l for l in skel.links if l.joint_b == f), None)
        reach = link.radius if link is not None else 0.0
        height = float(fk.positions[f, 1]) - reach
        if height <= CONTACT_TOLERANCE:
            statements.append(
                PoseStatement(
                    skel.joints[f].name, PoseCode("ground_contact", "on the ground")
                )
            )
    if not statements:
        raise ValueError("skeleton produces no classifiable posecodes")
    return PoseScriptAST(statements)
