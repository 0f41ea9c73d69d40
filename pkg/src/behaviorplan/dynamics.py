"""Rigid-body dynamics on the skeleton tree.

Generalized coordinates: a free-base skeleton uses [root position (world),
root orientation rotation-vector, then per-joint rotation DOFs]; a
fixed-base skeleton has joint DOFs only. Generalized velocities are world
root linear/angular velocity plus per-joint relative angular velocity in
the child body frame, so hinge joints integrate additively and ball joints
integrate by rotation composition.

The mass matrix comes from per-link center-of-mass Jacobians, bias forces
from a zero-acceleration sweep with gravity applied as a base acceleration;
the two are consistent with inverse dynamics by construction. Ground
contact is a penalty spring-damper with capped Coulomb friction acting on
capsule surface sample points.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintWeights, hinge_penalty, range_penalty
from .geometry import (
    capsule_surface_samples,
    compose_rotvec,
    orthonormal_frame,
    rotvec_to_matrix,
    rotvecs_to_matrices,
    segment_segment_distance,
)
from .inbetween import Trajectory
from .skeleton import Configuration, Skeleton

__all__ = [
    "SimState",
    "MotionCostReport",
    "TrackingResult",
    "SimulationDivergence",
    "dof_count",
    "config_to_generalized",
    "generalized_to_config",
    "mass_matrix",
    "bias_forces",
    "inverse_dynamics",
    "forward_acceleration",
    "step",
    "simulate_tracking",
    "collision_distances",
    "collision_pairs",
    "motion_cost",
    "capsule_inertia",
]

GRAVITY = 9.81
CONTACT_KP = 2.0e4     # N/m ground spring
CONTACT_KD = 2.0e2     # N*s/m ground damper
CONTACT_KT = 5.0e2     # N*s/m tangential viscous coefficient
FRICTION_MU = 0.9
SIM_DT = 1.0 / 300.0
DIVERGENCE_LIMIT = 1.0e3


class SimulationDivergence(RuntimeError):
    def __init__(self, message: str, frame: int):
        super().__init__(message)
        self.frame = frame


@dataclass
class SimState:
    q: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.v))):
            raise ValueError("simulation state must be finite")


# ---------------------------------------------------------------------------
# generalized-coordinate layout

def _joint_slices(skel: Skeleton) -> list[tuple[int, int]]:
    """Start offset and DOF count per joint in the generalized vector."""
    out = []
    cursor = 6 if skel.base == "free" else 0
    for i, j in enumerate(skel.joints):
        if skel.base == "free" and i == 0:
            out.append((0, 6))
            continue
        out.append((cursor, j.dofs))
        cursor += j.dofs
    return out


def dof_count(skel: Skeleton) -> int:
    n = 6 if skel.base == "free" else 0
    for i, j in enumerate(skel.joints):
        if skel.base == "free" and i == 0:
            continue
        n += j.dofs
    return n


def config_to_generalized(skel: Skeleton, q: Configuration) -> np.ndarray:
    slices = _joint_slices(skel)
    vec = np.zeros(dof_count(skel))
    for i, j in enumerate(skel.joints):
        start, nd = slices[i]
        if skel.base == "free" and i == 0:
            vec[0:3] = q.root_position
            vec[3:6] = q.root_orientation
            continue
        if nd == 3:
            vec[start : start + 3] = q.joint_rotations[i]
        elif nd == 1:
            vec[start] = float(q.joint_rotations[i] @ j.axis)
    return vec


def generalized_to_config(skel: Skeleton, vec: np.ndarray) -> Configuration:
    slices = _joint_slices(skel)
    joints = np.zeros((skel.n_joints, 3))
    root_pos = np.zeros(3)
    root_rot = np.zeros(3)
    for i, j in enumerate(skel.joints):
        start, nd = slices[i]
        if skel.base == "free" and i == 0:
            root_pos = vec[0:3].copy()
            root_rot = vec[3:6].copy()
            continue
        if nd == 3:
            joints[i] = vec[start : start + 3]
        elif nd == 1:
            joints[i] = j.axis * vec[start]
    return Configuration(root_pos, root_rot, joints)


# ---------------------------------------------------------------------------
# per-link constants

def capsule_inertia(mass: float, radius: float, height: float) -> tuple[float, float]:
    """(axial, perpendicular) inertia of a uniform solid capsule about its com.

    height is the cylinder segment length; the caps form a full sphere of
    the same radius. Degenerates to the solid-sphere value as height -> 0.
    """
    v_cyl = np.pi * radius * radius * height
    v_sph = 4.0 / 3.0 * np.pi * radius**3
    density = mass / (v_cyl + v_sph)
    m_cyl = density * v_cyl
    m_sph = density * v_sph
    i_ax = 0.5 * m_cyl * radius**2 + 0.4 * m_sph * radius**2
    i_perp_cyl = m_cyl * (height**2 / 12.0 + radius**2 / 4.0)
    # each hemisphere: I about own com plus parallel-axis to the capsule com
    m_hemi = m_sph / 2.0
    i_hemi_com = 0.4 * m_hemi * radius**2 - m_hemi * (3.0 * radius / 8.0) ** 2
    d = height / 2.0 + 3.0 * radius / 8.0
    i_perp_sph = 2.0 * (i_hemi_com + m_hemi * d * d)
    return i_ax, i_perp_cyl + i_perp_sph


@dataclass
class _LinkConst:
    body: int                 # joint index whose frame carries this link
    mass: float
    com_local: np.ndarray     # com in body frame
    inertia_local: np.ndarray  # (3,3) about com, body frame
    p0_local: np.ndarray      # capsule endpoints in body frame
    p1_local: np.ndarray
    radius: float
    name: str


def _link_constants(skel: Skeleton) -> list[_LinkConst]:
    out = []
    for link in skel.links:
        a, b = link.joint_a, link.joint_b
        if skel.joints[b].parent == a:
            body = a
            p0 = np.zeros(3)
            p1 = skel.joints[b].offset.astype(float)
        elif skel.joints[a].parent == b:
            body = b
            p0 = np.zeros(3)
            p1 = skel.joints[a].offset.astype(float)
        else:
            raise ValueError(f"link {link.name} joints are not parent/child")
        axis = p1 - p0
        length = float(np.linalg.norm(axis))
        if link.model == "point":
            com = p1.copy()
            inertia = np.zeros((3, 3))
        else:
            com = (p0 + p1) / 2.0
            i_ax, i_perp = capsule_inertia(link.mass, link.radius, length)
            if length < 1e-12:
                rot = np.eye(3)
            else:
                u, w = orthonormal_frame(axis)
                rot = np.stack([u, axis / length, w], axis=1)
            inertia = rot @ np.diag([i_perp, i_ax, i_perp]) @ rot.T
        out.append(
            _LinkConst(
                body=body,
                mass=link.mass,
                com_local=com,
                inertia_local=inertia,
                p0_local=p0,
                p1_local=p1,
                radius=link.radius,
                name=link.name,
            )
        )
    return out


_LINK_CACHE: dict[int, list[_LinkConst]] = {}


def _links_for(skel: Skeleton) -> list[_LinkConst]:
    key = id(skel)
    if key not in _LINK_CACHE:
        _LINK_CACHE[key] = _link_constants(skel)
    return _LINK_CACHE[key]


# ---------------------------------------------------------------------------
# kinematic sweeps

@dataclass
class _BodyKin:
    r: np.ndarray          # (J,3,3) world rotations
    p: np.ndarray          # (J,3) world joint positions
    omega: np.ndarray      # (J,3) world angular velocity
    vel: np.ndarray        # (J,3) world velocity of the joint origin
    alpha: np.ndarray      # (J,3) world angular acceleration (zero-qdd sweep)
    acc: np.ndarray        # (J,3) world origin acceleration (zero-qdd sweep)
    dof_axis: np.ndarray   # (n,3) world axis per rotational dof (0 for linear)
    dof_origin: np.ndarray  # (n,3) world origin per dof
    dof_linear: np.ndarray  # (n,) 1.0 where the dof is translational
    dof_body: np.ndarray   # (n,) body index owning the dof
    ancestors: list[list[int]]  # dof indices affecting each body


def _ancestor_dofs(skel: Skeleton) -> list[list[int]]:
    slices = _joint_slices(skel)
    out = []
    for i in range(skel.n_joints):
        dofs: list[int] = []
        j: int | None = i
        while j is not None:
            start, nd = slices[j]
            dofs.extend(range(start, start + nd))
            j = skel.joints[j].parent
        out.append(sorted(dofs))
    return out


_ANCESTOR_CACHE: dict[int, list[list[int]]] = {}


def _ancestors_for(skel: Skeleton) -> list[list[int]]:
    key = id(skel)
    if key not in _ANCESTOR_CACHE:
        _ANCESTOR_CACHE[key] = _ancestor_dofs(skel)
    return _ANCESTOR_CACHE[key]


def _kinematics(skel: Skeleton, q: np.ndarray, v: np.ndarray, gravity: float) -> _BodyKin:
    n_j = skel.n_joints
    n = dof_count(skel)
    slices = _joint_slices(skel)
    r = np.zeros((n_j, 3, 3))
    p = np.zeros((n_j, 3))
    omega = np.zeros((n_j, 3))
    vel = np.zeros((n_j, 3))
    alpha = np.zeros((n_j, 3))
    acc = np.zeros((n_j, 3))
    dof_axis = np.zeros((n, 3))
    dof_origin = np.zeros((n, 3))
    dof_linear = np.zeros(n)
    dof_body = np.zeros(n, dtype=int)

    for i, joint in enumerate(skel.joints):
        start, nd = slices[i]
        if i == 0:
            if skel.base == "free":
                r[0] = rotvec_to_matrix(q[3:6])
                p[0] = q[0:3]
                vel[0] = v[0:3]
                omega[0] = v[3:6]
                acc[0] = np.array([0.0, gravity, 0.0])
                for k in range(3):
                    dof_linear[start + k] = 1.0
                    dof_axis[start + k] = np.eye(3)[k]
                    dof_body[start + k] = 0
                for k in range(3):
                    dof_axis[start + 3 + k] = np.eye(3)[k]
                    dof_origin[start + 3 + k] = p[0]
                    dof_body[start + 3 + k] = 0
                continue
            # fixed base: joint 0 hangs off the world frame
            parent_r = np.eye(3)
            parent_p = np.zeros(3)
            parent_w = np.zeros(3)
            parent_v = np.zeros(3)
            parent_al = np.zeros(3)
            parent_ac = np.array([0.0, gravity, 0.0])
        else:
            pa = joint.parent
            parent_r = r[pa]
            parent_p = p[pa]
            parent_w = omega[pa]
            parent_v = vel[pa]
            parent_al = alpha[pa]
            parent_ac = acc[pa]

        offset_w = parent_r @ joint.offset
        p[i] = parent_p + offset_w
        vel[i] = parent_v + np.cross(parent_w, offset_w)
        acc[i] = (
            parent_ac
            + np.cross(parent_al, offset_w)
            + np.cross(parent_w, np.cross(parent_w, offset_w))
        )
        if nd == 3:
            local = rotvec_to_matrix(q[start : start + 3])
            omega_rel_local = v[start : start + 3]
        elif nd == 1:
            local = rotvec_to_matrix(joint.axis * q[start])
            omega_rel_local = joint.axis * v[start]
        else:
            local = np.eye(3)
            omega_rel_local = np.zeros(3)
        r[i] = parent_r @ local
        omega_joint = r[i] @ omega_rel_local
        omega[i] = parent_w + omega_joint
        alpha[i] = parent_al + np.cross(omega[i], omega_joint)
        if nd == 3:
            for k in range(3):
                dof_axis[start + k] = r[i][:, k]
                dof_origin[start + k] = p[i]
                dof_body[start + k] = i
        elif nd == 1:
            dof_axis[start] = r[i] @ joint.axis
            dof_origin[start] = p[i]
            dof_body[start] = i

    return _BodyKin(
        r=r,
        p=p,
        omega=omega,
        vel=vel,
        alpha=alpha,
        acc=acc,
        dof_axis=dof_axis,
        dof_origin=dof_origin,
        dof_linear=dof_linear,
        dof_body=dof_body,
        ancestors=_ancestors_for(skel),
    )


def _point_jacobian(kin: _BodyKin, body: int, point: np.ndarray, n: int) -> np.ndarray:
    """(3, n) world-velocity Jacobian of a point rigidly attached to a body."""
    jac = np.zeros((3, n))
    for k in kin.ancestors[body]:
        if kin.dof_linear[k]:
            jac[:, k] = kin.dof_axis[k]
        else:
            jac[:, k] = np.cross(kin.dof_axis[k], point - kin.dof_origin[k])
    return jac


def _angular_jacobian(kin: _BodyKin, body: int, n: int) -> np.ndarray:
    jac = np.zeros((3, n))
    for k in kin.ancestors[body]:
        if not kin.dof_linear[k]:
            jac[:, k] = kin.dof_axis[k]
    return jac


def _armature_vector(skel: Skeleton) -> np.ndarray:
    n = dof_count(skel)
    slices = _joint_slices(skel)
    arm = np.zeros(n)
    for i, j in enumerate(skel.joints):
        if skel.base == "free" and i == 0:
            continue
        start, nd = slices[i]
        arm[start : start + nd] = j.armature
    return arm


def _dynamics_matrices(
    skel: Skeleton, q: np.ndarray, v: np.ndarray, gravity: float = GRAVITY
) -> tuple[np.ndarray, np.ndarray, _BodyKin]:
    """Mass matrix and bias vector (Coriolis/centrifugal + gravity)."""
    n = dof_count(skel)
    kin = _kinematics(skel, q, v, gravity)
    m_mat = np.diag(_armature_vector(skel))
    bias = np.zeros(n)
    for link in _links_for(skel):
        body = link.body
        r_b = kin.r[body]
        com = kin.p[body] + r_b @ link.com_local
        jv = _point_jacobian(kin, body, com, n)
        jw = _angular_jacobian(kin, body, n)
        inertia_w = r_b @ link.inertia_local @ r_b.T
        m_mat += link.mass * (jv.T @ jv) + jw.T @ inertia_w @ jw
        rel = com - kin.p[body]
        a_com = (
            kin.acc[body]
            + np.cross(kin.alpha[body], rel)
            + np.cross(kin.omega[body], np.cross(kin.omega[body], rel))
        )
        force = link.mass * a_com
        torque = inertia_w @ kin.alpha[body] + np.cross(
            kin.omega[body], inertia_w @ kin.omega[body]
        )
        bias += jv.T @ force + jw.T @ torque
    return m_mat, bias, kin


def mass_matrix(skel: Skeleton, q: Configuration | np.ndarray) -> np.ndarray:
    vec = q if isinstance(q, np.ndarray) else config_to_generalized(skel, q)
    m, _, _ = _dynamics_matrices(skel, vec, np.zeros_like(vec))
    return 0.5 * (m + m.T)


def bias_forces(
    skel: Skeleton,
    q: Configuration | np.ndarray,
    v: np.ndarray,
    gravity: float = GRAVITY,
) -> np.ndarray:
    vec = q if isinstance(q, np.ndarray) else config_to_generalized(skel, q)
    _, bias, _ = _dynamics_matrices(skel, vec, np.asarray(v, dtype=float), gravity)
    return bias


def inverse_dynamics(
    skel: Skeleton,
    q: Configuration | np.ndarray,
    v: np.ndarray,
    a: np.ndarray,
    gravity: float = GRAVITY,
) -> np.ndarray:
    vec = q if isinstance(q, np.ndarray) else config_to_generalized(skel, q)
    m, bias, _ = _dynamics_matrices(skel, vec, np.asarray(v, dtype=float), gravity)
    return m @ np.asarray(a, dtype=float) + bias


def forward_acceleration(
    skel: Skeleton,
    q: np.ndarray,
    v: np.ndarray,
    tau: np.ndarray,
    gravity: float = GRAVITY,
    external: np.ndarray | None = None,
) -> np.ndarray:
    m, bias, _ = _dynamics_matrices(skel, q, v, gravity)
    rhs = np.asarray(tau, dtype=float) - bias
    if external is not None:
        rhs = rhs + external
    try:
        return np.linalg.solve(m, rhs)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("singular mass matrix; check the skeleton") from exc


# ---------------------------------------------------------------------------
# ground contact

def _contact_forces(skel: Skeleton, kin: _BodyKin, n: int) -> np.ndarray:
    """Generalized forces from the ground-plane spring-damper contacts."""
    total = np.zeros(n)
    for link in _links_for(skel):
        body = link.body
        r_b = kin.r[body]
        p0 = kin.p[body] + r_b @ link.p0_local
        p1 = kin.p[body] + r_b @ link.p1_local
        points = capsule_surface_samples(p0, p1, link.radius)
        heights = points[:, 1]
        if np.all(heights >= 0.0):
            continue
        for pt in points[heights < 0.0]:
            vel = kin.vel[body] + np.cross(kin.omega[body], pt - kin.p[body])
            f_n = max(0.0, -CONTACT_KP * pt[1] - CONTACT_KD * vel[1])
            if f_n <= 0.0:
                continue
            v_t = np.array([vel[0], 0.0, vel[2]])
            f_t = -CONTACT_KT * v_t
            cap = FRICTION_MU * f_n
            norm_t = float(np.linalg.norm(f_t))
            if norm_t > cap:
                f_t *= cap / norm_t
            force = np.array([f_t[0], f_n, f_t[2]])
            total += _point_jacobian(kin, body, pt, n).T @ force
    return total


# ---------------------------------------------------------------------------
# integration

def _integrate_coordinates(skel: Skeleton, q: np.ndarray, v_new: np.ndarray, dt: float) -> np.ndarray:
    slices = _joint_slices(skel)
    out = q.copy()
    for i, joint in enumerate(skel.joints):
        start, nd = slices[i]
        if skel.base == "free" and i == 0:
            out[0:3] = q[0:3] + dt * v_new[0:3]
            out[3:6] = compose_rotvec(v_new[3:6] * dt, q[3:6])
            continue
        if nd == 3:
            out[start : start + 3] = compose_rotvec(
                q[start : start + 3], v_new[start : start + 3] * dt
            )
        elif nd == 1:
            out[start] = q[start] + dt * v_new[start]
    return out


def step(
    skel: Skeleton,
    state: SimState,
    tau: np.ndarray,
    dt: float,
    gravity: float = GRAVITY,
    contacts: bool = True,
) -> SimState:
    """Semi-implicit Euler step: velocity first, then position with the new
    velocity. Hinge coordinates update additively; ball-joint rotation
    vectors and the root orientation update by rotation composition."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = dof_count(skel)
    m, bias, kin = _dynamics_matrices(skel, state.q, state.v, gravity)
    rhs = np.asarray(tau, dtype=float) - bias
    if contacts:
        rhs = rhs + _contact_forces(skel, kin, n)
    try:
        acc = np.linalg.solve(m, rhs)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("singular mass matrix; check the skeleton") from exc
    v_new = state.v + dt * acc
    q_new = _integrate_coordinates(skel, state.q, v_new, dt)
    return SimState(q=q_new, v=v_new, t=state.t + dt)


# ---------------------------------------------------------------------------
# PD tracking

@dataclass
class TrackingResult:
    trajectory: Trajectory
    torque_log: np.ndarray     # (K, n) applied actuation + contact generalized forces
    actuation_log: np.ndarray  # (K, n) PD actuation only


def _torque_limit_vector(skel: Skeleton) -> np.ndarray:
    n = dof_count(skel)
    slices = _joint_slices(skel)
    lim = np.full(n, np.inf)
    if skel.torque_limits is None:
        return lim
    for i in range(skel.n_joints):
        if skel.base == "free" and i == 0:
            continue
        start, nd = slices[i]
        lim[start : start + nd] = skel.torque_limits[i]
    return lim


def simulate_tracking(
    skel: Skeleton,
    reference: Trajectory,
    gains: tuple[float, float | None] = (300.0, None),
    dt: float = SIM_DT,
    gravity: float = GRAVITY,
) -> TrackingResult:
    """Track a reference trajectory with joint-space PD control.

    The root is unactuated; only ground contact supports the character.
    Returns the simulated motion resampled at the reference frame times
    plus the realized generalized-force log.
    """
    kp, kd = gains
    if kp < 0 or (kd is not None and kd < 0):
        raise ValueError("gains must be non-negative")
    n = dof_count(skel)
    ref = np.stack([config_to_generalized(skel, f) for f in reference.frames])
    k_frames = ref.shape[0]
    dt_ref = reference.dt

    state = SimState(q=ref[0].copy(), v=np.zeros(n), t=0.0)
    kp_vec = np.full(n, float(kp))
    if kd is None:
        m0 = mass_matrix(skel, ref[0])
        kd_vec = 2.0 * np.sqrt(np.maximum(kp_vec * np.diag(m0), 0.0))
    else:
        kd_vec = np.full(n, float(kd))
    if skel.base == "free":
        kp_vec[0:6] = 0.0
        kd_vec[0:6] = 0.0
    tq_limit = _torque_limit_vector(skel)

    frames = [generalized_to_config(skel, state.q)]
    torque_log = np.zeros((k_frames, n))
    actuation_log = np.zeros((k_frames, n))

    for k in range(1, k_frames):
        t_target = k * dt_ref
        seg = k - 1
        q_a, q_b = ref[seg], ref[min(seg + 1, k_frames - 1)]
        v_ref = (q_b - q_a) / dt_ref
        while state.t < t_target - 1e-9:
            h = min(dt, t_target - state.t)
            alphat = np.clip((state.t - seg * dt_ref) / dt_ref, 0.0, 1.0)
            q_ref = q_a + alphat * (q_b - q_a)
            tau = kp_vec * (q_ref - state.q) + kd_vec * (v_ref - state.v)
            tau = np.clip(tau, -tq_limit, tq_limit)
            m, bias, kin = _dynamics_matrices(skel, state.q, state.v, gravity)
            contact = _contact_forces(skel, kin, n)
            acc = np.linalg.solve(m, tau + contact - bias)
            v_new = state.v + h * acc
            state = SimState(
                q=_integrate_coordinates(skel, state.q, v_new, h),
                v=v_new,
                t=state.t + h,
            )
            if np.max(np.abs(state.q)) > DIVERGENCE_LIMIT:
                raise SimulationDivergence(
                    f"simulation diverged near frame {k}", frame=k
                )
            torque_log[k] = tau + contact
            actuation_log[k] = tau
        frames.append(generalized_to_config(skel, state.q))

    traj = Trajectory(
        frames=frames, dt=dt_ref, keyframe_indices=list(reference.keyframe_indices)
    )
    return TrackingResult(trajectory=traj, torque_log=torque_log, actuation_log=actuation_log)


# ---------------------------------------------------------------------------
# collision distances and the trajectory cost

def collision_pairs(skel: Skeleton) -> list[tuple[int, int]]:
    """Capsule pairs checked for self-collision.

    Pairs whose bodies are within two joints of each other on the tree are
    excluded: those capsules legitimately overlap at their shared joints.
    """
    links = _links_for(skel)

    def tree_distance(a: int, b: int) -> int:
        chain_a = []
        x: int | None = a
        while x is not None:
            chain_a.append(x)
            x = skel.joints[x].parent
        depth_b = 0
        x = b
        while x is not None:
            if x in chain_a:
                return chain_a.index(x) + depth_b
            x = skel.joints[x].parent
            depth_b += 1
        return 10**6

    pairs = []
    for i in range(len(links)):
        for j in range(i + 1, len(links)):
            if tree_distance(links[i].body, links[j].body) > 2:
                pairs.append((i, j))
    return pairs


_PAIR_CACHE: dict[int, list[tuple[int, int]]] = {}


def _pairs_for(skel: Skeleton) -> list[tuple[int, int]]:
    key = id(skel)
    if key not in _PAIR_CACHE:
        _PAIR_CACHE[key] = collision_pairs(skel)
    return _PAIR_CACHE[key]


def collision_distances(
    skel: Skeleton, q: Configuration
) -> list[tuple[str, float]]:
    """Surface distance per collision pair; negative means penetration."""
    from .skeleton import forward_kinematics

    fk = forward_kinematics(skel, q)
    links = _links_for(skel)
    segs = []
    for link in links:
        r_b = fk.rotations[link.body]
        p_b = fk.positions[link.body]
        segs.append((p_b + r_b @ link.p0_local, p_b + r_b @ link.p1_local))
    out = []
    for i, j in _pairs_for(skel):
        d = segment_segment_distance(segs[i][0], segs[i][1], segs[j][0], segs[j][1])
        out.append((f"{links[i].name}|{links[j].name}", d - links[i].radius - links[j].radius))
    return out


@dataclass
class MotionCostReport:
    limit_term: float       # integrated joint-limit violation
    collision_term: float   # integrated gated collision penalty
    dynamics_term: float    # integrated equation-of-motion residual
    total: float
    satisfied: bool
    dynamics_undefined: bool = False
    per_frame: list[dict] | None = None

    def to_dict(self) -> dict:
        return {
            "limit": self.limit_term,
            "collision": self.collision_term,
            "dynamics": self.dynamics_term,
            "total": self.total,
            "satisfied": self.satisfied,
            "dynamics_undefined": self.dynamics_undefined,
        }


def _trapezoid(values: np.ndarray) -> float:
    """Trapezoid integral over normalized progress lambda in [0, 1]."""
    if len(values) < 2:
        return float(values[0]) if len(values) else 0.0
    h = 1.0 / (len(values) - 1)
    return float(h * (0.5 * values[0] + values[1:-1].sum() + 0.5 * values[-1]))


def motion_cost(
    skel: Skeleton,
    traj: Trajectory,
    torque_log: np.ndarray | None = None,
    w: ConstraintWeights | None = None,
    keep_per_frame: bool = False,
) -> MotionCostReport:
    """Trajectory-level penalty: joint limits, self-collision, dynamics.

    All integrals are trapezoid approximations over the frames, with
    progress normalized to [0, 1]. When no torque log is supplied, the
    torque is the feed-forward inverse dynamics of the trajectory itself
    (the torque a perfectly tracking controller applies), which makes the
    dynamics term vanish for kinematic trajectories.
    """
    if w is None:
        w = ConstraintWeights()
    k_frames = len(traj.frames)
    limit_vals = np.array([range_penalty(skel, f) for f in traj.frames])
    g_limit = _trapezoid(limit_vals)

    coll_vals = np.zeros(k_frames)
    for idx, frame in enumerate(traj.frames):
        total = 0.0
        for _, d in collision_distances(skel, frame):
            pen = hinge_penalty(d, w.d_min)  # max(0, d_min - d)^2
            if pen > 0.0:
                gate = 1.0 / (1.0 + np.exp(-w.kappa_c * (w.d_min - d)))
                total += pen * gate
        coll_vals[idx] = total
    g_coll = _trapezoid(coll_vals)

    dynamics_undefined = k_frames < 3
    dyn_vals = np.zeros(k_frames)
    if not dynamics_undefined:
        gen = np.stack([config_to_generalized(skel, f) for f in traj.frames])
        dt = traj.dt
        vel = np.zeros_like(gen)
        accel = np.zeros_like(gen)
        vel[1:-1] = (gen[2:] - gen[:-2]) / (2.0 * dt)
        accel[1:-1] = (gen[2:] - 2.0 * gen[1:-1] + gen[:-2]) / (dt * dt)
        residual = np.zeros(k_frames)
        for idx in range(1, k_frames - 1):
            required = inverse_dynamics(skel, gen[idx], vel[idx], accel[idx])
            if torque_log is not None:
                applied = torque_log[idx]
            else:
                applied = required
            residual[idx] = float(np.sum((required - applied) ** 2))
        residual[0] = residual[1]
        residual[-1] = residual[-2]
        dyn_vals = residual
    g_dyn = _trapezoid(dyn_vals) if not dynamics_undefined else 0.0

    total = w.w3 * g_limit + w.w4 * g_coll + w.w5 * g_dyn
    per_frame = None
    if keep_per_frame:
        per_frame = [
            {"limit": float(l), "collision": float(c), "dynamics": float(d)}
            for l, c, d in zip(limit_vals, coll_vals, dyn_vals)
        ]
    return MotionCostReport(
        limit_term=g_limit,
        collision_term=g_coll,
        dynamics_term=g_dyn,
        total=total,
        satisfied=total <= w.eps_motion,
        dynamics_undefined=dynamics_undefined,
        per_frame=per_frame,
    )
