"""Solve a configuration that satisfies a pose script.

Projected coordinate descent over the posecode residuals: each statement
compiles into a scalar residual on the configuration, only the DOFs that
can influence a statement are optimized, and every accepted step keeps the
configuration inside joint limits. Deterministic given (ast, init, seed).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .posecode_parser import PoseScriptAST, PoseStatement, scale_to_value
from .skeleton import (
    CONTACT_TOLERANCE,
    Configuration,
    Skeleton,
    angle_bin_midpoint,
    bend_angle,
    distance_bin_midpoint,
    forward_kinematics,
)

__all__ = ["PoseResidualReport", "SolveError", "pose_residual", "solve_pose"]

SOLVE_TOLERANCE = 1e-4     # per-statement residual target (squared radians scale)
MAX_SWEEPS = 2000
REGULARIZER = 1e-3         # keeps unconstrained active DOFs near the init
RELPOS_MARGIN = 0.05       # meters of separation demanded by relative-position codes
LEAN_SCALE = np.pi / 2     # radians at full-scale lean codes
TURN_SCALE = np.pi         # radians at full-scale facing codes (about-face)
POSITION_SCALE = 1.0       # meters at full-scale horizontal position codes
HEIGHT_SCALE = 0.3         # meters at full-scale vertical position codes


@dataclass
class PoseResidualReport:
    total: float
    per_statement: list[tuple[int, float]]

    @classmethod
    def from_values(cls, values: list[float]) -> "PoseResidualReport":
        return cls(
            total=float(sum(values)),
            per_statement=[(i, float(v)) for i, v in enumerate(values)],
        )

    def max_residual(self) -> float:
        return max(v for _, v in self.per_statement)


class SolveError(RuntimeError):
    """Solver ran out of budget; carries the best configuration found."""

    def __init__(self, message: str, best: Configuration, report: PoseResidualReport):
        super().__init__(message)
        self.best = best
        self.report = report


def _flatten(q: Configuration) -> np.ndarray:
    return np.concatenate(
        [q.root_position, q.root_orientation, q.joint_rotations[1:].ravel()]
    )


def _unflatten(skel: Skeleton, vec: np.ndarray) -> Configuration:
    n = skel.n_joints
    joints = np.zeros((n, 3))
    joints[1:] = vec[6:].reshape(n - 1, 3)
    return Configuration(vec[0:3].copy(), vec[3:6].copy(), joints)


def _dof_bounds(skel: Skeleton) -> tuple[np.ndarray, np.ndarray]:
    lo = np.full(6 + 3 * (skel.n_joints - 1), -np.inf)
    hi = np.full_like(lo, np.inf)
    limits_lo, limits_hi = skel.limit_arrays()
    lo[6:] = limits_lo[1:].ravel()
    hi[6:] = limits_hi[1:].ravel()
    return lo, hi


def _joint_dofs(skel: Skeleton, joint: int) -> list[int]:
    if joint == 0:
        return [3, 4, 5]
    base = 6 + 3 * (joint - 1)
    return [base, base + 1, base + 2]


def _chain_dofs(skel: Skeleton, joint: int) -> list[int]:
    out: list[int] = []
    for j in skel.chain_to_root(joint):
        out.extend(_joint_dofs(skel, j))
    return out


def _heading_axes(q: Configuration) -> tuple[np.ndarray, np.ndarray]:
    """Character left/forward directions from the root yaw only."""
    from .geometry import rotvec_to_matrix

    fwd = rotvec_to_matrix(q.root_orientation) @ np.array([0.0, 0.0, 1.0])
    fwd[1] = 0.0
    n = np.linalg.norm(fwd)
    fwd = np.array([0.0, 0.0, 1.0]) if n < 1e-9 else fwd / n
    left = np.array([fwd[2], 0.0, -fwd[0]])
    return left, fwd


@dataclass
class _Term:
    """One statement compiled to a residual over the flat DOF vector."""

    index: int
    active: list[int]
    needs_fk: bool
    fn: object  # (skel, q, fk) -> float


def _compile(ast: PoseScriptAST, skel: Skeleton) -> list[_Term]:
    terms = []
    for idx, st in enumerate(ast.statements):
        terms.append(_compile_statement(idx, st, skel))
    return terms


def _foot_reach(skel: Skeleton, joint: int) -> float:
    link = next((l for l in skel.links if l.joint_b == joint), None)
    return link.radius if link is not None else 0.0


def _compile_statement(idx: int, st: PoseStatement, skel: Skeleton) -> _Term:
    code = st.predicate
    cat = code.category

    if cat == "angle":
        joint = skel.joint_index(st.subject)
        jdef = skel.joints[joint]
        if not jdef.is_hinged:
            raise ValueError(f"angle statement on non-hinged joint {st.subject}")
        lo, hi = jdef.limits[jdef.hinge_dof]
        max_flex = max(abs(lo), abs(hi))
        # bin midpoints past the joint limit clamp to the limit
        target = min(angle_bin_midpoint(code.value), max_flex)
        hinge_dof = jdef.hinge_dof
        sign = jdef.hinge_sign

        def angle_fn(skel, q, fk, joint=joint, target=target, hd=hinge_dof, sign=sign):
            # bend measured geometrically, signed by the flexion direction so
            # the residual stays smooth through zero
            bend = bend_angle(skel, q, joint)
            if sign * q.joint_rotations[joint][hd] < 0:
                bend = -bend
            return (bend - target) ** 2

        dof = _joint_dofs(skel, joint)[hinge_dof]
        return _Term(idx, [dof], False, angle_fn)

    if cat == "distance":
        a = skel.joint_index(st.subject[0])
        b = skel.joint_index(st.subject[1])
        target = distance_bin_midpoint(code.value) * skel.shoulder_width
        s = skel.shoulder_width

        def dist_fn(skel, q, fk, a=a, b=b, target=target, s=s):
            d = float(np.linalg.norm(fk.positions[a] - fk.positions[b]))
            return ((d - target) / s) ** 2

        active = sorted(set(_chain_dofs(skel, a) + _chain_dofs(skel, b)))
        return _Term(idx, active, True, dist_fn)

    if cat.startswith("relpos"):
        a = skel.joint_index(st.subject[0])
        b = skel.joint_index(st.subject[1])
        value = code.value
        if value.endswith("-ignored"):
            return _Term(idx, [], False, lambda skel, q, fk: 0.0)
        axis = cat[-1]

        def relpos_fn(skel, q, fk, a=a, b=b, axis=axis, value=value):
            delta = fk.positions[a] - fk.positions[b]
            if axis == "y":
                coord = delta[1]
            else:
                left, fwd = _heading_axes(q)
                coord = float(delta @ (left if axis == "x" else fwd))
            # positive-direction tokens per axis: left(+x), above(+y), in front of(+z)
            positive = value in ("at the left of", "above", "in front of")
            short = RELPOS_MARGIN - coord if positive else coord + RELPOS_MARGIN
            return max(0.0, short) ** 2

        active = sorted(set(_chain_dofs(skel, a) + _chain_dofs(skel, b)))
        return _Term(idx, active, True, relpos_fn)

    if cat == "ground_contact":
        if code.value == "ground-ignored":
            return _Term(idx, [], False, lambda skel, q, fk: 0.0)
        joint = skel.joint_index(st.subject)
        reach = _foot_reach(skel, joint)

        def ground_fn(skel, q, fk, joint=joint, reach=reach):
            height = fk.positions[joint, 1] - reach
            return max(0.0, height - CONTACT_TOLERANCE) ** 2

        active = sorted(set(_chain_dofs(skel, joint) + [1]))
        return _Term(idx, active, True, ground_fn)

    if cat == "pitch_roll":
        if code.value == "pitch-roll-ignored":
            return _Term(idx, [], False, lambda skel, q, fk: 0.0)
        joint = skel.joint_index(st.subject)
        parent = skel.joints[joint].parent
        if parent is None:
            raise ValueError("pitch/roll statement needs a non-root joint")
        vertical = code.value == "vertical"

        def pr_fn(skel, q, fk, joint=joint, parent=parent, vertical=vertical):
            bone = fk.positions[joint] - fk.positions[parent]
            n = np.linalg.norm(bone)
            if n < 1e-9:
                return 0.0
            sin_elev = float(np.clip(bone[1] / n, -1.0, 1.0))
            if vertical:
                return (np.arccos(abs(sin_elev))) ** 2
            return (np.arcsin(abs(sin_elev))) ** 2

        active = sorted(set(_chain_dofs(skel, joint) + [3, 5]))
        return _Term(idx, active, True, pr_fn)

    if cat == "orientation":
        v = scale_to_value(code.value)
        if code.axis == "x":   # forward/backward lean, forward = negative scale
            dof, target = 3, -v * LEAN_SCALE
        elif code.axis == "y":  # left/right lean, left = negative scale
            dof, target = 5, v * LEAN_SCALE
        else:                   # facing, clockwise = negative scale
            dof, target = 4, v * TURN_SCALE

        def orient_fn(skel, q, fk, dof=dof, target=target):
            comp = (q.root_orientation)[dof - 3]
            return (comp - target) ** 2

        return _Term(idx, [dof], False, orient_fn)

    if cat == "position":
        v = scale_to_value(code.value)
        if code.axis == "x":    # left = negative scale, +x is the character's left
            dof, target = 0, -v * POSITION_SCALE
        elif code.axis == "y":
            dof, target = 1, float(skel.rest_root_position[1]) + v * HEIGHT_SCALE
        else:
            dof, target = 2, v * POSITION_SCALE

        def pos_fn(skel, q, fk, dof=dof, target=target):
            return (q.root_position[dof] - target) ** 2

        return _Term(idx, [dof], False, pos_fn)

    raise ValueError(f"unsupported posecode category {cat}")


def _evaluate(skel: Skeleton, terms: list[_Term], vec: np.ndarray) -> list[float]:
    q = _unflatten(skel, vec)
    fk = forward_kinematics(skel, q) if any(t.needs_fk for t in terms) else None
    return [t.fn(skel, q, fk) for t in terms]


def pose_residual(
    ast: PoseScriptAST, skel: Skeleton, q: Configuration
) -> PoseResidualReport:
    terms = _compile(ast, skel)
    values = _evaluate(skel, terms, _flatten(q))
    return PoseResidualReport.from_values(values)


def solve_pose(
    ast: PoseScriptAST,
    skel: Skeleton,
    init: Configuration,
    tol: float = SOLVE_TOLERANCE,
    max_sweeps: int = MAX_SWEEPS,
    seed: int | None = None,
    init_jitter: float = 0.0,
) -> Configuration:
    """Return a configuration whose per-statement residuals are all < tol.

    Raises SolveError (carrying the best configuration and residual report)
    when the budget runs out, e.g. for mutually contradictory statements.
    """
    terms = _compile(ast, skel)
    lo, hi = _dof_bounds(skel)
    vec = _flatten(init)
    active = sorted({d for t in terms for d in t.active})
    if init_jitter > 0.0 and active:
        rng = np.random.default_rng(seed)
        vec[active] = vec[active] + rng.uniform(
            -init_jitter, init_jitter, size=len(active)
        )
    vec = np.minimum(np.maximum(vec, lo), hi)
    init_vec = vec.copy()
    by_dof: dict[int, list[int]] = {d: [] for d in active}
    for ti, t in enumerate(terms):
        for d in t.active:
            by_dof[d].append(ti)

    values = np.array(_evaluate(skel, terms, vec))

    def subset_sum(term_ids: list[int], v: np.ndarray) -> np.ndarray:
        subset = [terms[i] for i in term_ids]
        q = _unflatten(skel, v)
        fk = forward_kinematics(skel, q) if any(t.needs_fk for t in subset) else None
        return np.array([t.fn(skel, q, fk) for t in subset])

    h = 1e-4
    for _ in range(max_sweeps):
        if not active or values.max() < tol:
            break
        improved = False
        for d in active:
            ids = by_dof[d]
            saved = vec[d]
            base = float(values[ids].sum()) + REGULARIZER * (saved - init_vec[d]) ** 2

            def local(x: float) -> tuple[float, np.ndarray]:
                vec[d] = x
                vals = subset_sum(ids, vec)
                vec[d] = saved
                return (
                    float(vals.sum()) + REGULARIZER * (x - init_vec[d]) ** 2,
                    vals,
                )

            hp = saved + h <= hi[d]
            hm = saved - h >= lo[d]
            if hp and hm:
                f_plus, _ = local(saved + h)
                f_minus, _ = local(saved - h)
                grad = (f_plus - f_minus) / (2 * h)
                curv = (f_plus - 2 * base + f_minus) / (h * h)
            elif hp:
                f_plus, _ = local(saved + h)
                grad = (f_plus - base) / h
                curv = 0.0
            else:
                f_minus, _ = local(saved - h)
                grad = (base - f_minus) / h
                curv = 0.0
            if abs(grad) < 1e-14:
                if base <= tol:
                    continue
                # flat spot with residual left: probe both directions
                for probe in (0.1, -0.1):
                    cand = float(np.clip(saved + probe, lo[d], hi[d]))
                    if cand == saved:
                        continue
                    f_cand, vals_cand = local(cand)
                    if f_cand < base:
                        vec[d] = cand
                        values[ids] = vals_cand
                        improved = True
                        break
                continue
            if curv > 1e-9:
                step = -grad / curv
            else:
                step = -float(np.sign(grad)) * 0.05
            step = float(np.clip(step, -0.5, 0.5))
            for _ in range(6):
                cand = float(np.clip(saved + step, lo[d], hi[d]))
                if cand == saved:
                    break
                f_cand, vals_cand = local(cand)
                if f_cand < base:
                    vec[d] = cand
                    values[ids] = vals_cand
                    improved = True
                    break
                step *= 0.5
        if not improved:
            break
    if values.size and values.max() >= tol:
        report = PoseResidualReport.from_values(list(values))
        raise SolveError(
            f"pose solve did not converge (max residual {report.max_residual():.3g})",
            _unflatten(skel, vec),
            report,
        )
    return _unflatten(skel, vec)
