"""Behavior scripts to long-horizon humanoid joint trajectories.

Pipeline stages: parse pose/motion scripts from the controlled vocabulary,
solve keyframe configurations, check transition penalties, interpolate and
refine in-between frames, optionally track the result under rigid-body
dynamics, and score physical plausibility.
"""

__version__ = "0.1.0"

from .constraints import (
    BagOfPrimitivesProvider,
    ConstraintWeights,
    hinge_penalty,
    range_penalty,
    rate_penalty,
    semantic_penalty,
    transition_cost,
)
from .dynamics import (
    SimState,
    bias_forces,
    collision_distances,
    inverse_dynamics,
    mass_matrix,
    motion_cost,
    simulate_tracking,
    step,
)
from .inbetween import Trajectory, assemble, interpolate, refine_trajectory
from .metrics import (
    PhysErrReport,
    SubjectiveScores,
    diversity,
    fid,
    mm_dist,
    multimodality,
    phys_err,
    r_precision,
    success_rate,
)
from .planner import (
    PipelineConfig,
    TemplateLibrary,
    default_template_library,
    load_external_plan,
    plan_from_template,
    run_pipeline,
)
from .pose_solver import pose_residual, solve_pose
from .posecode_parser import (
    MotionPrimitive,
    MotionScriptAST,
    ParseError,
    PoseCode,
    PoseScriptAST,
    PoseStatement,
    parse_motion_script,
    parse_pose_script,
    render_motion_script,
    render_pose_script,
)
from .script_model import (
    BehaviorScript,
    Diagnostic,
    Step,
    parse_behavior_script,
    serialize_behavior_script,
    validate_behavior_script,
)
from .skeleton import (
    Configuration,
    Skeleton,
    classify_posecodes,
    default_skeleton,
    forward_kinematics,
    load_skeleton,
    tpose,
)
