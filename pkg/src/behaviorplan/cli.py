"""Command-line surface: every subcommand wraps one library operation.

Exit codes: 0 success, 1 domain errors (bad scripts, failed constraints,
diverged simulations), 2 usage errors. Flags beat config-file values,
which beat built-in defaults. BEHAVIORPLAN_SKELETON provides a fallback
skeleton path when --skeleton is not given.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .constraints import ConstraintWeights
from .dynamics import SimulationDivergence, simulate_tracking
from .inbetween import Trajectory
from .metrics import (
    SubjectiveScores,
    diversity,
    fid,
    mm_dist,
    motion_features,
    phys_err,
    r_precision,
    success_rate,
    trajectory_primitive_bag,
)
from .motion_io import (
    RunManifest,
    StageTimer,
    atomic_write_text,
    export_positions_csv,
    read_motion_jsonl,
    write_motion_jsonl,
    write_torque_jsonl,
)
from .planner import (
    PipelineConfig,
    PipelineError,
    default_template_library,
    load_external_plan,
    plan_from_template,
    run_pipeline,
)
from .pose_solver import SolveError, solve_pose
from .posecode_parser import ParseError, parse_pose_script
from .script_model import (
    ScriptError,
    attach_asts,
    parse_behavior_script,
    serialize_behavior_script,
    validate_behavior_script,
)
from .skeleton import Configuration, default_skeleton, load_skeleton, tpose

SKELETON_ENV = "BEHAVIORPLAN_SKELETON"


def _resolve_skeleton(args):
    path = getattr(args, "skeleton", None) or os.environ.get(SKELETON_ENV)
    return load_skeleton(path) if path else default_skeleton()


def _load_config(args) -> PipelineConfig:
    data = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    cfg = PipelineConfig.from_dict(data) if data else PipelineConfig()
    overrides = {
        "in_between": getattr(args, "in_between", None),
        "dt": getattr(args, "dt", None),
        "seed": getattr(args, "seed", None),
        "jobs": getattr(args, "jobs", None),
        "window_keyframes": getattr(args, "window_keyframes", None),
        "blend_frames": getattr(args, "blend_frames", None),
    }
    for name, value in overrides.items():
        if value is not None:
            setattr(cfg, name, value)
    if getattr(args, "simulate", False):
        cfg.simulate = True
    if getattr(args, "no_simulate", False):
        cfg.simulate = False
    if getattr(args, "no_refine", False):
        cfg.refine = False
    if getattr(args, "soft", False):
        cfg.soft = True
    cfg.__post_init__()
    return cfg


def _read_pose(path: str, skel) -> Configuration:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    return Configuration(
        root_position=np.asarray(obj["root_pos"], dtype=float),
        root_orientation=np.asarray(obj["root_rot"], dtype=float),
        joint_rotations=np.asarray(obj["joints"], dtype=float),
    )


def _pose_json(q: Configuration) -> str:
    return json.dumps(
        {
            "root_pos": q.root_position.tolist(),
            "root_rot": q.root_orientation.tolist(),
            "joints": q.joint_rotations.tolist(),
        },
        indent=2,
    )


def _obtain_script(args):
    if getattr(args, "plan", None):
        return load_external_plan(args.plan, lenient=getattr(args, "lenient", False))
    if getattr(args, "summary", None):
        script = plan_from_template(
            args.summary, default_template_library(), getattr(args, "repetitions", 1)
        )
        return attach_asts(script)
    raise ScriptError("provide --plan FILE or --summary TEXT")


# ---------------------------------------------------------------------------
# subcommands

def cmd_parse(args) -> int:
    with open(args.file, "r", encoding="utf-8") as fh:
        script = parse_behavior_script(fh.read())
    diagnostics = validate_behavior_script(script)
    print(
        f"{args.file}: {script.n_keyframes} keyframes, "
        f"{script.n_transitions} transitions"
        + (f", summary: {script.summary!r}" if script.summary else "")
    )
    for d in diagnostics:
        print(d.render(), file=sys.stderr)
    return 1 if diagnostics else 0


def cmd_validate(args) -> int:
    with open(args.plan, "r", encoding="utf-8") as fh:
        script = parse_behavior_script(fh.read())
    diagnostics = validate_behavior_script(script)
    if diagnostics:
        for d in diagnostics:
            print(d.render(), file=sys.stderr)
        return 1
    print(f"{args.plan}: grammar-valid ({script.n_keyframes} keyframes)")
    return 0


def cmd_plan(args) -> int:
    script = plan_from_template(
        args.summary, default_template_library(), args.repetitions
    )
    text = serialize_behavior_script(script)
    if args.out:
        manifest = RunManifest(config={"summary": args.summary, "repetitions": args.repetitions})
        atomic_write_text(args.out, text + "\n")
        manifest.add_output(args.out)
        manifest.write(args.out + ".manifest.json")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def cmd_solve_pose(args) -> int:
    skel = _resolve_skeleton(args)
    with open(args.ast, "r", encoding="utf-8") as fh:
        text = fh.read()
    ast = parse_pose_script(text)
    init = _read_pose(args.init, skel) if args.init else tpose(skel)
    q = solve_pose(ast, skel, init, seed=args.seed or 0)
    from .pose_solver import pose_residual

    report = pose_residual(ast, skel, q)
    payload = _pose_json(q)
    if args.out:
        atomic_write_text(args.out, payload + "\n")
        manifest = RunManifest(config={"ast": args.ast})
        manifest.add_input(args.ast)
        manifest.add_output(args.out)
        manifest.write(args.out + ".manifest.json")
        print(f"wrote {args.out}")
    else:
        print(payload)
    print(
        "residuals: total {:.3e}, per statement {}".format(
            report.total,
            ["{:.3e}".format(v) for _, v in report.per_statement],
        ),
        file=sys.stderr,
    )
    return 0


def cmd_generate(args) -> int:
    skel = _resolve_skeleton(args)
    cfg = _load_config(args)
    timer = StageTimer()
    manifest = RunManifest(config=cfg.to_dict())
    if args.plan:
        manifest.add_input(args.plan)
    with timer.time("plan"):
        script = _obtain_script(args)
    with timer.time("pipeline"):
        result = run_pipeline(script, cfg, skel)
    with timer.time("write"):
        write_motion_jsonl(args.out, result.trajectory)
        manifest.add_output(args.out)
        if result.tracking is not None and args.torques:
            write_torque_jsonl(
                args.torques, result.tracking.actuation_log, result.trajectory.dt
            )
            manifest.add_output(args.torques)
        if args.report:
            atomic_write_text(
                args.report, json.dumps(result.run_report(), indent=2) + "\n"
            )
            manifest.add_output(args.report)
    manifest.stage_seconds = timer.stage_seconds
    manifest.write(args.out + ".manifest.json")
    print(
        f"wrote {args.out}: {result.frames} frames, "
        f"phys-err {result.phys_report.total:.4f}, "
        f"motion cost {result.motion_report.total:.4g}"
    )
    return 0


def cmd_simulate(args) -> int:
    skel = _resolve_skeleton(args)
    reference = read_motion_jsonl(args.motion)
    tracking = simulate_tracking(skel, reference, gains=(args.kp, args.kd))
    write_motion_jsonl(args.out, tracking.trajectory)
    manifest = RunManifest(config={"kp": args.kp, "kd": args.kd})
    manifest.add_input(args.motion)
    manifest.add_output(args.out)
    if args.torques:
        write_torque_jsonl(args.torques, tracking.actuation_log, tracking.trajectory.dt)
        manifest.add_output(args.torques)
    manifest.write(args.out + ".manifest.json")
    report = phys_err(skel, tracking.trajectory)
    print(f"wrote {args.out}: phys-err {report.total:.4f}")
    return 0


def _motion_paths(spec: str) -> list[str]:
    if os.path.isdir(spec):
        return sorted(
            os.path.join(spec, f) for f in os.listdir(spec) if f.endswith(".jsonl")
        )
    return [spec]


def cmd_metrics(args) -> int:
    skel = _resolve_skeleton(args)
    paths = _motion_paths(args.motions)
    if not paths:
        raise ScriptError(f"no motion files under {args.motions}")
    trajectories = [read_motion_jsonl(p) for p in paths]
    report: dict = {"motions": len(trajectories)}

    reports = [phys_err(skel, t, skate_mode=args.skate_mode) for t in trajectories]
    report["phys_err"] = {
        "penetrate": float(np.mean([r.penetrate for r in reports])),
        "float": float(np.mean([r.float_err for r in reports])),
        "skate": float(np.mean([r.skate for r in reports])),
        "total": float(np.mean([r.total for r in reports])),
    }

    feats = [motion_features(t) for t in trajectories]
    if len(feats) >= 4:
        report["diversity"] = diversity(feats, samples=len(feats) // 2, seed=args.seed)
    if args.texts:
        with open(args.texts, "r", encoding="utf-8") as fh:
            texts = json.load(fh)
        if len(texts) != len(trajectories):
            raise ScriptError(
                f"{len(texts)} texts for {len(trajectories)} motions"
            )
        from .constraints import primitive_bag
        from .posecode_parser import parse_motion_script

        text_bags = [primitive_bag(parse_motion_script(t)) for t in texts]
        motion_bags = [trajectory_primitive_bag(t) for t in trajectories]
        report["mm_dist"] = mm_dist(motion_bags, text_bags)
        if len(text_bags) >= 2:
            pool = min(32, len(text_bags))
            report["r_precision_top1"] = r_precision(
                text_bags, motion_bags, k=1, pool_size=pool, seed=args.seed
            )
    if args.ref:
        ref_paths = _motion_paths(args.ref)
        ref_feats = [motion_features(read_motion_jsonl(p)) for p in ref_paths]
        report["fid"] = fid(feats, ref_feats)
    if args.scores:
        with open(args.scores, "r", encoding="utf-8") as fh:
            s = json.load(fh)
        scores = SubjectiveScores(
            fluidity=s["F"],
            coordination=s["CO"],
            rhythm=s["R"],
            smoothness=s["S"],
            action_completeness=s["AC"],
            step_completion=s["SC"],
            detail=s["D"],
            alignment=s["A"],
            completion=s["C"],
        )
        report["success_rate"] = success_rate(scores)
    payload = json.dumps(report, indent=2) + "\n"
    if args.report:
        atomic_write_text(args.report, payload)
        manifest = RunManifest(config={"motions": args.motions})
        for p in paths:
            manifest.add_input(p)
        manifest.add_output(args.report)
        manifest.write(args.report + ".manifest.json")
        print(f"wrote {args.report}")
    else:
        print(payload, end="")
    return 0


def cmd_export(args) -> int:
    skel = _resolve_skeleton(args)
    traj = read_motion_jsonl(args.motion)
    export_positions_csv(args.out, traj, skel)
    manifest = RunManifest(config={})
    manifest.add_input(args.motion)
    manifest.add_output(args.out)
    manifest.write(args.out + ".manifest.json")
    print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="behaviorplan",
        description="Behavior scripts to physically checked joint trajectories.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_skeleton(p):
        p.add_argument("--skeleton", help=f"skeleton JSON (default: ${SKELETON_ENV} or built-in)")

    p = sub.add_parser("parse", help="parse and grammar-check a behavior script")
    p.add_argument("file")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("validate", help="grammar-check an external plan")
    p.add_argument("--plan", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("plan", help="expand a behavior template")
    p.add_argument("--summary", required=True)
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("solve-pose", help="solve a pose script into a configuration")
    p.add_argument("--ast", required=True, help="file holding the pose-script text")
    p.add_argument("--init", help="initial pose JSON")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    add_skeleton(p)
    p.set_defaults(func=cmd_solve_pose)

    p = sub.add_parser("generate", help="run the full pipeline")
    p.add_argument("--plan", help="external plan JSON")
    p.add_argument("--summary", help="template keyword instead of a plan file")
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--planner", choices=["heuristic", "file"], default=None,
                   help="force the plan source (heuristic=template, file=--plan)")
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.add_argument("--torques")
    p.add_argument("--in-between", dest="in_between", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--window-keyframes", dest="window_keyframes", type=int)
    p.add_argument("--blend-frames", dest="blend_frames", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--simulate", action="store_true")
    p.add_argument("--no-simulate", action="store_true")
    p.add_argument("--no-refine", action="store_true")
    p.add_argument("--soft", action="store_true")
    p.add_argument("--lenient", action="store_true")
    add_skeleton(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="track a motion file in the simulator")
    p.add_argument("--motion", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--torques")
    p.add_argument("--kp", type=float, default=300.0)
    p.add_argument("--kd", type=float, default=None)
    add_skeleton(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", help="score motion files")
    p.add_argument("--motions", required=True, help="motion file or directory")
    p.add_argument("--texts", help="JSON list of transition texts aligned to motions")
    p.add_argument("--ref", help="reference motions for the Frechet score")
    p.add_argument("--scores", help="subjective scores JSON for the success rate")
    p.add_argument("--report")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--skate-mode", dest="skate_mode",
                   choices=["excess", "raw"], default="excess")
    add_skeleton(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("export", help="motion JSON-lines to a CSV of joint positions")
    p.add_argument("--motion", required=True)
    p.add_argument("--out", required=True)
    add_skeleton(p)
    p.set_defaults(func=cmd_export)
    return parser


DOMAIN_ERRORS = (
    ScriptError,
    ParseError,
    PipelineError,
    SolveError,
    SimulationDivergence,
    FileNotFoundError,
    ValueError,
    KeyError,
)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "planner", None) == "heuristic":
        args.plan = None
    if getattr(args, "planner", None) == "file" and not getattr(args, "plan", None):
        parser.error("--planner file requires --plan")
    try:
        return args.func(args)
    except DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
