"""Command line front end: plan, check, evaluate, bench."""
from __future__ import annotations

import argparse
import json
import logging
import statistics
import sys
from pathlib import Path

from .decomposition import decompose
from .knowledge import AbstractKnowledge, evaluate_with, feasibility
from .ltl import (Formula, FormulaSyntaxError, NotCoSafe, build_nfa, check_cosafe, nfa_accepts,
                  parse_formula, to_pnf, to_text, trace_satisfies)
from .planner import PlannerConfig, PlanResult, make_world, plan, replay
from .sceneio import (FormatError, TrajectoryFile, dumps_trajectory, load_scene, load_trajectory,
                      scene_config)
from .world import Scene, SceneError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_TIMEOUT = 4
EXIT_DIVERGED = 5
EXIT_REJECTED = 6

OUTCOME_EXIT = {"solved": EXIT_OK, "infeasible": EXIT_INFEASIBLE, "timeout": EXIT_TIMEOUT}

log = logging.getLogger("cosafe_tamp")


class InputError(Exception):
    """Bad scene, formula or trajectory; maps to exit code 2."""


def _load(scene_path, formula_text) -> tuple[Scene, Formula, str]:
    try:
        scene = load_scene(scene_path)
    except OSError as exc:
        raise InputError(f"cannot read scene: {exc}") from None
    except (FormatError, SceneError) as exc:
        raise InputError(f"invalid scene: {exc}") from None
    text = formula_text if formula_text is not None else scene.default("formula")
    if text is None:
        raise InputError("no formula given and the scene has no default formula")
    try:
        phi = parse_formula(text, scene.props())
        if not check_cosafe(phi):
            raise NotCoSafe("formula is not syntactically co-safe")
        phi = to_pnf(phi)
    except FormulaSyntaxError as exc:
        raise InputError(f"formula error: {exc}") from None
    except NotCoSafe as exc:
        raise InputError(f"formula error: {exc}") from None
    return scene, phi, text


def _config(scene: Scene, args, **extra) -> PlannerConfig:
    over = dict(extra)
    if getattr(args, "seed", None) is not None:
        over["seed"] = args.seed
    if getattr(args, "tmax", None) is not None:
        over["t_max_s"] = args.tmax
    if getattr(args, "no_knowledge", False):
        over["use_knowledge"] = False
    try:
        return scene_config(scene, **over)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _evaluate(scene: Scene, phi: Formula, use_knowledge=True):
    if not use_knowledge:
        return phi, ()
    props = scene.props()
    K = AbstractKnowledge.from_scene(scene)
    D = decompose(scene.workspace())
    bad = feasibility(K, len(props), D, scene.robot.start)
    return evaluate_with(phi, bad), tuple(props[i].name for i in bad)


# ---------------------------------------------------------------------------
# reports


def _rects(bodies):
    return [{"id": b.id, "rect": list(b.rect)} for b in bodies]


def run_report(scene: Scene, result: PlanResult, formula_text: str, config: PlannerConfig) -> dict:
    props = scene.props()
    traj = result.trajectory
    final = traj.states[-1] if traj else scene.initial_state()
    final_bodies = []
    for b, c in zip(scene.movable, final.body_c):
        hx, hy = b.half
        final_bodies.append({"id": b.id, "rect": [c[0] - hx, c[1] - hy, c[0] + hx, c[1] + hy]})
    return {
        "outcome": result.outcome,
        "formula": formula_text,
        "psi": to_text(result.psi) if result.psi is not None else None,
        "nonvalid": [props[i].name for i in result.nonvalid],
        "wall_time_s": result.wall_time,
        "tree_size": result.tree_size,
        "iterations": result.iterations,
        "trace": [props[i].name for i in traj.trace] if traj else [],
        "seed": result.seed,
        "use_knowledge": config.use_knowledge,
        "controls": len(traj.controls) if traj else 0,
        "duration_s": traj.duration if traj else 0.0,
        "scene": {
            "bounds": list(scene.bounds),
            "fixed": _rects(scene.fixed),
            "regions": [{"name": r.name, "rect": list(r.rect)} for r in scene.regions],
            "bodies_initial": _rects(scene.movable),
            "bodies_final": final_bodies,
            "robot_radius": scene.robot.radius,
        },
        "path": traj.path.tolist() if traj else [list(scene.robot.start)],
    }


def render_svg(report: dict, px_per_m: float = 60.0) -> str:
    """Workspace, regions, walls, boxes and the robot path, drawn from a report."""
    sc = report["scene"]
    x0, y0, x1, y1 = sc["bounds"]
    w, h = (x1 - x0) * px_per_m, (y1 - y0) * px_per_m

    def X(x):
        return (x - x0) * px_per_m

    def Y(y):
        return (y1 - y) * px_per_m  # svg y grows downward

    def rect(r, style):
        a, b, c, d = r
        return (f'<rect x="{X(a):.2f}" y="{Y(d):.2f}" width="{(c - a) * px_per_m:.2f}" '
                f'height="{(d - b) * px_per_m:.2f}" {style}/>')

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{h:.0f}" '
           f'viewBox="0 0 {w:.2f} {h:.2f}">',
           f'<rect x="0" y="0" width="{w:.2f}" height="{h:.2f}" fill="white" stroke="black"/>']
    for reg in sc["regions"]:
        out.append(rect(reg["rect"], 'fill="#f5e663" fill-opacity="0.6"'))
        a, b, c, d = reg["rect"]
        out.append(f'<text x="{X(a) + 4:.2f}" y="{Y(d) + 14:.2f}" font-size="12">{reg["name"]}</text>')
    for b in sc["fixed"]:
        out.append(rect(b["rect"], 'fill="#c0392b"'))
    for b in sc["bodies_initial"]:
        out.append(rect(b["rect"], 'fill="none" stroke="#2e86c1" stroke-dasharray="4 3"'))
    for b in sc["bodies_final"]:
        out.append(rect(b["rect"], 'fill="#2e86c1" fill-opacity="0.8"'))
    path = report["path"]
    if len(path) > 1:
        pts = " ".join(f"{X(p[0]):.2f},{Y(p[1]):.2f}" for p in path)
        out.append(f'<polyline points="{pts}" fill="none" stroke="#27ae60" stroke-width="2"/>')
    r = sc["robot_radius"] * px_per_m
    for p, fill in ((path[0], "#27ae60"), (path[-1], "#1e8449")):
        out.append(f'<circle cx="{X(p[0]):.2f}" cy="{Y(p[1]):.2f}" r="{r:.2f}" fill="{fill}" fill-opacity="0.6"/>')
    out.append(f'<text x="4" y="{h - 6:.2f}" font-size="12">{report["outcome"]}: {report.get("psi") or "-"}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def trajectory_file(result: PlanResult, formula_text: str, config: PlannerConfig) -> TrajectoryFile:
    traj = result.trajectory
    return TrajectoryFile(config.seed, config.to_mapping(), formula_text, traj.states[0].digest(),
                          list(traj.controls), [s.digest() for s in traj.states[1:]])


# ---------------------------------------------------------------------------
# commands


def cmd_plan(args) -> int:
    scene, phi, text = _load(args.scene, args.formula)
    cfg = _config(scene, args)
    result = plan(scene, phi, cfg)
    report = run_report(scene, result, text, cfg)
    if result.solved and args.out:
        Path(args.out).write_text(dumps_trajectory(trajectory_file(result, text, cfg)))
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2) + "\n")
    if args.svg:
        Path(args.svg).write_text(render_svg(report))
    summary = {k: report[k] for k in ("outcome", "psi", "nonvalid", "wall_time_s", "tree_size", "trace", "seed")}
    print(json.dumps(summary))
    return OUTCOME_EXIT[result.outcome]


def check_trajectory(scene: Scene, phi: Formula, tf: TrajectoryFile) -> tuple[int, str]:
    """Replay a trajectory file and verify its trace; returns (exit code, message)."""
    try:
        cfg = PlannerConfig.from_mapping(tf.config)
    except (ValueError, TypeError) as exc:
        raise InputError(f"bad trajectory config: {exc}") from None
    world = make_world(scene, cfg)
    if world.initial_state().digest() != tf.initial:
        return EXIT_DIVERGED, "initial state does not match the scene"
    try:
        states, valid = replay(world, tf.controls, use_knowledge=cfg.use_knowledge)
    except ValueError as exc:
        return EXIT_DIVERGED, f"replay failed: {exc}"
    for i, (s, dg, ok) in enumerate(zip(states[1:], tf.digests, valid), 1):
        if s.digest() != dg:
            return EXIT_DIVERGED, f"state after control {i} diverges from the recorded digest"
        if not ok:
            return EXIT_DIVERGED, f"state after control {i} violates the knowledge constraints"
    psi, _ = _evaluate(scene, phi, cfg.use_knowledge)
    if psi is None:
        return EXIT_REJECTED, "formula is infeasible in this scene"
    D = decompose(scene.workspace(), cfg.resolution_m)
    trace = D.extract_trace([s.robot_p for s in states])
    by_nfa = nfa_accepts(build_nfa(psi, scene.props().ids), trace)
    by_sem = trace_satisfies(psi, trace)
    if by_nfa != by_sem:
        return EXIT_REJECTED, f"automaton and trace semantics disagree on {trace}"
    if not by_nfa:
        names = [scene.props()[i].name for i in trace]
        return EXIT_REJECTED, f"trace {names} does not satisfy {to_text(psi)}"
    return EXIT_OK, f"ok: {len(tf.controls)} controls replayed, trace accepted"


def cmd_check(args) -> int:
    try:
        tf = load_trajectory(args.trajectory)
    except OSError as exc:
        raise InputError(f"cannot read trajectory: {exc}") from None
    except FormatError as exc:
        raise InputError(f"invalid trajectory: {exc}") from None
    formula = args.formula if args.formula is not None else (tf.formula or None)
    scene, phi, _ = _load(args.scene, formula)
    code, msg = check_trajectory(scene, phi, tf)
    print(msg, file=sys.stdout if code == EXIT_OK else sys.stderr)
    return code


def cmd_evaluate(args) -> int:
    scene, phi, _ = _load(args.scene, args.formula)
    psi, bad = _evaluate(scene, phi)
    print("nonvalid: " + (", ".join(bad) if bad else "none"))
    if psi is None:
        print("INFEASIBLE")
        return EXIT_INFEASIBLE
    if not bad:
        print("no simplification")
    print("psi: " + to_text(psi))
    return EXIT_OK


def _summary(reports: list[dict]) -> dict:
    times = [r["wall_time_s"] for r in reports]
    solved = [r for r in reports if r["outcome"] == "solved"]
    return {
        "runs": len(reports),
        "solved": len(solved),
        "success_rate": len(solved) / len(reports),
        "mean_time_s": statistics.fmean(times),
        "median_time_s": statistics.median(times),
        "mean_tree": statistics.fmean(r["tree_size"] for r in reports),
    }


def bench(scene: Scene, phi: Formula, text: str, seeds, base: PlannerConfig, modes=(True, False),
          on_run=None) -> dict:
    """Run every seed with and without knowledge reasoning; returns reports and summaries."""
    out = {}
    for use in modes:
        label = "knowledge" if use else "no-knowledge"
        reports = []
        for seed in seeds:
            cfg = PlannerConfig.from_mapping({**base.to_mapping(), "seed": seed, "use_knowledge": use})
            res = plan(scene, phi, cfg)
            rep = run_report(scene, res, text, cfg)
            if res.solved:
                tf = trajectory_file(res, text, cfg)
                rep["check"] = check_trajectory(scene, phi, tf)[0]
            reports.append(rep)
            if on_run:
                on_run(label, rep)
        out[label] = {"reports": reports, "summary": _summary(reports)}
    return out


def format_table(results: dict) -> str:
    lines = [f"{'mode':<14}{'seed':>6}{'outcome':>11}{'time_s':>10}{'tree':>9}  psi"]
    for label, block in results.items():
        for r in block["reports"]:
            lines.append(f"{label:<14}{r['seed']:>6}{r['outcome']:>11}{r['wall_time_s']:>10.2f}"
                         f"{r['tree_size']:>9}  {r['psi']}")
    lines.append("")
    lines.append(f"{'mode':<14}{'runs':>6}{'solved':>8}{'rate':>7}{'mean_s':>10}{'median_s':>10}")
    for label, block in results.items():
        s = block["summary"]
        lines.append(f"{label:<14}{s['runs']:>6}{s['solved']:>8}{s['success_rate']:>7.0%}"
                     f"{s['mean_time_s']:>10.2f}{s['median_time_s']:>10.2f}")
    return "\n".join(lines)


def cmd_bench(args) -> int:
    scene, phi, text = _load(args.scene, args.formula)
    if args.runs < 1:
        raise InputError("--runs must be at least 1")
    cfg = _config(scene, args)
    seeds = range(cfg.seed, cfg.seed + args.runs)
    modes = (False,) if args.no_knowledge else (True, False)

    def progress(label, rep):
        print(f"{label} seed={rep['seed']} {rep['outcome']} {rep['wall_time_s']:.2f}s", file=sys.stderr)

    results = bench(scene, phi, text, seeds, cfg, modes, progress)
    print(format_table(results))
    if args.out:
        Path(args.out).write_text(json.dumps(results, indent=2) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cosafe-tamp", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--scene", required=True, help="scene file")
        sp.add_argument("--formula", help="co-safe LTL formula; defaults to the scene's formula")

    sp = sub.add_parser("plan", help="plan a trajectory")
    common(sp)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--tmax", type=float, help="planning time budget in seconds")
    sp.add_argument("--out", help="trajectory file to write")
    sp.add_argument("--report", help="JSON run report to write")
    sp.add_argument("--svg", help="SVG rendering to write")
    sp.add_argument("--no-knowledge", action="store_true", help="freeze knowledge and skip simplification")
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("check", help="replay and verify a trajectory file")
    common(sp)
    sp.add_argument("--trajectory", required=True)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("evaluate", help="feasibility check and formula simplification only")
    common(sp)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("bench", help="seeded runs with and without knowledge reasoning")
    common(sp)
    sp.add_argument("--runs", type=int, default=10)
    sp.add_argument("--seed", type=int, help="first seed")
    sp.add_argument("--tmax", type=float)
    sp.add_argument("--out", help="JSON file for all reports")
    sp.add_argument("--no-knowledge", action="store_true", help="only run the no-knowledge baseline")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
