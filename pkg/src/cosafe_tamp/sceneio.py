"""Line-oriented text formats for scenes and trajectories.

Scene files look like::

    cosafe-tamp/1
    bounds 0 0 10 8
    robot start=1,1 radius=0.2 mass=1 f_max=10 v_max=2
    body id=w1 kind=fixed rect=4,0,4.2,3
    body id=b1 kind=movable center=2,2 half=0.3,0.3 mass=1 mu=0.5 mregions=+y,-y
    region name=p1 rect=8,6,9.5,7.5
    defaults t_max_s=300 formula="F(p1 & F p2)"

Blank lines and ``#`` comments are ignored. Values with spaces are quoted.
"""
from __future__ import annotations

import shlex
from dataclasses import dataclass, fields
from pathlib import Path

from .planner import PlannerConfig
from .world import BodySpec, RegionSpec, RobotSpec, Scene, SceneError

HEADER = "cosafe-tamp/1"
TRAJ_HEADER = "cosafe-tamp/1 trajectory"

ROBOT_KEYS = {"start", "radius", "mass", "f_max", "v_max", "orientation"}
BODY_KEYS = {"id", "kind", "center", "half", "rect", "mass", "mu", "mregions"}
REGION_KEYS = {"name", "rect"}
DEFAULT_KEYS = {f.name for f in fields(PlannerConfig)} | {"formula"}


class FormatError(SceneError):
    def __init__(self, msg: str, line: int | None = None, path=None):
        where = f"{path or '<text>'}:{line}: " if line is not None else ""
        super().__init__(where + msg)
        self.line = line


def _floats(text: str, n: int, what: str) -> tuple[float, ...]:
    parts = text.split(",")
    if len(parts) != n:
        raise ValueError(f"{what} needs {n} comma-separated numbers, got {text!r}")
    return tuple(float(p) for p in parts)


def _pairs(tokens: list[str], allowed: set[str], what: str) -> dict[str, str]:
    out = {}
    for tok in tokens:
        key, eq, value = tok.partition("=")
        if not eq:
            raise ValueError(f"{what}: expected key=value, got {tok!r}")
        if key not in allowed:
            raise ValueError(f"{what}: unknown key {key!r}")
        if key in out:
            raise ValueError(f"{what}: duplicate key {key!r}")
        out[key] = value
    return out


def _need(kv: dict, key: str, what: str) -> str:
    if key not in kv:
        raise ValueError(f"{what}: missing {key}")
    return kv[key]


def _robot(kv: dict) -> RobotSpec:
    kw = {"start": _floats(_need(kv, "start", "robot"), 2, "start")}
    for key in ROBOT_KEYS - {"start"}:
        if key in kv:
            kw[key] = float(kv[key])
    return RobotSpec(**kw)


def _body(kv: dict) -> BodySpec:
    bid = _need(kv, "id", "body")
    kind = _need(kv, "kind", f"body {bid}")
    if "rect" in kv:
        if "center" in kv or "half" in kv:
            raise ValueError(f"body {bid}: give either rect or center/half")
        x0, y0, x1, y1 = _floats(kv["rect"], 4, "rect")
        center, half = ((x0 + x1) / 2, (y0 + y1) / 2), ((x1 - x0) / 2, (y1 - y0) / 2)
    else:
        center = _floats(_need(kv, "center", f"body {bid}"), 2, "center")
        half = _floats(_need(kv, "half", f"body {bid}"), 2, "half")
    mreg = None
    if "mregions" in kv:
        mreg = tuple(f for f in kv["mregions"].split(",") if f)
    return BodySpec(bid, kind, center, half, float(kv.get("mass", 1.0)), float(kv.get("mu", 0.5)), mreg)


def loads_scene(text: str, path=None) -> Scene:
    lines = text.splitlines()
    bounds, robot = None, None
    bodies, regions, defaults = [], [], {}
    seen_header = False
    for no, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not seen_header:
            if line != HEADER:
                raise FormatError(f"expected header {HEADER!r}", no, path)
            seen_header = True
            continue
        try:
            tokens = shlex.split(line, comments=True)
            if not tokens:
                continue
            kw, rest = tokens[0], tokens[1:]
            if kw == "bounds":
                if bounds is not None:
                    raise ValueError("bounds given twice")
                if len(rest) != 4:
                    raise ValueError("bounds needs x0 y0 x1 y1")
                bounds = tuple(float(t) for t in rest)
            elif kw == "robot":
                if robot is not None:
                    raise ValueError("robot given twice")
                robot = _robot(_pairs(rest, ROBOT_KEYS, "robot"))
            elif kw == "body":
                bodies.append(_body(_pairs(rest, BODY_KEYS, "body")))
            elif kw == "region":
                kv = _pairs(rest, REGION_KEYS, "region")
                regions.append(RegionSpec(_need(kv, "name", "region"),
                                          _floats(_need(kv, "rect", "region"), 4, "rect")))
            elif kw == "defaults":
                for key, value in _pairs(rest, DEFAULT_KEYS, "defaults").items():
                    if key in defaults:
                        raise ValueError(f"defaults: duplicate key {key!r}")
                    defaults[key] = value
            else:
                raise ValueError(f"unknown section {kw!r}")
        except (ValueError, TypeError) as exc:
            raise FormatError(str(exc), no, path) from None
    if not seen_header:
        raise FormatError(f"missing header {HEADER!r}", None, path)
    if bounds is None or robot is None:
        raise FormatError("scene needs bounds and robot lines", None, path)
    try:
        PlannerConfig.from_mapping({k: v for k, v in defaults.items() if k != "formula"})
    except ValueError as exc:
        raise FormatError(str(exc), None, path) from None
    return Scene(bounds, robot, tuple(bodies), tuple(regions), tuple(sorted(defaults.items())))


def load_scene(path) -> Scene:
    return loads_scene(Path(path).read_text(), path)


def _num(x: float) -> str:
    return repr(float(x))


def _vec(xs) -> str:
    return ",".join(_num(x) for x in xs)


def _quote(value: str) -> str:
    return shlex.quote(str(value))


def dumps_scene(scene: Scene) -> str:
    r = scene.robot
    out = [HEADER, "bounds " + " ".join(_num(v) for v in scene.bounds),
           f"robot start={_vec(r.start)} radius={_num(r.radius)} mass={_num(r.mass)} "
           f"f_max={_num(r.f_max)} v_max={_num(r.v_max)} orientation={_num(r.orientation)}"]
    for b in scene.bodies:
        line = (f"body id={b.id} kind={b.kind} center={_vec(b.center)} half={_vec(b.half)} "
                f"mass={_num(b.mass)} mu={_num(b.mu)}")
        if b.mregions is not None:
            line += " mregions=" + ",".join(b.mregions)
        out.append(line)
    for reg in scene.regions:
        out.append(f"region name={reg.name} rect={_vec(reg.rect)}")
    if scene.defaults:
        out.append("defaults " + " ".join(f"{k}={_quote(v)}" for k, v in scene.defaults))
    return "\n".join(out) + "\n"


def scene_config(scene: Scene, **overrides) -> PlannerConfig:
    """Planner config from the scene's defaults block plus explicit overrides."""
    data = {k: v for k, v in scene.defaults if k != "formula"}
    data.update({k: v for k, v in overrides.items() if v is not None})
    return PlannerConfig.from_mapping(data)


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class TrajectoryFile:
    seed: int
    config: dict
    formula: str
    initial: str  # digest of the initial state
    controls: list[tuple[float, float, float]]
    digests: list[str]  # digest after each control


def dumps_trajectory(t: TrajectoryFile) -> str:
    cfg = " ".join(f"{k}={_quote(v)}" for k, v in sorted(t.config.items()))
    out = [TRAJ_HEADER, f"seed {t.seed}", f"config {cfg}", f"formula {_quote(t.formula)}",
           f"init {t.initial}"]
    for (ux, uy, dt), dg in zip(t.controls, t.digests):
        out.append(f"control {_num(ux)} {_num(uy)} {_num(dt)} {dg}")
    return "\n".join(out) + "\n"


def loads_trajectory(text: str, path=None) -> TrajectoryFile:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or lines[0].strip() != TRAJ_HEADER:
        raise FormatError(f"expected header {TRAJ_HEADER!r}", 1, path)
    seed, config, formula, initial = None, {}, "", None
    controls, digests = [], []
    for no, line in enumerate(lines[1:], 2):
        try:
            tokens = shlex.split(line)
            kw, rest = tokens[0], tokens[1:]
            if kw == "seed":
                seed = int(rest[0])
            elif kw == "config":
                config = _pairs(rest, {f.name for f in fields(PlannerConfig)}, "config")
            elif kw == "formula":
                formula = rest[0] if rest else ""
            elif kw == "init":
                initial = rest[0]
            elif kw == "control":
                if len(rest) != 4:
                    raise ValueError("control needs ux uy dt digest")
                controls.append((float(rest[0]), float(rest[1]), float(rest[2])))
                digests.append(rest[3])
            else:
                raise ValueError(f"unknown trajectory line {kw!r}")
        except (ValueError, IndexError) as exc:
            raise FormatError(str(exc), no, path) from None
    if seed is None or initial is None:
        raise FormatError("trajectory needs seed and init lines", None, path)
    return TrajectoryFile(seed, config, formula, initial, controls, digests)


def load_trajectory(path) -> TrajectoryFile:
    return loads_trajectory(Path(path).read_text(), path)
