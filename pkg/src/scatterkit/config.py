"""YAML scene, material and fit configs, validated with pydantic; errors carry the offending line."""

from __future__ import annotations

from dataclasses import asdict
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import GeometryError, InvalidSceneError, ParameterError, ParseError, SchemaError
from .geometry import Antenna, Point3, Scene, Wall, place
from .presets import ARC_DISTANCE_M, MATERIALS, TX_POWER_DBM, arc_angles, horn
from .scattering import MaterialParams

_MODELS = Literal["lambertian", "directive", "backscatter", "bk"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class WallCfg(_Strict):
    width_m: float = Field(3.0, gt=0)
    height_m: float = Field(2.0, gt=0)
    center_height_m: float = 1.7


class AntennaCfg(_Strict):
    gain_dbi: float
    hpbw_deg: float = Field(gt=0, lt=180)


class TxCfg(_Strict):
    distance_m: float = Field(ARC_DISTANCE_M, gt=0)
    angle_deg: float = -30.0
    height_m: float = 1.7


class ArcCfg(_Strict):
    start: float = -80.0
    stop: float = 80.0
    step: float = Field(10.0, gt=0)


class RxCfg(_Strict):
    distance_m: float = Field(ARC_DISTANCE_M, gt=0)
    angles_deg: list[float] | None = None
    arc: ArcCfg | None = None
    heights_m: list[float] = Field(default_factory=lambda: [1.7], min_length=1)

    @model_validator(mode="after")
    def _one_layout(self):
        if (self.angles_deg is None) == (self.arc is None):
            raise ValueError("give exactly one of angles_deg or arc")
        if self.angles_deg is not None and not self.angles_deg:
            raise ValueError("angles_deg is empty")
        return self


class SceneCfg(_Strict):
    frequency_ghz: float = Field(gt=0)
    tx_power_dbm: float = TX_POWER_DBM
    patch_edge_m: float | None = Field(None, gt=0)
    wall: WallCfg = Field(default_factory=WallCfg)
    antenna: AntennaCfg | None = None
    tx: TxCfg = Field(default_factory=TxCfg)
    rx: RxCfg

    def build(self) -> Scene:
        f = self.frequency_ghz * 1e9
        if self.antenna is None:
            try:
                ant = horn(f)
            except KeyError as e:
                raise ParameterError(str(e.args[0])) from None
        else:
            ant = Antenna(self.antenna.gain_dbi, self.antenna.hpbw_deg)
        wall = Wall(center=Point3(0.0, 0.0, self.wall.center_height_m), width=self.wall.width_m,
                    height=self.wall.height_m)
        tx = place(wall, ant, self.tx.distance_m, self.tx.angle_deg, self.tx.height_m)
        if self.rx.arc is not None:
            a = self.rx.arc
            angles = arc_angles(-self.tx.angle_deg, a.start, a.stop, a.step)
        else:
            angles = self.rx.angles_deg
        rx = tuple(place(wall, ant, self.rx.distance_m, x, h) for h in self.rx.heights_m for x in angles)
        return Scene(wall, tx, rx, f, self.tx_power_dbm, self.patch_edge_m)


class MaterialCfg(_Strict):
    preset: str | None = None
    name: str = ""
    epsilon_r: float | None = Field(None, ge=1)
    h_rms_mm: float | None = Field(None, ge=0)
    corr_length_mm: float | None = Field(None, gt=0)
    alpha_R: int | None = Field(None, ge=1)
    alpha_i: int | None = Field(None, ge=1)
    lambda_mix: float | None = Field(None, ge=0, le=1)

    @model_validator(mode="after")
    def _known(self):
        if self.preset is not None and self.preset not in MATERIALS:
            raise ValueError(f"unknown preset {self.preset!r}; choose from {sorted(MATERIALS)}")
        if self.preset is None and self.epsilon_r is None:
            raise ValueError("epsilon_r is required unless a preset is given")
        return self

    def build(self) -> MaterialParams:
        base = MATERIALS[self.preset] if self.preset else MaterialParams(float(self.epsilon_r))
        upd = {k: v for k, v in {
            "epsilon_r": self.epsilon_r, "h_rms": self.h_rms_mm, "corr_length_T": self.corr_length_mm,
            "alpha_R": self.alpha_R, "alpha_i": self.alpha_i, "lambda_mix": self.lambda_mix,
        }.items() if v is not None}
        if self.name:
            upd["name"] = self.name
        return base.replace(**upd)


# grid keys as written in config files -> MaterialParams fields
GRID_KEYS = {
    "epsilon_r": "epsilon_r",
    "h_rms_mm": "h_rms",
    "corr_length_mm": "corr_length_T",
    "alpha_R": "alpha_R",
    "alpha_i": "alpha_i",
    "lambda_mix": "lambda_mix",
}


class FitCfg(_Strict):
    model: _MODELS = "bk"
    factor: Literal["beckmann", "ogilvy"] = "beckmann"
    polarization: Literal["te", "tm", "average"] = "te"
    scene: SceneCfg
    base: MaterialCfg = Field(default_factory=lambda: MaterialCfg(epsilon_r=6.0, h_rms_mm=1.0,
                                                                   corr_length_mm=5.0))
    grid: dict[Literal["epsilon_r", "h_rms_mm", "corr_length_mm", "alpha_R", "alpha_i", "lambda_mix"],
               list[float]] = Field(default_factory=dict)
    threshold_db: float = Field(30.0, gt=0)
    window_ns: float = Field(20.0, gt=0)
    resolution_ps: float = Field(650.0, gt=0)


# -- loading ---------------------------------------------------------------------------

def _node_line(node: yaml.Node | None, loc: tuple) -> int | None:
    """1-based line of the deepest node reachable along a pydantic error location."""
    line = None if node is None else node.start_mark.line + 1
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            nxt = next((v for k, v in node.value if k.value == key), None)
            if nxt is None:
                # unknown key: point at the key itself
                kn = next((k for k, _ in node.value if k.value == key), None)
                return kn.start_mark.line + 1 if kn is not None else line
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            break
        line = node.start_mark.line + 1
    return line


def _load_yaml(path) -> tuple[Any, yaml.Node | None, Path]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ParseError(f"cannot read file: {e.strerror}", path=path) from e
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark or e.context_mark
        raise ParseError(f"YAML syntax error: {e.problem}", line=mark.line + 1 if mark else None,
                         path=path) from None
    if not isinstance(data, dict):
        raise SchemaError("top level must be a mapping", line=1, path=path)
    return data, node, path


def _validate(model: type[BaseModel], data: dict, node, path: Path, prefix: tuple = ()):
    try:
        return model.model_validate(data)
    except ValidationError as e:
        err = e.errors()[0]
        loc = tuple(x for x in err["loc"] if not (isinstance(x, str) and x.startswith("function-")))
        where = ".".join(str(x) for x in (*prefix, *loc)) or "<root>"
        raise SchemaError(f"{where}: {err['msg']}", line=_node_line(node, loc), path=path) from None


def _build(cfg, path: Path, node):
    try:
        return cfg.build()
    except (InvalidSceneError, ParameterError, GeometryError) as e:
        raise SchemaError(str(e), line=node.start_mark.line + 1 if node is not None else None, path=path) from None


def load_scene(path) -> tuple[Scene, dict]:
    """Scene and its resolved config dict."""
    data, node, path = _load_yaml(path)
    cfg = _validate(SceneCfg, data, node, path)
    return _build(cfg, path, node), cfg.model_dump()


def load_material(path) -> tuple[MaterialParams, dict]:
    data, node, path = _load_yaml(path)
    cfg = _validate(MaterialCfg, data, node, path)
    mat = _build(cfg, path, node)
    return mat, {"preset": cfg.preset, **asdict(mat)}


def load_fit(path) -> tuple[FitCfg, dict]:
    """Fit config; ``scene`` may be an inline mapping or a path relative to the config file."""
    data, node, path = _load_yaml(path)
    scene_file = None
    if isinstance(data.get("scene"), str):
        ref = scene_file = (path.parent / data["scene"]).resolve()
        sdata, snode, _ = _load_yaml(ref)
        _validate(SceneCfg, sdata, snode, ref)
        data = {**data, "scene": sdata}
    cfg = _validate(FitCfg, data, node, path)
    _build(cfg.scene, path, node)
    _build(cfg.base, path, node)
    resolved = cfg.model_dump()
    if scene_file is not None:
        resolved["scene_file"] = str(scene_file)
    return cfg, resolved


def parse_grid_override(text: str) -> tuple[str, list[float]]:
    """``name=v1,v2,...`` -> (name, values)."""
    name, sep, vals = text.partition("=")
    name = name.strip()
    if not sep or name not in GRID_KEYS:
        raise ParameterError(f"grid override must be NAME=v1,v2 with NAME in {sorted(GRID_KEYS)}; got {text!r}")
    try:
        values = [float(v) for v in vals.split(",") if v.strip()]
    except ValueError:
        raise ParameterError(f"non-numeric grid value in {text!r}") from None
    return name, values
