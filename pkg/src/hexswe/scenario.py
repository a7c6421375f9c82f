"""Scenario configuration: flat key-value text with section headers.

One canonical file drives grid construction, environment, water sources,
boundaries, time controls, and outputs.  Unknown sections or keys raise
ConfigError so typos fail loudly.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .grid import (
    HexGrid,
    generate_analytic,
    load_esri_ascii,
    port_to_hex,
    surface_from_params,
)
from .physics import BoundarySpec, EnvConfig, FlowState, FrictionLaw, Hyetograph
from .simulate import TimeControls
from .solver import lake_at_rest_state

_KNOWN_SECTIONS = {"grid", "environment", "source", "initial", "boundary", "time", "output"}

_SURFACE_KEYS = {
    "crater": ("amplitude", "r0", "r1"),
    "hillock": ("amplitude", "r0", "r1"),
    "paraboloid": ("a", "b", "x0", "y0"),
    "inclined_channel": ("length", "width", "slope"),
    "piecewise_channel": ("length", "width", "breaks", "z"),
    "constant": ("value",),
}


@dataclass
class OutputConfig:
    interval: float = 0.0
    snapshot_times: tuple = ()
    gauges: tuple = ()
    heatmaps: bool = False
    h_ref: float = 0.0
    width_px: int = 600


@dataclass
class Scenario:
    name: str
    grid: HexGrid
    env: EnvConfig
    controls: TimeControls
    initial: FlowState
    viscosity: bool = False
    output: OutputConfig = field(default_factory=OutputConfig)


def _floats(text: str):
    return [float(tok) for tok in text.replace(",", " ").split()]


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _read_config(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read scenario file {path}")
    unknown = set(s.lower() for s in cp.sections()) - _KNOWN_SECTIONS
    if unknown:
        raise ConfigError(f"unknown scenario sections: {sorted(unknown)}")
    return cp


def build_grid_from_section(sec, base_dir: str = ".") -> HexGrid:
    source = sec.get("source", "generate").strip().lower()
    if source == "generate":
        variant = sec.get("surface", "").strip().lower()
        if variant not in _SURFACE_KEYS:
            raise ConfigError(
                f"unknown surface variant {variant!r}; valid variants: "
                + ", ".join(sorted(_SURFACE_KEYS))
            )
        params = {}
        for key in _SURFACE_KEYS[variant]:
            if key not in sec:
                raise ConfigError(f"surface {variant!r} needs key {key!r}")
            if key in ("breaks", "z"):
                params[key] = _floats(sec[key])
            else:
                params[key] = float(sec[key])
        surface = surface_from_params(variant, params)
        radius = float(sec.get("radius", "0") or 0)
        if radius <= 0:
            raise ConfigError("grid requires a positive hexagon radius")
        extent = None
        if "extent" in sec:
            vals = _floats(sec["extent"])
            if len(vals) != 4:
                raise ConfigError("extent needs four numbers: x0 y0 x1 y1")
            extent = tuple(vals)
        elif variant in ("crater", "hillock"):
            margin = float(sec.get("margin", "0") or 0)
            extent = surface.default_extent(margin)
        wrap = _parse_bool(sec.get("wrap_y", "false"))
        return generate_analytic(surface, extent=extent, radius=radius, wrap_y=wrap)
    if source == "convert":
        dem = sec.get("dem")
        if not dem:
            raise ConfigError("grid source 'convert' needs a dem path")
        dem_path = dem if os.path.isabs(dem) else os.path.join(base_dir, dem)
        rect = load_esri_ascii(dem_path)
        n_first = int(sec.get("n_first_row", "0") or 0)
        crop = None
        if "crop" in sec:
            vals = _floats(sec["crop"])
            if len(vals) != 4:
                raise ConfigError("crop needs four numbers: x0 y0 x1 y1")
            crop = tuple(vals)
        return port_to_hex(rect, n_first, crop=crop)
    if source == "file":
        path = sec.get("path")
        if not path:
            raise ConfigError("grid source 'file' needs a path")
        full = path if os.path.isabs(path) else os.path.join(base_dir, path)
        return HexGrid.load(full)
    raise ConfigError(f"unknown grid source {source!r}")


def _build_theta(sec, grid: HexGrid, base_dir: str) -> np.ndarray:
    spec = sec.get("theta", "1.0").strip().lower()
    if spec == "piecewise":
        breaks = _floats(sec.get("theta_breaks", ""))
        values = _floats(sec.get("theta_values", ""))
        if len(values) != len(breaks) + 1:
            raise ConfigError("piecewise porosity needs len(theta_values) == len(theta_breaks) + 1")
        seg = np.searchsorted(np.asarray(breaks), grid.centers[:, 0], side="right")
        return np.asarray(values)[seg]
    if spec == "file":
        path = sec.get("theta_file")
        if not path:
            raise ConfigError("porosity 'file' needs theta_file")
        full = path if os.path.isabs(path) else os.path.join(base_dir, path)
        vals = np.loadtxt(full, dtype=np.float64).ravel()
        if vals.size != grid.n_cells:
            raise ConfigError(
                f"porosity file has {vals.size} values, grid has {grid.n_cells} cells"
            )
        return vals
    try:
        return np.full(grid.n_cells, float(spec))
    except ValueError:
        raise ConfigError(f"porosity must be a number, 'piecewise', or 'file'; got {spec!r}") from None


def _parse_boundary_line(text: str) -> BoundarySpec:
    body, _, selector = text.partition(" where ")
    selector = selector.strip() or "all"
    tokens = body.split()
    if not tokens:
        raise ConfigError("empty boundary specification")
    kind = tokens[0].strip().lower()
    params: dict[str, str] = {}
    for tok in tokens[1:]:
        if "=" not in tok:
            raise ConfigError(f"boundary parameter {tok!r} must be key=value")
        key, _, val = tok.partition("=")
        params[key.strip().lower()] = val.strip()
    kwargs: dict = {"kind": kind, "selector": selector}
    if "h0" in params:
        kwargs["h0"] = float(params["h0"])
    if "v0" in params:
        kwargs["v0"] = float(params["v0"])
    if "q" in params:
        kwargs["q"] = float(params["q"])
    if "velocity" in params:
        vals = _floats(params["velocity"])
        if len(vals) != 2:
            raise ConfigError("boundary velocity needs two components")
        kwargs["velocity"] = tuple(vals)
    if "dir" in params:
        vals = _floats(params["dir"])
        if len(vals) != 2:
            raise ConfigError("boundary dir needs two components")
        kwargs["direction"] = tuple(vals)
    if "center" in params:
        vals = _floats(params["center"])
        if len(vals) != 2:
            raise ConfigError("boundary center needs two components")
        kwargs["r_center"] = tuple(vals)
    return BoundarySpec(**kwargs)


def _build_boundaries(sec) -> tuple:
    specs = []
    default = sec.get("default", "free_discharge").strip().lower()
    if default != "free_discharge":
        specs.append(BoundarySpec(kind=default, selector="all"))
    for key in sorted(k for k in sec.keys() if k.startswith("bc")):
        specs.append(_parse_boundary_line(sec[key]))
    return tuple(specs)


def _build_source(sec) -> Hyetograph | None:
    kind = sec.get("type", "none").strip().lower()
    if kind == "none":
        return None
    if kind == "hyetograph":
        return Hyetograph.from_mm(
            t_total=float(sec["duration"]),
            i_a_mm_per_s=float(sec["peak_mm_s"]),
            t_a=float(sec["t_peak"]),
        )
    raise ConfigError(f"unknown source type {kind!r}")


def _build_initial(sec, grid: HexGrid, env: EnvConfig) -> FlowState:
    kind = sec.get("type", "dry").strip().lower() if sec is not None else "dry"
    n = grid.n_cells
    if kind == "dry":
        return FlowState.dry(n)
    if kind == "level":
        return lake_at_rest_state(grid, float(sec["level"]))
    if kind == "depth":
        h = np.where(grid.in_domain, float(sec["depth"]), 0.0)
        return FlowState(t=0.0, h=h, v=np.zeros((n, 2)))
    if kind == "piecewise_x":
        breaks = _floats(sec.get("breaks", ""))
        hs = _floats(sec.get("h", ""))
        us = _floats(sec.get("u", "")) if "u" in sec else [0.0] * (len(breaks) + 1)
        if len(hs) != len(breaks) + 1 or len(us) != len(breaks) + 1:
            raise ConfigError("piecewise_x initial state needs len(h) == len(breaks) + 1")
        seg = np.searchsorted(np.asarray(breaks), grid.centers[:, 0], side="right")
        h = np.where(grid.in_domain, np.asarray(hs)[seg], 0.0)
        u = np.where(grid.in_domain, np.asarray(us)[seg], 0.0)
        return FlowState(t=0.0, h=h, v=np.column_stack([u, np.zeros(n)]))
    raise ConfigError(f"unknown initial state type {kind!r}")


def load_scenario(path) -> Scenario:
    cp = _read_config(path)
    base_dir = os.path.dirname(os.path.abspath(path))
    if "grid" not in cp:
        raise ConfigError("scenario needs a [grid] section")
    grid = build_grid_from_section(cp["grid"], base_dir)

    env_sec = cp["environment"] if "environment" in cp else {}
    theta = _build_theta(env_sec, grid, base_dir) if env_sec else np.ones(grid.n_cells)
    friction_name = (env_sec.get("friction", "combined") if env_sec else "combined").strip().lower()
    if friction_name == "combined":
        friction = FrictionLaw.combined()
    elif friction_name == "linear":
        friction = FrictionLaw.linear(float(env_sec.get("tau", "0")))
    else:
        raise ConfigError(f"unknown friction law {friction_name!r}")
    source = _build_source(cp["source"]) if "source" in cp else None
    boundaries = _build_boundaries(cp["boundary"]) if "boundary" in cp else ()
    env = EnvConfig(
        theta=theta,
        alpha_s=float(env_sec.get("alpha_s", "0") or 0) if env_sec else 0.0,
        alpha_p=float(env_sec.get("alpha_p", "0") or 0) if env_sec else 0.0,
        friction=friction,
        source=source,
        boundaries=boundaries,
    )

    if "time" not in cp:
        raise ConfigError("scenario needs a [time] section")
    tsec = cp["time"]
    controls = TimeControls(
        t_final=float(tsec["t_final"]),
        cfl=float(tsec.get("cfl", "0.5")),
        dt_max=float(tsec.get("dt_max", "inf")),
        steady_tol=float(tsec.get("steady_tol", "0") or 0),
        steady_window=float(tsec.get("steady_window", "10")),
    )

    initial = _build_initial(cp["initial"] if "initial" in cp else None, grid, env)
    has_water = (
        initial.h.max() > 0
        or source is not None
        or any(b.kind in ("inflow", "dirichlet") for b in boundaries)
    )
    if not has_water and controls.t_final > 0:
        raise ConfigError(
            "scenario has no water input: provide an initial state, a hyetograph, "
            "or an inflow/dirichlet boundary"
        )

    out = OutputConfig()
    if "output" in cp:
        osec = cp["output"]
        out.interval = float(osec.get("interval", "0") or 0)
        if "snapshots" in osec:
            out.snapshot_times = tuple(_floats(osec["snapshots"]))
            if any(t > controls.t_final for t in out.snapshot_times):
                raise ConfigError("snapshot times must not exceed t_final")
        if "gauges" in osec:
            pairs = [p for p in osec["gauges"].split(";") if p.strip()]
            gauges = []
            for p in pairs:
                vals = _floats(p)
                if len(vals) != 2:
                    raise ConfigError(f"gauge {p!r} needs x,y")
                gauges.append(tuple(vals))
            out.gauges = tuple(gauges)
        out.heatmaps = _parse_bool(osec.get("heatmaps", "false"))
        out.h_ref = float(osec.get("h_ref", "0") or 0)
        out.width_px = int(osec.get("width_px", "600"))

    viscosity = False
    if "time" in cp and "viscosity" in cp["time"]:
        viscosity = _parse_bool(cp["time"]["viscosity"])

    name = os.path.splitext(os.path.basename(str(path)))[0]
    return Scenario(
        name=name,
        grid=grid,
        env=env,
        controls=controls,
        initial=initial,
        viscosity=viscosity,
        output=out,
    )
