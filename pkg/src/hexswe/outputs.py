"""File emission: CSV series, snapshot grids, portable-pixmap heatmaps, and
state checkpoints.  Floats are written with shortest round-trip repr so
identical runs produce byte-identical files."""

from __future__ import annotations

import csv
import os

import numpy as np

from .errors import ConfigError, GridFormatError
from .grid import OUTSIDE, SQRT3, HexGrid
from .physics import EnvConfig, FlowState

CHECKPOINT_VERSION = 1


def _fmt(v) -> str:
    return repr(float(v))


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([c if isinstance(c, str) else _fmt(c) for c in row])


def write_gauge_csv(path, gauge_rows, n_gauges: int) -> None:
    header = ["t"]
    for i in range(n_gauges):
        header += [f"h_gauge{i}", f"speed_gauge{i}"]
    write_csv(path, header, gauge_rows)


def write_hydrograph_csv(path, hydro_rows) -> None:
    write_csv(path, ["t", "discharge_m3_s", "rain_rate_m_s"], hydro_rows)


def write_budget_csv(path, budget: dict) -> None:
    keys = [
        "rainfall_m3",
        "boundary_in_m3",
        "water_out_m3",
        "clamp_gain_m3",
        "water_left_m3",
        "initial_volume_m3",
        "closure_m3",
    ]
    write_csv(path, keys, [[budget[k] for k in keys]])


def write_snapshot_csv(path, grid: HexGrid, env: EnvConfig, state: FlowState) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "x", "y", "z", "theta", "h", "vx", "vy"])
        for i in np.nonzero(grid.in_domain)[0]:
            writer.writerow(
                [
                    int(i),
                    _fmt(grid.centers[i, 0]),
                    _fmt(grid.centers[i, 1]),
                    _fmt(grid.z[i]),
                    _fmt(env.theta[i]),
                    _fmt(state.h[i]),
                    _fmt(state.v[i, 0]),
                    _fmt(state.v[i, 1]),
                ]
            )


def write_profile_csv(path, x, h, u, comments: list | None = None) -> None:
    with open(path, "w", newline="") as fh:
        for line in comments or []:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["x", "h", "u"])
        for row in zip(x, h, u):
            writer.writerow([_fmt(v) for v in row])


# ---------------------------------------------------------------------------
# Portable pixmap heatmaps
# ---------------------------------------------------------------------------

_TERRAIN_LOW = np.array([92, 128, 58], dtype=np.float64)
_TERRAIN_HIGH = np.array([196, 168, 116], dtype=np.float64)
_WATER_LIGHT = np.array([150, 200, 240], dtype=np.float64)
_WATER_DARK = np.array([8, 48, 140], dtype=np.float64)
_BACKGROUND = np.array([255, 255, 255], dtype=np.uint8)


def rasterize_cells(grid: HexGrid, width_px: int = 600):
    """Map pixel centers to containing hex cells (-1 outside).

    The hexagonal tessellation is the Voronoi diagram of its centers, so a
    nearest-center lookup over the four candidate lattice sites is exact.
    """
    mask = grid.in_domain
    if not mask.any():
        raise ConfigError("cannot rasterize an empty grid")
    xs = grid.centers[mask, 0]
    ys = grid.centers[mask, 1]
    r = grid.radius
    x0, x1 = xs.min() - r, xs.max() + r
    y0, y1 = ys.min() - r, ys.max() + r
    height_px = max(int(round(width_px * (y1 - y0) / (x1 - x0))), 1)
    px = np.linspace(x0, x1, width_px)
    py = np.linspace(y1, y0, height_px)  # top row first
    X, Y = np.meshgrid(px, py)
    # lattice origin of cell (row 0, col 0)
    origin_x = grid.centers[0, 0]
    origin_y = grid.centers[0, 1]
    row_f = (Y - origin_y) / (1.5 * r)
    best_d2 = np.full(X.shape, np.inf)
    best_id = np.full(X.shape, -1, dtype=np.int64)
    for row_cand in (np.floor(row_f), np.floor(row_f) + 1):
        rows_i = row_cand.astype(np.int64)
        valid_r = (rows_i >= 0) & (rows_i < grid.rows)
        cy = origin_y + 1.5 * r * rows_i
        offset = (rows_i % 2) * (SQRT3 * r / 2.0)
        col_f = (X - origin_x - offset) / (SQRT3 * r)
        for col_cand in (np.floor(col_f), np.floor(col_f) + 1):
            cols_i = col_cand.astype(np.int64)
            valid = valid_r & (cols_i >= 0) & (cols_i < grid.cols)
            cx = origin_x + offset + SQRT3 * r * cols_i
            d2 = (X - cx) ** 2 + (Y - cy) ** 2
            ids = rows_i * grid.cols + cols_i
            better = valid & (d2 < best_d2)
            best_d2 = np.where(better, d2, best_d2)
            best_id = np.where(better, ids, best_id)
    oob = best_id < 0
    safe = np.where(oob, 0, best_id)
    outside = grid.cell_class[safe] == OUTSIDE
    best_id = np.where(oob | outside, -1, best_id)
    return best_id


def write_heatmap_ppm(
    path,
    grid: HexGrid,
    env: EnvConfig,
    state: FlowState,
    h_ref: float,
    width_px: int = 600,
    suppress_factor: float = 0.1,
    dark_factor: float = 4.0,
    cell_map=None,
) -> None:
    """Binary PPM snapshot with a terrain band plus a water band.

    Water color spans ``suppress_factor * h_ref`` (light) to
    ``dark_factor * h_ref`` (darkest); below the suppression threshold the
    relief color shows through.
    """
    if h_ref <= 0:
        raise ConfigError("heatmap reference depth h_ref must be positive")
    if cell_map is None:
        cell_map = rasterize_cells(grid, width_px)
    mask = grid.in_domain
    z_lo = float(grid.z[mask].min())
    z_hi = float(grid.z[mask].max())
    z_span = max(z_hi - z_lo, 1e-30)
    img = np.empty(cell_map.shape + (3,), dtype=np.uint8)
    img[:] = _BACKGROUND
    inside = cell_map >= 0
    ids = cell_map[inside]
    tz = np.clip((grid.z[ids] - z_lo) / z_span, 0.0, 1.0)[:, None]
    colors = _TERRAIN_LOW + tz * (_TERRAIN_HIGH - _TERRAIN_LOW)
    theta_h = env.theta[ids] * state.h[ids]
    lo = suppress_factor * h_ref
    hi = dark_factor * h_ref
    wet = theta_h > lo
    tw = np.clip((theta_h - lo) / max(hi - lo, 1e-30), 0.0, 1.0)[:, None]
    water = _WATER_LIGHT + tw * (_WATER_DARK - _WATER_LIGHT)
    colors = np.where(wet[:, None], water, colors)
    img[inside] = np.clip(colors, 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        fh.write(img.tobytes())


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(path, state: FlowState, budget: dict | None = None) -> None:
    budget = budget or {}
    np.savez(
        path,
        version=np.int64(CHECKPOINT_VERSION),
        t=np.float64(state.t),
        h=state.h,
        v=state.v,
        budget_keys=np.array(sorted(budget.keys()), dtype=object),
        budget_values=np.array([budget[k] for k in sorted(budget.keys())], dtype=np.float64),
    )


def load_checkpoint(path):
    with np.load(path, allow_pickle=True) as data:
        if int(data["version"]) != CHECKPOINT_VERSION:
            raise GridFormatError(f"unsupported checkpoint version {int(data['version'])}")
        state = FlowState(t=float(data["t"]), h=data["h"].copy(), v=data["v"].copy())
        budget = dict(zip(data["budget_keys"].tolist(), data["budget_values"].tolist()))
    return state, budget


def ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path
