"""CSV formats, PPM heatmaps, and checkpoints."""

import csv

import numpy as np
import pytest

from hexswe.errors import ConfigError
from hexswe.grid import AnnulusSurface, ConstantSurface, generate_analytic
from hexswe.outputs import (
    load_checkpoint,
    rasterize_cells,
    save_checkpoint,
    write_budget_csv,
    write_csv,
    write_heatmap_ppm,
    write_snapshot_csv,
)
from hexswe.physics import EnvConfig, FlowState


def test_csv_floats_round_trip(tmp_path):
    path = tmp_path / "t.csv"
    vals = [np.pi, 1e-17, 3.0, -2.5e8]
    write_csv(path, ["a", "b", "c", "d"], [vals])
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["a", "b", "c", "d"]
    assert [float(v) for v in rows[1]] == vals


def test_snapshot_csv_lists_in_domain_cells(tmp_path):
    g = generate_analytic(AnnulusSurface(amplitude=2, r0=3, r1=10, sign=-1), radius=1.0)
    env = EnvConfig.uniform(g.n_cells, theta=0.9)
    st = FlowState(t=0.0, h=np.full(g.n_cells, 0.2), v=np.zeros((g.n_cells, 2)))
    path = tmp_path / "snap.csv"
    write_snapshot_csv(path, g, env, st)
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == int(np.count_nonzero(g.in_domain))
    assert float(rows[0]["theta"]) == 0.9


def test_rasterize_maps_pixels_to_containing_cells():
    g = generate_analytic(ConstantSurface(0.0), extent=(0, 0, 10, 10), radius=1.0)
    cmap = rasterize_cells(g, width_px=80)
    assert (cmap >= 0).any()
    # a pixel exactly at a known center belongs to that cell
    i = g.cell_at(5.0, 5.0)
    mask = g.in_domain
    xs = g.centers[mask, 0]
    ys = g.centers[mask, 1]
    r = g.radius
    x0, x1 = xs.min() - r, xs.max() + r
    y0, y1 = ys.min() - r, ys.max() + r
    px = np.linspace(x0, x1, 80)
    py = np.linspace(y1, y0, cmap.shape[0])
    col = int(np.argmin(np.abs(px - g.centers[i, 0])))
    row = int(np.argmin(np.abs(py - g.centers[i, 1])))
    assert cmap[row, col] == i


def test_heatmap_ppm_format(tmp_path):
    g = generate_analytic(ConstantSurface(1.0), extent=(0, 0, 8, 6), radius=0.5)
    env = EnvConfig.uniform(g.n_cells)
    st = FlowState(t=0.0, h=np.full(g.n_cells, 0.1), v=np.zeros((g.n_cells, 2)))
    path = tmp_path / "map.ppm"
    write_heatmap_ppm(path, g, env, st, h_ref=0.05, width_px=64)
    raw = path.read_bytes()
    assert raw.startswith(b"P6\n")
    header = raw.split(b"\n", 3)
    w, h = (int(v) for v in header[1].split())
    assert w == 64
    assert len(header[3]) == 3 * w * h
    with pytest.raises(ConfigError):
        write_heatmap_ppm(path, g, env, st, h_ref=0.0)


def test_heatmap_suppression_threshold(tmp_path):
    g = generate_analytic(ConstantSurface(0.0), extent=(0, 0, 8, 6), radius=0.5)
    env = EnvConfig.uniform(g.n_cells)
    # depth below 0.1 * h_ref: relief colors only (no blue band)
    st = FlowState(t=0.0, h=np.full(g.n_cells, 0.004), v=np.zeros((g.n_cells, 2)))
    dry_path = tmp_path / "dry.ppm"
    write_heatmap_ppm(dry_path, g, env, st, h_ref=0.05, width_px=48)
    st2 = FlowState(t=0.0, h=np.full(g.n_cells, 0.2), v=np.zeros((g.n_cells, 2)))
    wet_path = tmp_path / "wet.ppm"
    write_heatmap_ppm(wet_path, g, env, st2, h_ref=0.05, width_px=48)
    assert dry_path.read_bytes() != wet_path.read_bytes()


def test_checkpoint_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    st = FlowState(t=12.5, h=rng.uniform(0, 1, 40), v=rng.normal(0, 1, (40, 2)))
    budget = {"rainfall_m3": 1.25, "water_out_m3": 0.5}
    path = tmp_path / "ck.npz"
    save_checkpoint(path, st, budget)
    back, b2 = load_checkpoint(path)
    assert back.t == st.t
    assert (back.h == st.h).all() and (back.v == st.v).all()
    assert b2 == budget


def test_budget_csv(tmp_path):
    budget = {
        "rainfall_m3": 1.0,
        "boundary_in_m3": 0.0,
        "water_out_m3": 0.25,
        "clamp_gain_m3": 0.0,
        "water_left_m3": 0.75,
        "initial_volume_m3": 0.0,
        "closure_m3": 0.0,
    }
    path = tmp_path / "budget.csv"
    write_budget_csv(path, budget)
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert float(rows[0]["rainfall_m3"]) == 1.0
    assert float(rows[0]["water_left_m3"]) == 0.75
