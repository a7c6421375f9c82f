"""Scenario files, the simulate orchestrator, and the command-line tool."""

import csv
import subprocess
import sys

import numpy as np
import pytest

from hexswe.cli import main
from hexswe.errors import ConfigError
from hexswe.outputs import load_checkpoint
from hexswe.scenario import load_scenario
from hexswe.simulate import TimeControls, simulate


LAKE_SCENARIO = """
[grid]
source = generate
surface = crater
amplitude = 10
r0 = 10
r1 = 100
radius = 4.0

[environment]
theta = 1.0
alpha_s = 0.01

[initial]
type = level
level = 8.0

[time]
t_final = 2.0
cfl = 0.5

[output]
snapshots = 1.0 2.0
interval = 0.5
gauges = 15,0 ; 0,18
heatmaps = true
h_ref = 1.0
width_px = 120
"""


def write(path, text):
    path.write_text(text)
    return str(path)


def test_scenario_parse_and_lake_run(tmp_path):
    sc = load_scenario(write(tmp_path / "lake.ini", LAKE_SCENARIO))
    assert sc.controls.t_final == 2.0
    assert sc.output.snapshot_times == (1.0, 2.0)
    assert sc.initial.h.max() > 0
    result = simulate(
        sc.initial, sc.env, sc.grid, sc.controls,
        gauges=list(sc.output.gauges),
        record_interval=sc.output.interval,
        snapshot_times=list(sc.output.snapshot_times),
    )
    assert result.state.t == 2.0
    assert abs(result.budget["closure_m3"]) < 1e-10
    # lake at rest: gauge depths constant over all records
    rows = np.asarray(result.gauge_rows)
    assert np.abs(rows[:, 1] - rows[0, 1]).max() == 0.0


def test_scenario_errors(tmp_path):
    bad = LAKE_SCENARIO.replace("surface = crater", "surface = volcano")
    with pytest.raises(ConfigError, match="crater"):
        load_scenario(write(tmp_path / "a.ini", bad))
    bad = LAKE_SCENARIO.replace("amplitude = 10\n", "")
    with pytest.raises(ConfigError, match="amplitude"):
        load_scenario(write(tmp_path / "b.ini", bad))
    bad = LAKE_SCENARIO.replace("snapshots = 1.0 2.0", "snapshots = 5.0")
    with pytest.raises(ConfigError, match="snapshot"):
        load_scenario(write(tmp_path / "c.ini", bad))
    bad = LAKE_SCENARIO.replace("type = level\nlevel = 8.0", "type = dry")
    with pytest.raises(ConfigError, match="water"):
        load_scenario(write(tmp_path / "d.ini", bad))


def test_cli_convert_constant_dem(tmp_path):
    asc = tmp_path / "flat.asc"
    lines = ["ncols 8", "nrows 6", "xllcorner 0", "yllcorner 0", "cellsize 10"]
    lines += ["7 " * 8] * 6
    asc.write_text("\n".join(lines) + "\n")
    out = tmp_path / "grid.txt"
    assert main(["convert", str(asc), "-n", "10", "-o", str(out)]) == 0
    from hexswe.grid import HexGrid

    g = HexGrid.load(out)
    assert np.allclose(g.z[g.in_domain], 7.0)


def test_cli_convert_planar_dem(tmp_path):
    asc = tmp_path / "plane.asc"
    cs = 10.0
    rows = []
    for i in range(6):
        y = (6 - 1 - i + 0.5) * cs
        rows.append(" ".join(repr(0.05 * (j + 0.5) * cs + 0.02 * y) for j in range(8)))
    asc.write_text(
        "ncols 8\nnrows 6\nxllcorner 0\nyllcorner 0\ncellsize 10\n" + "\n".join(rows) + "\n"
    )
    out = tmp_path / "grid.txt"
    assert main(["convert", str(asc), "-n", "10", "-o", str(out)]) == 0
    from hexswe.grid import HexGrid

    g = HexGrid.load(out)
    mask = g.in_domain
    expect = 0.05 * g.centers[mask, 0] + 0.02 * g.centers[mask, 1]
    assert np.abs(g.z[mask] - expect).max() < 1e-9


def test_cli_convert_malformed_header(tmp_path, capsys):
    asc = tmp_path / "bad.asc"
    asc.write_text("ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\n1 2\n")
    code = main(["convert", str(asc), "-n", "4", "-o", str(tmp_path / "g.txt")])
    assert code == 2
    assert "cellsize" in capsys.readouterr().err


def test_cli_generate_crater_and_unknown_variant(tmp_path, capsys):
    spec = tmp_path / "surf.ini"
    spec.write_text(
        "[grid]\nsource = generate\nsurface = crater\namplitude = 10\n"
        "r0 = 10\nr1 = 60\nradius = 2.0\n"
    )
    out = tmp_path / "crater.txt"
    assert main(["generate", str(spec), "-o", str(out)]) == 0
    from hexswe.grid import HexGrid, OUTSIDE

    g = HexGrid.load(out)
    r = np.hypot(g.centers[:, 0], g.centers[:, 1])
    assert (g.cell_class[r < 10.0] == OUTSIDE).all()  # the annulus hole
    assert (g.cell_class != OUTSIDE).any()

    spec2 = tmp_path / "surf2.ini"
    spec2.write_text("[grid]\nsource = generate\nsurface = mesa\nradius = 2\n")
    code = main(["generate", str(spec2), "-o", str(out)])
    assert code == 2
    err = capsys.readouterr().err
    assert "crater" in err and "paraboloid" in err  # lists valid variants


def test_cli_run_lake_snapshots_identical(tmp_path):
    scen = write(tmp_path / "lake.ini", LAKE_SCENARIO)
    outdir = tmp_path / "out"
    assert main(["run", scen, "-o", str(outdir)]) == 0
    snaps = sorted(outdir.glob("snapshot_*.csv"))
    assert len(snaps) == 2
    assert snaps[0].read_bytes() != b""
    a = np.loadtxt(snaps[0], delimiter=",", skiprows=1)
    b = np.loadtxt(snaps[1], delimiter=",", skiprows=1)
    assert (a == b).all()  # lake at rest: snapshots identical
    assert (outdir / "budget.csv").exists()
    assert (outdir / "hydrograph.csv").exists()
    assert (outdir / "gauges.csv").exists()
    assert (outdir / "final_state.npz").exists()
    ppms = sorted(outdir.glob("snapshot_*.ppm"))
    assert len(ppms) == 2 and ppms[0].read_bytes().startswith(b"P6\n")


def test_cli_query_cell(tmp_path, capsys):
    scen = write(tmp_path / "lake.ini", LAKE_SCENARIO)
    assert main(["run", scen, "--query-cell", "20", "0"]) == 0
    out = capsys.readouterr().out
    assert "cell" in out and "z=" in out and "neighbors:" in out


def test_checkpoint_resume_matches_straight_run(tmp_path):
    base = """
[grid]
source = generate
surface = paraboloid
a = 1e-3
b = 1e-3
x0 = 30
y0 = 30
extent = 0 0 60 60
radius = 2.0

[environment]
theta = 1.0
alpha_s = 0.01

[initial]
type = level
level = 0.4

[time]
t_final = {tf}
cfl = 0.5

[output]
interval = 1.0
"""
    # perturb the lake so the run has real dynamics
    scen_half = write(tmp_path / "half.ini", base.format(tf=4.0))
    scen_full = write(tmp_path / "full.ini", base.format(tf=8.0))
    sc_h = load_scenario(scen_half)
    blob = np.exp(-((sc_h.grid.centers[:, 0] - 25) ** 2 + (sc_h.grid.centers[:, 1] - 30) ** 2) / 40)
    sc_h.initial.h += 0.2 * blob * sc_h.grid.in_domain
    res_half = simulate(sc_h.initial, sc_h.env, sc_h.grid, sc_h.controls, record_interval=1.0)

    sc_f = load_scenario(scen_full)
    sc_f.initial.h += 0.2 * blob * sc_f.grid.in_domain
    res_full = simulate(sc_f.initial, sc_f.env, sc_f.grid, sc_f.controls, record_interval=1.0)

    resumed = simulate(res_half.state, sc_f.env, sc_f.grid, TimeControls(t_final=8.0, cfl=0.5),
                       record_interval=1.0)
    assert np.abs(resumed.state.h - res_full.state.h).max() <= 1e-12
    assert np.abs(resumed.state.v - res_full.state.v).max() <= 1e-12


def test_cli_entrypoint_subprocess(tmp_path):
    # the installed console script parses --help without loading heavy state
    proc = subprocess.run(
        [sys.executable, "-m", "hexswe.cli", "--help"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    for name in ("convert", "generate", "run", "validate", "calibrate", "sensitivity"):
        assert name in proc.stdout
