"""Hexagonal raster construction, DEM ingestion, and grid serialization."""

import numpy as np
import pytest

from hexswe.errors import ConfigError, GridFormatError
from hexswe.grid import (
    FACE_NORMALS,
    AnnulusSurface,
    ConstantSurface,
    HexGrid,
    InclinedChannel,
    ParaboloidSurface,
    PiecewiseChannel,
    RectRaster,
    SQRT3,
    generate_analytic,
    port_to_hex,
    read_esri_ascii,
    surface_from_params,
    write_esri_ascii,
)

BOUNDARY = 1
OUTSIDE = 2


def make_rect(values, cellsize=10.0, xll=0.0, yll=0.0, nodata=None):
    values = np.asarray(values, dtype=float)
    return RectRaster(
        ncols=values.shape[1],
        nrows=values.shape[0],
        xll=xll,
        yll=yll,
        cellsize=cellsize,
        nodata=nodata,
        values=values,
    )


# ---------------------------------------------------------------------------
# ESRI ASCII
# ---------------------------------------------------------------------------


def test_esri_read_back():
    text = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 10\n1 2\n3 4\n"
    rect = read_esri_ascii(text)
    assert rect.ncols == 2 and rect.nrows == 2
    assert rect.values[0][1] == 2.0
    assert rect.values[1][0] == 3.0


def test_esri_missing_header_names_key():
    text = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\n1 2\n3 4\n"
    with pytest.raises(GridFormatError, match="cellsize"):
        read_esri_ascii(text)


def test_esri_bad_token_reports_line():
    text = "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 oops\n"
    with pytest.raises(GridFormatError, match="line 6"):
        read_esri_ascii(text)


def test_esri_wrong_count():
    text = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2 3\n"
    with pytest.raises(GridFormatError, match="expected 4 values"):
        read_esri_ascii(text)


def test_esri_round_trip_bit_exact(tmp_path):
    # plane z = x sampled on a 3x3 raster survives write + read unchanged
    xs = (np.arange(3) + 0.5) * 7.3
    values = np.tile(xs, (3, 1)) * (1 + 1e-13)
    rect = make_rect(values, cellsize=7.3, xll=-1.25, yll=3.5, nodata=-9999.0)
    path = tmp_path / "plane.asc"
    write_esri_ascii(rect, path)
    back = read_esri_ascii(path.read_text())
    assert back.cellsize == rect.cellsize
    assert back.xll == rect.xll and back.yll == rect.yll
    assert back.nodata == rect.nodata
    assert (back.values == rect.values).all()


def test_esri_case_insensitive_headers():
    text = "NCOLS 1\nNROWS 1\nXLLCORNER 2\nYLLCORNER 3\nCELLSIZE 5\nNODATA_value -1\n4\n"
    rect = read_esri_ascii(text)
    assert rect.nodata == -1.0 and rect.values[0][0] == 4.0


# ---------------------------------------------------------------------------
# Geometry invariants
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def small_grid():
    return generate_analytic(ConstantSurface(5.0), extent=(0, 0, 30, 30), radius=1.2)


def test_cell_geometry_constants(small_grid):
    g = small_grid
    assert abs(g.cell_area - 1.5 * SQRT3 * g.radius**2) < 1e-12
    assert g.face_length == g.radius
    assert np.abs(np.hypot(FACE_NORMALS[:, 0], FACE_NORMALS[:, 1]) - 1).max() < 1e-15
    assert np.abs(FACE_NORMALS.sum(axis=0)).max() == 0.0


def test_neighbor_topology_symmetric(small_grid):
    g = small_grid
    for i in range(g.n_cells):
        for k in range(6):
            j = g.neighbors[i, k]
            if j >= 0:
                assert g.neighbors[j, (k + 3) % 6] == i


def test_neighbor_distance(small_grid):
    g = small_grid
    for i in range(g.n_cells):
        for k in range(6):
            j = g.neighbors[i, k]
            if j >= 0:
                d = np.hypot(*(g.centers[j] - g.centers[i]))
                assert abs(d - SQRT3 * g.radius) < 1e-12 * SQRT3 * g.radius


def test_normals_point_to_neighbors(small_grid):
    g = small_grid
    i = g.cell_at(15, 15)
    for k in range(6):
        j = g.neighbors[i, k]
        assert j >= 0
        direction = (g.centers[j] - g.centers[i]) / (SQRT3 * g.radius)
        assert np.abs(direction - FACE_NORMALS[k]).max() < 1e-12


def test_classification_rule(small_grid):
    g = small_grid
    complete = (g.neighbors >= 0).all(axis=1)
    in_dom = g.cell_class != OUTSIDE
    assert ((g.cell_class == BOUNDARY) == (in_dom & ~complete)).all()
    assert (g.cell_class[in_dom & complete] == 0).all()


# ---------------------------------------------------------------------------
# Porting
# ---------------------------------------------------------------------------


def test_port_constant_raster():
    rect = make_rect(np.full((6, 8), 5.0))
    g = port_to_hex(rect, 10)
    assert np.allclose(g.z[g.in_domain], 5.0)
    assert (g.cell_class != OUTSIDE).any()


def test_port_plane_bilinear_exact():
    cs = 10.0
    jj, ii = np.meshgrid(np.arange(12), np.arange(9))
    x = (jj + 0.5) * cs
    y_from_top = (9 - 1 - ii + 0.5) * cs
    rect = make_rect(0.1 * x + 0.2 * y_from_top, cellsize=cs)
    g = port_to_hex(rect, 14)
    expect = 0.1 * g.centers[:, 0] + 0.2 * g.centers[:, 1]
    mask = g.in_domain
    assert np.abs(g.z[mask] - expect[mask]).max() < 1e-9


def test_port_radius_rule():
    rect = make_rect(np.zeros((10, 10)), cellsize=6400.0)
    g = port_to_hex(rect, 900)
    assert abs(g.radius - 64000.0 / (SQRT3 * 900)) < 1e-12


def test_port_nodata_marks_outside():
    values = np.full((8, 8), 3.0)
    values[:4, :4] = -9999.0
    rect = make_rect(values, nodata=-9999.0)
    g = port_to_hex(rect, 12)
    quadrant = (g.centers[:, 0] < 35) & (g.centers[:, 1] > 45)
    assert (g.cell_class[quadrant] == OUTSIDE).all()
    assert (g.cell_class != OUTSIDE).any()


def test_port_crop_window():
    cs = 10.0
    jj = np.tile(np.arange(12), (9, 1))
    rect = make_rect((jj + 0.5) * cs * 0.1, cellsize=cs)
    g = port_to_hex(rect, 6, crop=(40.0, 10.0, 100.0, 80.0))
    mask = g.in_domain
    assert g.centers[mask, 0].min() >= 40.0
    assert g.centers[mask, 0].max() <= 100.0
    assert abs(g.radius - 60.0 / (SQRT3 * 6)) < 1e-12


def test_port_rejects_thin_raster():
    rect = make_rect(np.zeros((1, 40)), cellsize=1.0)
    with pytest.raises(ConfigError, match="zero rows"):
        port_to_hex(rect, 4)


def test_port_rejects_all_nodata():
    values = np.full((6, 6), -1.0)
    rect = make_rect(values, nodata=-1.0)
    with pytest.raises(ConfigError):
        port_to_hex(rect, 8)


# ---------------------------------------------------------------------------
# Analytic surfaces
# ---------------------------------------------------------------------------


def test_crater_profile_endpoints():
    crater = AnnulusSurface(amplitude=10.0, r0=10.0, r1=100.0, sign=-1)
    assert abs(crater.profile(10.0)) < 1e-12
    assert abs(crater.profile(100.0) - 20.0) < 1e-12


def test_hillock_profile_endpoints():
    hill = AnnulusSurface(amplitude=10.0, r0=10.0, r1=100.0, sign=+1)
    assert abs(hill.profile(10.0) - 20.0) < 1e-12
    assert abs(hill.profile(100.0)) < 1e-12


def test_paraboloid_vertex():
    s = ParaboloidSurface(a=1.25e-3, b=5e-3, x0=500.0, y0=500.0)
    assert s.elevation(500.0, 500.0) == 0.0


def test_annulus_grid_classes():
    crater = AnnulusSurface(amplitude=10.0, r0=10.0, r1=100.0, sign=-1)
    g = generate_analytic(crater, radius=2.0)
    r = np.hypot(g.centers[:, 0], g.centers[:, 1])
    in_dom = g.cell_class != OUTSIDE
    assert (r[in_dom] >= 10.0).all() and (r[in_dom] <= 100.0).all()
    assert (g.cell_class[r < 10.0] == OUTSIDE).all()


def test_annulus_requires_r0_below_r1():
    with pytest.raises(ConfigError):
        AnnulusSurface(amplitude=1.0, r0=5.0, r1=5.0)


def test_piecewise_channel_breaks_must_increase():
    with pytest.raises(ConfigError):
        PiecewiseChannel(length=10, width=1, breaks=(5.0, 5.0), z_values=(0, 1, 2))


def test_piecewise_channel_elevation():
    ch = PiecewiseChannel(length=18, width=1, breaks=(9.0,), z_values=(1.0, 1.2))
    assert ch.elevation(4.0, 0.5) == 1.0
    assert ch.elevation(12.0, 0.5) == 1.2


def test_surface_from_params_unknown_variant():
    with pytest.raises(ConfigError, match="crater"):
        surface_from_params("volcano", {})


def test_extent_too_small():
    with pytest.raises(ConfigError, match="smaller than one"):
        generate_analytic(ConstantSurface(0.0), extent=(0, 0, 0.5, 0.5), radius=1.0)


def test_wrap_y_even_rows_all_interior():
    g = generate_analytic(ConstantSurface(0.0), extent=(0, 0, 10, 2), radius=0.4, wrap_y=True)
    assert g.rows % 2 == 0
    interior_x = (g.centers[:, 0] > 2) & (g.centers[:, 0] < 8)
    assert (g.cell_class[interior_x] == 0).all()
    for i in np.nonzero(interior_x)[0]:
        for k in range(6):
            j = g.neighbors[i, k]
            assert j >= 0
            assert g.neighbors[j, (k + 3) % 6] == i


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def test_grid_save_load_round_trip(tmp_path):
    crater = AnnulusSurface(amplitude=7.0, r0=4.0, r1=20.0, sign=-1)
    g = generate_analytic(crater, radius=1.1)
    path = tmp_path / "grid.txt"
    g.save(path)
    back = HexGrid.load(path)
    assert back.radius == g.radius
    assert back.rows == g.rows and back.cols == g.cols
    assert (back.neighbors == g.neighbors).all()
    assert (back.cell_class == g.cell_class).all()
    assert (back.centers == g.centers).all()
    assert (back.z == g.z).all()


def test_grid_load_rejects_other_files(tmp_path):
    path = tmp_path / "junk.txt"
    path.write_text("not a grid\n")
    with pytest.raises(GridFormatError):
        HexGrid.load(path)
