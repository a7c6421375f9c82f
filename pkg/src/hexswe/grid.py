"""Regular hexagonal rasters built from rectangular DEMs or analytic surfaces.

Cells are pointy-top regular hexagons laid out in offset rows: row ``r`` sits
at ``y = y0 + 1.5*R*r`` and odd rows are shifted right by ``sqrt(3)*R/2``.
``R`` is the circumradius (= side length), so the cell area is
``3*sqrt(3)/2 * R**2``, every face has length ``R``, and neighboring centers
are ``sqrt(3)*R`` apart.  Faces are indexed 0..5 counter-clockwise from east;
the face opposite ``k`` is ``(k + 3) % 6``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GridFormatError

SQRT3 = math.sqrt(3.0)

# cell classes
INTERIOR = 0
BOUNDARY = 1
OUTSIDE = 2

CLASS_NAMES = {INTERIOR: "interior", BOUNDARY: "boundary", OUTSIDE: "outside"}
CLASS_CODES = {name: code for code, name in CLASS_NAMES.items()}

# Outward unit normals of the six faces (pointy-top, CCW from east).
# Written as exact literals so that opposite normals negate bitwise.
FACE_NORMALS = np.array(
    [
        [1.0, 0.0],
        [0.5, 0.5 * SQRT3],
        [-0.5, 0.5 * SQRT3],
        [-1.0, 0.0],
        [-0.5, -0.5 * SQRT3],
        [0.5, -0.5 * SQRT3],
    ]
)

# (drow, dcol) per face for even rows and odd rows (odd rows offset right).
_NEIGHBOR_OFFSETS_EVEN = [(0, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0)]
_NEIGHBOR_OFFSETS_ODD = [(0, 1), (1, 1), (1, 0), (0, -1), (-1, 0), (-1, 1)]


# ---------------------------------------------------------------------------
# Rectangular DEM raster
# ---------------------------------------------------------------------------


@dataclass
class RectRaster:
    """Rectangular elevation raster (ESRI ASCII grid layout).

    ``values`` is ``nrows x ncols`` with the FIRST row at the TOP (max y),
    matching the on-disk order of .asc files.  Values are point samples at
    the centers of the raster cells.
    """

    ncols: int
    nrows: int
    xll: float
    yll: float
    cellsize: float
    nodata: float | None
    values: np.ndarray

    def __post_init__(self):
        if self.ncols < 1 or self.nrows < 1:
            raise GridFormatError("raster must have at least one row and column")
        if not self.cellsize > 0:
            raise GridFormatError("cellsize must be positive")
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.nrows, self.ncols):
            raise GridFormatError(
                f"value block is {self.values.shape}, expected "
                f"({self.nrows}, {self.ncols})"
            )
        live = self.values if self.nodata is None else self.values[self.values != self.nodata]
        if not np.isfinite(live).all():
            raise GridFormatError("raster contains non-finite elevation values")

    @property
    def width(self) -> float:
        return self.ncols * self.cellsize

    @property
    def height(self) -> float:
        return self.nrows * self.cellsize

    def sample_bilinear(self, x, y):
        """Bilinearly interpolate elevations at points (x, y).

        Nodes are the raster cell centers; outside the node hull the bilinear
        polynomial of the nearest 2x2 block is extended, which keeps planar
        rasters exact everywhere.  Returns ``(z, bad)`` where ``bad`` marks
        points whose 2x2 block touches a nodata value or that fall outside
        the raster extent.
        """
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        cs = self.cellsize
        u = (x - self.xll) / cs - 0.5  # fractional column
        v = (y - self.yll) / cs - 0.5  # fractional row from the bottom
        c0 = np.clip(np.floor(u).astype(np.int64), 0, max(self.ncols - 2, 0))
        r0 = np.clip(np.floor(v).astype(np.int64), 0, max(self.nrows - 2, 0))
        fu = u - c0
        fv = v - r0
        rows_bot = self.values[::-1]  # row 0 at the bottom
        if self.ncols == 1:
            z00 = z01 = rows_bot[r0, 0]
            z10 = z11 = rows_bot[np.minimum(r0 + 1, self.nrows - 1), 0]
            fu = np.zeros_like(fu)
        elif self.nrows == 1:
            z00 = rows_bot[0, c0]
            z01 = rows_bot[0, c0 + 1]
            z10, z11 = z00, z01
            fv = np.zeros_like(fv)
        else:
            z00 = rows_bot[r0, c0]
            z01 = rows_bot[r0, c0 + 1]
            z10 = rows_bot[r0 + 1, c0]
            z11 = rows_bot[r0 + 1, c0 + 1]
        z = (
            z00 * (1 - fu) * (1 - fv)
            + z01 * fu * (1 - fv)
            + z10 * (1 - fu) * fv
            + z11 * fu * fv
        )
        bad = (
            (x < self.xll)
            | (x > self.xll + self.width)
            | (y < self.yll)
            | (y > self.yll + self.height)
        )
        if self.nodata is not None:
            nd = self.nodata
            bad = bad | (z00 == nd) | (z01 == nd) | (z10 == nd) | (z11 == nd)
        return z, bad


_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize")


def read_esri_ascii(text) -> RectRaster:
    """Parse an ESRI ASCII grid from a string or byte stream."""
    if isinstance(text, bytes):
        text = text.decode("ascii")
    lines = text.splitlines()
    header: dict[str, float] = {}
    data_start = 0
    for lineno, line in enumerate(lines, start=1):
        parts = line.split()
        if not parts:
            data_start = lineno
            continue
        key = parts[0].lower()
        if key in _HEADER_KEYS or key == "nodata_value":
            if len(parts) != 2:
                raise GridFormatError(f"line {lineno}: malformed header line {line!r}")
            try:
                header[key] = float(parts[1])
            except ValueError:
                raise GridFormatError(
                    f"line {lineno}: non-numeric header value {parts[1]!r}"
                ) from None
            data_start = lineno
        else:
            break
    for key in _HEADER_KEYS:
        if key not in header:
            raise GridFormatError(f"missing header key {key!r}")
    ncols = int(header["ncols"])
    nrows = int(header["nrows"])
    flat = []
    for lineno, line in enumerate(lines[data_start:], start=data_start + 1):
        for tok in line.split():
            try:
                flat.append(float(tok))
            except ValueError:
                raise GridFormatError(
                    f"line {lineno}: non-numeric token {tok!r}"
                ) from None
    if len(flat) != ncols * nrows:
        raise GridFormatError(
            f"expected {ncols * nrows} values, found {len(flat)}"
        )
    values = np.array(flat, dtype=np.float64).reshape(nrows, ncols)
    return RectRaster(
        ncols=ncols,
        nrows=nrows,
        xll=header["xllcorner"],
        yll=header["yllcorner"],
        cellsize=header["cellsize"],
        nodata=header.get("nodata_value"),
        values=values,
    )


def load_esri_ascii(path) -> RectRaster:
    with open(path, "rb") as fh:
        return read_esri_ascii(fh.read())


def write_esri_ascii(raster: RectRaster, path) -> None:
    """Write a raster back to ESRI ASCII; floats use shortest exact repr."""
    with open(path, "w") as fh:
        fh.write(f"ncols {raster.ncols}\n")
        fh.write(f"nrows {raster.nrows}\n")
        fh.write(f"xllcorner {raster.xll!r}\n")
        fh.write(f"yllcorner {raster.yll!r}\n")
        fh.write(f"cellsize {raster.cellsize!r}\n")
        if raster.nodata is not None:
            fh.write(f"NODATA_value {raster.nodata!r}\n")
        for row in raster.values:
            fh.write(" ".join(repr(float(v)) for v in row))
            fh.write("\n")


# ---------------------------------------------------------------------------
# Analytic surfaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnnulusSurface:
    """Radially symmetric cosine relief on an annulus.

    ``z(r) = A + sign * A * cos(pi * (r - r0) / (r1 - r0))`` — a crater for
    ``sign = -1`` (rim high, center ring low) and a hillock for ``sign = +1``.
    """

    amplitude: float
    r0: float
    r1: float
    sign: int = -1
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.r0 < self.r1:
            raise ConfigError("annulus surface requires r0 < r1")
        if self.sign not in (-1, 1):
            raise ConfigError("annulus sign must be -1 (crater) or +1 (hillock)")

    def profile(self, r):
        r = np.asarray(r, dtype=np.float64)
        a = self.amplitude
        return a + self.sign * a * np.cos(np.pi * (r - self.r0) / (self.r1 - self.r0))

    def profile_slope(self, r):
        """d z / d r of the radial profile."""
        r = np.asarray(r, dtype=np.float64)
        a = self.amplitude
        span = self.r1 - self.r0
        return -self.sign * a * np.pi / span * np.sin(np.pi * (r - self.r0) / span)

    def elevation(self, x, y):
        r = np.hypot(x - self.center[0], y - self.center[1])
        return self.profile(r)

    def domain_mask(self, x, y):
        r = np.hypot(x - self.center[0], y - self.center[1])
        return (r >= self.r0) & (r <= self.r1)

    def default_extent(self, margin: float = 0.0):
        cx, cy = self.center
        e = self.r1 + margin
        return (cx - e, cy - e, cx + e, cy + e)


@dataclass(frozen=True)
class ParaboloidSurface:
    """Elliptic paraboloid ``z = a*(x-x0)^2 + b*(y-y0)^2``."""

    a: float
    b: float
    x0: float
    y0: float

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ConfigError("paraboloid requires a > 0 and b > 0")

    def elevation(self, x, y):
        return self.a * (np.asarray(x) - self.x0) ** 2 + self.b * (np.asarray(y) - self.y0) ** 2

    def domain_mask(self, x, y):
        return np.ones(np.broadcast(x, y).shape, dtype=bool)


@dataclass(frozen=True)
class InclinedChannel:
    """Straight channel along x with constant longitudinal bed slope.

    ``z = slope * (length - x)``: the upstream end (x = 0) is the high end.
    """

    length: float
    width: float
    slope: float

    def __post_init__(self):
        if self.length <= 0 or self.width <= 0:
            raise ConfigError("channel length and width must be positive")

    def elevation(self, x, y):
        return self.slope * (self.length - np.asarray(x, dtype=np.float64))

    def domain_mask(self, x, y):
        x = np.asarray(x)
        return (x >= 0) & (x <= self.length)

    def default_extent(self):
        return (0.0, 0.0, self.length, self.width)


@dataclass(frozen=True)
class PiecewiseChannel:
    """Channel along x with piecewise-constant bed elevation per segment.

    ``breaks`` are the interior segment boundaries (strictly increasing);
    segment i covers ``[b_{i-1}, b_i)`` and carries elevation ``z_values[i]``.
    """

    length: float
    width: float
    breaks: tuple
    z_values: tuple

    def __post_init__(self):
        br = tuple(self.breaks)
        if list(br) != sorted(set(br)):
            raise ConfigError("segment breakpoints must be strictly increasing")
        if len(self.z_values) != len(br) + 1:
            raise ConfigError("need one z value per segment (len(breaks) + 1)")

    def elevation(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        seg = np.searchsorted(np.asarray(self.breaks, dtype=np.float64), x, side="right")
        return np.asarray(self.z_values, dtype=np.float64)[seg]

    def domain_mask(self, x, y):
        x = np.asarray(x)
        return (x >= 0) & (x <= self.length)

    def default_extent(self):
        return (0.0, 0.0, self.length, self.width)


@dataclass(frozen=True)
class ConstantSurface:
    """Flat bed at a fixed elevation."""

    value: float = 0.0

    def elevation(self, x, y):
        return np.full(np.broadcast(x, y).shape, float(self.value))

    def domain_mask(self, x, y):
        return np.ones(np.broadcast(x, y).shape, dtype=bool)


SURFACE_VARIANTS = (
    "crater",
    "hillock",
    "paraboloid",
    "inclined_channel",
    "piecewise_channel",
    "constant",
)


def surface_from_params(variant: str, params: dict):
    """Build a surface object from a variant name and keyword parameters."""
    try:
        if variant == "crater":
            return AnnulusSurface(
                amplitude=float(params["amplitude"]),
                r0=float(params["r0"]),
                r1=float(params["r1"]),
                sign=-1,
            )
        if variant == "hillock":
            return AnnulusSurface(
                amplitude=float(params["amplitude"]),
                r0=float(params["r0"]),
                r1=float(params["r1"]),
                sign=+1,
            )
        if variant == "paraboloid":
            return ParaboloidSurface(
                a=float(params["a"]),
                b=float(params["b"]),
                x0=float(params["x0"]),
                y0=float(params["y0"]),
            )
        if variant == "inclined_channel":
            return InclinedChannel(
                length=float(params["length"]),
                width=float(params["width"]),
                slope=float(params["slope"]),
            )
        if variant == "piecewise_channel":
            return PiecewiseChannel(
                length=float(params["length"]),
                width=float(params["width"]),
                breaks=tuple(float(v) for v in params["breaks"]),
                z_values=tuple(float(v) for v in params["z"]),
            )
        if variant == "constant":
            return ConstantSurface(value=float(params.get("value", 0.0)))
    except KeyError as exc:
        raise ConfigError(f"surface {variant!r} is missing parameter {exc}") from None
    raise ConfigError(
        f"unknown surface variant {variant!r}; valid variants: {', '.join(SURFACE_VARIANTS)}"
    )


# ---------------------------------------------------------------------------
# Hexagonal grid
# ---------------------------------------------------------------------------


@dataclass
class HexGrid:
    """Cell-centered regular hexagonal raster.

    ``neighbors[i, k]`` is the id of the in-domain cell across face ``k`` of
    cell ``i`` or -1 when that face is a domain boundary (or ``i`` itself is
    outside).  ``cell_class`` is INTERIOR / BOUNDARY / OUTSIDE.  A grid built
    with ``wrap_y=True`` closes the row topology into a transverse-periodic
    channel; wrapped neighbor pairs are not geometric neighbors.
    """

    radius: float
    centers: np.ndarray
    z: np.ndarray
    neighbors: np.ndarray
    cell_class: np.ndarray
    rows: int
    cols: int
    wrap_y: bool = False

    @property
    def n_cells(self) -> int:
        return self.centers.shape[0]

    @property
    def cell_area(self) -> float:
        return 1.5 * SQRT3 * self.radius**2

    @property
    def face_length(self) -> float:
        return self.radius

    @property
    def in_domain(self) -> np.ndarray:
        return self.cell_class != OUTSIDE

    def boundary_faces(self):
        """All (cell, face) pairs of in-domain cells with no neighbor.

        Returns ``(cells, faces, midpoints)``; ``midpoints`` are the face
        centers at apothem distance from the cell centers.
        """
        mask = (self.neighbors < 0) & self.in_domain[:, None]
        cells, faces = np.nonzero(mask)
        mid = self.centers[cells] + (SQRT3 / 2 * self.radius) * FACE_NORMALS[faces]
        return cells, faces, mid

    def cell_at(self, x: float, y: float) -> int:
        """Id of the nearest in-domain cell to (x, y), or -1 if none."""
        ids = np.nonzero(self.in_domain)[0]
        if ids.size == 0:
            return -1
        d2 = (self.centers[ids, 0] - x) ** 2 + (self.centers[ids, 1] - y) ** 2
        return int(ids[np.argmin(d2)])

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("hexswe-grid 1\n")
            fh.write(f"radius {self.radius!r}\n")
            fh.write(f"cells {self.n_cells}\n")
            fh.write(f"rows {self.rows}\n")
            fh.write(f"cols {self.cols}\n")
            fh.write(f"wrap_y {int(self.wrap_y)}\n")
            fh.write("id x y z class n0 n1 n2 n3 n4 n5\n")
            cls = self.cell_class
            nb = self.neighbors
            for i in range(self.n_cells):
                fh.write(
                    f"{i} {float(self.centers[i, 0])!r} {float(self.centers[i, 1])!r} "
                    f"{float(self.z[i])!r} {CLASS_NAMES[int(cls[i])]} "
                    f"{nb[i, 0]} {nb[i, 1]} {nb[i, 2]} {nb[i, 3]} {nb[i, 4]} {nb[i, 5]}\n"
                )

    @classmethod
    def load(cls, path) -> "HexGrid":
        with open(path) as fh:
            magic = fh.readline().split()
            if len(magic) != 2 or magic[0] != "hexswe-grid":
                raise GridFormatError("not a hexswe grid file")
            if magic[1] != "1":
                raise GridFormatError(f"unsupported grid format version {magic[1]}")
            header = {}
            for _ in range(5):
                key, val = fh.readline().split()
                header[key] = val
            fh.readline()  # column header
            n = int(header["cells"])
            centers = np.empty((n, 2))
            z = np.empty(n)
            classes = np.empty(n, dtype=np.uint8)
            neighbors = np.empty((n, 6), dtype=np.int32)
            for lineno in range(n):
                parts = fh.readline().split()
                if len(parts) != 11:
                    raise GridFormatError(f"malformed cell line {lineno}")
                i = int(parts[0])
                centers[i, 0] = float(parts[1])
                centers[i, 1] = float(parts[2])
                z[i] = float(parts[3])
                try:
                    classes[i] = CLASS_CODES[parts[4]]
                except KeyError:
                    raise GridFormatError(
                        f"unknown cell class {parts[4]!r} on cell {i}"
                    ) from None
                neighbors[i] = [int(p) for p in parts[5:11]]
        return cls(
            radius=float(header["radius"]),
            centers=centers,
            z=z,
            neighbors=neighbors,
            cell_class=classes,
            rows=int(header["rows"]),
            cols=int(header["cols"]),
            wrap_y=bool(int(header["wrap_y"])),
        )


def _lattice_centers(x0: float, y0: float, rows: int, cols: int, radius: float):
    """Center coordinates of the offset-row lattice, index = row*cols + col."""
    r = np.repeat(np.arange(rows), cols)
    c = np.tile(np.arange(cols), rows)
    x = x0 + SQRT3 * radius * (c + 0.5 * (r % 2))
    y = y0 + 1.5 * radius * r
    return np.column_stack([x, y]), r, c


def _build_neighbors(rows: int, cols: int, in_domain: np.ndarray, wrap_y: bool):
    """Neighbor ids per face with -1 where no in-domain neighbor exists."""
    n = rows * cols
    r = np.repeat(np.arange(rows), cols)
    c = np.tile(np.arange(cols), rows)
    odd = (r % 2).astype(bool)
    neighbors = np.full((n, 6), -1, dtype=np.int32)
    for k in range(6):
        dr_e, dc_e = _NEIGHBOR_OFFSETS_EVEN[k]
        dr_o, dc_o = _NEIGHBOR_OFFSETS_ODD[k]
        r2 = r + np.where(odd, dr_o, dr_e)
        c2 = c + np.where(odd, dc_o, dc_e)
        if wrap_y:
            r2 = r2 % rows
        valid = (r2 >= 0) & (r2 < rows) & (c2 >= 0) & (c2 < cols)
        target = np.where(valid, r2 * cols + c2, 0)
        valid &= in_domain[target]
        neighbors[:, k] = np.where(valid & in_domain, target, -1)
    return neighbors


def _classify(neighbors: np.ndarray, in_domain: np.ndarray) -> np.ndarray:
    classes = np.full(in_domain.size, OUTSIDE, dtype=np.uint8)
    complete = (neighbors >= 0).all(axis=1)
    classes[in_domain & complete] = INTERIOR
    classes[in_domain & ~complete] = BOUNDARY
    return classes


def _assemble(x0, y0, rows, cols, radius, z, in_domain, wrap_y=False) -> HexGrid:
    centers, _, _ = _lattice_centers(x0, y0, rows, cols, radius)
    neighbors = _build_neighbors(rows, cols, in_domain, wrap_y)
    classes = _classify(neighbors, in_domain)
    z = np.where(in_domain, z, 0.0)
    return HexGrid(
        radius=radius,
        centers=centers,
        z=np.asarray(z, dtype=np.float64),
        neighbors=neighbors,
        cell_class=classes,
        rows=rows,
        cols=cols,
        wrap_y=wrap_y,
    )


def port_to_hex(rect: RectRaster, n_first_row: int, crop=None) -> HexGrid:
    """Port a rectangular DEM onto a regular hexagonal raster.

    ``n_first_row`` hexagons span the raster width, which fixes the
    circumradius ``R = width / (sqrt(3) * n_first_row)``; the row count
    follows from the raster height.  Elevations come from bilinear
    interpolation of the four surrounding raster values; hex centers that
    fall on nodata or outside the raster are classed outside.  ``crop``
    optionally restricts porting to a window ``(x0, y0, x1, y1)`` in raster
    coordinates.
    """
    if n_first_row < 2:
        raise ConfigError("n_first_row must be at least 2")
    xll, yll = rect.xll, rect.yll
    width, height = rect.width, rect.height
    if crop is not None:
        cx0, cy0, cx1, cy1 = (float(v) for v in crop)
        cx0 = max(cx0, xll)
        cy0 = max(cy0, yll)
        cx1 = min(cx1, xll + width)
        cy1 = min(cy1, yll + height)
        if not (cx0 < cx1 and cy0 < cy1):
            raise ConfigError("crop window does not overlap the raster")
        xll, yll, width, height = cx0, cy0, cx1 - cx0, cy1 - cy0
    radius = width / (SQRT3 * n_first_row)
    rows = int(math.floor((height - 2 * radius) / (1.5 * radius))) + 1
    if height < 2 * radius or rows < 1:
        raise ConfigError("raster height too small: hexagonal grid degenerates to zero rows")
    centers, _, _ = _lattice_centers(xll + SQRT3 / 2 * radius, yll + radius, rows, n_first_row, radius)
    z, bad = rect.sample_bilinear(centers[:, 0], centers[:, 1])
    in_domain = ~bad
    if not in_domain.any():
        raise ConfigError("all hexagonal cells fall on nodata or outside the raster")
    return _assemble(
        xll + SQRT3 / 2 * radius, yll + radius, rows, n_first_row, radius, z, in_domain
    )


def generate_analytic(surface, extent=None, radius: float = 1.0, wrap_y: bool = False) -> HexGrid:
    """Tessellate an analytic surface with hexagons of circumradius ``radius``.

    ``extent = (x0, y0, x1, y1)``; if omitted the surface must provide
    ``default_extent()``.  ``wrap_y`` closes the rows into a transverse-
    periodic channel (the row count is forced even so offset parity stays
    consistent across the wrap).
    """
    if radius <= 0:
        raise ConfigError("hexagon radius must be positive")
    if extent is None:
        if not hasattr(surface, "default_extent"):
            raise ConfigError("this surface needs an explicit extent")
        extent = surface.default_extent()
    x0, y0, x1, y1 = (float(v) for v in extent)
    width, height = x1 - x0, y1 - y0
    if width < SQRT3 * radius or height < 2 * radius:
        raise ConfigError("extent smaller than one hexagonal cell")
    cols = int(math.floor(width / (SQRT3 * radius)))
    rows = int(math.floor((height - 2 * radius) / (1.5 * radius))) + 1
    if wrap_y and rows % 2 == 1:
        rows -= 1
    if cols < 1 or rows < 1 or (wrap_y and rows < 2):
        raise ConfigError("extent smaller than one hexagonal cell")
    centers, _, _ = _lattice_centers(x0 + SQRT3 / 2 * radius, y0 + radius, rows, cols, radius)
    z = surface.elevation(centers[:, 0], centers[:, 1])
    in_domain = np.asarray(surface.domain_mask(centers[:, 0], centers[:, 1]), dtype=bool)
    if not in_domain.any():
        raise ConfigError("no cell center falls inside the surface domain")
    return _assemble(
        x0 + SQRT3 / 2 * radius, y0 + radius, rows, cols, radius, z, in_domain, wrap_y
    )
