"""Porous shallow-water flow on regular hexagonal rasters."""

from .errors import (
    ConfigError,
    GridFormatError,
    HexsweError,
    NumericError,
    UnsupportedRegimeError,
)
from .grid import (
    AnnulusSurface,
    ConstantSurface,
    FACE_NORMALS,
    HexGrid,
    InclinedChannel,
    ParaboloidSurface,
    PiecewiseChannel,
    RectRaster,
    generate_analytic,
    load_esri_ascii,
    port_to_hex,
    read_esri_ascii,
    surface_from_params,
    write_esri_ascii,
)
from .physics import (
    BoundarySpec,
    EnvConfig,
    FlowState,
    FrictionLaw,
    GRAV,
    Hyetograph,
    free_surface_w,
    friction_K,
    rain_rate,
    rain_volume,
)
from .solver import (
    StepReport,
    cfl_dt,
    cfl_tau,
    friction_solve,
    resolve_boundaries,
    step,
    total_water_volume,
)

__version__ = "0.1.0"
