"""Finite-volume time stepping: CFL bound, implicit friction solve, and the
two-stage step (conservative transport, then source + friction)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, NumericError
from .grid import FACE_NORMALS, SQRT3, HexGrid
from .physics import (
    BC_DIRICHLET,
    BC_FREE,
    BC_INFLOW,
    GRAV,
    EnvConfig,
    FlowState,
    FRICTION_COMBINED,
    rain_volume,
)


# ---------------------------------------------------------------------------
# Boundary resolution
# ---------------------------------------------------------------------------


@dataclass
class BoundaryTable:
    """Boundary faces of a grid resolved against an EnvConfig.

    ``index[i, k]`` maps cell i / face k to a row of the face arrays, or -1
    if that face is interior.  Inflow rows carry the per-face volumetric flux
    (``q * face_length * |n . direction|``, so the zigzag boundary projects
    to the exact transverse width) plus the data needed to reconstruct the
    incoming velocity.
    """

    index: np.ndarray
    kind: np.ndarray
    h0: np.ndarray
    gvx: np.ndarray
    gvy: np.ndarray
    qface: np.ndarray
    qwidth: np.ndarray
    dirx: np.ndarray
    diry: np.ndarray
    hcrit: np.ndarray
    cells: np.ndarray
    faces: np.ndarray


def resolve_boundaries(grid: HexGrid, env: EnvConfig) -> BoundaryTable:
    """Assign a boundary kind and parameters to every boundary face."""
    cells, faces, mid = grid.boundary_faces()
    nb_faces = cells.size
    kind = np.full(nb_faces, BC_FREE, dtype=np.uint8)
    h0 = np.zeros(nb_faces)
    gvx = np.zeros(nb_faces)
    gvy = np.zeros(nb_faces)
    qface = np.zeros(nb_faces)
    qwidth = np.zeros(nb_faces)
    dirx = np.zeros(nb_faces)
    diry = np.zeros(nb_faces)
    hcrit = np.zeros(nb_faces)
    for spec in env.boundaries:
        mask = spec.matches(mid)
        if not mask.any():
            continue
        kind[mask] = spec.code
        if spec.code == BC_DIRICHLET:
            h0[mask] = spec.h0
            if spec.velocity is not None:
                gvx[mask] = spec.velocity[0]
                gvy[mask] = spec.velocity[1]
            else:
                # inflow at speed v0 along the inward face normal
                gvx[mask] = -spec.v0 * FACE_NORMALS[faces[mask], 0]
                gvy[mask] = -spec.v0 * FACE_NORMALS[faces[mask], 1]
        elif spec.code == BC_INFLOW:
            d = np.asarray(spec.direction, dtype=np.float64)
            norm = np.hypot(d[0], d[1])
            if norm == 0:
                raise ConfigError("inflow direction must be a nonzero vector")
            d = d / norm
            proj = -(FACE_NORMALS[faces[mask], 0] * d[0] + FACE_NORMALS[faces[mask], 1] * d[1])
            proj = np.maximum(proj, 0.0)
            qface[mask] = spec.q * grid.face_length * proj
            qwidth[mask] = spec.q
            dirx[mask] = d[0]
            diry[mask] = d[1]
            hcrit[mask] = (spec.q**2 / GRAV) ** (1.0 / 3.0) if spec.q > 0 else 0.0
    index = np.full((grid.n_cells, 6), -1, dtype=np.int32)
    index[cells, faces] = np.arange(nb_faces, dtype=np.int32)
    return BoundaryTable(
        index=index,
        kind=kind,
        h0=h0,
        gvx=gvx,
        gvy=gvy,
        qface=qface,
        qwidth=qwidth,
        dirx=dirx,
        diry=diry,
        hcrit=hcrit,
        cells=cells,
        faces=faces,
    )


# ---------------------------------------------------------------------------
# CFL bound and friction solve
# ---------------------------------------------------------------------------

# enforces the strict inequality dt < tau_n
EPS_GUARD = 1e-6


def wave_celerity(state: FlowState, grid: HexGrid) -> float:
    """max over in-domain cells of |v| + sqrt(g h)."""
    mask = grid.in_domain
    if not mask.any():
        return 0.0
    speed = np.hypot(state.v[mask, 0], state.v[mask, 1])
    return float(np.max(speed + np.sqrt(GRAV * state.h[mask])))


def cfl_tau(state: FlowState, grid: HexGrid, cfl: float) -> float:
    """Stability bound tau_n = CFL * phi_min / c_max (inf when all dry).

    phi_min = min_i sigma_i / (sum of face lengths) = sqrt(3) R / 4 for a
    hexagonal raster where every in-domain cell has six flux faces.
    """
    if not 0 < cfl <= 1:
        raise ConfigError("CFL number must lie in (0, 1]")
    c_max = wave_celerity(state, grid)
    if c_max <= 0.0:
        return float("inf")
    phi_min = SQRT3 * grid.radius / 4.0
    return cfl * phi_min / c_max


def cfl_dt(state: FlowState, grid: HexGrid, cfl: float, dt_max: float) -> float:
    """Admissible time step: min(tau_n * (1 - eps), dt_max)."""
    tau = cfl_tau(state, grid, cfl)
    if not np.isfinite(tau):
        return dt_max
    return min(tau * (1.0 - EPS_GUARD), dt_max)


def friction_solve(alpha, beta, gamma):
    """Closed-form solve of ``alpha v + beta |v| v = gamma`` for v.

    alpha is the updated theta*h, beta = dt * K, gamma the starred momentum
    (theta h v)*.  Vectorized: gamma has shape (..., 2).
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    gnorm = np.hypot(gamma[..., 0], gamma[..., 1])
    denom = alpha + np.sqrt(alpha * alpha + 4.0 * beta * gnorm)
    with np.errstate(divide="ignore", invalid="ignore"):
        mu = np.where(denom > 0.0, 2.0 / np.where(denom > 0.0, denom, 1.0), 0.0)
    return mu[..., None] * gamma


# ---------------------------------------------------------------------------
# One step
# ---------------------------------------------------------------------------


@dataclass
class StepReport:
    """Bookkeeping for one time step (volumes in m^3)."""

    dt: float
    tau: float
    mass_source: float
    mass_boundary_in: float
    mass_boundary_out: float
    clamp_gain: float
    max_speed: float
    wet_cells: int


def step(
    state: FlowState,
    env: EnvConfig,
    grid: HexGrid,
    dt: float | None = None,
    cfl: float = 0.5,
    dt_max: float = float("inf"),
    viscosity: bool = False,
    boundary: BoundaryTable | None = None,
):
    """Advance the flow by one step; returns ``(new_state, StepReport)``.

    When ``dt`` is given it must respect the stability bound; otherwise it
    is computed from the CFL rule.
    """
    tau = cfl_tau(state, grid, cfl)
    if dt is None:
        dt = min(tau * (1.0 - EPS_GUARD), dt_max) if np.isfinite(tau) else dt_max
    elif dt > tau:
        raise NumericError(f"dt = {dt} violates the stability bound tau = {tau}")
    if boundary is None:
        boundary = resolve_boundaries(grid, env)
    rain_depth = 0.0
    if env.source is not None:
        rain_depth = rain_volume(state.t, state.t + dt, env.source)
    n = grid.n_cells
    out_h = np.empty(n)
    out_vx = np.empty(n)
    out_vy = np.empty(n)
    deficit = np.empty(n)
    out_rate = np.empty(n)
    in_rate = np.empty(n)
    kernels.step_kernel(
        state.h, state.v[:, 0].copy(), state.v[:, 1].copy(),
        grid.z, env.theta, grid.cell_class, grid.neighbors,
        boundary.index, boundary.kind, boundary.h0, boundary.gvx, boundary.gvy,
        boundary.qface, boundary.qwidth, boundary.dirx, boundary.diry, boundary.hcrit,
        kernels.FACE_NX, kernels.FACE_NY,
        grid.radius, dt, env.alpha_s, env.alpha_p,
        0 if env.friction.kind == FRICTION_COMBINED else 1, env.friction.tau,
        rain_depth, 1 if viscosity else 0, env.h_dry,
        out_h, out_vx, out_vy, deficit, out_rate, in_rate,
    )
    if not np.isfinite(out_h).all():
        bad = int(np.nonzero(~np.isfinite(out_h))[0][0])
        raise NumericError(f"non-finite water depth at cell {bad} (depth-update stage)")
    if not (np.isfinite(out_vx).all() and np.isfinite(out_vy).all()):
        badm = ~(np.isfinite(out_vx) & np.isfinite(out_vy))
        bad = int(np.nonzero(badm)[0][0])
        raise NumericError(f"non-finite velocity at cell {bad} (velocity-update stage)")
    new_state = FlowState(t=state.t + dt, h=out_h, v=np.column_stack([out_vx, out_vy]))
    sigma = grid.cell_area
    in_cells = int(np.count_nonzero(grid.in_domain))
    report = StepReport(
        dt=dt,
        tau=tau,
        mass_source=rain_depth * sigma * in_cells,
        mass_boundary_in=float(np.sum(in_rate)) * dt,
        mass_boundary_out=float(np.sum(out_rate)) * dt,
        clamp_gain=float(np.sum(deficit)),
        max_speed=float(np.max(np.hypot(out_vx, out_vy))) if n else 0.0,
        wet_cells=int(np.count_nonzero(out_h > env.h_dry)),
    )
    return new_state, report


def total_water_volume(state: FlowState, env: EnvConfig, grid: HexGrid) -> float:
    """Total water volume sum(sigma * theta * h) over in-domain cells."""
    mask = grid.in_domain
    return float(grid.cell_area * np.sum(env.theta[mask] * state.h[mask]))


def lake_at_rest_state(grid: HexGrid, level: float) -> FlowState:
    """Still-water state with the free surface at ``level``.

    The discrete equilibrium requires ``z + h`` to be bit-identical across
    wet cells, so the naive ``h = level - z`` is refined by subtracting the
    exact rounding error of the sum (the residual is representable by
    Sterbenz' lemma because z + h lands next to ``level``).  Cells whose
    bed sits within one ulp of the surface are pinned to ``z = level`` dry.
    """
    z = grid.z.copy()
    h = np.where(grid.in_domain, np.maximum(level - z, 0.0), 0.0)
    wet = h > 0
    for _ in range(4):
        err = (z + h) - level
        err[~wet] = 0.0
        if not err.any():
            break
        h = np.where(wet, h - err, h)
    stuck = wet & ((z + h) != level)
    h[stuck] = 0.0
    z[stuck] = level
    h = np.maximum(h, 0.0)
    grid.z = z
    return FlowState(t=0.0, h=h, v=np.zeros((grid.n_cells, 2)))
