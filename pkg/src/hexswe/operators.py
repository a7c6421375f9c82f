"""Reference implementations of the per-face and per-cell spatial operators.

These are straight scalar transcriptions of the scheme, kept independent of
the fused numba kernel so tests can check the fast path against them.  Use
them on small grids only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import FACE_NORMALS, HexGrid
from .physics import (
    BC_DIRICHLET,
    BC_FREE,
    BC_INFLOW,
    BC_WALL,
    GRAV,
    EnvConfig,
    FlowState,
)
from .solver import BoundaryTable, resolve_boundaries


@dataclass(frozen=True)
class FaceState:
    """Interface quantities on the common face of two cells."""

    theta_h_upwind: float
    theta_h_hat: float
    v_face: tuple
    v_normal: float


def _face_index(grid: HexGrid, i: int, j: int) -> int:
    for k in range(6):
        if grid.neighbors[i, k] == j:
            return k
    raise ConfigError(f"cells {i} and {j} are not neighbors")


def face_states(state: FlowState, env: EnvConfig, grid: HexGrid, i: int, j: int) -> FaceState:
    """Upwind and averaged interface values on the face between i and j."""
    k = _face_index(grid, i, j)
    n = FACE_NORMALS[k]
    vax = 0.5 * (state.v[i, 0] + state.v[j, 0])
    vay = 0.5 * (state.v[i, 1] + state.v[j, 1])
    vn = vax * n[0] + vay * n[1]
    th_i = env.theta[i] * state.h[i]
    th_j = env.theta[j] * state.h[j]
    w_i = GRAV * (grid.z[i] + state.h[i])
    w_j = GRAV * (grid.z[j] + state.h[j])
    if vn > 0:
        upwind = th_i
    elif vn < 0:
        upwind = th_j
    else:
        upwind = 0.0
    if vn != 0:
        hat = upwind
    elif w_i > w_j:
        hat = th_i
    else:
        hat = th_j
    return FaceState(theta_h_upwind=upwind, theta_h_hat=hat, v_face=(vax, vay), v_normal=vn)


def artificial_viscosity(state: FlowState, env: EnvConfig, grid: HexGrid, i: int, j: int) -> np.ndarray:
    """Momentum-flux correction c_f * mu_f * (v_j - v_i) on face (i, j)."""
    th_i = env.theta[i] * state.h[i]
    th_j = env.theta[j] * state.h[j]
    ssum = th_i + th_j
    if ssum <= 0:
        return np.zeros(2)
    mu_f = 2.0 * th_i * th_j / ssum
    c_i = np.hypot(*state.v[i]) + np.sqrt(GRAV * state.h[i])
    c_j = np.hypot(*state.v[j]) + np.sqrt(GRAV * state.h[j])
    cf = max(c_i, c_j)
    return cf * mu_f * (state.v[j] - state.v[i])


def discrete_operators(
    state: FlowState,
    env: EnvConfig,
    grid: HexGrid,
    viscosity: bool = False,
    boundary: BoundaryTable | None = None,
):
    """Per-cell mass flux L, momentum flux J, and surface-gradient source S.

    Returns ``(L, J, S)`` with J and S of shape (n, 2).  Sums run over
    in-domain faces plus boundary ghost faces, mirroring the step kernel.
    """
    if boundary is None:
        boundary = resolve_boundaries(grid, env)
    n = grid.n_cells
    ell = grid.face_length
    h, v, z, theta = state.h, state.v, grid.z, env.theta
    L = np.zeros(n)
    J = np.zeros((n, 2))
    S = np.zeros((n, 2))
    for i in range(n):
        if grid.cell_class[i] == 2:
            continue
        th_i = theta[i] * h[i]
        w_i = GRAV * (z[i] + h[i])
        for k in range(6):
            nk = FACE_NORMALS[k]
            j = grid.neighbors[i, k]
            if j >= 0:
                fs = face_states(state, env, grid, i, j)
                flux = ell * fs.theta_h_upwind * fs.v_normal
                L[i] -= flux
                J[i, 0] -= flux * fs.v_face[0]
                J[i, 1] -= flux * fs.v_face[1]
                w_j = GRAV * (z[j] + h[j])
                S[i] -= 0.5 * ell * (w_j - w_i) * fs.theta_h_hat * nk
                if viscosity:
                    J[i] += ell * artificial_viscosity(state, env, grid, i, j)
                continue
            b = boundary.index[i, k]
            if b < 0:
                continue
            kind = boundary.kind[b]
            if kind == BC_WALL:
                continue
            if kind == BC_FREE:
                vn = v[i, 0] * nk[0] + v[i, 1] * nk[1]
                flux = ell * th_i * vn
                L[i] -= flux
                J[i] -= flux * v[i]
            elif kind == BC_DIRICHLET:
                hg = boundary.h0[b]
                vg = np.array([boundary.gvx[b], boundary.gvy[b]])
                th_g = theta[i] * hg
                w_g = GRAV * (z[i] + hg)
                va = 0.5 * (v[i] + vg)
                vn = va[0] * nk[0] + va[1] * nk[1]
                if vn > 0:
                    thup = th_i
                elif vn < 0:
                    thup = th_g
                else:
                    thup = 0.0
                if vn != 0:
                    thhat = thup
                elif w_i > w_g:
                    thhat = th_i
                else:
                    thhat = th_g
                flux = ell * thup * vn
                L[i] -= flux
                J[i] -= flux * va
                S[i] -= 0.5 * ell * (w_g - w_i) * thhat * nk
            else:  # BC_INFLOW
                qf = boundary.qface[b]
                href = max(h[i], boundary.hcrit[b])
                denom = theta[i] * href
                speed = boundary.qwidth[b] / denom if denom > 0 else 0.0
                L[i] += qf
                J[i, 0] += qf * speed * boundary.dirx[b]
                J[i, 1] += qf * speed * boundary.diry[b]
    return L, J, S


@dataclass
class BoundaryFluxes:
    """Signed outward mass flux per boundary face under a given state."""

    cells: np.ndarray
    faces: np.ndarray
    kind: np.ndarray
    mass_flux: np.ndarray

    def total(self) -> float:
        return float(np.sum(self.mass_flux))


def boundary_fluxes(state: FlowState, env: EnvConfig, grid: HexGrid) -> BoundaryFluxes:
    """Evaluate the ghost-face mass fluxes (m^3/s, positive outward)."""
    boundary = resolve_boundaries(grid, env)
    ell = grid.face_length
    h, v, z, theta = state.h, state.v, grid.z, env.theta
    nb = boundary.cells.size
    flux = np.zeros(nb)
    for row in range(nb):
        i = boundary.cells[row]
        k = boundary.faces[row]
        nk = FACE_NORMALS[k]
        kind = boundary.kind[row]
        if kind == BC_WALL:
            continue
        if kind == BC_FREE:
            vn = v[i, 0] * nk[0] + v[i, 1] * nk[1]
            flux[row] = ell * theta[i] * h[i] * vn
        elif kind == BC_DIRICHLET:
            hg = boundary.h0[row]
            vg = np.array([boundary.gvx[row], boundary.gvy[row]])
            va = 0.5 * (v[i] + vg)
            vn = va[0] * nk[0] + va[1] * nk[1]
            if vn > 0:
                thup = theta[i] * h[i]
            elif vn < 0:
                thup = theta[i] * hg
            else:
                thup = 0.0
            flux[row] = ell * thup * vn
        else:  # BC_INFLOW
            flux[row] = -boundary.qface[row]
    return BoundaryFluxes(
        cells=boundary.cells, faces=boundary.faces, kind=boundary.kind, mass_flux=flux
    )
