"""Channel experiment helpers: transverse-periodic hexagonal channels, their
longitudinal profiles, steady flume runs, and the pseudo-1D Riemann runner.

No hexagonal face normal aligns with a straight wall along x, so wall rows
on a finite channel carry reduced flux stencils and break exact transverse
invariance; the channels built here instead wrap the rows periodically,
which keeps y-uniform data exactly y-uniform.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError
from .grid import SQRT3, HexGrid, InclinedChannel, PiecewiseChannel, generate_analytic
from .physics import (
    BoundarySpec,
    EnvConfig,
    FlowState,
    FrictionLaw,
    GRAV,
    friction_K,
)
from .solver import resolve_boundaries
from .simulate import run_to, run_to_steady


def build_channel_grid(length: float, width: float, radius: float) -> HexGrid:
    """Flat-bedded transverse-periodic channel; set z afterwards as needed."""
    surf = InclinedChannel(length=length, width=width, slope=0.0)
    return generate_analytic(surf, radius=radius, wrap_y=True)


def piecewise_theta(grid: HexGrid, breaks, values) -> np.ndarray:
    """Porosity field piecewise constant in x over the grid."""
    breaks = np.asarray(breaks, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if values.size != breaks.size + 1:
        raise ConfigError("need one porosity value per segment (len(breaks) + 1)")
    seg = np.searchsorted(breaks, grid.centers[:, 0], side="right")
    return values[seg]


def channel_profile(grid: HexGrid, state: FlowState):
    """Longitudinal (x, h, u) profile averaged over each x-column.

    Offset rows sample x at half-column spacing, so the profile resolution
    is sqrt(3)*R/2.
    """
    mask = grid.in_domain
    x = grid.centers[mask, 0]
    h = state.h[mask]
    u = state.v[mask, 0]
    key = np.round((x - x.min()) / (SQRT3 * grid.radius / 2.0)).astype(np.int64)
    order = np.argsort(key, kind="stable")
    key_s = key[order]
    uniq, start = np.unique(key_s, return_index=True)
    x_out = np.array([g.mean() for g in np.split(x[order], start[1:])])
    h_out = np.array([g.mean() for g in np.split(h[order], start[1:])])
    u_out = np.array([g.mean() for g in np.split(u[order], start[1:])])
    return x_out, h_out, u_out


def uniform_flow_depth(q: float, theta: float, slope: float, alpha_s: float, alpha_p: float) -> float:
    """Independent scalar oracle for the steady uniform-flow depth.

    Solves ``theta h g m = K(h, theta) (q / (theta h))^2`` by bracketed
    root finding on h.
    """
    if q <= 0 or slope <= 0:
        raise ConfigError("uniform flow depth needs q > 0 and slope > 0")

    def balance(h):
        v = q / (theta * h)
        return theta * h * GRAV * slope - friction_K(h, theta, alpha_s, alpha_p) * v * v

    lo, hi = 1e-6, 10.0
    while balance(hi) < 0:
        hi *= 4.0
        if hi > 1e5:
            raise ConfigError("uniform flow depth bracket failed")
    return brentq(balance, lo, hi, xtol=1e-14, rtol=1e-14)


def gvf_depth_profile(x_cells, q, theta_cells, length, slope, alpha_s, alpha_p):
    """Gradually-varied-flow depth estimate per cell (warm start only).

    For subcritical flow the control is the downstream free overfall, so the
    backwater ODE ``dh/dx = (theta g h m - K q^2/(theta h)^2 / h ...)`` is
    integrated upstream from near-critical outlet depth.  Falls back to the
    per-reach uniform depth when any reach runs near or above critical.
    """
    theta_cells = np.asarray(theta_cells, dtype=np.float64)
    uniq = np.unique(theta_cells)
    h_uni = {float(th): uniform_flow_depth(q, float(th), max(slope, 1e-8), alpha_s, alpha_p)
             for th in uniq}
    for th, h_n in h_uni.items():
        v_n = q / (th * h_n)
        if v_n >= 0.95 * np.sqrt(GRAV * h_n):
            return np.array([h_uni[float(t)] for t in theta_cells])
    order = np.argsort(x_cells)[::-1]  # downstream to upstream
    xs = x_cells[order]
    ths = theta_cells[order]
    th_out = ths[0]
    h_crit = (q**2 / (th_out**2 * GRAV)) ** (1.0 / 3.0)
    h = max(1.05 * h_crit, 0.5 * h_uni[float(th_out)])
    out = np.empty(xs.size)

    def dhdx(hh, th):
        v = q / (th * hh)
        num = th * GRAV * hh * slope - friction_K(hh, th, alpha_s, alpha_p) * v * v
        den = th * GRAV * hh - q * q / (th * hh * hh)
        if den <= 0.1 * th * GRAV * hh:
            den = 0.1 * th * GRAV * hh
        return -num / den  # integrating upstream (decreasing x)

    prev_x = length
    for idx in range(xs.size):
        dx = prev_x - xs[idx]
        nsub = max(1, int(abs(dx) / 0.05) + 1)
        sub = dx / nsub
        for _ in range(nsub):
            k1 = dhdx(h, ths[idx])
            k2 = dhdx(max(h + 0.5 * sub * k1, 1e-6), ths[idx])
            h = max(h + sub * k2, 1e-6)
        out[idx] = h
        prev_x = xs[idx]
    result = np.empty(xs.size)
    result[order] = out
    return result


def build_flume(
    length: float,
    width: float,
    radius: float,
    slope: float,
    theta_breaks,
    theta_values,
    q: float,
    alpha_s: float,
    alpha_p: float,
):
    """Inclined vegetated flume with prescribed inflow at x = 0 and free
    discharge at the downstream end, warm-started from the gradually-varied
    backwater estimate so the solver only has to relax the discretization
    difference."""
    surf = InclinedChannel(length=length, width=width, slope=slope)
    grid = generate_analytic(surf, radius=radius, wrap_y=True)
    theta = piecewise_theta(grid, theta_breaks, theta_values)
    env = EnvConfig(
        theta=theta,
        alpha_s=alpha_s,
        alpha_p=alpha_p,
        friction=FrictionLaw.combined(),
        boundaries=(
            BoundarySpec(kind="inflow", selector=f"x<{radius}", q=q, direction=(1.0, 0.0)),
        ),
    )
    mask = grid.in_domain
    h = np.empty(grid.n_cells)
    h[mask] = gvf_depth_profile(
        grid.centers[mask, 0], q, theta[mask], length, slope, alpha_s, alpha_p
    )
    h[~mask] = 0.0
    v = np.zeros((grid.n_cells, 2))
    v[mask, 0] = q / (theta[mask] * h[mask])
    state = FlowState(t=0.0, h=h, v=v)
    return grid, env, state


def steady_flume_profile(
    length: float,
    width: float,
    radius: float,
    slope: float,
    theta_breaks,
    theta_values,
    q: float,
    alpha_s: float,
    alpha_p: float,
    cfl: float = 0.4,
    tol: float = 1e-6,
    window: float = 10.0,
    t_max: float = 4000.0,
):
    """Run a flume to steady state; returns (x, h, u, converged)."""
    grid, env, state = build_flume(
        length, width, radius, slope, theta_breaks, theta_values, q, alpha_s, alpha_p
    )
    state, converged = run_to_steady(
        state, env, grid, cfl=cfl, tol=tol, window=window, t_max=t_max
    )
    x, h, u = channel_profile(grid, state)
    return x, h, u, converged


def build_riemann_channel_state(spec, radius: float, width: float | None = None):
    """Grid, environment, and piecewise-constant initial state for channel
    Riemann data.  ``width=None`` builds a narrow pseudo-1D strip."""
    if width is None:
        width = max(3.5 * radius, min(spec.width, 8.0 * radius))
    surf = PiecewiseChannel(
        length=spec.length,
        width=width,
        breaks=(spec.x_jump,),
        z_values=(spec.z_l, spec.z_r),
    )
    grid = generate_analytic(surf, radius=radius, wrap_y=True)
    theta = piecewise_theta(grid, (spec.x_jump,), (spec.theta_l, spec.theta_r))
    env = EnvConfig(theta=theta, friction=FrictionLaw.combined())
    left = grid.centers[:, 0] <= spec.x_jump
    h = np.where(left, spec.h_l, spec.h_r)
    u = np.where(left, spec.u_l, spec.u_r)
    state = FlowState(t=0.0, h=h, v=np.column_stack([u, np.zeros(grid.n_cells)]))
    return grid, env, state


def run_channel_riemann(spec, t: float, radius: float, width: float | None = None):
    """Advance channel Riemann data to time ``t`` with artificial viscosity
    on; returns the longitudinal (x, h, u) profile."""
    grid, env, state = build_riemann_channel_state(spec, radius, width)
    state, _ = run_to(state, env, grid, t, cfl=0.45, viscosity=True)
    return channel_profile(grid, state)
