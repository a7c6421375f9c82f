"""Numba kernels for the two-stage step.

``step_kernel`` updates all cells in parallel gather form: every cell
recomputes its six face contributions from the frozen previous state and
writes only its own output slots, so results are bitwise identical for any
thread count (fastmath stays off for the same reason).  ``run_chunk`` is a
serial multi-step driver that removes per-step Python overhead on small
grids; both share the same inlined per-cell update.
"""

import math

import numba as nb
import numpy as np

GRAV = 9.81
SQRT3 = math.sqrt(3.0)

# outward face normal components, exact negations across opposite faces
FACE_NX = np.array([1.0, 0.5, -0.5, -1.0, -0.5, 0.5])
FACE_NY = np.array([0.0, 0.5 * SQRT3, 0.5 * SQRT3, 0.0, -0.5 * SQRT3, -0.5 * SQRT3])

# boundary kind codes (must match physics.BC_*)
_BC_FREE = 1
_BC_WALL = 2
_BC_DIRICHLET = 3
_BC_INFLOW = 4

OUTSIDE_CLASS = 2

# stencil cells at least this fraction of the local max depth count as
# carriers of physical velocity for the thin-film speed cap
_SUBSTANTIAL = 0.1


@nb.njit(inline="always")
def _cell_update(
    i, h, vx, vy, z, theta, cls, neighbors,
    bindex, bkind, bh0, bgvx, bgvy, bqface, bqwidth, bdirx, bdiry, bhcrit,
    nxs, nys,
    radius, dt, alpha_s, alpha_p, fric_kind, fric_tau,
    rain_depth, visc_on, h_dry,
):
    ell = radius
    sigma = 1.5 * SQRT3 * radius * radius
    hi = h[i]
    vxi = vx[i]
    vyi = vy[i]
    ti = theta[i]
    thi = ti * hi
    wi = GRAV * (z[i] + hi)
    ci = math.sqrt(vxi * vxi + vyi * vyi) + math.sqrt(GRAV * hi)
    # local speed limit for the thin-film guard: twice the fastest celerity
    # among stencil cells of substantial depth
    hmax_st = hi
    for k in range(6):
        j = neighbors[i, k]
        if j >= 0:
            if h[j] > hmax_st:
                hmax_st = h[j]
        else:
            b = bindex[i, k]
            if b >= 0 and bkind[b] == _BC_DIRICHLET and bh0[b] > hmax_st:
                hmax_st = bh0[b]
    c_sub = 0.0
    if hi >= _SUBSTANTIAL * hmax_st:
        c_sub = ci
    for k in range(6):
        j = neighbors[i, k]
        if j >= 0:
            if h[j] >= _SUBSTANTIAL * hmax_st:
                cj = math.sqrt(vx[j] * vx[j] + vy[j] * vy[j]) + math.sqrt(GRAV * h[j])
                if cj > c_sub:
                    c_sub = cj
        else:
            b = bindex[i, k]
            if b >= 0 and bkind[b] == _BC_DIRICHLET and bh0[b] >= _SUBSTANTIAL * hmax_st:
                cj = math.sqrt(bgvx[b] * bgvx[b] + bgvy[b] * bgvy[b]) + math.sqrt(
                    GRAV * bh0[b]
                )
                if cj > c_sub:
                    c_sub = cj
    vlim = 2.0 * c_sub
    acc_l = 0.0
    acc_j1 = 0.0
    acc_j2 = 0.0
    acc_s1 = 0.0
    acc_s2 = 0.0
    out_rate = 0.0
    in_rate = 0.0
    for k in range(6):
        j = neighbors[i, k]
        nkx = nxs[k]
        nky = nys[k]
        if j >= 0:
            hj = h[j]
            vxj = vx[j]
            vyj = vy[j]
            thj = theta[j] * hj
            wj = GRAV * (z[j] + hj)
            vax = 0.5 * (vxi + vxj)
            vay = 0.5 * (vyi + vyj)
            vn = vax * nkx + vay * nky
            if vn > 0.0:
                thup = thi
            elif vn < 0.0:
                thup = thj
            else:
                thup = 0.0
            if vn != 0.0:
                thhat = thup
            elif wi > wj:
                thhat = thi
            else:
                thhat = thj
            flux = ell * thup * vn
            acc_l -= flux
            acc_j1 -= flux * vax
            acc_j2 -= flux * vay
            dw = wj - wi
            acc_s1 -= 0.5 * ell * dw * thhat * nkx
            acc_s2 -= 0.5 * ell * dw * thhat * nky
            if visc_on == 1:
                ssum = thi + thj
                if ssum > 0.0:
                    cj = math.sqrt(vxj * vxj + vyj * vyj) + math.sqrt(GRAV * hj)
                    cf = ci if ci > cj else cj
                    mu_f = 2.0 * thi * thj / ssum
                    acc_j1 += ell * cf * mu_f * (vxj - vxi)
                    acc_j2 += ell * cf * mu_f * (vyj - vyi)
        else:
            b = bindex[i, k]
            if b < 0:
                continue
            kind = bkind[b]
            if kind == _BC_WALL:
                continue
            if kind == _BC_FREE:
                vn = vxi * nkx + vyi * nky
                flux = ell * thi * vn
                acc_l -= flux
                acc_j1 -= flux * vxi
                acc_j2 -= flux * vyi
                out_rate += flux
            elif kind == _BC_DIRICHLET:
                hj = bh0[b]
                vxj = bgvx[b]
                vyj = bgvy[b]
                thj = ti * hj
                wj = GRAV * (z[i] + hj)
                vax = 0.5 * (vxi + vxj)
                vay = 0.5 * (vyi + vyj)
                vn = vax * nkx + vay * nky
                if vn > 0.0:
                    thup = thi
                elif vn < 0.0:
                    thup = thj
                else:
                    thup = 0.0
                if vn != 0.0:
                    thhat = thup
                elif wi > wj:
                    thhat = thi
                else:
                    thhat = thj
                flux = ell * thup * vn
                acc_l -= flux
                acc_j1 -= flux * vax
                acc_j2 -= flux * vay
                dw = wj - wi
                acc_s1 -= 0.5 * ell * dw * thhat * nkx
                acc_s2 -= 0.5 * ell * dw * thhat * nky
                out_rate += flux
            else:  # _BC_INFLOW: forced mass flux, surface gradient suppressed
                qf = bqface[b]
                href = hi if hi > bhcrit[b] else bhcrit[b]
                denom = ti * href
                speed = bqwidth[b] / denom if denom > 0.0 else 0.0
                acc_l += qf
                acc_j1 += qf * speed * bdirx[b]
                acc_j2 += qf * speed * bdiry[b]
                in_rate += qf
    # stage 1 + h-independent source, in increment form so that a zero net
    # flux is an exact no-op (keeps discrete equilibria bitwise)
    deficit = 0.0
    dth = (dt * acc_l) / sigma + rain_depth
    th_new = thi + dth
    if th_new < 0.0:
        deficit = -th_new * sigma
        th_new = 0.0
        h_new = 0.0
    elif ti > 0.0:
        h_new = hi + (th_new - thi) / ti
        if h_new < 0.0:
            h_new = 0.0
    else:
        h_new = 0.0
    # stage 2: implicit friction on the starred momentum
    g1 = thi * vxi + (dt * (acc_j1 + acc_s1)) / sigma
    g2 = thi * vyi + (dt * (acc_j2 + acc_s2)) / sigma
    alpha = th_new
    if fric_kind == 0:
        kcoef = alpha_p * h_new * (1.0 - ti) + ti * alpha_s
        beta = dt * kcoef
        gnorm = math.sqrt(g1 * g1 + g2 * g2)
        denom = alpha + math.sqrt(alpha * alpha + 4.0 * beta * gnorm)
        if denom > 0.0:
            mu = 2.0 / denom
            vx_new = mu * g1
            vy_new = mu * g2
        else:
            vx_new = 0.0
            vy_new = 0.0
    else:
        denom = alpha * (1.0 + dt * fric_tau)
        if denom > 0.0:
            vx_new = g1 / denom
            vy_new = g2 / denom
        else:
            vx_new = 0.0
            vy_new = 0.0
    if h_new < h_dry:
        vx_new = 0.0
        vy_new = 0.0
    else:
        # Thin-film guard: cells much shallower than their surroundings
        # otherwise pick up unphysical speeds (the pressure force scales
        # with the deep side's mass, the response with the thin cell's),
        # collapsing the global CFL step.  Physical fronts stay below twice
        # the local substantial-cell celerity.
        vmag = math.sqrt(vx_new * vx_new + vy_new * vy_new)
        if vmag > vlim:
            scale = vlim / vmag
            vx_new *= scale
            vy_new *= scale
    return h_new, vx_new, vy_new, deficit, out_rate, in_rate


@nb.njit(parallel=True, cache=True)
def step_kernel(
    h, vx, vy, z, theta, cls, neighbors,
    bindex, bkind, bh0, bgvx, bgvy, bqface, bqwidth, bdirx, bdiry, bhcrit,
    nxs, nys,
    radius, dt, alpha_s, alpha_p, fric_kind, fric_tau,
    rain_depth, visc_on, h_dry,
    out_h, out_vx, out_vy, out_deficit, out_rate, in_rate,
):
    n = h.shape[0]
    for i in nb.prange(n):
        if cls[i] == OUTSIDE_CLASS:
            out_h[i] = 0.0
            out_vx[i] = 0.0
            out_vy[i] = 0.0
            out_deficit[i] = 0.0
            out_rate[i] = 0.0
            in_rate[i] = 0.0
            continue
        hn, vxn, vyn, dfc, orate, irate = _cell_update(
            i, h, vx, vy, z, theta, cls, neighbors,
            bindex, bkind, bh0, bgvx, bgvy, bqface, bqwidth, bdirx, bdiry, bhcrit,
            nxs, nys,
            radius, dt, alpha_s, alpha_p, fric_kind, fric_tau,
            rain_depth, visc_on, h_dry,
        )
        out_h[i] = hn
        out_vx[i] = vxn
        out_vy[i] = vyn
        out_deficit[i] = dfc
        out_rate[i] = orate
        in_rate[i] = irate


@nb.njit(cache=True)
def run_chunk(
    h, vx, vy, z, theta, cls, neighbors,
    bindex, bkind, bh0, bgvx, bgvy, bqface, bqwidth, bdirx, bdiry, bhcrit,
    nxs, nys,
    radius, alpha_s, alpha_p, fric_kind, fric_tau,
    visc_on, h_dry,
    t0, t_end, cfl, dt_max, max_steps,
):
    """Serial source-free time marching from t0 to exactly t_end.

    Mutates h, vx, vy in place and returns (t_reached, steps).  Used for
    small grids where per-step driver overhead would dominate.
    """
    n = h.shape[0]
    hb = np.empty(n)
    vxb = np.empty(n)
    vyb = np.empty(n)
    phi = SQRT3 * radius / 4.0
    t = t0
    steps = 0
    while t < t_end and steps < max_steps:
        cmax = 0.0
        for i in range(n):
            if cls[i] == OUTSIDE_CLASS:
                continue
            c = math.sqrt(vx[i] * vx[i] + vy[i] * vy[i]) + math.sqrt(GRAV * h[i])
            if c > cmax:
                cmax = c
        if cmax <= 0.0:
            dt = dt_max
        else:
            dt = cfl * phi / cmax * (1.0 - 1e-6)
            if dt > dt_max:
                dt = dt_max
        last = False
        if t + dt >= t_end:
            dt = t_end - t
            last = True
        for i in range(n):
            if cls[i] == OUTSIDE_CLASS:
                hb[i] = 0.0
                vxb[i] = 0.0
                vyb[i] = 0.0
                continue
            hn, vxn, vyn, _, _, _ = _cell_update(
                i, h, vx, vy, z, theta, cls, neighbors,
                bindex, bkind, bh0, bgvx, bgvy, bqface, bqwidth, bdirx, bdiry, bhcrit,
                nxs, nys,
                radius, dt, alpha_s, alpha_p, fric_kind, fric_tau,
                0.0, visc_on, h_dry,
            )
            hb[i] = hn
            vxb[i] = vxn
            vyb[i] = vyn
        for i in range(n):
            h[i] = hb[i]
            vx[i] = vxb[i]
            vy[i] = vyb[i]
        steps += 1
        t = t_end if last else t + dt
    return t, steps
