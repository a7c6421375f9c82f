"""Reference solutions used as oracles by the validation suite.

Three independent references: the damped planar-surface solution on a
paraboloid bowl (closed form), a steady radial-flow ODE integrated to high
accuracy, and a fine-grid pseudo-1D run of the solver itself for channel
Riemann data.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConfigError, UnsupportedRegimeError
from .physics import GRAV


# ---------------------------------------------------------------------------
# Damped planar-surface flow on a paraboloid bowl
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThackerParams:
    """Parameters of the damped non-oscillating bowl solution.

    Bed: ``z = a (x - x0)^2 + b (y - y0)^2``; linear soil resistance
    ``-tau h v``; spatially constant velocity with initial values (u0, v0)
    and initial accelerations (u0p, v0p); ``w0`` is the initial surface
    height above the vertex.
    """

    a: float
    b: float
    x0: float
    y0: float
    tau: float
    u0: float = 0.0
    v0: float = 0.0
    u0p: float = 0.0
    v0p: float = 0.0
    w0: float = 0.0

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ConfigError("paraboloid curvatures a, b must be positive")
        if self.tau < 0:
            raise ConfigError("tau must be nonnegative")

    @property
    def delta_a(self) -> float:
        return self.tau**2 - 8.0 * GRAV * self.a

    @property
    def delta_b(self) -> float:
        return self.tau**2 - 8.0 * GRAV * self.b

    def bed(self, x, y):
        return self.a * (np.asarray(x) - self.x0) ** 2 + self.b * (np.asarray(y) - self.y0) ** 2


def _axis_solution(t, delta, tau, v0, v0p):
    """Velocity, acceleration, and surface offset along one axis.

    The velocity solves ``V'' + tau V' + 2 g curvature V = 0`` whose damped
    branch has real decay rates when ``delta = tau^2 - 8 g curvature > 0``.
    """
    sq = np.sqrt(delta)
    lam1 = 0.5 * (-tau - sq)
    lam2 = 0.5 * (-tau + sq)
    A = (v0 * lam2 - v0p) / sq
    B = -(v0 * lam1 - v0p) / sq
    t = np.asarray(t, dtype=np.float64)
    e1 = np.exp(lam1 * t)
    e2 = np.exp(lam2 * t)
    vel = A * e1 + B * e2
    acc = A * lam1 * e1 + B * lam2 * e2
    w_off = (
        A * A * (lam2 / lam1) * (1.0 - e1 * e1)
        + B * B * (lam1 / lam2) * (1.0 - e2 * e2)
        + 2.0 * A * B * (1.0 - np.exp(-tau * t))
    ) / (2.0 * GRAV)
    return vel, acc, w_off


def thacker_solution(t, x, y, p: ThackerParams):
    """Exact ``(h, u, v)`` of the damped bowl flow at time ``t``.

    Raises UnsupportedRegimeError when either axis would oscillate
    (``delta <= 0``); only the damped regime is supported.
    """
    if p.delta_a <= 0 or p.delta_b <= 0:
        raise UnsupportedRegimeError(
            f"oscillating regime: delta_a = {p.delta_a:.6g}, delta_b = {p.delta_b:.6g} "
            "(both must be positive)"
        )
    u, up, w_off_a = _axis_solution(t, p.delta_a, p.tau, p.u0, p.u0p)
    v, vp, w_off_b = _axis_solution(t, p.delta_b, p.tau, p.v0, p.v0p)
    w_center = p.w0 + w_off_a + w_off_b
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = (
        w_center
        - (x - p.x0) * (p.tau * u + up) / GRAV
        - (y - p.y0) * (p.tau * v + vp) / GRAV
    )
    h = np.maximum(w - p.bed(x, y), 0.0)
    return h, u, v


def thacker_surface(t, x, y, p: ThackerParams):
    """Free water surface z + h (equals the bed where dry)."""
    h, _, _ = thacker_solution(t, x, y, p)
    return p.bed(x, y) + h


# ---------------------------------------------------------------------------
# Steady radial flow oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialFlowSpec:
    """Steady bare-soil flow on a radially symmetric surface.

    ``surface`` provides ``profile(r)`` and ``profile_slope(r)`` plus the
    radii ``r0 < r1``.  Water enters at the higher rim with depth ``h0`` and
    speed ``v0`` and leaves through the other rim.
    """

    surface: object
    h0: float
    v0: float
    alpha_s: float

    def __post_init__(self):
        if self.h0 <= 0 or self.v0 <= 0:
            raise ConfigError("inlet depth and speed must be positive")
        if self.alpha_s < 0:
            raise ConfigError("alpha_s must be nonnegative")

    @property
    def inward(self) -> bool:
        """True when the inlet is the outer rim (crater-type surface)."""
        s = self.surface
        return float(s.profile(s.r1)) > float(s.profile(s.r0))


def radial_steady_oracle(spec: RadialFlowSpec, n_points: int = 400):
    """Integrate the steady radial reduction; returns (r, h, speed).

    Mass conservation gives ``r h v_r = const``; the radial momentum balance
    closes a single ODE for the signed radial velocity, integrated from the
    inlet rim with a high-order adaptive method at 1e-10 tolerance.  The
    integration aborts (with the radius of breakdown) if the flow reaches
    the critical state, where the reduction is singular.
    """
    s = spec.surface
    r_in, r_out = (s.r1, s.r0) if spec.inward else (s.r0, s.r1)
    sign = -1.0 if spec.inward else 1.0  # sign of the radial velocity
    v_in = sign * spec.v0
    q_const = r_in * spec.h0 * v_in  # r * h * v_r, conserved

    def rhs(r, y):
        vr = y[0]
        hloc = q_const / (r * vr)
        zp = float(s.profile_slope(r))
        num = -spec.alpha_s * abs(vr) * vr - GRAV * hloc * zp + GRAV * hloc * hloc / r
        den = (hloc / vr) * (vr * vr - GRAV * hloc)
        return [num / den]

    def critical(r, y):
        vr = y[0]
        hloc = q_const / (r * vr)
        return vr * vr - GRAV * hloc

    critical.terminal = True

    sol = solve_ivp(
        rhs,
        (r_in, r_out),
        [v_in],
        method="DOP853",
        rtol=1e-10,
        atol=1e-12,
        dense_output=True,
        events=critical,
    )
    if not sol.success or sol.status == 1:
        r_stop = sol.t[-1] if sol.t.size else r_in
        raise UnsupportedRegimeError(
            f"radial steady integration broke down at r = {r_stop:.4f} "
            "(critical transition; an internal jump is outside this oracle's regime)"
        )
    r = np.linspace(r_in, r_out, n_points)
    vr = sol.sol(r)[0]
    h = q_const / (r * vr)
    return (r[::-1], h[::-1], np.abs(vr)[::-1]) if spec.inward else (r, h, np.abs(vr))


# ---------------------------------------------------------------------------
# Pseudo-1D Riemann reference
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChannelRiemannSpec:
    """Piecewise-constant channel data with a simultaneous porosity/bed jump."""

    length: float = 18.0
    width: float = 1.0
    x_jump: float = 9.0
    theta_l: float = 0.8
    z_l: float = 1.0
    h_l: float = 0.2
    u_l: float = 5.0
    theta_r: float = 1.0
    z_r: float = 1.2
    h_r: float = 0.6
    u_r: float = 1.33

    def content_key(self, t: float, radius: float) -> str:
        payload = repr((self.length, self.width, self.x_jump,
                        self.theta_l, self.z_l, self.h_l, self.u_l,
                        self.theta_r, self.z_r, self.h_r, self.u_r,
                        t, radius)).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


def riemann_reference(spec: ChannelRiemannSpec, t: float, radius: float, cache_dir=None):
    """Longitudinal (x, h, u) profile from a fine pseudo-1D run at time t.

    Runs this package's own solver on a narrow transverse-periodic channel
    with artificial viscosity enabled; results are cached by content hash.
    ``radius`` should be at least 8x finer than the resolution under test.
    """
    import os

    key = spec.content_key(t, radius)
    cache_file = None
    if cache_dir is not None:
        os.makedirs(cache_dir, exist_ok=True)
        cache_file = os.path.join(cache_dir, f"riemann_ref_{key}.csv")
        if os.path.exists(cache_file):
            data = np.loadtxt(cache_file, delimiter=",", comments="#")
            return data[:, 0], data[:, 1], data[:, 2]
    from .channel import run_channel_riemann

    x, h, u = run_channel_riemann(spec, t, radius)
    if cache_file is not None:
        with open(cache_file, "w") as fh:
            fh.write(f"# riemann pseudo-1d reference, key={key}\n")
            fh.write(f"# radius={radius!r} t={t!r}\n")
            fh.write("# x,h,u\n")
            for row in zip(x, h, u):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
    return x, h, u
