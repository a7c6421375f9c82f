"""Continuous-model coefficients, source terms, and environment description.

The momentum sink is ``-K(h, theta) |v| v`` with
``K = alpha_p * h * (1 - theta) + theta * alpha_s``: a Darcy-Weisbach soil
term plus a depth-proportional plant-resistance term weighted by the stem
cover ``1 - theta``.  An alternative linear law ``-tau * h * v`` is kept for
the damped parabolic-bowl benchmark.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

GRAV = 9.81  # m/s^2

# Depth below which a cell counts as dry and its velocity is zeroed.
H_DRY = 1e-8  # m


def friction_K(h, theta, alpha_s, alpha_p):
    """Combined water-soil-plant friction coefficient."""
    return alpha_p * h * (1.0 - theta) + theta * alpha_s


def free_surface_w(h, z):
    """Gravitational potential g*(z + h) of the free water surface."""
    return GRAV * (np.asarray(z) + np.asarray(h))


# ---------------------------------------------------------------------------
# Rainfall
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Hyetograph:
    """Triangular rainfall model: intensity ramps to ``i_a`` at ``t_a`` and
    falls back to zero at ``t_total``.  All values SI (m, s)."""

    t_total: float  # duration of the rain [s]
    i_a: float      # peak intensity [m/s]
    t_a: float      # time of the peak [s]

    def __post_init__(self):
        if not 0 < self.t_a < self.t_total:
            raise ConfigError("hyetograph requires 0 < t_a < t_total")
        if self.i_a < 0:
            raise ConfigError("rain intensity must be nonnegative")

    @property
    def advance_coefficient(self) -> float:
        return self.t_a / self.t_total

    @classmethod
    def from_mm(cls, t_total: float, i_a_mm_per_s: float, t_a: float) -> "Hyetograph":
        return cls(t_total=t_total, i_a=i_a_mm_per_s / 1000.0, t_a=t_a)


def rain_rate(t, hy: Hyetograph):
    """Instantaneous rain intensity [m/s] of the triangular hyetograph."""
    t = np.asarray(t, dtype=np.float64)
    gamma = hy.advance_coefficient
    rising = hy.i_a * t / hy.t_a
    falling = hy.i_a * (1.0 - t / hy.t_total) / (1.0 - gamma)
    out = np.where(t <= hy.t_a, rising, falling)
    out = np.where((t < 0) | (t > hy.t_total), 0.0, out)
    return out if out.ndim else float(out)


def _rain_cumulative(t: float, hy: Hyetograph) -> float:
    """Closed-form integral of the rain rate over [0, t]."""
    if t <= 0:
        return 0.0
    if t >= hy.t_total:
        return 0.5 * hy.i_a * hy.t_total
    if t <= hy.t_a:
        return 0.5 * hy.i_a * t * t / hy.t_a
    gamma = hy.advance_coefficient
    tri_total = 0.5 * hy.i_a * hy.t_total
    # remaining area of the descending branch from t to t_total
    tail = 0.5 * hy.i_a * (1.0 - t / hy.t_total) / (1.0 - gamma) * (hy.t_total - t)
    return tri_total - tail


def rain_volume(t1: float, t2: float, hy: Hyetograph) -> float:
    """Exact rain depth [m] delivered over [t1, t2]."""
    if t2 < t1:
        raise ConfigError("rain_volume requires t1 <= t2")
    return _rain_cumulative(t2, hy) - _rain_cumulative(t1, hy)


# ---------------------------------------------------------------------------
# Friction law selection
# ---------------------------------------------------------------------------

FRICTION_COMBINED = 0
FRICTION_LINEAR = 1


@dataclass(frozen=True)
class FrictionLaw:
    """Momentum-sink law used by the implicit friction stage.

    ``combined``: quadratic law with coefficient ``friction_K``.
    ``linear``: ``-tau * h * v``, the benchmark law of the damped
    parabolic-bowl solution.
    """

    kind: int = FRICTION_COMBINED
    tau: float = 0.0

    def __post_init__(self):
        if self.tau < 0:
            raise ConfigError("linear friction coefficient tau must be >= 0")

    @classmethod
    def combined(cls) -> "FrictionLaw":
        return cls(kind=FRICTION_COMBINED)

    @classmethod
    def linear(cls, tau: float) -> "FrictionLaw":
        return cls(kind=FRICTION_LINEAR, tau=tau)


# ---------------------------------------------------------------------------
# Boundary conditions
# ---------------------------------------------------------------------------

BC_FREE = 1
BC_WALL = 2
BC_DIRICHLET = 3
BC_INFLOW = 4

_BC_NAMES = {
    "free_discharge": BC_FREE,
    "wall": BC_WALL,
    "dirichlet": BC_DIRICHLET,
    "inflow": BC_INFLOW,
}


@dataclass(frozen=True)
class BoundarySpec:
    """One boundary condition applied to the faces matched by ``selector``.

    selector: ``"all"`` or ``"<axis><cmp><value>"`` with axis in {x, y, r}
    and cmp in {<, >}, evaluated at boundary-face midpoints (r is measured
    from ``r_center``).  Later specs override earlier ones where they match.

    kind-specific parameters:
      dirichlet: ghost depth ``h0`` and inflow speed ``v0`` directed along
        the inward face normal (or an explicit ``velocity`` vector);
      inflow: discharge per unit width ``q`` [m^2/s] entering along
        ``direction`` (unit vector, e.g. (1, 0) for +x).
    """

    kind: str
    selector: str = "all"
    h0: float = 0.0
    v0: float = 0.0
    velocity: tuple | None = None
    q: float = 0.0
    direction: tuple = (1.0, 0.0)
    r_center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.kind not in _BC_NAMES:
            raise ConfigError(
                f"unknown boundary kind {self.kind!r}; "
                f"valid kinds: {', '.join(_BC_NAMES)}"
            )
        if self.kind == "dirichlet" and self.h0 < 0:
            raise ConfigError("dirichlet depth h0 must be >= 0")
        if self.kind == "inflow" and self.q < 0:
            raise ConfigError("inflow discharge q must be >= 0")

    @property
    def code(self) -> int:
        return _BC_NAMES[self.kind]

    def matches(self, mid: np.ndarray) -> np.ndarray:
        """Boolean mask over face midpoints (n, 2) matched by the selector."""
        sel = self.selector.strip().lower()
        if sel == "all":
            return np.ones(mid.shape[0], dtype=bool)
        axis, op, value = _parse_selector(sel)
        if axis == "x":
            coord = mid[:, 0]
        elif axis == "y":
            coord = mid[:, 1]
        else:
            coord = np.hypot(mid[:, 0] - self.r_center[0], mid[:, 1] - self.r_center[1])
        return coord < value if op == "<" else coord > value


def _parse_selector(sel: str):
    for op in ("<", ">"):
        if op in sel:
            axis, _, rhs = sel.partition(op)
            axis = axis.strip()
            if axis not in ("x", "y", "r"):
                raise ConfigError(f"unresolved face selector {sel!r}: unknown axis {axis!r}")
            try:
                return axis, op, float(rhs)
            except ValueError:
                raise ConfigError(f"unresolved face selector {sel!r}: bad value {rhs!r}") from None
    raise ConfigError(f"unresolved face selector {sel!r}")


# ---------------------------------------------------------------------------
# Environment and flow state
# ---------------------------------------------------------------------------


@dataclass
class EnvConfig:
    """Per-cell porosity, friction parameters, water source, and boundaries."""

    theta: np.ndarray
    alpha_s: float = 0.0
    alpha_p: float = 0.0
    friction: FrictionLaw = field(default_factory=FrictionLaw.combined)
    source: Hyetograph | None = None
    boundaries: tuple = ()
    h_dry: float = H_DRY

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.theta.min() < 0 or self.theta.max() > 1:
            raise ConfigError("porosity must lie in [0, 1]")
        if self.alpha_s < 0 or self.alpha_p < 0:
            raise ConfigError("friction coefficients must be >= 0")

    @classmethod
    def uniform(cls, n_cells: int, theta: float = 1.0, **kw) -> "EnvConfig":
        return cls(theta=np.full(n_cells, float(theta)), **kw)


@dataclass
class FlowState:
    """Water depth and velocity on every cell at time ``t``."""

    t: float
    h: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        if self.v.shape != (self.h.size, 2):
            raise ConfigError("velocity array must have shape (n_cells, 2)")

    @classmethod
    def dry(cls, n_cells: int) -> "FlowState":
        return cls(t=0.0, h=np.zeros(n_cells), v=np.zeros((n_cells, 2)))

    def copy(self) -> "FlowState":
        return FlowState(t=self.t, h=self.h.copy(), v=self.v.copy())
