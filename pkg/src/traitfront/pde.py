"""Time integration of the nonlocal reaction-diffusion system.

After dividing the epsilon-scaled equations by epsilon the update solved
here is

    dn/dt = eps*theta * d2n/dx2 + (alpha/eps) * d2n/dtheta2
            + (r/eps) * n * (1 - rho),      rho(x) = integral of n dtheta,

with zero-flux closure on both trait edges and on the (truncated) space
edges.  eps = 1 recovers the unscaled system.  Two steppers are provided:
fully explicit, and an IMEX variant that treats the stiff trait diffusion
with a Crank-Nicolson tridiagonal solve per step so that epsilon sweeps
stay affordable.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.linalg import solve_banded

from .domain import (
    Field,
    InitialDataSpec,
    ModelParams,
    SpaceGrid,
    ThetaGrid,
    build_initial_field,
)
from .errors import IntegrationError


class Scheme(enum.Enum):
    EXPLICIT = "explicit"
    IMEX = "imex"


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    space_grid: SpaceGrid
    theta_grid: ThetaGrid
    initial: InitialDataSpec
    epsilon: float = 1.0
    horizon: float = 10.0
    cfl_factor: float = 0.4
    scheme: Scheme = Scheme.IMEX
    snapshot_stride: int = 200
    front_level: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 1.0):
            raise ValueError(f"epsilon must be in (0, 1], got {self.epsilon}")
        if not (0.0 < self.cfl_factor < 1.0):
            raise ValueError(f"cfl_factor must be in (0, 1), got {self.cfl_factor}")
        if self.horizon < 0.0:
            raise ValueError("horizon must be nonnegative")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")
        if self.front_level <= 0.0:
            raise ValueError("front_level must be positive")


@dataclass
class StepDiagnostics:
    """Mutable per-run accumulator filled by `step`."""

    clipped_mass: float = 0.0


@dataclass
class Trajectory:
    snapshots: list[Field]
    front_track: list[tuple[float, float]]
    sup_track: list[tuple[float, float]]
    dt: float
    steps: int
    clipped_mass: float
    aborted: bool = False
    abort_reason: str = ""


def stable_dt(cfg: SimConfig) -> float:
    """Largest admissible step scaled by the CFL factor.

    Explicit: min over the x-diffusion, theta-diffusion, and reaction
    constraints.  IMEX drops the theta constraint (handled implicitly).
    """
    p, eps = cfg.params, cfg.epsilon
    dx2 = cfg.space_grid.spacing ** 2
    dth2 = cfg.theta_grid.spacing ** 2
    limits = [dx2 / (2.0 * eps * p.theta_max), eps / p.r]
    if cfg.scheme is Scheme.EXPLICIT:
        limits.append(dth2 * eps / (2.0 * p.alpha))
    return cfg.cfl_factor * min(limits)


def compute_rho(field: Field) -> np.ndarray:
    """Trait-integrated density per space node (trapezoid quadrature)."""
    return np.trapezoid(field.values, dx=field.theta_grid.spacing, axis=1)


def _neumann_lap_x(v: np.ndarray, dx2: float) -> np.ndarray:
    lap = np.empty_like(v)
    lap[1:-1] = v[:-2] - 2.0 * v[1:-1] + v[2:]
    lap[0] = 2.0 * v[1] - 2.0 * v[0]
    lap[-1] = 2.0 * v[-2] - 2.0 * v[-1]
    return lap / dx2


def _neumann_lap_theta(v: np.ndarray, dth2: float) -> np.ndarray:
    lap = np.empty_like(v)
    lap[:, 1:-1] = v[:, :-2] - 2.0 * v[:, 1:-1] + v[:, 2:]
    lap[:, 0] = 2.0 * v[:, 1] - 2.0 * v[:, 0]
    lap[:, -1] = 2.0 * v[:, -2] - 2.0 * v[:, -1]
    return lap / dth2


def _cn_bands(kappa: float, n_theta: int) -> np.ndarray:
    """Banded form of I - kappa*T where T is the reflected second difference."""
    ab = np.zeros((3, n_theta))
    ab[1, :] = 1.0 + 2.0 * kappa
    ab[0, 1:] = -kappa
    ab[0, 1] = -2.0 * kappa
    ab[2, :-1] = -kappa
    ab[2, -2] = -2.0 * kappa
    return ab


def step(
    field: Field, dt: float, cfg: SimConfig, diag: StepDiagnostics | None = None
) -> Field:
    """Advance one time step; rho is frozen over the step.

    Negative values produced by reaction overshoot are clipped to zero;
    the clipped mass (integral in x and theta) is accumulated in `diag`.
    """
    p, eps = cfg.params, cfg.epsilon
    v = field.values
    dx2 = cfg.space_grid.spacing ** 2
    dth2 = cfg.theta_grid.spacing ** 2
    theta_row = cfg.theta_grid.nodes[None, :]

    rho = compute_rho(field)
    explicit = eps * theta_row * _neumann_lap_x(v, dx2) + (p.r / eps) * v * (
        1.0 - rho[:, None]
    )

    if cfg.scheme is Scheme.EXPLICIT:
        new = v + dt * (explicit + (p.alpha / eps) * _neumann_lap_theta(v, dth2))
    else:
        # Crank-Nicolson in theta: (I - k T) n_new = n + dt*explicit + k T n
        # with k = dt*alpha/(2*eps*dtheta^2); one banded solve, all space
        # nodes as right-hand sides.
        kappa = dt * p.alpha / (2.0 * eps * dth2)
        rhs = v + dt * explicit + (0.5 * dt * p.alpha / eps) * _neumann_lap_theta(
            v, dth2
        )
        ab = _cn_bands(kappa, cfg.theta_grid.node_count)
        new = solve_banded((1, 1), ab, rhs.T, check_finite=False).T

    t_new = field.time + dt
    if not np.isfinite(new).all():
        raise IntegrationError(f"non-finite field value at t={t_new}", time=t_new)

    negative = new < 0.0
    if negative.any():
        lost = -float(new[negative].sum()) * cfg.space_grid.spacing * cfg.theta_grid.spacing
        if diag is not None:
            diag.clipped_mass += lost
        new = np.where(negative, 0.0, new)

    return Field(new, t_new, cfg.space_grid, cfg.theta_grid)


def front_position(
    field: Field, level: float, rho: np.ndarray | None = None
) -> float | None:
    """Rightmost x where rho crosses `level` (linear interpolation).

    None when rho stays below the level everywhere.  Pass a precomputed
    rho to skip the quadrature.
    """
    if level <= 0.0:
        raise ValueError("level must be positive")
    if rho is None:
        rho = compute_rho(field)
    x = field.space_grid.nodes
    above = rho >= level
    if not above.any():
        return None
    crossings = np.nonzero(above[:-1] & ~above[1:])[0]
    if crossings.size == 0:
        # occupied through the right edge
        return float(x[-1])
    i = int(crossings[-1])
    frac = (rho[i] - level) / (rho[i] - rho[i + 1])
    return float(x[i] + frac * (x[i + 1] - x[i]))


def run_simulation(cfg: SimConfig) -> Trajectory:
    """Integrate to the horizon, recording snapshots and track series.

    The run is cut short (flagged, not raised) as soon as the detected
    front comes within ten grid spacings of either space edge, so that
    boundary reflection never contaminates recorded data.
    """
    field = build_initial_field(cfg.initial, cfg.space_grid, cfg.theta_grid)
    dt = stable_dt(cfg)
    n_steps = 0 if cfg.horizon == 0.0 else int(math.ceil(cfg.horizon / dt - 1e-12))

    diag = StepDiagnostics()
    snapshots = [field]
    front_track: list[tuple[float, float]] = []
    sup_track: list[tuple[float, float]] = [(0.0, field.sup)]
    pos = front_position(field, cfg.front_level)
    if pos is not None:
        front_track.append((0.0, pos))

    margin = 10.0 * cfg.space_grid.spacing
    lo_guard = cfg.space_grid.x_min + margin
    hi_guard = cfg.space_grid.x_max - margin
    aborted = False
    reason = ""

    for k in range(1, n_steps + 1):
        dt_k = min(dt, cfg.horizon - (k - 1) * dt)
        field = step(field, dt_k, cfg, diag)
        pos = front_position(field, cfg.front_level, compute_rho(field))
        if pos is not None:
            front_track.append((field.time, pos))
        sup_track.append((field.time, field.sup))
        if k % cfg.snapshot_stride == 0 or k == n_steps:
            snapshots.append(field)
        if pos is not None and not (lo_guard <= pos <= hi_guard):
            aborted = True
            reason = f"front at {pos:.6g} within 10*dx of a space edge at t={field.time:.6g}"
            if snapshots[-1] is not field:
                snapshots.append(field)
            break

    return Trajectory(
        snapshots=snapshots,
        front_track=front_track,
        sup_track=sup_track,
        dt=dt,
        steps=k if n_steps else 0,
        clipped_mass=diag.clipped_mass,
        aborted=aborted,
        abort_reason=reason,
    )


def u_epsilon_field(
    field: Field,
    epsilon: float,
    x_window: tuple[float, float] | None = None,
    floor: float = 1e-300,
) -> tuple[np.ndarray, float]:
    """Logarithmic transform u = eps*ln(n) and its largest trait slope.

    The density is floored at a denormal-scale constant before taking the
    log.  The trait derivative is a centered difference; its maximum is
    taken over the x window (whole grid if None) and only at nodes whose
    density is meaningfully above the floor.  Returns (u, max |du/dtheta|);
    the maximum is NaN when no node qualifies.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    v = field.values
    u = epsilon * np.log(np.maximum(v, floor))
    dth = field.theta_grid.spacing
    grad = (u[:, 2:] - u[:, :-2]) / (2.0 * dth)

    mask = v[:, 1:-1] > 1e3 * floor
    if x_window is not None:
        x = field.space_grid.nodes
        in_window = (x >= x_window[0]) & (x <= x_window[1])
        mask = mask & in_window[:, None]
    if not mask.any():
        return u, float("nan")
    return u, float(np.abs(grad[mask]).max())
