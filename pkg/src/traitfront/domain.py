"""Core types: model parameters, grids, density fields, initial data.

The model lives on R x Theta with Theta = (theta_min, theta_max) a bounded
motility-trait interval.  Everything here is an immutable value object;
arrays are frozen after construction so instances can be shared freely.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ConfigError


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ModelParams:
    """The four constants of the model.

    theta_min, theta_max: trait interval bounds, 0 < theta_min < theta_max.
    alpha: mutation (trait diffusion) rate, > 0.
    r: net reproduction rate, > 0.
    """

    theta_min: float
    theta_max: float
    alpha: float
    r: float

    def __post_init__(self):
        if not (0.0 < self.theta_min < self.theta_max):
            raise ValueError(
                f"need 0 < theta_min < theta_max, got "
                f"({self.theta_min}, {self.theta_max})"
            )
        if self.alpha <= 0.0 or self.r <= 0.0:
            raise ValueError(f"alpha and r must be positive, got {self.alpha}, {self.r}")

    @property
    def theta_width(self) -> float:
        return self.theta_max - self.theta_min


@dataclass(frozen=True)
class ThetaGrid:
    """Uniform nodes covering [theta_min, theta_max] inclusive."""

    theta_min: float
    theta_max: float
    node_count: int
    nodes: np.ndarray = dc_field(init=False, repr=False, compare=False)
    spacing: float = dc_field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.node_count < 3:
            raise ValueError(f"node_count must be >= 3, got {self.node_count}")
        if not self.theta_min < self.theta_max:
            raise ValueError("theta_min must be < theta_max")
        nodes = np.linspace(self.theta_min, self.theta_max, self.node_count)
        object.__setattr__(self, "nodes", _frozen(nodes))
        object.__setattr__(
            self, "spacing", (self.theta_max - self.theta_min) / (self.node_count - 1)
        )

    @classmethod
    def for_params(cls, params: ModelParams, node_count: int = 81) -> "ThetaGrid":
        return cls(params.theta_min, params.theta_max, node_count)

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.node_count, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w


@dataclass(frozen=True)
class SpaceGrid:
    """Uniform nodes on the truncated spatial interval [x_min, x_max]."""

    x_min: float
    x_max: float
    node_count: int
    nodes: np.ndarray = dc_field(init=False, repr=False, compare=False)
    spacing: float = dc_field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.node_count < 3:
            raise ValueError(f"node_count must be >= 3, got {self.node_count}")
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be < x_max")
        nodes = np.linspace(self.x_min, self.x_max, self.node_count)
        object.__setattr__(self, "nodes", _frozen(nodes))
        object.__setattr__(
            self, "spacing", (self.x_max - self.x_min) / (self.node_count - 1)
        )


@dataclass(frozen=True)
class Field:
    """Population density n(x_i, theta_j) at one instant.

    values has shape (space nodes, trait nodes) and is nonnegative.
    """

    values: np.ndarray
    time: float
    space_grid: SpaceGrid
    theta_grid: ThetaGrid

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        expected = (self.space_grid.node_count, self.theta_grid.node_count)
        if v.shape != expected:
            raise ValueError(f"field shape {v.shape} does not match grids {expected}")
        if v.size and v.min() < 0.0:
            raise ValueError(f"negative density {v.min()} at t={self.time}")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def sup(self) -> float:
        return float(self.values.max())


class TraitProfile(enum.Enum):
    UNIFORM = "uniform"
    COSINE_BUMP = "cosine"


@dataclass(frozen=True)
class InitialDataSpec:
    """Product-bump initial data n0(x,theta) = amplitude * g(x) * h(theta).

    g is the compact cubic bump ((1-s^2)+)^3 centered at x_center with
    half-width x_halfwidth.  h is identically 1 (UNIFORM) or a cos^2 bump
    with compact support strictly inside the trait interval (COSINE_BUMP).
    Both choices make n0, composed with the trait reflection, twice
    continuously differentiable.
    """

    x_center: float
    x_halfwidth: float
    amplitude: float
    trait_profile_kind: TraitProfile = TraitProfile.UNIFORM
    trait_bump_center: float = 0.0
    trait_bump_halfwidth: float = 0.0

    def __post_init__(self):
        if self.x_halfwidth <= 0.0:
            raise ValueError("x_halfwidth must be positive")
        if self.amplitude < 0.0:
            raise ValueError("amplitude must be nonnegative")
        if self.trait_profile_kind is TraitProfile.COSINE_BUMP:
            if self.trait_bump_halfwidth <= 0.0:
                raise ValueError("cosine profile needs a positive trait_bump_halfwidth")


@dataclass(frozen=True)
class IntervalSet:
    """Ordered disjoint closed intervals [a_i, b_i] on the space axis."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        prev_b = -np.inf
        for a, b in self.intervals:
            if b < a:
                raise ValueError(f"interval [{a}, {b}] has b < a")
            if a <= prev_b:
                raise ValueError("intervals must be disjoint and sorted")
            prev_b = b

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls(())

    @classmethod
    def single(cls, a: float, b: float) -> "IntervalSet":
        return cls(((float(a), float(b)),))

    @classmethod
    def from_mask(cls, nodes: np.ndarray, mask: np.ndarray) -> "IntervalSet":
        """Closure of the marked nodes: maximal runs become closed intervals."""
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != nodes.shape:
            raise ValueError("mask and nodes must have the same shape")
        if not mask.any():
            return cls.empty()
        edges = np.diff(mask.astype(np.int8))
        starts = list(np.nonzero(edges == 1)[0] + 1)
        stops = list(np.nonzero(edges == -1)[0])
        if mask[0]:
            starts.insert(0, 0)
        if mask[-1]:
            stops.append(len(mask) - 1)
        return cls(tuple((float(nodes[i]), float(nodes[j])) for i, j in zip(starts, stops)))

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def distance(self, x) -> np.ndarray:
        """Pointwise distance d(x, set); inf for the empty set."""
        x = np.asarray(x, dtype=float)
        if self.is_empty:
            return np.full(x.shape, np.inf)
        d = np.full(x.shape, np.inf)
        for a, b in self.intervals:
            d = np.minimum(d, np.maximum.reduce([a - x, np.zeros_like(x), x - b]))
        return d

    def contains(self, other: "IntervalSet") -> bool:
        """True if every interval of `other` lies inside one of ours."""
        return all(
            any(a <= c and d <= b for a, b in self.intervals)
            for c, d in other.intervals
        )


def extend_theta(theta, params: ModelParams):
    """Reflect an arbitrary trait value into [theta_min, theta_max].

    Even reflection across theta_max followed by periodic extension: a
    triangle wave with period 2*(theta_max-theta_min).  Identity on the
    trait interval, Lipschitz with constant 1, idempotent.
    """
    width = params.theta_width
    psi = np.mod(np.asarray(theta, dtype=float) - params.theta_min, 2.0 * width)
    out = params.theta_min + width - np.abs(psi - width)
    if np.isscalar(theta):
        return float(out)
    return out


def _bump_g(s: np.ndarray) -> np.ndarray:
    """Compact cubic bump ((1-s^2)+)^3; C^2 across the support edge."""
    core = np.maximum(1.0 - s * s, 0.0)
    return core * core * core


def _trait_profile(spec: InitialDataSpec, theta: np.ndarray) -> np.ndarray:
    if spec.trait_profile_kind is TraitProfile.UNIFORM:
        return np.ones_like(theta)
    z = (theta - spec.trait_bump_center) / spec.trait_bump_halfwidth
    h = np.where(np.abs(z) < 1.0, np.cos(0.5 * np.pi * z) ** 2, 0.0)
    return h


def build_initial_field(
    spec: InitialDataSpec, space_grid: SpaceGrid, theta_grid: ThetaGrid
) -> Field:
    """Sample the product bump on the tensor grid at t = 0."""
    if not (
        space_grid.x_min < spec.x_center - spec.x_halfwidth
        and spec.x_center + spec.x_halfwidth < space_grid.x_max
    ):
        raise ConfigError(
            f"spatial bump [{spec.x_center - spec.x_halfwidth}, "
            f"{spec.x_center + spec.x_halfwidth}] must lie strictly inside "
            f"({space_grid.x_min}, {space_grid.x_max})"
        )
    if spec.trait_profile_kind is TraitProfile.COSINE_BUMP:
        lo = spec.trait_bump_center - spec.trait_bump_halfwidth
        hi = spec.trait_bump_center + spec.trait_bump_halfwidth
        if not (theta_grid.theta_min <= lo and hi <= theta_grid.theta_max):
            raise ConfigError(
                f"trait bump [{lo}, {hi}] must lie inside "
                f"[{theta_grid.theta_min}, {theta_grid.theta_max}]"
            )
    s = (space_grid.nodes - spec.x_center) / spec.x_halfwidth
    g = _bump_g(s)
    h = _trait_profile(spec, theta_grid.nodes)
    values = spec.amplitude * np.outer(g, h)
    return Field(values, 0.0, space_grid, theta_grid)


def sets_JK(field0: Field, tol: float | None = None) -> tuple[IntervalSet, IntervalSet]:
    """Extract the initially-occupied sets from the initial field.

    J collects nodes where some trait is present (max over theta > tol),
    K nodes where all traits are present (min over theta > tol).  K is a
    subset of J by construction.  tol defaults to 1e-12 times the peak
    density, separating true zeros from roundoff.
    """
    v = field0.values
    if tol is None:
        tol = 1e-12 * float(v.max())
    x = field0.space_grid.nodes
    j_set = IntervalSet.from_mask(x, v.max(axis=1) > tol)
    k_set = IntervalSet.from_mask(x, v.min(axis=1) > tol)
    return j_set, k_set
