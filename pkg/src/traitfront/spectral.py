"""Trait eigenvalue problem, dispersion curve, and minimal front speed.

For a wave number lambda the trait operator is

    alpha * Q'' + (theta * lambda^2 + r) * Q  =  H(lambda) * Q,
    Q'(theta_min) = Q'(theta_max) = 0,  Q > 0,  integral of Q over Theta = 1.

H(lambda) is the principal (largest) eigenvalue.  The dispersion speed is
c(lambda) = H(lambda)/lambda for lambda > 0 and the minimal speed is
c* = min c(lambda), attained at lambda* > 0 and pinned between the
classical envelopes 2*sqrt(theta_min*r) and 2*sqrt(theta_max*r).

Discretization: uniform trait nodes, second differences with ghost-node
reflection for the Neumann ends.  The resulting tridiagonal operator is
symmetrized by the diagonal similarity built from trapezoid weights, so
the principal pair comes from a symmetric matrix and the recovered
eigenvector solves the original discrete equations exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded

from .domain import ModelParams, ThetaGrid
from .errors import NumericalError

_EIG_TOL = 1e-12
_EIG_MAXIT = 500


@dataclass(frozen=True)
class SpectralSolution:
    """Principal eigenpair for one wave number."""

    lam: float
    H: float
    Q: np.ndarray
    residual: float
    iterations: int


@dataclass(frozen=True)
class DispersionCurve:
    """Sampled lambda -> c(lambda) together with H and gamma values."""

    lambdas: np.ndarray
    speeds: np.ndarray
    H_values: np.ndarray
    gammas: np.ndarray

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.lambdas.tolist(), self.speeds.tolist()))


@dataclass(frozen=True)
class FrontSpeedResult:
    """Minimal dispersion speed and its minimizer."""

    c_star: float
    lambda_star: float
    bracket: tuple[float, float]


def operator_bands(lam: float, params: ModelParams, grid: ThetaGrid):
    """Symmetrized tridiagonal bands (diag, off) of the trait operator.

    The ghost-reflection closure makes the raw operator asymmetric in its
    first and last rows; conjugating by sqrt(trapezoid weights) restores
    symmetry without changing the spectrum.
    """
    h2 = grid.spacing * grid.spacing
    a = params.alpha
    diag = -2.0 * a / h2 + grid.nodes * (lam * lam) + params.r
    off = np.full(grid.node_count - 1, a / h2)
    off[0] = off[-1] = math.sqrt(2.0) * a / h2
    return diag, off


def apply_raw_operator(Q: np.ndarray, lam: float, params: ModelParams, grid: ThetaGrid):
    """Apply the unsymmetrized discrete operator (for residual checks)."""
    h2 = grid.spacing * grid.spacing
    lap = np.empty_like(Q)
    lap[1:-1] = Q[:-2] - 2.0 * Q[1:-1] + Q[2:]
    lap[0] = 2.0 * Q[1] - 2.0 * Q[0]
    lap[-1] = 2.0 * Q[-2] - 2.0 * Q[-1]
    return params.alpha * lap / h2 + (grid.nodes * (lam * lam) + params.r) * Q


def eigen_H(lam: float, params: ModelParams, grid: ThetaGrid) -> SpectralSolution:
    """Principal eigenpair by shifted inverse power iteration.

    H is even in lambda, so only |lambda| enters.  The shift is the
    Gershgorin upper bound plus one, which makes (shift*I - S) positive
    definite; each iteration is one O(n) banded solve.  The eigenvector is
    sign-fixed positive and normalized to unit trapezoid integral.
    """
    lam = abs(float(lam))
    diag, off = operator_bands(lam, params, grid)
    n = grid.node_count

    # Gershgorin on the raw (untransformed) rows: the diffusion part sums
    # to zero there, leaving max(theta*lam^2) + r.  The similarity
    # transform preserves the spectrum, so the bound carries over and is
    # far tighter than Gershgorin applied to the symmetrized bands.
    shift = params.theta_max * lam * lam + params.r + 1.0

    ab = np.zeros((2, n))
    ab[0, 1:] = -off
    ab[1, :] = shift - diag

    v = np.full(n, 1.0 / math.sqrt(n))
    iterations = 0
    delta = np.inf
    for iterations in range(1, _EIG_MAXIT + 1):
        w = solveh_banded(ab, v)
        w /= np.linalg.norm(w)
        if w[0] < 0.0:
            w = -w
        delta = float(np.abs(w - v).max())
        v = w
        if delta <= _EIG_TOL:
            break
    else:
        raise NumericalError(
            f"eigensolve did not converge for lambda={lam}: "
            f"{_EIG_MAXIT} iterations, last change {delta:.3e}"
        )

    sv = np.empty_like(v)
    sv[:] = diag * v
    sv[:-1] += off * v[1:]
    sv[1:] += off * v[:-1]
    H = float(v @ sv)

    # Undo the similarity transform, then fix sign and normalization.
    root_w = np.ones(n)
    root_w[0] = root_w[-1] = 1.0 / math.sqrt(2.0)
    Q = v / root_w
    if Q.sum() < 0.0:
        Q = -Q
    if Q.min() <= 0.0:
        raise NumericalError(f"eigenvector not positive for lambda={lam}")
    Q = Q / float(grid.trapezoid_weights() @ Q)

    residual = float(np.abs(apply_raw_operator(Q, lam, params, grid) - H * Q).max())
    Q.flags.writeable = False
    return SpectralSolution(lam, H, Q, residual, iterations)


def dispersion_c(lam: float, params: ModelParams, grid: ThetaGrid) -> float:
    """Speed of the exponential profile with decay rate lambda > 0."""
    if lam <= 0.0:
        raise ValueError(f"dispersion speed needs lambda > 0, got {lam}")
    return eigen_H(lam, params, grid).H / lam


def gamma_of_lambda(lam: float, params: ModelParams, grid: ThetaGrid) -> float:
    """Remainder gamma(lambda) = lambda^2*theta_max + r - H(lambda).

    Strictly positive for lambda != 0; exactly zero at lambda = 0 where
    H(0) = r.
    """
    H = eigen_H(lam, params, grid).H
    return lam * lam * params.theta_max + params.r - H


def sample_dispersion(
    lambdas: np.ndarray, params: ModelParams, grid: ThetaGrid
) -> DispersionCurve:
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size and lambdas.min() <= 0.0:
        raise ValueError("dispersion samples need lambda > 0")
    H = np.array([eigen_H(l, params, grid).H for l in lambdas])
    gam = lambdas * lambdas * params.theta_max + params.r - H
    return DispersionCurve(lambdas, H / lambdas, H, gam)


def minimize_golden(f, a: float, b: float, rel_tol: float = 1e-8, max_iter: int = 200):
    """Golden-section minimum of a unimodal f on [a, b].

    Returns (argmin, min).  Stops once the bracket width falls below
    rel_tol relative to the midpoint.
    """
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if (b - a) <= rel_tol * 0.5 * abs(a + b):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    if fc < fd:
        return c, fc
    return d, fd


def compute_cstar(
    params: ModelParams,
    grid: ThetaGrid,
    scan_points: int = 64,
    rel_tol: float = 1e-8,
) -> FrontSpeedResult:
    """Minimal speed c* = min over lambda > 0 of H(lambda)/lambda.

    Coarse log-spaced scan over a bracket derived from the analytic
    envelopes (their minimizers are sqrt(r/theta_max) and
    sqrt(r/theta_min)), then golden-section refinement.  A minimum at a
    scan endpoint triggers one widen-and-retry before erroring out.
    """
    lo = 0.05 * math.sqrt(params.r / params.theta_max)
    hi = 20.0 * math.sqrt(params.r / params.theta_min)

    def c_of(lam: float) -> float:
        return eigen_H(lam, params, grid).H / lam

    for attempt in range(2):
        lambdas = np.geomspace(lo, hi, scan_points)
        values = np.array([c_of(l) for l in lambdas])
        i = int(values.argmin())
        if 0 < i < scan_points - 1:
            break
        lo, hi = lo / 4.0, hi * 4.0
        if attempt == 1:
            raise NumericalError(
                "c* scan hit the bracket edge twice; check the parameters"
            )
    bracket = (float(lambdas[i - 1]), float(lambdas[i + 1]))
    lam_star, c_star = minimize_golden(c_of, bracket[0], bracket[1], rel_tol)
    return FrontSpeedResult(c_star, lam_star, bracket)


def check_Hcstar_identity(
    lam: float,
    params: ModelParams,
    grid: ThetaGrid,
    cstar: FrontSpeedResult | None = None,
) -> float:
    """Relative error of inf over a > 0 of a*H(lambda/a) against |lambda|*c*.

    The infimum is located by a log-spaced scan refined with golden
    section; analytically the minimizer is a = |lambda|/lambda*.
    """
    if lam == 0.0:
        raise ValueError("identity check needs lambda != 0")
    if cstar is None:
        cstar = compute_cstar(params, grid)
    lam = abs(lam)

    def objective(a: float) -> float:
        return a * eigen_H(lam / a, params, grid).H

    center = lam / cstar.lambda_star
    grid_a = np.geomspace(center * 1e-2, center * 1e2, 96)
    vals = np.array([objective(a) for a in grid_a])
    i = int(np.clip(vals.argmin(), 1, grid_a.size - 2))
    _, best = minimize_golden(objective, grid_a[i - 1], grid_a[i + 1], 1e-10)
    target = lam * cstar.c_star
    return abs(best - target) / target


@dataclass(frozen=True)
class HTable:
    """Uniform samples of H on [0, lambda_max] with linear interpolation.

    Evaluation uses evenness H(-p) = H(p); queries beyond lambda_max
    extrapolate along the secant of the last two samples, so the table's
    effective slope is capped at its final secant.  Queries beyond twice
    lambda_max raise the `span_exceeded` flag.
    """

    lam_nodes: np.ndarray
    H_nodes: np.ndarray

    @property
    def lambda_max(self) -> float:
        return float(self.lam_nodes[-1])

    @property
    def segment_slopes(self) -> np.ndarray:
        return np.diff(self.H_nodes) / np.diff(self.lam_nodes)

    def max_slope(self, span: float | None = None) -> float:
        """Largest table slope over |p| <= span (whole table if None).

        The sampled H is monotone nondecreasing and convex-like, so this
        is the Lipschitz constant of the interpolant on the span.
        """
        slopes = self.segment_slopes
        if span is None or span >= self.lambda_max:
            return float(slopes.max())
        k = int(np.searchsorted(self.lam_nodes, span, side="left"))
        k = min(max(k, 1), slopes.size)
        return float(slopes[:k].max())

    def evaluate(self, p) -> tuple[np.ndarray, bool]:
        """Interpolated H(|p|) and whether any query left the trusted span."""
        q = np.abs(np.asarray(p, dtype=float))
        out = np.interp(q, self.lam_nodes, self.H_nodes)
        beyond = q > self.lambda_max
        if beyond.any():
            slope = self.segment_slopes[-1]
            out = np.where(
                beyond, self.H_nodes[-1] + (q - self.lambda_max) * slope, out
            )
        span_exceeded = bool((q > 2.0 * self.lambda_max).any())
        return out, span_exceeded


def build_H_table(
    lambda_max: float, sample_count: int, params: ModelParams, grid: ThetaGrid
) -> HTable:
    """Tabulate H for fast evaluation inside the Hamilton-Jacobi stepper."""
    if lambda_max <= 0.0:
        raise ValueError("lambda_max must be positive")
    if sample_count < 16:
        raise ValueError("sample_count must be at least 16")
    lam = np.linspace(0.0, lambda_max, sample_count)
    H = np.array([eigen_H(l, params, grid).H for l in lam])
    if np.any(np.diff(H) < -1e-12 * max(1.0, H[-1])):
        raise NumericalError("tabulated H is not monotone on [0, lambda_max]")
    lam.flags.writeable = False
    H.flags.writeable = False
    return HTable(lam, H)
