"""Solid-torus map over the perturbed doubling map.

F(theta, x, y) = (f(theta), x/4 + cos(2 pi theta)/(4 pi), y/4 + sin(2 pi theta)/(4 pi))
contracts the disk fibers by 1/4 while the angular factor expands, so the
forward images of the solid torus nest down to an attractor.  The fiber
block of the Jacobian is diag(1/4, 1/4), which makes the unstable
derivative equal to f'(theta) and the bunching product f'(theta)/4.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .circle_map import PerturbationSpec, circle_dist, f_eval, lyapunov_periodic

__all__ = [
    "SolenoidPoint",
    "PeriodicOrbit",
    "FiberConvergenceError",
    "step",
    "step_many",
    "jacobian",
    "periodic_orbit",
    "bunching_margin",
    "attract",
    "trajectory_rows",
]

_QUARTER_PI_INV = 1.0 / (4.0 * np.pi)


class FiberConvergenceError(Exception):
    """Fiber contraction failed to settle, signalling precision breakdown."""


class SolenoidPoint(NamedTuple):
    theta: float
    x: float
    y: float


@dataclass(frozen=True)
class PeriodicOrbit:
    period: int
    points: tuple[SolenoidPoint, ...]
    unstable_exponent: float


def step(spec: PerturbationSpec, p: SolenoidPoint) -> tuple[SolenoidPoint, float]:
    """One application of F; also returns the unstable derivative f'(theta)."""
    ftheta, fprime = f_eval(spec, p.theta)
    image = SolenoidPoint(
        ftheta,
        0.25 * p.x + _QUARTER_PI_INV * np.cos(2.0 * np.pi * p.theta),
        0.25 * p.y + _QUARTER_PI_INV * np.sin(2.0 * np.pi * p.theta),
    )
    return image, fprime


def step_many(spec, thetas, xs, ys):
    """Vectorized F on parallel coordinate arrays: (thetas, xs, ys, fprimes)."""
    ftheta, fprime = f_eval(spec, thetas)
    ang = 2.0 * np.pi * np.asarray(thetas, dtype=float)
    return (
        ftheta,
        0.25 * np.asarray(xs, dtype=float) + _QUARTER_PI_INV * np.cos(ang),
        0.25 * np.asarray(ys, dtype=float) + _QUARTER_PI_INV * np.sin(ang),
        fprime,
    )


def jacobian(spec: PerturbationSpec, p: SolenoidPoint) -> np.ndarray:
    """3x3 derivative of F at p, row-major in (theta, x, y) order."""
    _, fprime = f_eval(spec, p.theta)
    ang = 2.0 * np.pi * p.theta
    return np.array(
        [
            [fprime, 0.0, 0.0],
            [-0.5 * np.sin(ang), 0.25, 0.0],
            [0.5 * np.cos(ang), 0.0, 0.25],
        ]
    )


def attract(spec: PerturbationSpec, p: SolenoidPoint, K: int) -> SolenoidPoint:
    """F^K(p).  Fiber distance to the attractor afterwards is at most 2 * 4^-K."""
    if K < 0:
        raise ValueError("K must be >= 0")
    q = p
    for _ in range(K):
        q, _ = step(spec, q)
    return q


def periodic_orbit(
    spec: PerturbationSpec,
    N: int,
    tol: float = 1e-13,
    max_sweeps: int = 200,
) -> PeriodicOrbit:
    """Periodic orbit of F over the angular point 0 (N = 1) or 1/(2^N - 1).

    The fiber coordinates come from contraction iteration of F^N starting on
    the central fiber; each sweep shrinks errors by 4^-N so convergence to
    tol is geometric.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    theta0 = 0.0 if N == 1 else 1.0 / (2.0**N - 1.0)

    p = SolenoidPoint(theta0, 0.0, 0.0)
    for _ in range(max_sweeps):
        q = p
        for _ in range(N):
            q, _ = step(spec, q)
        moved = max(abs(q.x - p.x), abs(q.y - p.y))
        p = SolenoidPoint(theta0, q.x, q.y)
        if moved < tol:
            break
    else:
        raise FiberConvergenceError(
            f"fiber iteration for period {N} did not settle within {max_sweeps} sweeps"
        )

    points = [p]
    for _ in range(N - 1):
        nxt, _ = step(spec, points[-1])
        points.append(nxt)
    closing, _ = step(spec, points[-1])
    residual = max(
        circle_dist(closing.theta, p.theta),
        abs(closing.x - p.x),
        abs(closing.y - p.y),
    )
    if residual > 1e-12:
        raise FiberConvergenceError(
            f"orbit of period {N} fails to close: residual {residual:.3e}"
        )

    exponent = lyapunov_periodic(spec, theta0, N)
    return PeriodicOrbit(N, tuple(points), exponent)


def trajectory_rows(spec: PerturbationSpec, p: SolenoidPoint, K: int):
    """Forward trajectory as (theta, x, y, unstable_deriv) rows, p included."""
    if K < 0:
        raise ValueError("K must be >= 0")
    rows = []
    q = p
    for _ in range(K + 1):
        image, deriv = step(spec, q)
        rows.append((q.theta, q.x, q.y, deriv))
        q = image
    return rows


def bunching_margin(spec: PerturbationSpec, grid_size: int) -> float:
    """sup over a theta grid of f'(theta) * 1/4; below 1 is the bunching condition.

    The stable block of the Jacobian is exactly I/4, so its operator norm is
    1/4 at every point and only f' needs to be scanned.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    thetas = np.arange(grid_size) / grid_size
    _, fprime = f_eval(spec, thetas)
    return float(fprime.max()) * 0.25
