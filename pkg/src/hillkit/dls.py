"""Discrete Lagrangian systems: generating functions, step maps, periodic orbits.

A discrete Lagrangian system is given by a generating function L(x, y) on
pairs of chart points.  Consecutive orbit points satisfy the stationarity
condition d2 L(x_prev, x) + d1 L(x, x_next) = 0, and the twist block
B(x, y) = -d1 d2 L(x, y) must be nondegenerate so that the step map is
locally well defined.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._linalg import cyclic_hessian, solve_generic, sym
from .errors import NoConvergence, SingularJacobian, SingularTwist

TWIST_TOL = 1e-12
FD_SCALE = 1e-5


def _fd_step(x):
    return FD_SCALE * (1.0 + np.abs(np.asarray(x, dtype=float)))


class DiscreteLagrangian:
    """Per-step generating function with derivative blocks.

    Subclasses must implement ``value``; gradients and second-derivative
    blocks fall back to central finite differences with step
    1e-5 * (1 + |x|) per coordinate.  Models with closed-form derivatives
    should override ``grad1``/``grad2``/``second_blocks``.

    ``nsteps`` is None for an autonomous step law, or the period of an
    n-periodic sequence of step laws (billiard orbits visiting several
    boundary pieces, discretized flows on a time grid).
    """

    dim: int = 1
    nsteps = None

    def value(self, i, x, y):
        raise NotImplementedError

    def grad1(self, i, x, y):
        h = _fd_step(x)
        g = np.empty(self.dim, dtype=np.asarray(x).dtype)
        for a in range(self.dim):
            e = np.zeros(self.dim)
            e[a] = h[a]
            g[a] = (self.value(i, x + e, y) - self.value(i, x - e, y)) / (2 * h[a])
        return g

    def grad2(self, i, x, y):
        h = _fd_step(y)
        g = np.empty(self.dim, dtype=np.asarray(y).dtype)
        for a in range(self.dim):
            e = np.zeros(self.dim)
            e[a] = h[a]
            g[a] = (self.value(i, x, y + e) - self.value(i, x, y - e)) / (2 * h[a])
        return g

    @property
    def uses_fd_second_derivatives(self):
        return type(self).second_blocks is DiscreteLagrangian.second_blocks

    def second_blocks(self, i, x, y):
        """Return (d11, d22, d12) where d12[a, b] = d^2 L / dx_a dy_b."""
        m = self.dim
        hx, hy = _fd_step(x), _fd_step(y)
        d11 = np.empty((m, m))
        d22 = np.empty((m, m))
        d12 = np.empty((m, m))
        for a in range(m):
            ex = np.zeros(m)
            ex[a] = hx[a]
            d11[a] = (self.grad1(i, x + ex, y) - self.grad1(i, x - ex, y)) / (2 * hx[a])
            d12[a] = (self.grad2(i, x + ex, y) - self.grad2(i, x - ex, y)) / (2 * hx[a])
            ey = np.zeros(m)
            ey[a] = hy[a]
            d22[a] = (self.grad2(i, x, y + ey) - self.grad2(i, x, y - ey)) / (2 * hy[a])
        return sym(d11), sym(d22), d12

    def domain_check(self, i, x, y):
        """Hook for models that restrict evaluation; raise DomainError to reject."""


@dataclass(frozen=True)
class StepBlocks:
    """Value and derivative blocks of one generating-function step.

    ``twist`` maps tangent vectors at the first point to covectors at the
    second one; its matrix is -d12^T.  ``cond`` is its condition number.
    """

    value: float
    d1: np.ndarray
    d2: np.ndarray
    d11: np.ndarray
    d22: np.ndarray
    d12: np.ndarray
    twist: np.ndarray
    cond: float


def evaluate_blocks(L, i, x, y, twist_tol=TWIST_TOL):
    """Evaluate all six pieces of a step, symmetrizing d11/d22 and rejecting
    singular twist blocks."""
    x = np.atleast_1d(np.asarray(x))
    y = np.atleast_1d(np.asarray(y))
    L.domain_check(i, x, y)
    d11, d22, d12 = L.second_blocks(i, x, y)
    twist = -np.asarray(d12).T
    det = float(np.linalg.det(twist.astype(float)))
    norm = float(np.linalg.norm(twist.astype(float), 2)) if L.dim else 0.0
    scale = max(norm, 1e-300) ** L.dim
    if abs(det) < twist_tol * scale:
        raise SingularTwist(f"twist block singular at step {i}: |det|={abs(det):.3e}")
    cond = float(np.linalg.cond(twist.astype(float)))
    return StepBlocks(
        value=float(L.value(i, x, y)),
        d1=np.asarray(L.grad1(i, x, y)),
        d2=np.asarray(L.grad2(i, x, y)),
        d11=sym(np.asarray(d11)),
        d22=sym(np.asarray(d22)),
        d12=np.asarray(d12),
        twist=twist,
        cond=cond,
    )


@dataclass(frozen=True)
class PeriodicOrbit:
    """An n-cycle of chart points with residual metadata.

    Index arithmetic is cyclic everywhere: point(-1) is the last point and
    point(n) the first.  ``chart_tags`` names the boundary piece (or chart)
    each point lives on, for models whose points use per-point charts.
    """

    points: np.ndarray
    chart_tags: tuple | None = None
    residual_norm: float = np.inf
    converged: bool = False
    degenerate_suspect: bool = False
    newton_history: tuple = field(default_factory=tuple)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points))
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def period(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    def point(self, i):
        return self.points[i % self.period]

    def rotated(self, shift):
        tags = None
        if self.chart_tags is not None:
            tags = tuple(np.roll(np.asarray(self.chart_tags, dtype=object), -shift))
        return replace(self, points=np.roll(self.points, -shift, axis=0), chart_tags=tags)


def orbit_with_residual(L, points, chart_tags=None, tol=1e-10):
    pts = np.atleast_2d(np.asarray(points))
    orbit = PeriodicOrbit(points=pts, chart_tags=chart_tags)
    r = float(np.max(np.abs(residual(L, orbit))))
    return replace(orbit, residual_norm=r, converged=r <= tol)


def action(L, orbit):
    """Sum of step Lagrangians around the cycle."""
    n = orbit.period
    return float(
        sum(L.value(i, orbit.point(i), orbit.point(i + 1)) for i in range(n))
    )


def residual(L, orbit):
    """Stationarity defect at each orbit point: d2 L(x_{i-1}, x_i) + d1 L(x_i, x_{i+1})."""
    n = orbit.period
    out = np.empty_like(np.asarray(orbit.points))
    for i in range(n):
        out[i] = L.grad2((i - 1) % n, orbit.point(i - 1), orbit.point(i)) + L.grad1(
            i, orbit.point(i), orbit.point(i + 1)
        )
    return out


def orbit_jacobian(L, orbit):
    """Jacobian of the residual map: the block-cyclic action Hessian."""
    n = orbit.period
    steps = [evaluate_blocks(L, i, orbit.point(i), orbit.point(i + 1)) for i in range(n)]
    a_blocks = [steps[(i - 1) % n].d22 + steps[i].d11 for i in range(n)]
    return cyclic_hessian(a_blocks, [s.twist for s in steps], 1.0, dtype=float)


def refine_orbit(L, guess, tol=1e-10, max_iter=50, max_halvings=30, rank_tol=1e-10):
    """Damped Newton refinement of a periodic-orbit guess.

    When the Jacobian's smallest singular value drops below
    ``rank_tol`` times its largest, the step switches to the minimum-norm
    least-squares solution and the result is marked ``degenerate_suspect``
    (expected for orbits inside continuous symmetry families).
    """
    orbit = guess if isinstance(guess, PeriodicOrbit) else PeriodicOrbit(points=guess)
    n, m = orbit.period, orbit.dim
    pts = np.array(orbit.points, dtype=float)
    tags = orbit.chart_tags
    history = []
    degenerate = False
    res = residual(L, replace(orbit, points=pts))
    rnorm = float(np.max(np.abs(res)))
    if not np.isfinite(rnorm):
        raise NoConvergence("initial residual is not finite", residual=rnorm)
    for iteration in range(max_iter):
        history.append(rnorm)
        if rnorm <= tol:
            return PeriodicOrbit(
                points=pts,
                chart_tags=tags,
                residual_norm=rnorm,
                converged=True,
                degenerate_suspect=degenerate,
                newton_history=tuple(history),
            )
        jac = orbit_jacobian(L, PeriodicOrbit(points=pts, chart_tags=tags))
        svals = np.linalg.svd(jac, compute_uv=False)
        if svals[-1] < rank_tol * svals[0]:
            degenerate = True
            step = np.linalg.lstsq(jac, -res.ravel(), rcond=rank_tol)[0]
            if not np.all(np.isfinite(step)):
                raise SingularJacobian(
                    "degenerate Jacobian and least-squares step failed",
                    smallest_singular_value=float(svals[-1]),
                )
        else:
            step = np.linalg.solve(jac, -res.ravel())
        scale = 1.0
        for _ in range(max_halvings + 1):
            trial = pts + scale * step.reshape(n, m)
            trial_res = residual(L, PeriodicOrbit(points=trial, chart_tags=tags))
            trial_norm = float(np.max(np.abs(trial_res)))
            if np.isfinite(trial_norm) and (trial_norm < rnorm or rnorm <= tol):
                break
            scale *= 0.5
        else:
            raise NoConvergence(
                f"Newton step failed to reduce the residual after {max_halvings} halvings",
                iterations=iteration,
                residual=rnorm,
            )
        pts, res, rnorm = trial, trial_res, trial_norm
    if rnorm <= tol:
        history.append(rnorm)
        return PeriodicOrbit(
            points=pts,
            chart_tags=tags,
            residual_norm=rnorm,
            converged=True,
            degenerate_suspect=degenerate,
            newton_history=tuple(history),
        )
    raise NoConvergence(
        f"orbit refinement did not reach tol={tol} in {max_iter} iterations",
        iterations=max_iter,
        residual=rnorm,
    )


def advance(L, x, y, guess=None, step=0, tol=1e-12, max_iter=60, max_halvings=30):
    """One step of the dynamics: solve d2 L(x, y) + d1 L(y, z) = 0 for z.

    The step map is multivalued in general; Newton converges to the branch
    nearest the supplied guess (default: linear continuation 2 y - x).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    z = np.atleast_1d(np.asarray(guess, dtype=float)) if guess is not None else 2 * y - x
    lhs = L.grad2(step, x, y)
    nstep = L.nsteps
    nxt = (step + 1) % nstep if nstep else step
    for _ in range(max_iter):
        f = lhs + L.grad1(nxt, y, z)
        fnorm = float(np.max(np.abs(f)))
        if fnorm <= tol:
            return y, z
        jac = -evaluate_blocks(L, nxt, y, z).twist.T
        delta = solve_generic(jac, -f)
        scale = 1.0
        for _ in range(max_halvings + 1):
            trial = z + scale * delta
            tnorm = float(np.max(np.abs(lhs + L.grad1(nxt, y, trial))))
            if np.isfinite(tnorm) and tnorm < fnorm:
                break
            scale *= 0.5
        else:
            raise NoConvergence("step-map Newton stalled", residual=fnorm)
        z = trial
    raise NoConvergence(f"step-map Newton did not reach tol={tol}", iterations=max_iter)
