"""Built-in generating functions: standard maps, gauge wrappers, discretized flows."""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

from .continuous import ContinuousSystem
from .dls import DiscreteLagrangian
from .errors import ConjugatePoints, IntegratorFailure, SingularB


class TrigPotential:
    """Trigonometric polynomial V(x) = sum c cos(k.x) + s sin(k.x) with analytic
    gradient and Hessian.  ``cos_terms``/``sin_terms`` are (coefficient, wavevector)
    pairs."""

    def __init__(self, dim, cos_terms=(), sin_terms=()):
        self.dim = dim
        self.cos_terms = [(float(c), np.asarray(k, dtype=float)) for c, k in cos_terms]
        self.sin_terms = [(float(c), np.asarray(k, dtype=float)) for c, k in sin_terms]

    def value(self, x):
        v = 0.0
        for c, k in self.cos_terms:
            v += c * np.cos(k @ x)
        for c, k in self.sin_terms:
            v += c * np.sin(k @ x)
        return v

    def grad(self, x):
        g = np.zeros_like(np.asarray(x))
        for c, k in self.cos_terms:
            g = g - c * np.sin(k @ x) * k
        for c, k in self.sin_terms:
            g = g + c * np.cos(k @ x) * k
        return g

    def hess(self, x):
        h = np.zeros((self.dim, self.dim), dtype=np.asarray(x).dtype)
        for c, k in self.cos_terms:
            h = h - c * np.cos(k @ x) * np.outer(k, k)
        for c, k in self.sin_terms:
            h = h - c * np.sin(k @ x) * np.outer(k, k)
        return h

    def ignores(self, coord):
        """True when every wavevector has zero component along ``coord``."""
        return all(k[coord] == 0 for _, k in self.cos_terms + self.sin_terms)


def zero_potential(dim):
    return TrigPotential(dim)


def cosine_potential(K, dim=1, coord=0):
    """V(x) = K cos(x_coord)."""
    k = np.zeros(dim)
    k[coord] = 1.0
    return TrigPotential(dim, cos_terms=[(K, k)])


class StandardMap(DiscreteLagrangian):
    """Multidimensional standard map with kinetic matrix B and potential V:

        L(x, y) = (1/2) <B (x - y), x - y> - (1/2) (V(x) + V(y)).

    The twist block is the constant matrix B.
    """

    def __init__(self, kinetic, potential=None):
        kinetic = np.atleast_2d(np.asarray(kinetic, dtype=float))
        if np.linalg.norm(kinetic - kinetic.T) > 1e-12 * (1 + np.linalg.norm(kinetic)):
            raise SingularB("kinetic matrix must be symmetric")
        if abs(np.linalg.det(kinetic)) < 1e-12 * max(1.0, np.linalg.norm(kinetic) ** kinetic.shape[0]):
            raise SingularB("kinetic matrix must be nondegenerate")
        self.kinetic = kinetic
        self.dim = kinetic.shape[0]
        self.potential = potential if potential is not None else zero_potential(self.dim)

    def value(self, i, x, y):
        d = np.asarray(x) - np.asarray(y)
        return 0.5 * d @ self.kinetic @ d - 0.5 * (
            self.potential.value(x) + self.potential.value(y)
        )

    def grad1(self, i, x, y):
        return self.kinetic @ (np.asarray(x) - np.asarray(y)) - 0.5 * self.potential.grad(x)

    def grad2(self, i, x, y):
        return -self.kinetic @ (np.asarray(x) - np.asarray(y)) - 0.5 * self.potential.grad(y)

    def second_blocks(self, i, x, y):
        d11 = self.kinetic - 0.5 * self.potential.hess(x)
        d22 = self.kinetic - 0.5 * self.potential.hess(y)
        return d11, d22, -self.kinetic


class GaugedLagrangian(DiscreteLagrangian):
    """L(x, y) + f(x) - f(y): same dynamics, same multipliers."""

    def __init__(self, base, f, grad_f, hess_f):
        self.base = base
        self.dim = base.dim
        self.nsteps = base.nsteps
        self.f, self.grad_f, self.hess_f = f, grad_f, hess_f

    def value(self, i, x, y):
        return self.base.value(i, x, y) + self.f(x) - self.f(y)

    def grad1(self, i, x, y):
        return self.base.grad1(i, x, y) + self.grad_f(x)

    def grad2(self, i, x, y):
        return self.base.grad2(i, x, y) - self.grad_f(y)

    def second_blocks(self, i, x, y):
        d11, d22, d12 = self.base.second_blocks(i, x, y)
        return d11 + self.hess_f(x), d22 - self.hess_f(y), d12

    def domain_check(self, i, x, y):
        self.base.domain_check(i, x, y)


class DiscretizedFlow(DiscreteLagrangian):
    """Per-step generating functions of a periodic linear Lagrangian flow.

    Step i carries the action of the unique trajectory of D^2 xi = U xi
    joining x at t_i to y at t_{i+1}; it exists whenever the two grid points
    are non-conjugate.  First derivatives are the boundary momenta; second
    derivative blocks fall back to finite differences.
    """

    def __init__(self, system: ContinuousSystem, grid):
        self.system = system
        self.grid = np.asarray(grid, dtype=float)
        if self.grid.ndim != 1 or self.grid.size < 2:
            raise ValueError("grid must contain at least two times")
        if abs(self.grid[-1] - self.grid[0] - system.tau) > 1e-12 * (1 + system.tau):
            raise ValueError("grid must span one full period")
        self.dim = system.dim
        self.nsteps = self.grid.size - 1
        self._step_flows = [self._flow(i) for i in range(self.nsteps)]

    def _flow(self, i):
        m = self.dim
        t0, t1 = self.grid[i], self.grid[i + 1]

        def rhs(t, y):
            cols = y.reshape(2 * m, -1)
            xi, zeta = cols[:m], cols[m:]
            W, U = self.system.W(t), self.system.U(t)
            return np.vstack([zeta - W @ xi, U @ xi - W @ zeta]).ravel()

        sol = solve_ivp(
            rhs, (t0, t1), np.eye(2 * m).ravel(), method="DOP853", rtol=1e-12, atol=1e-12
        )
        if not sol.success:
            raise IntegratorFailure(sol.message)
        flow = sol.y[:, -1].reshape(2 * m, 2 * m)
        phi12 = flow[:m, m:]
        if abs(np.linalg.det(phi12)) < 1e-10 * max(1.0, np.linalg.norm(phi12) ** m):
            raise ConjugatePoints(f"grid points {i} and {i + 1} are conjugate")
        return flow

    def _boundary_momenta(self, i, x, y):
        m = self.dim
        flow = self._step_flows[i % self.nsteps]
        phi11, phi12 = flow[:m, :m], flow[:m, m:]
        phi21, phi22 = flow[m:, :m], flow[m:, m:]
        zeta0 = np.linalg.solve(phi12, np.asarray(y) - phi11 @ np.asarray(x))
        zeta1 = phi21 @ np.asarray(x) + phi22 @ zeta0
        return zeta0, zeta1

    def value(self, i, x, y):
        # action of the connecting trajectory; for D^2 xi = U xi it integrates
        # to boundary terms: (1/2)[(D xi, xi)]_{t_i}^{t_{i+1}}
        zeta0, zeta1 = self._boundary_momenta(i, x, y)
        return 0.5 * (np.asarray(y) @ zeta1 - np.asarray(x) @ zeta0)

    def grad1(self, i, x, y):
        zeta0, _ = self._boundary_momenta(i, x, y)
        return -zeta0

    def grad2(self, i, x, y):
        _, zeta1 = self._boundary_momenta(i, x, y)
        return zeta1


def discretize_cls(system, n):
    """Uniform-grid discrete Lagrangian system of a continuous one."""
    grid = np.linspace(0.0, system.tau, n + 1)
    return DiscretizedFlow(system, grid)
