"""Hill determinants for periodic linear Lagrangian systems.

A system is the data (tau, W, U) on a bundle over the circle of length tau:
the covariant derivative is D = d/dt + W(t) with W skew-symmetric, and the
variational equation reads D^2 xi = U(t) xi with U symmetric.  Non-orientable
bundles are represented by an orthogonal holonomy matrix R gluing the frame
at tau back to the frame at 0; fields then satisfy xi(t + tau) = R xi(t).

Both sides of Hill's formula are computed independently: the left-hand side
from the ODE monodromy, the right-hand side from determinants of truncations
of the Hessian to finitely many eigenmodes of D, extrapolated in 1/N.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from ._linalg import herm, neville_limit, parallel_map
from .errors import IntegratorFailure, InvalidDegree, NotStabilized

DEFAULT_LADDER = (8, 12, 16, 24, 32, 48, 64)


def _as_matrix_fun(obj, m):
    if obj is None:
        zero = np.zeros((m, m))
        return lambda t: zero
    if callable(obj):
        return obj
    mat = np.asarray(obj, dtype=float)
    return lambda t: mat


@dataclass(frozen=True)
class ContinuousSystem:
    """Periodic linear Lagrangian system (tau, W, U) with optional holonomy."""

    tau: float
    dim: int
    potential: object
    connection: object = None
    holonomy: np.ndarray | None = None
    name: str = ""
    grid_size: int = 2048

    def __post_init__(self):
        object.__setattr__(self, "_U", _as_matrix_fun(self.potential, self.dim))
        object.__setattr__(self, "_W", _as_matrix_fun(self.connection, self.dim))
        if self.holonomy is not None:
            R = np.asarray(self.holonomy, dtype=float)
            if np.linalg.norm(R @ R.T - np.eye(self.dim)) > 1e-10:
                raise ValueError("holonomy must be orthogonal")
            object.__setattr__(self, "holonomy", R)

    def U(self, t):
        return np.atleast_2d(np.asarray(self._U(t), dtype=float))

    def W(self, t):
        return np.atleast_2d(np.asarray(self._W(t), dtype=float))

    def validate(self, samples=7, tol=1e-10):
        ts = np.linspace(0.0, self.tau, samples)
        for t in ts:
            U, W = self.U(t), self.W(t)
            if np.linalg.norm(U - U.T) > tol * max(1.0, np.linalg.norm(U)):
                raise ValueError(f"potential not symmetric at t={t}")
            if np.linalg.norm(W + W.T) > tol * max(1.0, np.linalg.norm(W)):
                raise ValueError(f"connection not skew at t={t}")
        for fn in (self.U, self.W):
            if np.linalg.norm(fn(0.0) - fn(self.tau)) > 1e-12 * (1 + np.linalg.norm(fn(0.0))):
                raise ValueError("coefficients are not tau-periodic")
        return True


def scalar_system(tau, a, name=""):
    """One-degree-of-freedom system x'' = a(t) x."""
    fun = a if callable(a) else (lambda t: float(a))
    return ContinuousSystem(tau=tau, dim=1, potential=lambda t: [[fun(t)]], name=name)


def mathieu_system(a0, a1, tau=2 * np.pi):
    """x'' = (a0 + 2*a1*cos(2 pi t / tau)) x, the classical Hill test case."""
    omega = 2 * np.pi / tau
    return scalar_system(tau, lambda t: a0 + 2 * a1 * np.cos(omega * t), name="mathieu")


def ode_monodromy(system, rtol=1e-12, atol=1e-12):
    """Monodromy P of D^2 xi = U xi and parallel-transport monodromy Q.

    P acts on pairs (xi(0), D xi(0)); with holonomy R both operators are
    composed with R^-1 so that multipliers describe twisted-periodic
    solutions xi(t + tau) = rho R xi(t).
    """
    m, tau = system.dim, system.tau

    def rhs(t, y):
        cols = y.reshape(2 * m, -1)
        xi, zeta = cols[:m], cols[m:]
        W, U = system.W(t), system.U(t)
        return np.vstack([zeta - W @ xi, U @ xi - W @ zeta]).ravel()

    y0 = np.eye(2 * m).ravel()
    sol = solve_ivp(rhs, (0.0, tau), y0, method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise IntegratorFailure(sol.message)
    p_flat = sol.y[:, -1].reshape(2 * m, 2 * m)

    solq = solve_ivp(
        lambda t, y: (-system.W(t) @ y.reshape(m, m)).ravel(),
        (0.0, tau),
        np.eye(m).ravel(),
        method="DOP853",
        rtol=rtol,
        atol=atol,
    )
    if not solq.success:
        raise IntegratorFailure(solq.message)
    transport = solq.y[:, -1].reshape(m, m)

    if system.holonomy is not None:
        rinv = system.holonomy.T
        p_flat = np.block(
            [[rinv, np.zeros((m, m))], [np.zeros((m, m)), rinv]]
        ) @ p_flat
        transport = rinv @ transport
    return p_flat, transport


def orientation_data(system, monodromies=None):
    """(sigma, beta) of the system: sigma = det Q, beta = e^{-m tau} det^2(e^tau I - Q)."""
    _, Q = monodromies if monodromies is not None else ode_monodromy(system)
    m, tau = system.dim, system.tau
    sigma = float(np.sign(np.linalg.det(Q)))
    beta = float(np.exp(-m * tau) * np.linalg.det(np.exp(tau) * np.eye(m) - Q) ** 2)
    return sigma, beta


def classic_hill_matrix(a_coeffs, N):
    """The (2N+1) x (2N+1) Hill matrix ((k^2 delta_jk + a_{k-j}) / (k^2 + 1)).

    ``a_coeffs`` maps the integer frequency l to the Fourier coefficient a_l
    of a real 2 pi periodic function (a_{-l} = conj(a_l) filled in when only
    one side is given).
    """
    coeffs = dict(a_coeffs)
    for l in list(coeffs):
        coeffs.setdefault(-l, np.conj(coeffs[l]))
    ks = np.arange(-N, N + 1)
    H = np.zeros((2 * N + 1, 2 * N + 1), dtype=complex)
    for j_idx, j in enumerate(ks):
        for k_idx, k in enumerate(ks):
            a = coeffs.get(k - j, 0.0)
            H[j_idx, k_idx] = ((k * k if j == k else 0.0) + a) / (k * k + 1.0)
    return H


class _SpectralBasis:
    """Eigenbasis of the covariant derivative D, with the potential coupling
    matrix elements tabulated by FFT on a periodic grid."""

    def __init__(self, system):
        self.system = system
        m, tau, ngrid = system.dim, system.tau, system.grid_size
        ts = np.arange(ngrid) * tau / ngrid
        is_flat = system.connection is None or (
            not callable(system.connection)
            and np.allclose(np.asarray(system.connection, float), 0.0)
        )
        if is_flat:
            frames = np.broadcast_to(np.eye(m), (ngrid, m, m))
            transport = np.eye(m)
        else:
            sol = solve_ivp(
                lambda t, y: (-system.W(t) @ y.reshape(m, m)).ravel(),
                (0.0, tau),
                np.eye(m).ravel(),
                method="DOP853",
                rtol=1e-12,
                atol=1e-12,
                t_eval=ts,
                dense_output=True,
            )
            if not sol.success:
                raise IntegratorFailure(sol.message)
            frames = sol.y.T.reshape(ngrid, m, m)
            transport = sol.sol(tau).reshape(m, m)
        Q = transport if system.holonomy is None else system.holonomy.T @ transport
        evals, evecs = np.linalg.eig(Q.astype(complex))
        self.phases = np.angle(evals) % (2 * np.pi)
        self.Q = Q
        # eta_j(t) = Phi(t) q_j are D-parallel frames; (eta_j, eta_k) = delta_jk
        eta = np.einsum("tab,bj->taj", frames, evecs)
        u_grid = np.array([system.U(t) for t in ts])
        u_eta = np.einsum("tab,tbj->taj", u_grid, eta)
        self.coupling = {}
        for jp in range(m):
            for j in range(m):
                g = np.exp(1j * (self.phases[jp] - self.phases[j]) * ts / tau) * np.einsum(
                    "ta,ta->t", u_eta[:, :, j], np.conj(eta[:, :, jp])
                )
                self.coupling[(jp, j)] = np.fft.fft(g) / ngrid
        self.ngrid = ngrid

    def modes(self, N):
        """All D-eigenvalue labels (j, k) with |nu_{jk}| <= N, nu = i(2 pi k - phi_j)/tau."""
        tau = self.system.tau
        out = []
        for j in range(self.system.dim):
            kmax = int((N * tau + self.phases[j]) / (2 * np.pi)) + 2
            for k in range(-kmax, kmax + 1):
                nu = (2 * np.pi * k - self.phases[j]) / tau
                if abs(nu) <= N + 1e-13:
                    out.append((j, k, 1j * nu))
        out.sort(key=lambda item: (item[2].imag, item[0]))
        return out

    def form_matrix(self, rho, N):
        """Matrix of the quadratic form -(D + mu)^2 + U on the modes |nu| <= N."""
        mu = branch_exponent(rho, self.system.tau)
        modes = self.modes(N)
        js = np.array([j for j, _, _ in modes])
        ks = np.array([k for _, k, _ in modes])
        nus = np.array([nu for _, _, nu in modes])
        F = np.diag(-((nus + mu) ** 2)).astype(complex)
        for jp in range(self.system.dim):
            rows = np.flatnonzero(js == jp)
            for j in range(self.system.dim):
                cols = np.flatnonzero(js == j)
                diff = (ks[rows][:, None] - ks[cols][None, :]) % self.ngrid
                F[np.ix_(rows, cols)] += self.coupling[(jp, j)][diff]
        return F, modes


def branch_exponent(rho, tau):
    """mu = ln(rho)/tau with the branch fixed by 0 <= Im ln rho < 2 pi."""
    rho = complex(rho)
    if rho == 0:
        raise ValueError("rho must be nonzero")
    lg = np.log(rho)
    if lg.imag < 0:
        lg += 2j * np.pi
    return lg / tau


def _basis(system, cache=None):
    if cache is not None:
        if getattr(cache, "system", None) is system:
            return cache
    return _SpectralBasis(system)


def truncated_hill_det(system, rho, N, basis=None):
    """det of the Hessian truncated to the D-eigenmodes with |nu| <= N.

    The Hessian is normalized by -D^2 + I, so the matrix is
    (1 - nu^2)^{-1} (-(nu + mu)^2 delta + U-coupling) on the mode basis; the
    symmetric cut |nu| <= N is what makes the conditionally convergent part
    of the infinite determinant well defined.
    """
    basis = _basis(system, basis)
    F, modes = basis.form_matrix(rho, N)
    weights = np.array([1.0 / (1.0 - nu**2).real for (_, _, nu) in modes])
    return complex(np.linalg.det(weights[:, None] * F))


def hill_det_ladder(system, rho, ladder=DEFAULT_LADDER, basis=None):
    """Truncated determinants over a ladder of orders plus the 1/N -> 0 limit."""
    basis = _basis(system, basis)
    dets = [truncated_hill_det(system, rho, N, basis) for N in ladder]
    extrapolated = complex(neville_limit(ladder, dets))
    return dets, extrapolated


@dataclass(frozen=True)
class ContinuousIdentityResult:
    rho: complex
    lhs: complex
    rhs_extrapolated: complex
    residual: float
    ladder: tuple
    dets: tuple
    raw_residuals: tuple
    sigma: float
    beta: float


def continuous_identity_residual(system, rho, ladder=DEFAULT_LADDER, basis=None, monodromies=None):
    """Relative defect of rho^{-m} det(P - rho I) = sigma (-1)^m beta det H_rho.

    The right-hand side uses the extrapolated determinant; the per-order raw
    residuals are reported alongside (they decay like 1/N).
    """
    P, Q = monodromies if monodromies is not None else ode_monodromy(system)
    sigma, beta = orientation_data(system, (P, Q))
    m = system.dim
    rho = complex(rho)
    lhs = rho ** (-m) * complex(np.linalg.det(P - rho * np.eye(2 * m)))
    dets, det_ex = hill_det_ladder(system, rho, ladder, basis)
    factor = sigma * (-1) ** m * beta
    raw = tuple(abs(lhs - factor * d) / (1 + abs(lhs)) for d in dets)
    rhs = factor * det_ex
    return ContinuousIdentityResult(
        rho=rho,
        lhs=lhs,
        rhs_extrapolated=rhs,
        residual=abs(lhs - rhs) / (1 + abs(lhs)),
        ladder=tuple(ladder),
        dets=tuple(dets),
        raw_residuals=raw,
        sigma=sigma,
        beta=beta,
    )


def rho_index_continuous(system, rho, orders=(8, 16, 32, 64, 128), zero_tol=1e-9, basis=None):
    """(index, nullity) of the Hermitian quadratic form on |rho|=1 variations.

    Counts are accepted once two consecutive truncation orders agree;
    otherwise NotStabilized is raised.
    """
    if abs(abs(complex(rho)) - 1.0) > 1e-12:
        raise ValueError("the index form is Hermitian only for |rho| = 1")
    basis = _basis(system, basis)
    prev = None
    for N in orders:
        F, _ = basis.form_matrix(rho, N)
        eigs = np.linalg.eigvalsh(herm(F))
        scale = max(np.max(np.abs(eigs)), 1e-300)
        index = int(np.count_nonzero(eigs < -zero_tol * scale))
        nullity = int(np.count_nonzero(np.abs(eigs) < zero_tol * scale))
        if prev == (index, nullity):
            return index, nullity
        prev = (index, nullity)
    raise NotStabilized(
        f"(index, nullity) did not stabilize by order {orders[-1]}", max_order=orders[-1]
    )


def doubled_system(system):
    """The same system regarded as periodic with period 2 tau."""
    hol = None
    if system.holonomy is not None:
        hol = system.holonomy @ system.holonomy
    return ContinuousSystem(
        tau=2 * system.tau,
        dim=system.dim,
        potential=lambda t: system.U(t % system.tau),
        connection=(lambda t: system.W(t % system.tau)) if system.connection is not None else None,
        holonomy=hol,
        name=system.name + "^2" if system.name else "",
        grid_size=2 * system.grid_size,
    )


def mixed_second_variation(tau, mixed_connection, mixed_potential, dim=None, fd_step=1e-6):
    """Normalize second-variation data given in the mixed form

        h(xi, eta) = Int (xi' . eta') + (W xi . eta') + (V xi . eta) dt

    to the canonical pair (D, U) with D = d/dt + A, A skew.  The symmetric
    part of W integrates by parts into the potential; the skew part splits
    evenly between the two covariant factors.
    """
    raw_w = mixed_connection if callable(mixed_connection) else (lambda t: np.asarray(mixed_connection, float))
    raw_v = mixed_potential if callable(mixed_potential) else (lambda t: np.asarray(mixed_potential, float))
    # wrap the base time once so the derived coefficients are exactly periodic
    Wf = lambda t: np.atleast_2d(np.asarray(raw_w(t), float))
    Vf = lambda t: np.atleast_2d(np.asarray(raw_v(t % tau), float))
    m = dim if dim is not None else Vf(0.0).shape[0]

    def connection(t):
        W = Wf(t % tau)
        return 0.25 * (W - W.T)

    def potential(t):
        tw = t % tau
        W, V = Wf(tw), Vf(tw)
        Wp, Wm = Wf(tw + fd_step), Wf(tw - fd_step)
        s_dot = 0.5 * ((Wp + Wp.T) - (Wm + Wm.T)) / (2 * fd_step)
        a_half = connection(tw)
        return 0.5 * (V + V.T) - 0.5 * s_dot + a_half @ a_half

    return ContinuousSystem(tau=tau, dim=m, potential=potential, connection=connection)


@dataclass(frozen=True)
class AutonomousVerdict:
    de_dtau_sign: int | None
    parity_shear_form: int | None
    unstable: bool
    reason: str = ""


def autonomous_criteria(sigma, m, ind, de_dtau_sign=None, homogeneity=None, energy_sign=None):
    """Energy-period instability tests for an autonomous orbit with exactly
    two unit multipliers.

    Either the sign of dE/dtau is given directly, or it is derived from a
    homogeneous potential of degree k (k not in {0, 2}) and the energy sign
    via dE/dtau = (2k/(k-2)) (tau(lambda)/tau)^{(k+2)/(k-2)} E.
    The parity of the shear form's index obeys (-1)^{ind b} = -sign dE/dtau,
    and sigma (-1)^{m + ind} dE/dtau < 0 forces a real multiplier above 1.
    """
    if de_dtau_sign is None:
        if homogeneity is None or energy_sign is None:
            raise ValueError("supply de_dtau_sign, or homogeneity and energy_sign")
        k = float(homogeneity)
        if k == 0.0 or k == 2.0:
            raise InvalidDegree(f"homogeneity degree {k} excluded (k(k-2) = 0)")
        de_dtau_sign = int(np.sign(2 * k / (k - 2)) * np.sign(energy_sign))
    de_dtau_sign = int(np.sign(de_dtau_sign))
    if de_dtau_sign == 0:
        return AutonomousVerdict(None, None, False, "dE/dtau vanishes; no verdict")
    parity = 1 if de_dtau_sign < 0 else -1  # (-1)^{ind b}
    unstable = sigma * (-1) ** (m + ind) * de_dtau_sign < 0
    reason = "sigma (-1)^(m+ind) dE/dtau < 0" if unstable else "sign condition not met"
    return AutonomousVerdict(de_dtau_sign, parity, bool(unstable), reason)


def identity_residual_grid(system, rhos, ladder=DEFAULT_LADDER):
    """Identity residuals over many rho values, sharing monodromy and basis."""
    monodromies = ode_monodromy(system)
    basis = _SpectralBasis(system)
    return parallel_map(
        lambda rho: continuous_identity_residual(system, rho, ladder, basis, monodromies),
        rhos,
    )
