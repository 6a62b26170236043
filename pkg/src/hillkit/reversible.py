"""Reversible orbits: involution alignment, half actions, even/odd splitting.

A time-reversing involution S satisfies L(Sx, Sy) = L(y, x).  An orbit is
reversible when some cyclic relabelling aligns it with its reversed image;
the aligned orbit contains 0, 1 or 2 fixed points of S, which classifies it
into three types and determines a half-orbit parametrization.  The action
Hessian then splits into even and odd parts whose determinants multiply to
the full one, and positive definiteness of the even half-form feeds the
instability criteria.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import fix_signs, hermitian_spectrum, nullspace
from .dls import PeriodicOrbit, orbit_with_residual
from .errors import NoConvergence, NotReversible, TheoremViolation
from .hill import hessian_matrix, morse_index, multipliers, unit_circle_grid


@dataclass(frozen=True)
class InvolutionSpec:
    """Affine chart involution S(x) = J x + c with J^2 = I and J c = -c."""

    matrix: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        J = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        c = np.atleast_1d(np.asarray(self.offset, dtype=float))
        if np.max(np.abs(J @ J - np.eye(J.shape[0]))) > 1e-10:
            raise ValueError("matrix must square to the identity")
        if np.max(np.abs(J @ c + c)) > 1e-10:
            raise ValueError("offset must be antisymmetric under the matrix")
        object.__setattr__(self, "matrix", J)
        object.__setattr__(self, "offset", c)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def is_identity(self):
        return bool(
            np.max(np.abs(self.matrix - np.eye(self.dim))) == 0.0
            and np.max(np.abs(self.offset)) == 0.0
        )

    def apply(self, x):
        return self.matrix @ np.asarray(x, dtype=float) + self.offset

    def jacobian(self, x=None):
        return self.matrix

    def fixed_tangent_basis(self):
        """Orthonormal basis of the +1 eigenspace of the linear part."""
        return nullspace(self.matrix - np.eye(self.dim))

    def fixed_point_near(self, x):
        """Closest point of the fixed set: average of x and S(x)."""
        return 0.5 * (np.asarray(x, dtype=float) + self.apply(x))


def identity_involution(dim):
    return InvolutionSpec(np.eye(dim), np.zeros(dim))


def negation_involution(dim):
    return InvolutionSpec(-np.eye(dim), np.zeros(dim))


def angle_reflection(center=0.0):
    """Chart involution t -> center - t (billiard boundary reflection axis)."""
    return InvolutionSpec(np.array([[-1.0]]), np.array([float(center)]))


def reversing_defect(L, S, rng, samples=20, span=1.0, steps=None):
    """Worst |L(Sx, Sy) - L(y, x)| over random pairs."""
    steps = [0] if steps is None else list(steps)
    worst = 0.0
    for _ in range(samples):
        x = span * rng.standard_normal(S.dim)
        y = span * rng.standard_normal(S.dim)
        for i in steps:
            worst = max(
                worst,
                abs(L.value(i, S.apply(x), S.apply(y)) - L.value(i, y, x)),
            )
    return worst


@dataclass(frozen=True)
class ReversibleOrbit:
    """Canonically rotated reversible orbit with its half data.

    type 0: n = 2k,     points (y_0 .. y_{k-1}, S y_{k-1} .. S y_0)
    type 1: n = 2k - 1, points (y_0 .. y_{k-1}, S y_{k-1} .. S y_1), S y_0 = y_0
    type 2: n = 2k - 2, points (y_0 .. y_{k-1}, S y_{k-2} .. S y_1), ends fixed
    """

    orbit: PeriodicOrbit
    involution: InvolutionSpec
    tau_type: int
    half_count: int
    anchors: tuple
    shift_applied: int

    @property
    def half_points(self):
        return self.orbit.points[: self.half_count]


def _wrapped_distance(a, b, period):
    d = np.abs(np.asarray(a) - np.asarray(b))
    if period is not None:
        d = np.minimum(d % period, period - (d % period))
    return float(np.max(d))


def classify_reversible(orbit, S, tol=1e-9, chart_period=None):
    """Align an orbit with its reversed image and classify by anchor count.

    Searches the n cyclic shifts for S(x_{j-i}) = x_i, taking the smallest
    valid shift.  Raises NotReversible when no alignment exists within the
    tolerance.  ``chart_period`` treats chart coordinates modulo a period
    (angle charts).
    """
    pts = np.asarray(orbit.points, dtype=float)
    n = orbit.period
    valid = []
    for j in range(n):
        worst = max(
            _wrapped_distance(S.apply(pts[(j - i) % n]), pts[i], chart_period)
            for i in range(n)
        )
        if worst <= tol * (1.0 + float(np.max(np.abs(pts)))):
            valid.append(j)
    if not valid:
        raise NotReversible("no cyclic shift aligns the orbit with its reversal")
    j = valid[0]
    if n % 2 == 1:
        tau, k = 1, (n + 1) // 2
        shift = (j * ((n + 1) // 2)) % n
        anchors = (0,)
    elif j % 2 == 0:
        tau, k = 2, n // 2 + 1
        shift = (j // 2) % n
        anchors = (0, n // 2)
    else:
        tau, k = 0, n // 2
        shift = ((j + 1) // 2) % n
        anchors = ()
    rotated = orbit.rotated(shift)
    rec = reconstruct_orbit_points(S, tau, rotated.points[:k])
    defect = max(
        _wrapped_distance(rec[i], rotated.points[i], chart_period) for i in range(n)
    )
    if defect > 10 * tol * (1.0 + float(np.max(np.abs(pts)))):
        raise NotReversible(f"canonical reconstruction defect {defect:.2e}")
    return ReversibleOrbit(
        orbit=rotated,
        involution=S,
        tau_type=tau,
        half_count=k,
        anchors=anchors,
        shift_applied=shift,
    )


def reconstruct_orbit_points(S, tau, half):
    """Full point sequence of a reversible orbit from its half data."""
    half = np.atleast_2d(np.asarray(half, dtype=float))
    k = half.shape[0]
    if tau == 0:
        tail = [S.apply(half[k - 1 - l]) for l in range(k)]
    elif tau == 1:
        tail = [S.apply(half[k - 1 - l]) for l in range(k - 1)]
    elif tau == 2:
        tail = [S.apply(half[k - 2 - l]) for l in range(k - 2)]
    else:
        raise ValueError("tau must be 0, 1 or 2")
    return np.vstack([half] + ([np.array(tail)] if tail else []))


def _half_terms(tau, k, n):
    """(step, spec_a, spec_b, weight) terms of the half action; specs are
    ('y', j) for a half point and ('Sy', j) for its involution image."""
    terms = [(l, ("y", l), ("y", l + 1), 2.0) for l in range(k - 1)]
    if tau == 0:
        terms.append((n - 1, ("Sy", 0), ("y", 0), 1.0))
        terms.append((k - 1, ("y", k - 1), ("Sy", k - 1), 1.0))
    elif tau == 1:
        terms.append((k - 1, ("y", k - 1), ("Sy", k - 1), 1.0))
    return terms


def half_action_gradient(L, S, tau, half):
    """Value and gradient of the half action whose critical points are the
    reversible orbits of the given type.

    The gradient is taken in all half-point coordinates; anchor constraints
    (points pinned to the fixed set of S) are handled by the refiner.
    """
    half = np.atleast_2d(np.asarray(half, dtype=float))
    k, m = half.shape
    n = {0: 2 * k, 1: 2 * k - 1, 2: 2 * k - 2}[tau]
    J = S.matrix

    def resolve(specification):
        kind, j = specification
        return half[j] if kind == "y" else S.apply(half[j])

    value = 0.0
    grad = np.zeros((k, m))
    for step, spec_a, spec_b, weight in _half_terms(tau, k, n):
        a, b = resolve(spec_a), resolve(spec_b)
        value += weight * L.value(step, a, b)
        for spec, which in ((spec_a, "1"), (spec_b, "2")):
            kind, j = spec
            g = L.grad1(step, a, b) if which == "1" else L.grad2(step, a, b)
            grad[j] += weight * (g if kind == "y" else J.T @ g)
    return float(value), grad


def _anchor_bases(S, rev_tau, k):
    """Per-half-point tangent bases: full space except at anchored slots."""
    m = S.dim
    fix = S.fixed_tangent_basis()
    bases = []
    for j in range(k):
        anchored = (rev_tau in (1, 2) and j == 0) or (rev_tau == 2 and j == k - 1)
        bases.append(fix if anchored else np.eye(m))
    return bases


def refine_reversible(L, S, tau, half_guess, tol=1e-11, max_iter=60, fd_step=1e-7):
    """Newton on the constrained half-action gradient.

    Anchored points move inside the fixed set of S only; the Jacobian of the
    reduced gradient is taken by central differences (the half systems are
    small).  Returns the refined half points.
    """
    half = np.atleast_2d(np.asarray(half_guess, dtype=float)).copy()
    k, m = half.shape
    if tau in (1, 2):
        half[0] = S.fixed_point_near(half[0])
    if tau == 2:
        half[-1] = S.fixed_point_near(half[-1])
    bases = _anchor_bases(S, tau, k)
    sizes = [b.shape[1] for b in bases]
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    def reduced_grad(h):
        _, g = half_action_gradient(L, S, tau, h)
        return np.concatenate([bases[j].T @ g[j] for j in range(k)])

    def apply_step(h, step):
        out = h.copy()
        for j in range(k):
            out[j] = out[j] + bases[j] @ step[offsets[j]:offsets[j + 1]]
        return out

    g = reduced_grad(half)
    for _ in range(max_iter):
        gnorm = float(np.max(np.abs(g))) if g.size else 0.0
        if gnorm <= tol:
            return half
        dim = g.size
        jac = np.empty((dim, dim))
        for c in range(dim):
            e = np.zeros(dim)
            e[c] = fd_step
            jac[:, c] = (reduced_grad(apply_step(half, e)) - reduced_grad(apply_step(half, -e))) / (
                2 * fd_step
            )
        step = np.linalg.solve(jac, -g)
        scale = 1.0
        for _ in range(40):
            trial = apply_step(half, scale * step)
            gt = reduced_grad(trial)
            if float(np.max(np.abs(gt))) < gnorm:
                break
            scale *= 0.5
        else:
            raise NoConvergence("half-action Newton stalled", residual=gnorm)
        half, g = trial, gt
    raise NoConvergence("half-action Newton did not converge", iterations=max_iter)


def reversible_orbit_from_half(L, S, tau, half, chart_tags=None, tol=1e-10):
    pts = reconstruct_orbit_points(S, tau, half)
    return orbit_with_residual(L, pts, chart_tags=chart_tags, tol=tol)


@dataclass(frozen=True)
class SplitHessian:
    """Even/odd splitting of the action Hessian of a reversible orbit."""

    h_plus: np.ndarray
    h_minus: np.ndarray
    c_first: np.ndarray | None
    c_last: np.ndarray | None
    half_plus: np.ndarray
    half_minus: np.ndarray
    involution_matrix: np.ndarray
    cross_defect: float
    invariance_defect: float

    def det_split_residual(self, chain):
        """Relative defect of det H = det H_plus det H_minus (H as an operator
        of the invariant metric)."""
        H = hessian_matrix(chain, 1.0).real
        J = self.involution_matrix
        point_metric = 0.5 * (np.eye(J.shape[0]) + J.T @ J)
        metric = np.kron(np.eye(H.shape[0] // J.shape[0]), point_metric)
        lhs = np.linalg.det(np.linalg.solve(metric, H))
        rhs = np.linalg.det(self.h_plus) * np.linalg.det(self.h_minus)
        return abs(lhs - rhs) / (1.0 + abs(lhs))


def _g_orthonormalize(cols, metric):
    out = []
    for col in cols.T:
        v = col.astype(float)
        for u in out:
            v = v - (u @ metric @ v) * u
        norm = float(np.sqrt(v @ metric @ v))
        if norm > 1e-10:
            out.append(v / norm)
    return fix_signs(np.column_stack(out)) if out else np.zeros((cols.shape[0], 0))


def split_hessian(chain, rev):
    """Split the action Hessian along the orbit involution.

    Returns the even/odd blocks in an orthonormal basis of the invariant
    metric (average of the chart metric with its pullback), the boundary
    operators entering the half forms, and the half-form matrices on their
    admissible domains.
    """
    n, m, k = chain.n, chain.m, rev.half_count
    tau = rev.tau_type
    J = rev.involution.matrix
    H = hessian_matrix(chain, 1.0).real

    sigma_of = (lambda i: (-1 - i) % n) if tau == 0 else (lambda i: (-i) % n)
    big_j = np.zeros((n * m, n * m))
    for i in range(n):
        big_j[i * m:(i + 1) * m, sigma_of(i) * m:(sigma_of(i) + 1) * m] = J
    if np.max(np.abs(big_j @ big_j - np.eye(n * m))) > 1e-9:
        raise NotReversible("orbit involution failed to square to the identity")
    invariance = float(np.max(np.abs(big_j.T @ H @ big_j - H)) / max(1.0, np.max(np.abs(H))))
    if invariance > 1e-8:
        raise NotReversible(f"Hessian is not involution-invariant (defect {invariance:.2e})")

    point_metric = 0.5 * (np.eye(m) + J.T @ J)
    metric = np.kron(np.eye(n), point_metric)
    plus = _g_orthonormalize(np.eye(n * m) + big_j, metric)
    minus = _g_orthonormalize(np.eye(n * m) - big_j, metric)
    h_plus = plus.T @ H @ plus
    h_minus = minus.T @ H @ minus
    cross = float(np.max(np.abs(plus.T @ H @ minus)) / max(1.0, np.max(np.abs(H)))) if min(plus.shape[1], minus.shape[1]) else 0.0

    c_first = c_last = None
    if tau == 0:
        c_first = -chain.twists[n - 1].astype(float) @ J
        c_last = -chain.twists[k - 1].astype(float).T @ J
    elif tau == 1:
        c_last = -chain.twists[k - 1].astype(float).T @ J
    for c in (c_first, c_last):
        if c is not None and np.max(np.abs(c - c.T)) > 1e-9 * max(1.0, np.max(np.abs(c))):
            raise TheoremViolation("a boundary operator failed to be symmetric")

    dirichlet = np.zeros((k * m, k * m))
    for i in range(k):
        dirichlet[i * m:(i + 1) * m, i * m:(i + 1) * m] = chain.a_blocks[i].astype(float)
        if i >= 1:
            dirichlet[i * m:(i + 1) * m, (i - 1) * m:i * m] = -chain.twists[i - 1].astype(float)
        if i <= k - 2:
            dirichlet[i * m:(i + 1) * m, (i + 1) * m:(i + 2) * m] = -chain.twists[i].astype(float).T
    half_forms = {}
    for sign in (+1, -1):
        F = 2.0 * dirichlet.copy()
        if c_first is not None:
            F[:m, :m] += sign * c_first
        if c_last is not None:
            F[(k - 1) * m:, (k - 1) * m:] += sign * c_last
        cols = []
        for j in range(k):
            anchored = (tau in (1, 2) and j == 0) or (tau == 2 and j == k - 1)
            base = nullspace(J - sign * np.eye(m)) if anchored else np.eye(m)
            lift = np.zeros((k * m, base.shape[1]))
            lift[j * m:(j + 1) * m] = base
            cols.append(lift)
        basis = np.hstack(cols) if cols else np.zeros((k * m, 0))
        half_forms[sign] = basis.T @ F @ basis

    return SplitHessian(
        h_plus=h_plus,
        h_minus=h_minus,
        c_first=c_first,
        c_last=c_last,
        half_plus=half_forms[+1],
        half_minus=half_forms[-1],
        involution_matrix=J,
        cross_defect=cross,
        invariance_defect=invariance,
    )


@dataclass(frozen=True)
class ReversibleVerdicts:
    tau_type: int
    is_minimum: bool
    c_first_nonpositive: bool | None
    c_last_nonpositive: bool | None
    predicted_real_multiplier_gt1: bool
    predicted_hyperbolic: bool
    index_split_consistent: bool
    det_split_residual: float
    min_unit_circle_gap: float
    notes: tuple = ()


def reversible_verdicts(chain, rev, split, mults=None, rho_grid_size=16, zero_tol=1e-9, unit_tol=1e-6):
    """Instability predictions from the even half-form, validated against the
    multipliers.

    A positive definite even half-form means the orbit minimizes the half
    action.  With the right sign data (orientation times parity, or
    nonpositive boundary operators) that forces a real multiplier above 1;
    for the identity involution and type 2 it forces hyperbolicity, which is
    also checked through positive definiteness of the quasiperiodic form
    along the unit circle.
    """
    mults = multipliers(chain) if mults is None else np.asarray(mults, dtype=complex)
    m, tau = chain.m, rev.tau_type
    notes = []
    eigs_plus = np.linalg.eigvalsh(split.half_plus) if split.half_plus.size else np.array([])
    scale = max(1.0, float(np.max(np.abs(eigs_plus))) if eigs_plus.size else 1.0)
    is_min = bool(eigs_plus.size == 0 or np.min(eigs_plus) > zero_tol * scale)

    def nonpositive(mat):
        if mat is None:
            return None
        eigs = np.linalg.eigvalsh(mat)
        return bool(np.max(eigs) <= zero_tol * max(1.0, float(np.max(np.abs(eigs)))))

    c_first_np = nonpositive(split.c_first)
    c_last_np = nonpositive(split.c_last)

    sign_ok = chain.sigma * (-1) ** m < 0
    type_ok = (
        tau == 2
        or (tau == 1 and c_last_np)
        or (tau == 0 and c_first_np and c_last_np)
    )
    predict_gt1 = bool(is_min and sign_ok and type_ok)
    real_mults = mults[np.abs(mults.imag) < unit_tol].real
    if predict_gt1 and not np.any(real_mults > 1 + unit_tol):
        raise TheoremViolation("minimal reversible orbit predicted a multiplier above 1")

    predict_hyp = bool(rev.involution.is_identity and tau == 2 and is_min)
    gap = float(np.min(np.abs(np.abs(mults) - 1.0))) if mults.size else np.inf
    if predict_hyp:
        for rho in unit_circle_grid(rho_grid_size):
            idx, nul = morse_index(chain, rho, zero_tol)
            if idx != 0 or nul != 0:
                raise TheoremViolation(
                    "quasiperiodic form not positive definite for a minimal type-2 orbit"
                )
        if gap <= unit_tol:
            raise TheoremViolation("predicted hyperbolic orbit has a unit-circle multiplier")
    if tau == 1 and rev.involution.is_identity:
        notes.append("type 1 with identity involution: domain conditions degenerate; abstaining")

    _, ind_p, _ = hermitian_spectrum(split.h_plus, zero_tol)
    _, ind_m, _ = hermitian_spectrum(split.h_minus, zero_tol)
    ind_h, _ = morse_index(chain, 1.0, zero_tol)
    index_ok = ind_h == ind_p + ind_m
    return ReversibleVerdicts(
        tau_type=tau,
        is_minimum=is_min,
        c_first_nonpositive=c_first_np,
        c_last_nonpositive=c_last_np,
        predicted_real_multiplier_gt1=predict_gt1,
        predicted_hyperbolic=predict_hyp,
        index_split_consistent=bool(index_ok),
        det_split_residual=float(split.det_split_residual(chain)),
        min_unit_circle_gap=gap,
        notes=tuple(notes),
    )
