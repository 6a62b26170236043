"""Both sides of Hill's formula for a periodic chain of variational blocks.

The chain (A_i, B_i) of an n-periodic orbit is the single source for
everything here: the quasiperiodic action Hessians H_rho, the monodromy
P = P_n ... P_1, the Morse and rho-indices, and the stability verdicts
that cross-check index data against the actual multipliers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._linalg import (
    LogDet,
    cyclic_hessian,
    herm,
    hermitian_spectrum,
    parallel_map,
    relative_mismatch,
    solve_generic,
    sym,
)
from .dls import evaluate_blocks
from .errors import SingularTwist, TheoremViolation

UNIT_TOL = 1e-9


@dataclass(frozen=True)
class HessianChain:
    """Per-step blocks A_i (symmetric) and B_i (nondegenerate twist) with
    cyclic indexing; the linearization of an orbit, and a linear discrete
    Lagrangian system in its own right."""

    a_blocks: np.ndarray
    twists: np.ndarray
    provenance: str = ""
    twist_conds: tuple = field(default_factory=tuple)
    from_finite_differences: bool = False

    def __post_init__(self):
        a = np.asarray(self.a_blocks)
        b = np.asarray(self.twists)
        if a.ndim != 3 or b.shape != a.shape or a.shape[1] != a.shape[2]:
            raise ValueError("blocks must be stacked square matrices of equal shape")
        for i in range(a.shape[0] if a.shape[1] else 0):
            scale = max(1.0, float(np.linalg.norm(a[i].astype(float))))
            if np.linalg.norm(a[i] - a[i].T) > 1e-10 * scale:
                raise ValueError(f"A block {i} is not symmetric")
            det = float(np.linalg.det(b[i].astype(float)))
            bnorm = max(float(np.linalg.norm(b[i].astype(float), 2)), 1e-300)
            if abs(det) < 1e-12 * bnorm ** a.shape[1]:
                raise SingularTwist(f"twist block {i} is singular")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a_blocks", a)
        object.__setattr__(self, "twists", b)

    @property
    def n(self):
        return self.a_blocks.shape[0]

    @property
    def m(self):
        return self.a_blocks.shape[1]

    def twist_dets(self):
        return np.array([np.linalg.det(b.astype(float)) for b in self.twists])

    @property
    def sigma(self):
        return int(np.prod(np.sign(self.twist_dets()))) if self.m else 1

    def log_beta(self):
        """log of beta = |prod det B_i|^{-1}; kept in log form against overflow."""
        if self.m == 0:
            return 0.0
        return -float(np.sum(np.log(np.abs(self.twist_dets()))))

    @property
    def beta(self):
        return float(np.exp(self.log_beta()))

    def block_scale(self):
        """Geometric mean of |det B_i|^(1/m); the natural magnitude unit."""
        if self.m == 0:
            return 1.0
        return float(np.exp(np.mean(np.log(np.abs(self.twist_dets()))) / self.m))


def assemble_chain(L, orbit, provenance=""):
    """Second-derivative chain of a converged orbit."""
    n = orbit.period
    steps = [evaluate_blocks(L, i, orbit.point(i), orbit.point(i + 1)) for i in range(n)]
    a_blocks = np.array([steps[(i - 1) % n].d22 + steps[i].d11 for i in range(n)])
    a_blocks = np.array([sym(a) for a in a_blocks])
    twists = np.array([s.twist for s in steps])
    return HessianChain(
        a_blocks=a_blocks,
        twists=twists,
        provenance=provenance,
        twist_conds=tuple(float(s.cond) for s in steps),
        from_finite_differences=L.uses_fd_second_derivatives,
    )


def synthetic_chain(a_blocks, twists, provenance="synthetic"):
    return HessianChain(np.asarray(a_blocks), np.asarray(twists), provenance=provenance)


def hessian_matrix(chain, rho=1.0):
    """The mn x mn quasiperiodic action Hessian H_rho.

    Coincides with the plain Hessian of the action at rho = 1; the
    wrap-around blocks carry 1/rho and rho.  Hermitian for |rho| = 1.
    """
    return cyclic_hessian(
        [a.astype(float) for a in chain.a_blocks],
        [b.astype(float) for b in chain.twists],
        rho,
        dtype=complex,
    )


def monodromy(chain):
    """P = P_n ... P_1 acting on pairs (u_0, u_1) of consecutive deviations."""
    n, m = chain.n, chain.m
    dtype = chain.a_blocks.dtype
    if m == 0:
        return np.eye(0, dtype=dtype)
    P = np.eye(2 * m, dtype=dtype)
    for i in range(1, n + 1):
        a = chain.a_blocks[i % n]
        b_prev = chain.twists[(i - 1) % n]
        b_adj = chain.twists[i % n].T
        top = np.hstack([np.zeros((m, m), dtype=dtype), np.eye(m, dtype=dtype)])
        bottom = np.hstack(
            [-solve_generic(b_adj, b_prev), solve_generic(b_adj, a)]
        )
        P = np.vstack([top, bottom]) @ P
    return P


def symplectic_form_matrix(chain):
    """Matrix of the twist symplectic form on (u_0, u_1) pairs."""
    m = chain.m
    b0 = chain.twists[0].astype(float)
    return np.block([[np.zeros((m, m)), b0.T], [-b0, np.zeros((m, m))]])


def multipliers(chain_or_p):
    """Eigenvalues of the monodromy, deterministically ordered.

    For one degree of freedom the quadratic formula is used in the matrix's
    own precision, which keeps near-parabolic double multipliers accurate.
    """
    P = monodromy(chain_or_p) if isinstance(chain_or_p, HessianChain) else np.asarray(chain_or_p)
    if P.shape[0] == 0:
        return np.array([], dtype=complex)
    if P.shape[0] == 2:
        cdtype = np.clongdouble if P.dtype == np.longdouble else complex
        tr = P[0, 0] + P[1, 1]
        det = P[0, 0] * P[1, 1] - P[0, 1] * P[1, 0]
        disc = np.sqrt(np.asarray(tr * tr / 4 - det, dtype=cdtype))
        roots = np.array([tr / 2 - disc, tr / 2 + disc], dtype=cdtype)
    else:
        roots = np.linalg.eigvals(P.astype(complex))
    order = np.lexsort((np.round(roots.imag, 12), np.round(roots.real, 12)))
    return roots[order]


def det_p_minus_rho(chain, rho, P=None):
    P = monodromy(chain) if P is None else P
    dim = P.shape[0]
    return LogDet.of(P.astype(complex) - complex(rho) * np.eye(dim))


def det_hessian_side(chain, rho):
    """det H_rho / det B_rho with det B_rho = rho^{-m} (-1)^m prod det B_i."""
    rho = complex(rho)
    num = LogDet.of(hessian_matrix(chain, rho))
    if chain.m == 0:
        return num
    dets = chain.twist_dets()
    phase = complex(np.prod(np.sign(dets))) * (-1) ** chain.m * (rho / abs(rho)) ** (-chain.m)
    logabs = float(np.sum(np.log(np.abs(dets)))) - chain.m * float(np.log(abs(rho)))
    return num / LogDet(logabs, phase)


def hill_identity_residual(chain, rho, P=None):
    """Relative defect between det(P - rho I) and the Hessian-side value."""
    lhs = det_p_minus_rho(chain, rho, P=P)
    rhs = det_hessian_side(chain, rho)
    return relative_mismatch(lhs, rhs)


def jointly_degenerate(chain, rho, tol=1e-10, P=None):
    """True when both sides vanish at rho (a kernel direction exists there)."""
    scale = chain.block_scale() ** (chain.m * chain.n)
    lhs = det_p_minus_rho(chain, rho, P=P).as_complex()
    rhs = det_hessian_side(chain, rho).as_complex()
    return abs(lhs) < tol * max(1.0, scale) and abs(rhs) < tol * max(1.0, scale)


def morse_index(chain, rho=1.0, zero_tol=UNIT_TOL):
    """(index, nullity) of the Hermitian form H_rho, |rho| = 1."""
    rho = complex(rho)
    if abs(abs(rho) - 1.0) > 1e-12:
        raise ValueError("the index form is Hermitian only on the unit circle")
    H = hessian_matrix(chain, rho)
    if np.linalg.norm(H - H.conj().T) > 1e-12 * max(1.0, np.linalg.norm(H)):
        raise TheoremViolation("H_rho failed to be Hermitian on the unit circle")
    _, index, nullity = hermitian_spectrum(H, zero_tol)
    return index, nullity


def double_chain(chain):
    """The chain of the twice-traversed orbit (period 2n)."""
    return HessianChain(
        a_blocks=np.concatenate([chain.a_blocks, chain.a_blocks]),
        twists=np.concatenate([chain.twists, chain.twists]),
        provenance=chain.provenance + " (doubled)" if chain.provenance else "doubled",
        from_finite_differences=chain.from_finite_differences,
    )


def reciprocity_residual(chain, P=None, samples=24, seed=7):
    """Fit rho^{-m} det(P - rho I) as a degree-m polynomial in rho + 1/rho on
    m + 2 nodes and return the worst relative defect on fresh nodes."""
    m = chain.m
    P = monodromy(chain) if P is None else P
    rng = np.random.default_rng(seed)
    fit_angles = rng.uniform(0.15, np.pi - 0.15, m + 2)
    rhos = np.exp(1j * fit_angles)
    w = rhos + 1 / rhos
    vals = np.array(
        [complex(rho) ** (-m) * det_p_minus_rho(chain, rho, P=P).as_complex() for rho in rhos]
    )
    coeffs = np.linalg.lstsq(np.vander(w, m + 1), vals, rcond=None)[0]
    worst = 0.0
    for ang in rng.uniform(0.05, np.pi - 0.05, samples):
        rho = np.exp(1j * ang)
        val = complex(rho) ** (-m) * det_p_minus_rho(chain, rho, P=P).as_complex()
        fit = np.polyval(coeffs, rho + 1 / rho)
        worst = max(worst, abs(val - fit) / (1 + abs(val)))
    return float(worst)


def multiplier_pairing_defect(mults):
    """Worst relative distance from the multiplier set to its image under
    rho -> 1/rho (symplectic monodromies are closed under it)."""
    mults = np.asarray(mults, dtype=complex)
    if mults.size == 0:
        return 0.0
    worst = 0.0
    for rho in mults:
        target = 1.0 / rho
        worst = max(worst, float(np.min(np.abs(mults - target)) / max(abs(target), 1e-300)))
    return worst


@dataclass(frozen=True)
class StabilityVerdicts:
    """Index-based stability predictions, each cross-checked against the
    multiplier list before being reported."""

    predicted_real_multiplier_gt1: bool
    predicted_real_multiplier_ltm1: bool
    predicted_exponential_instability: bool
    hyperbolic: bool | None
    elliptic: bool | None
    billiard_instability: bool | None
    degenerate_at_1: bool
    degenerate_at_minus_1: bool
    index: int
    nullity: int
    index_minus_1: int
    nullity_minus_1: int
    index_doubled: int
    notes: tuple = ()


def stability_verdicts(chain, mults=None, is_billiard=False, zero_tol=UNIT_TOL, unit_tol=1e-6):
    """Evaluate the sign-of-determinant instability tests on a chain.

    A negative sign of sigma (-1)^(m + index) forces a real multiplier above
    1; the same parity test on the antiperiodic form forces a real
    multiplier strictly below -1 (the criterion concerns a real, necessarily
    negative, multiplier beyond -1 even though it is sometimes quoted as a
    "positive" one).  For one degree of freedom the parity of the
    doubled-orbit index separates hyperbolic from elliptic.  Every fired
    prediction is validated against the actual multipliers; a contradiction
    raises TheoremViolation since the underlying identities are exact.
    """
    mults = multipliers(chain) if mults is None else np.asarray(mults, dtype=complex)
    sigma, m, n = chain.sigma, chain.m, chain.n
    ind1, null1 = morse_index(chain, 1.0, zero_tol)
    indm1, nullm1 = morse_index(chain, -1.0, zero_tol)
    doubled = double_chain(chain)
    ind2, null2 = morse_index(doubled, 1.0, zero_tol)
    notes = []

    real_mults = mults[np.abs(mults.imag) < unit_tol].real
    has_gt1 = bool(np.any(real_mults > 1 + unit_tol))
    has_ltm1 = bool(np.any(real_mults < -1 - unit_tol))

    predict_gt1 = null1 == 0 and sigma * (-1) ** (m + ind1) < 0
    if predict_gt1 and not has_gt1:
        raise TheoremViolation("a real multiplier above 1 was predicted but not found")

    predict_ltm1 = nullm1 == 0 and sigma * (-1) ** indm1 < 0
    if predict_ltm1 and not has_ltm1:
        raise TheoremViolation("a real multiplier below -1 was predicted but not found")

    predict_exp = null1 == 0 and nullm1 == 0 and sigma * (-1) ** (ind2 - ind1) < 0
    if predict_exp and not (has_gt1 or has_ltm1):
        raise TheoremViolation("exponential instability was predicted but not found")

    hyperbolic = elliptic = None
    if m == 1:
        nondegenerate = null1 == 0 and nullm1 == 0
        if nondegenerate:
            hyperbolic = ind2 % 2 == 0
            elliptic = not hyperbolic
            off_circle = bool(np.any(np.abs(np.abs(mults) - 1) > unit_tol))
            if hyperbolic and not off_circle:
                raise TheoremViolation("even doubled index demands hyperbolicity")
            if elliptic and off_circle:
                raise TheoremViolation("odd doubled index demands ellipticity")
        else:
            notes.append("doubled orbit degenerate; hyperbolic/elliptic test abstains")

    billiard_flag = None
    if is_billiard:
        if sigma == (-1) ** n:
            billiard_flag = null1 == 0 and (-1) ** (m + n + ind1) < 0
            if billiard_flag and not (has_gt1 or has_ltm1):
                raise TheoremViolation("billiard parity predicted instability not seen")
        else:
            notes.append("orientation sign law does not hold; billiard parity test abstains")

    return StabilityVerdicts(
        predicted_real_multiplier_gt1=bool(predict_gt1),
        predicted_real_multiplier_ltm1=bool(predict_ltm1),
        predicted_exponential_instability=bool(predict_exp),
        hyperbolic=hyperbolic,
        elliptic=elliptic,
        billiard_instability=billiard_flag,
        degenerate_at_1=null1 > 0,
        degenerate_at_minus_1=nullm1 > 0,
        index=ind1,
        nullity=null1,
        index_minus_1=indm1,
        nullity_minus_1=nullm1,
        index_doubled=ind2,
        notes=tuple(notes),
    )


@dataclass(frozen=True)
class HillReport:
    """Everything the analysis produces for one chain."""

    multipliers: tuple
    sigma: int
    beta: float
    log_beta: float
    morse_index: int
    nullity: int
    rho_grid: tuple
    det_monodromy_side: tuple
    det_hessian_side: tuple
    residuals: tuple
    jointly_degenerate: tuple
    rho_indices: tuple
    max_residual: float
    pairing_defect: float
    reciprocity_defect: float
    verdicts: StabilityVerdicts | None
    from_finite_differences: bool
    provenance: str


def unit_circle_grid(count):
    return tuple(np.exp(2j * np.pi * k / count) for k in range(count))


def analyze(
    chain,
    rho_grid_size=64,
    extra_rhos=(0.5, -0.5, 2.0, -2.0, 1.0, -1.0),
    with_verdicts=True,
    is_billiard=False,
    zero_tol=UNIT_TOL,
):
    """Full report: multipliers, both determinant sides on the grid, indices,
    verdicts.  The rho sweep is order-preserving and safe to run threaded."""
    P = monodromy(chain)
    mults = multipliers(P)
    grid = list(unit_circle_grid(rho_grid_size)) + [complex(r) for r in extra_rhos]

    def one(rho):
        lhs = det_p_minus_rho(chain, rho, P=P)
        rhs = det_hessian_side(chain, rho)
        res = relative_mismatch(lhs, rhs)
        degen = jointly_degenerate(chain, rho, P=P)
        return lhs.as_complex(), rhs.as_complex(), res, degen

    rows = parallel_map(one, grid)
    indices = parallel_map(
        lambda rho: morse_index(chain, rho, zero_tol),
        [rho for rho in grid if abs(abs(rho) - 1) < 1e-12],
    )
    ind1, null1 = morse_index(chain, 1.0, zero_tol)
    verdicts = (
        stability_verdicts(chain, mults, is_billiard=is_billiard, zero_tol=zero_tol)
        if with_verdicts
        else None
    )
    return HillReport(
        multipliers=tuple(complex(z) for z in mults),
        sigma=chain.sigma,
        beta=chain.beta,
        log_beta=chain.log_beta(),
        morse_index=ind1,
        nullity=null1,
        rho_grid=tuple(grid),
        det_monodromy_side=tuple(r[0] for r in rows),
        det_hessian_side=tuple(r[1] for r in rows),
        residuals=tuple(r[2] for r in rows),
        jointly_degenerate=tuple(r[3] for r in rows),
        rho_indices=tuple(indices),
        max_residual=float(max(r[2] for r in rows)),
        pairing_defect=multiplier_pairing_defect(mults),
        reciprocity_defect=reciprocity_residual(chain, P=P) if chain.m else 0.0,
        verdicts=verdicts,
        from_finite_differences=chain.from_finite_differences,
        provenance=chain.provenance,
    )
