"""Shared generators and independent oracles for the test suite."""

import numpy as np
import pytest

from hillkit import billiards as bl
from hillkit import dls
from hillkit.hill import synthetic_chain
from hillkit.models import StandardMap, cosine_potential


def random_chain(rng, m, n, well_conditioned=True):
    """Random variational chain: symmetric A_i, nondegenerate twists."""
    a_blocks = []
    twists = []
    for _ in range(n):
        A = rng.standard_normal((m, m))
        a_blocks.append(0.5 * (A + A.T))
        q1 = np.linalg.qr(rng.standard_normal((m, m)))[0]
        q2 = np.linalg.qr(rng.standard_normal((m, m)))[0]
        diag = 0.5 + rng.random(m) if well_conditioned else rng.standard_normal(m)
        twists.append(q1 @ np.diag(diag) @ q2)
    return synthetic_chain(np.array(a_blocks), np.array(twists))


def planted_kernel_chain(rng, m, n, k):
    """Random chain with k planted periodic kernel solutions spanning an
    isotropic block; built in adapted coordinates, then rotated sitewise."""
    M = []
    for _ in range(n):
        X = rng.standard_normal((m, m)) + 0.3 * np.eye(m)
        X[:k, :k] = 0.5 * (X[:k, :k] + X[:k, :k].T)
        M.append(X)
    A = []
    for i in range(n):
        K = M[(i - 1) % n] + M[i].T
        Am = np.empty((m, m))
        Am[:, :k] = K[:, :k]
        Am[:k, k:] = K[k:, :k].T
        rest = rng.standard_normal((m - k, m - k))
        Am[k:, k:] = 0.5 * (rest + rest.T)
        A.append(Am)
    w = np.zeros((k, n, m))
    for a in range(k):
        w[a, :, a] = 1.0
    frames = [np.linalg.qr(rng.standard_normal((m, m)))[0] for _ in range(n)]
    A = [frames[i].T @ A[i] @ frames[i] for i in range(n)]
    M = [frames[(i + 1) % n].T @ M[i] @ frames[i] for i in range(n)]
    w = np.array([[frames[i].T @ w[a, i] for i in range(n)] for a in range(k)])
    return synthetic_chain(np.array(A), np.array(M)), w


def nondegenerate_planted_chain(rng, m, n, k, gap=1e-3, tries=60):
    """Planted chain whose non-unit multipliers stay away from 1 and whose
    shear data satisfies all three nondegeneracy conditions."""
    from hillkit import routh
    from hillkit.errors import ExcessDegeneracy
    from hillkit.hill import multipliers

    for _ in range(tries):
        chain, w = planted_kernel_chain(rng, m, n, k)
        mults = multipliers(chain)
        near_one = np.abs(mults - 1.0) < gap
        if np.count_nonzero(near_one) != 2 * k:
            continue
        try:
            reduced, data = routh.linear_routh(chain, w)
            eig = routh.generalized_unit_eigendata(chain, data)
        except ExcessDegeneracy:
            continue
        if eig.condition_c:
            return chain, w, reduced, data, eig
    raise RuntimeError("no nondegenerate planted chain found")


def altitude_feet(vertices):
    """Feet of the altitudes of a triangle: the planimetric oracle for the
    inscribed minimizing 3-orbit. Foot i lies on side i (vertex i to i+1)."""
    vertices = np.asarray(vertices, dtype=float)
    feet = []
    for i in range(3):
        q, r = vertices[i], vertices[(i + 1) % 3]
        p = vertices[(i + 2) % 3]
        d = r - q
        feet.append(q + ((p - q) @ d) / (d @ d) * d)
    return np.array(feet)


def foot_parameters(vertices):
    """Chart parameters of the altitude feet on the polygon sides."""
    vertices = np.asarray(vertices, dtype=float)
    feet = altitude_feet(vertices)
    params = []
    for i in range(3):
        q, r = vertices[i], vertices[(i + 1) % 3]
        params.append([((feet[i] - q) @ (r - q)) / ((r - q) @ (r - q))])
    return np.array(params)


ACUTE_TRIANGLE = np.array([(0.0, 0.0), (4.0, 0.0), (1.0, 3.0)])


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


@pytest.fixture
def standard_map_k1():
    return StandardMap([[1.0]], cosine_potential(1.0))


@pytest.fixture
def triangle_model():
    return bl.polygon_billiard(ACUTE_TRIANGLE)


@pytest.fixture
def orthic_orbit(triangle_model):
    return dls.orbit_with_residual(
        triangle_model, foot_parameters(ACUTE_TRIANGLE), chart_tags=(0, 1, 2), tol=1e-12
    )


def two_disk_orbit():
    model = bl.two_disk_billiard()
    orbit = dls.refine_orbit(
        model,
        dls.PeriodicOrbit(points=np.array([[0.05], [np.pi - 0.04]]), chart_tags=(0, 1)),
        tol=1e-12,
    )
    return model, orbit


def ellipse_axis_orbits(a=2.0, b=1.0):
    model = bl.ellipse_billiard(a, b, 2)
    major = dls.refine_orbit(
        model, dls.PeriodicOrbit(points=np.array([[0.04], [np.pi + 0.02]])), tol=1e-12
    )
    minor = dls.refine_orbit(
        model,
        dls.PeriodicOrbit(points=np.array([[np.pi / 2 + 0.03], [3 * np.pi / 2 - 0.02]])),
        tol=1e-12,
    )
    return model, major, minor
