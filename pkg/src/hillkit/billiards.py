"""Billiard generating functions: chord length between parametrized boundary pieces.

Each smooth piece carries a parametrization r(u) of an m-dimensional
hypersurface in R^{m+1} together with an orientation flag fixing the sign of
its tangent frame.  The generating function of a step from piece P at
parameter u to piece Q at parameter v is the chord length |P(u) - Q(v)|,
evaluated with closed-form first and second derivatives.
"""

from __future__ import annotations

import numpy as np

from .dls import DiscreteLagrangian
from .errors import CoincidentPoints, DomainError


class BoundaryPiece:
    """Parametrized boundary piece r: R^m -> R^{m+1}."""

    param_dim = 1
    ambient_dim = 2
    orientation = 1.0

    def point(self, u):
        raise NotImplementedError

    def frame(self, u):
        """Tangent frame, shape (ambient_dim, param_dim); sign set by orientation."""
        raise NotImplementedError

    def second(self, u):
        """Second derivatives of r, shape (ambient_dim, param_dim, param_dim)."""
        raise NotImplementedError


class CircleArc(BoundaryPiece):
    """Circle traversed counterclockwise (orientation 1) or clockwise (-1);
    the flag reflects the parameter so derivatives stay consistent."""

    def __init__(self, center=(0.0, 0.0), radius=1.0, orientation=1.0):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.orientation = float(orientation)

    def point(self, u):
        t = self.orientation * u[0]
        return self.center + self.radius * np.array([np.cos(t), np.sin(t)])

    def frame(self, u):
        t = self.orientation * u[0]
        return self.orientation * self.radius * np.array([[-np.sin(t)], [np.cos(t)]])

    def second(self, u):
        t = self.orientation * u[0]
        return -self.radius * np.array([[[np.cos(t)]], [[np.sin(t)]]])


class EllipseArc(BoundaryPiece):
    def __init__(self, a, b, orientation=1.0):
        self.a, self.b = float(a), float(b)
        self.orientation = float(orientation)

    def point(self, u):
        t = self.orientation * u[0]
        return np.array([self.a * np.cos(t), self.b * np.sin(t)])

    def frame(self, u):
        t = self.orientation * u[0]
        return self.orientation * np.array([[-self.a * np.sin(t)], [self.b * np.cos(t)]])

    def second(self, u):
        t = self.orientation * u[0]
        return np.array([[[-self.a * np.cos(t)]], [[-self.b * np.sin(t)]]])


class Segment(BoundaryPiece):
    """Flat piece: affine parametrization, vanishing second derivative."""

    def __init__(self, start, end):
        self.start = np.asarray(start, dtype=float)
        self.end = np.asarray(end, dtype=float)
        self.ambient_dim = self.start.size

    def point(self, u):
        return self.start + u[0] * (self.end - self.start)

    def frame(self, u):
        return (self.end - self.start)[:, None].astype(np.asarray(u).dtype, copy=False)

    def second(self, u):
        return np.zeros((self.ambient_dim, 1, 1))


class Ellipsoid(BoundaryPiece):
    """Axis-aligned ellipsoid in R^3, spherical chart u = (phi, theta).

    The coordinate order (polar angle first) makes the chart positively
    oriented with respect to the outward normal away from the poles.
    """

    param_dim = 2
    ambient_dim = 3

    def __init__(self, a, b, c, orientation=1.0):
        self.abc = np.array([float(a), float(b), float(c)])
        self.orientation = float(orientation)

    def _angles(self, u):
        return u[0], self.orientation * u[1]

    def point(self, u):
        phi, theta = self._angles(u)
        return self.abc * np.array(
            [np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)]
        )

    def frame(self, u):
        phi, theta = self._angles(u)
        a, b, c = self.abc
        d_phi = np.array(
            [a * np.cos(phi) * np.cos(theta), b * np.cos(phi) * np.sin(theta), -c * np.sin(phi)]
        )
        d_theta = self.orientation * np.array(
            [-a * np.sin(phi) * np.sin(theta), b * np.sin(phi) * np.cos(theta), 0.0]
        )
        return np.column_stack([d_phi, d_theta])

    def second(self, u):
        phi, theta = self._angles(u)
        a, b, c = self.abc
        o = self.orientation
        out = np.zeros((3, 2, 2))
        out[:, 0, 0] = [-a * np.sin(phi) * np.cos(theta), -b * np.sin(phi) * np.sin(theta), -c * np.cos(phi)]
        out[:, 0, 1] = [-o * a * np.cos(phi) * np.sin(theta), o * b * np.cos(phi) * np.cos(theta), 0.0]
        out[:, 1, 0] = out[:, 0, 1]
        out[:, 1, 1] = [-a * np.sin(phi) * np.cos(theta), -b * np.sin(phi) * np.sin(theta), 0.0]
        return out

    def domain_check(self, u):
        if not 1e-3 < float(u[0]) < np.pi - 1e-3:
            raise DomainError("spherical chart degenerates at the poles")


def chord_geometry(piece_x, u, piece_y, v, min_sep=1e-12):
    x, y = piece_x.point(u), piece_y.point(v)
    diff = x - y
    length = np.sqrt(diff @ diff)
    if length < min_sep:
        raise CoincidentPoints("chord endpoints coincide")
    return x, y, diff / length, length


def chord_value(piece_x, u, piece_y, v):
    return chord_geometry(piece_x, u, piece_y, v)[3]


def chord_grad1(piece_x, u, piece_y, v):
    _, _, e, _ = chord_geometry(piece_x, u, piece_y, v)
    return piece_x.frame(u).T @ e


def chord_grad2(piece_x, u, piece_y, v):
    _, _, e, _ = chord_geometry(piece_x, u, piece_y, v)
    return -(piece_y.frame(v).T @ e)


def chord_second_blocks(piece_x, u, piece_y, v):
    _, _, e, length = chord_geometry(piece_x, u, piece_y, v)
    tx, ty = piece_x.frame(u), piece_y.frame(v)
    proj = np.eye(e.size) - np.outer(e, e)
    d11 = tx.T @ proj @ tx / length + np.einsum("c,cab->ab", e, piece_x.second(u))
    d22 = ty.T @ proj @ ty / length - np.einsum("c,cab->ab", e, piece_y.second(v))
    d12 = -(tx.T @ proj @ ty) / length
    return d11, d22, d12


def chord_form(piece_x, u, piece_y, v):
    """The chord bilinear form on the two tangent charts, divided by the chord
    length: entry [a, b] pairs the a-th tangent direction at x with the b-th
    at y.  Equals -d1 d2 of the chord length."""
    return -chord_second_blocks(piece_x, u, piece_y, v)[2]


class BilliardLagrangian(DiscreteLagrangian):
    """Chord-length generating function along a fixed cyclic piece itinerary.

    ``cycle`` lists the index of the boundary piece visited at each orbit
    position; step i joins pieces cycle[i] and cycle[i+1].  Orbit points are
    chart parameters of their pieces.
    """

    def __init__(self, pieces, cycle):
        self.pieces = tuple(pieces)
        self.cycle = tuple(int(c) for c in cycle)
        self.nsteps = len(self.cycle)
        dims = {p.param_dim for p in self.pieces}
        if len(dims) != 1:
            raise ValueError("all pieces must share one chart dimension")
        self.dim = dims.pop()

    def step_pieces(self, i):
        a = self.pieces[self.cycle[i % self.nsteps]]
        b = self.pieces[self.cycle[(i + 1) % self.nsteps]]
        return a, b

    def value(self, i, x, y):
        a, b = self.step_pieces(i)
        return chord_value(a, x, b, y)

    def grad1(self, i, x, y):
        a, b = self.step_pieces(i)
        return chord_grad1(a, x, b, y)

    def grad2(self, i, x, y):
        a, b = self.step_pieces(i)
        return chord_grad2(a, x, b, y)

    def second_blocks(self, i, x, y):
        a, b = self.step_pieces(i)
        return chord_second_blocks(a, x, b, y)

    def domain_check(self, i, x, y):
        a, b = self.step_pieces(i)
        for piece, u in ((a, x), (b, y)):
            check = getattr(piece, "domain_check", None)
            if check is not None:
                check(u)

    def ambient_points(self, orbit):
        return np.array(
            [
                self.pieces[self.cycle[i % self.nsteps]].point(orbit.point(i))
                for i in range(orbit.period)
            ]
        )


def circle_billiard(radius=1.0, n_points=1):
    """Billiard inside a circle; a single piece, itinerary of length n_points."""
    return BilliardLagrangian([CircleArc(radius=radius)], [0] * n_points)


def ellipse_billiard(a, b, n_points=2):
    return BilliardLagrangian([EllipseArc(a, b)], [0] * n_points)


def ellipsoid_billiard(a, b, c, n_points=2):
    return BilliardLagrangian([Ellipsoid(a, b, c)], [0] * n_points)


def polygon_billiard(vertices, cycle=None):
    """Billiard inside the polygon with the given vertices (in order).

    Side i runs from vertex i to vertex i+1; the default itinerary visits
    every side once, in order.
    """
    vertices = np.asarray(vertices, dtype=float)
    nv = vertices.shape[0]
    sides = [Segment(vertices[i], vertices[(i + 1) % nv]) for i in range(nv)]
    return BilliardLagrangian(sides, cycle if cycle is not None else list(range(nv)))


def two_disk_billiard(centers=((0.0, 0.0), (4.0, 0.0)), radii=(1.0, 1.0)):
    """Open dispersing configuration: a chord bouncing between two disks."""
    disks = [CircleArc(center=c, radius=r) for c, r in zip(centers, radii)]
    return BilliardLagrangian(disks, [0, 1])


def circle_polygon_orbit(n, winding=1, offset=0.0, radius=1.0):
    """Chart parameters of the inscribed regular n-gon (or star) orbit."""
    del radius  # chart is the polar angle for any radius
    return np.array([[offset + 2 * np.pi * winding * i / n] for i in range(n)])
