""" Structured mesh families.

    The curved families push a uniform split of a square onto a disk with
    the max-norm map: rho = max(|x|, |y|), the angle varying linearly along
    each square side. Squares of the square grid keep their vertex pattern,
    so refinement halves h uniformly.
"""
import numpy as np

from ..geometry import (DomainBoundary, GAMMA0, GAMMA1, circle_arc,
                        segment_arc)
from .mesh import Mesh, fit_boundary


def _check_power_of_two(L, name='L'):
    if not isinstance(L, (int, np.integer)) or L < 2 or (L & (L - 1)) != 0:
        raise ValueError('{} must be a power of two >= 2, got {}'.format(name,
                                                                       L))


def square_to_quarter_disk(x, y):
    """ Max-norm map of [0,1]^2 onto the closed quarter unit disk """
    rho = max(x, y)
    if rho == 0.:
        return np.zeros(2)
    if x >= y:
        theta = 0.25 * np.pi * y / x
    else:
        theta = 0.5 * np.pi - 0.25 * np.pi * x / y
    return rho * np.array([np.cos(theta), np.sin(theta)])


def _split_cell(v00, v10, v11, v01, anti=False):
    # "/" joins v00-v11, "\" joins v10-v01; both triangles ccw
    if anti:
        return [(v00, v10, v01), (v10, v11, v01)]
    return [(v00, v10, v11), (v00, v11, v01)]


def _ccw(vertices, tris):
    out = []
    for tri in tris:
        a, b, c = vertices[list(tri)]
        if (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) < 0:
            tri = (tri[0], tri[2], tri[1])
        out.append(tri)
    return np.array(out, dtype=int)


def quarter_annulus_domain(cut_tag=GAMMA1, inner_tag=GAMMA0, outer_tag=GAMMA1):
    """ {1/2 <= r <= 1, x, y >= 0}, counterclockwise from (1/2, 0) """
    return DomainBoundary([
        segment_arc((0.5, 0.), (1., 0.), cut_tag),
        circle_arc((0., 0.), 1., (0., 0.5 * np.pi), outer_tag),
        segment_arc((0., 1.), (0., 0.5), cut_tag),
        circle_arc((0., 0.), 0.5, (0., 0.5 * np.pi), inner_tag, inward=True),
    ])


def generate_quarter_annulus(L, domain=None):
    """ Quarter-annulus mesh with 3 L^2 / 2 triangles.

        An L x L grid of the unit square is mapped onto the quarter disk;
        cells inside [0, 1/2]^2 are dropped. The two outer corner cells use
        the other diagonal so that no triangle gets two boundary edges.
    """
    _check_power_of_two(L)
    if domain is None:
        domain = quarter_annulus_domain()
    half = L // 2
    ids = {}
    verts = []
    for j in range(L + 1):
        for i in range(L + 1):
            if i < half and j < half:
                continue
            ids[i, j] = len(verts)
            verts.append(square_to_quarter_disk(i / L, j / L))
    verts = np.array(verts)

    tris = []
    for j in range(L):
        for i in range(L):
            if i < half and j < half:
                continue
            anti = L >= 4 and ((i, j) == (L - 1, 0) or (i, j) == (0, L - 1))
            tris.extend(_split_cell(ids[i, j], ids[i + 1, j],
                                    ids[i + 1, j + 1], ids[i, j + 1], anti))
    tris = _ccw(verts, tris)
    return Mesh(verts, tris, fit_boundary(verts, tris, domain))


def unit_square_domain(tags=(GAMMA1, GAMMA1, GAMMA1, GAMMA1)):
    """ Sides in boundary order: bottom, right, top, left """
    corners = [(0., 0.), (1., 0.), (1., 1.), (0., 1.)]
    return DomainBoundary([segment_arc(corners[i], corners[(i + 1) % 4],
                                       tags[i]) for i in range(4)])


def generate_unit_square(n, domain=None):
    """ n x n grid of the unit square, each cell split along "/" """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError('n must be a positive integer, got {}'.format(n))
    if domain is None:
        domain = unit_square_domain()
    verts = np.array([[i / n, j / n] for j in range(n + 1)
                      for i in range(n + 1)])

    def vid(i, j):
        return j * (n + 1) + i

    tris = []
    for j in range(n):
        for i in range(n):
            tris.extend(_split_cell(vid(i, j), vid(i + 1, j),
                                    vid(i + 1, j + 1), vid(i, j + 1)))
    tris = np.array(tris, dtype=int)
    return Mesh(verts, tris, fit_boundary(verts, tris, domain))


def unit_disk_domain(tag=GAMMA0):
    return DomainBoundary([
        circle_arc((0., 0.), 1., (q * 0.5 * np.pi, (q + 1) * 0.5 * np.pi), tag)
        for q in range(4)])


def generate_unit_disk(L, domain=None):
    """ Unit disk from the quarter-disk map applied per quadrant.

        Each quadrant carries an L x L grid; diagonals are mirrored across
        the axes so that the pattern is symmetric.
    """
    _check_power_of_two(L)
    if domain is None:
        domain = unit_disk_domain()
    ids = {}
    verts = []
    for j in range(-L, L + 1):
        for i in range(-L, L + 1):
            ids[i, j] = len(verts)
            p = square_to_quarter_disk(abs(i) / L, abs(j) / L)
            verts.append(p * np.array([np.sign(i) or 1., np.sign(j) or 1.]))
    verts = np.array(verts)

    tris = []
    for j in range(-L, L):
        for i in range(-L, L):
            # quadrants I and III keep "/", II and IV use "\"
            anti = (i >= 0) != (j >= 0)
            tris.extend(_split_cell(ids[i, j], ids[i + 1, j],
                                    ids[i + 1, j + 1], ids[i, j + 1], anti))
    tris = _ccw(verts, tris)
    return Mesh(verts, tris, fit_boundary(verts, tris, domain))


def level_to_L(m):
    return 2 ** int(m)
