from scipy.special import roots_jacobi
from functools import lru_cache
import numpy as np
import attr


MAX_TRIANGLE_DEGREE = 20


@attr.s(frozen=True)
class QuadratureRule(object):
    # points are reference coordinates, (n, 2) on triangles and (n,) on [0, 1]
    points = attr.ib()
    weights = attr.ib()
    exact_degree = attr.ib()

    def __len__(self):
        return len(self.weights)


def _freeze(*arrays):
    for arr in arrays:
        arr.setflags(write=False)
    return arrays


@lru_cache(maxsize=None)
def gauss_legendre(n):
    """ n-point Gauss-Legendre nodes and weights on [0, 1] """
    if n < 1:
        raise ValueError('Gauss rule needs at least one point, got {}'.format(n))
    x, w = np.polynomial.legendre.leggauss(n)
    return _freeze(0.5 * (x + 1.), 0.5 * w)


def gauss_edge_nodes(k):
    """ The k+1 Gauss points of an edge, exact up to degree 2k+1 """
    if k < 0:
        raise ValueError('Order must be nonnegative, got {}'.format(k))
    return gauss_legendre(k + 1)


def edge_rule(degree):
    n = max(1, int(np.ceil((degree + 1) / 2.)))
    x, w = gauss_legendre(n)
    return QuadratureRule(points=x, weights=w, exact_degree=2 * n - 1)


@lru_cache(maxsize=None)
def triangle_rule(degree):
    """ Conical product rule on the reference triangle (0,0), (1,0), (0,1).

        Collapses the triangle onto the unit square with x = u,
        y = v (1 - u): Gauss-Jacobi(1, 0) in u absorbs the Jacobian,
        Gauss-Legendre in v. Exact for total degree `degree`.
    """
    if degree < 0 or degree > MAX_TRIANGLE_DEGREE:
        raise ValueError('Unsupported triangle quadrature degree: '
                         '{} (max {})'.format(degree, MAX_TRIANGLE_DEGREE))
    n = max(1, int(np.ceil((degree + 1) / 2.)))
    t, wt = roots_jacobi(n, 1., 0.)
    u = 0.5 * (t + 1.)
    wu = 0.25 * wt
    v, wv = gauss_legendre(n)
    uu, vv = np.meshgrid(u, v, indexing='ij')
    pts = np.stack([uu.ravel(), (vv * (1. - uu)).ravel()], axis=-1)
    wts = np.outer(wu, wv).ravel()
    pts, wts = _freeze(pts, wts)
    return QuadratureRule(points=pts, weights=wts, exact_degree=degree)


def load_degree(k):
    """ Triangle rule degree for loads, projections and error norms """
    return min(max(2 * k + 4, 8), MAX_TRIANGLE_DEGREE)
