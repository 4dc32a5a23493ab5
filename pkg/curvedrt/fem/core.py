""" Reference-element machinery: Raviart-Thomas basis with canonical
    degrees of freedom, Lagrange P_k basis, affine Piola map.

    Reference triangle: (0,0), (1,0), (0,1). Local edge i is opposite local
    vertex i and runs (v1, v2), (v2, v0), (v0, v1); its outward normal is
    the direction rotated clockwise.
"""
from functools import lru_cache
import numpy as np
import scipy.linalg as la

from .quadrature import triangle_rule, gauss_legendre


REF_VERTICES = np.array([[0., 0.], [1., 0.], [0., 1.]])
LOCAL_EDGES = ((1, 2), (2, 0), (0, 1))
REF_CENTROID = np.array([1. / 3., 1. / 3.])


def rt_dim(k):
    return (k + 3) * (k + 1)


def pk_dim(k):
    return (k + 1) * (k + 2) // 2


def monomial_exponents(k):
    return [(d - j, j) for d in range(k + 1) for j in range(d + 1)]


def eval_monomials(exps, pts):
    pts = np.atleast_2d(pts)
    x, y = pts[:, 0:1], pts[:, 1:2]
    a = np.array([e[0] for e in exps])
    b = np.array([e[1] for e in exps])
    return x ** a * y ** b


def legendre01(j, t):
    """ Legendre polynomial of degree j shifted to [0, 1] """
    c = np.zeros(j + 1)
    c[j] = 1.
    return np.polynomial.legendre.legval(2. * np.asarray(t) - 1., c)


def lattice_points(k):
    """ Principal lattice of order k on the reference triangle """
    if k == 0:
        return REF_CENTROID[None, :].copy()
    return np.array([[i / k, j / k] for d in range(k + 1)
                     for j in range(d + 1) for i in [d - j]])


def edge_points(i, t):
    a, b = LOCAL_EDGES[i]
    t = np.asarray(t, dtype=float)[:, None]
    return REF_VERTICES[a] + t * (REF_VERTICES[b] - REF_VERTICES[a])


def edge_scaled_normal(i, verts=REF_VERTICES):
    """ |e| n_e for local edge i of the triangle `verts` """
    a, b = LOCAL_EDGES[i]
    d = verts[b] - verts[a]
    return np.array([d[1], -d[0]])


class LagrangeBasis(object):
    """ Nodal P_k basis at the principal lattice (centroid for k = 0) """

    def __init__(self, k):
        self.k = k
        self.exps = monomial_exponents(k)
        self.nodes = lattice_points(k)
        vander = eval_monomials(self.exps, self.nodes)
        self.coef = np.linalg.inv(vander)
        self.dim = len(self.exps)

    def values(self, pts):
        return eval_monomials(self.exps, pts) @ self.coef


@lru_cache(maxsize=None)
def lagrange_basis(k):
    return LagrangeBasis(k)


@lru_cache(maxsize=None)
def _orthonormal_pk(k):
    """ Monomial coefficients of an L2-orthonormal basis of P_k """
    exps = monomial_exponents(k)
    rule = triangle_rule(2 * k)
    vals = eval_monomials(exps, rule.points)
    gram = vals.T @ (rule.weights[:, None] * vals)
    chol = np.linalg.cholesky(gram)
    return exps, np.linalg.inv(chol)


class RTLocalBasis(object):
    """ Raviart-Thomas RT_k basis on the reference triangle.

        Built from the monomial spanning set (m, 0), (0, m), m in P_k and
        x * h, h homogeneous of degree k, by inverting the matrix of the
        canonical degrees of freedom on it:

            edge i, j = 0..k:   int_e q.n L_j(t) ds
            interior (k > 0):   int_T q.w  w in orthonormal [P_{k-1}]^2

        Fields are stored as coefficients over the monomials of P_{k+1}.
    """

    def __init__(self, k):
        if k < 0:
            raise ValueError('RT order must be nonnegative, got {}'.format(k))
        self.k = k
        self.dim = rt_dim(k)
        self.n_edge = k + 1
        self.n_interior = k * (k + 1)
        self.exps = monomial_exponents(k + 1)
        self.div_exps = monomial_exponents(k)
        index = {e: i for i, e in enumerate(self.exps)}

        pre = []
        for (a, b) in monomial_exponents(k):
            c = np.zeros((2, len(self.exps)))
            c[0, index[(a, b)]] = 1.
            pre.append(c)
        for (a, b) in monomial_exponents(k):
            c = np.zeros((2, len(self.exps)))
            c[1, index[(a, b)]] = 1.
            pre.append(c)
        for j in range(k + 1):
            a, b = k - j, j
            c = np.zeros((2, len(self.exps)))
            c[0, index[(a + 1, b)]] = 1.
            c[1, index[(a, b + 1)]] = 1.
            pre.append(c)
        pre = np.array(pre)
        if pre.shape[0] != self.dim:
            raise RuntimeError('RT spanning set has {} members, '
                               'expected {}'.format(pre.shape[0], self.dim))

        vander = self.apply_dofs_to_coef(pre)
        try:
            inv = la.inv(vander)
        except la.LinAlgError as err:
            raise RuntimeError('Singular RT_{} DOF system: {}'.format(k, err))
        # field j = sum_i inv[i, j] pre_i
        self.coef = np.einsum('ij,icm->jcm', inv, pre)
        self.div_coef = self._divergence_coef(self.coef)

    def interior_weights(self, pts):
        """ Interior test fields w_m at pts, shape (npts, k(k+1), 2) """
        pts = np.atleast_2d(pts)
        if self.k == 0:
            return np.zeros((len(pts), 0, 2))
        exps, ortho = _orthonormal_pk(self.k - 1)
        phi = eval_monomials(exps, pts) @ ortho.T
        npk = phi.shape[1]
        w = np.zeros((len(pts), 2 * npk, 2))
        w[:, :npk, 0] = phi
        w[:, npk:, 1] = phi
        return w

    def _eval_coef(self, coef, pts):
        vals = eval_monomials(self.exps, pts)
        return np.einsum('pm,jcm->pjc', vals, coef)

    def apply_dofs_to_coef(self, coef):
        """ Matrix H[i, j] of DOF i applied to field coef[j] """
        k = self.k
        t, w = gauss_legendre(k + 2)
        rows = []
        for i in range(3):
            pts = edge_points(i, t)
            qn = self._eval_coef(coef, pts) @ edge_scaled_normal(i)
            for j in range(k + 1):
                rows.append((w * legendre01(j, t)) @ qn)
        if k > 0:
            rule = triangle_rule(2 * k + 1)
            q = self._eval_coef(coef, rule.points)
            ww = self.interior_weights(rule.points)
            rows.extend(np.einsum('p,pmc,pjc->mj', rule.weights, ww, q))
        return np.array(rows)

    def _divergence_coef(self, coef):
        index = {e: i for i, e in enumerate(self.div_exps)}
        out = np.zeros((coef.shape[0], len(self.div_exps)))
        for m, (a, b) in enumerate(self.exps):
            if a > 0:
                out[:, index[(a - 1, b)]] += a * coef[:, 0, m]
            if b > 0:
                out[:, index[(a, b - 1)]] += b * coef[:, 1, m]
        return out

    def values(self, pts):
        """ Reference fields at pts, shape (npts, dim, 2) """
        return self._eval_coef(self.coef, pts)

    def divergence(self, pts):
        """ Reference divergences at pts, shape (npts, dim) """
        return eval_monomials(self.div_exps, pts) @ self.div_coef.T

    def edge_slot(self, i, j):
        return i * (self.k + 1) + j

    def interior_slot(self, m):
        return 3 * (self.k + 1) + m


@lru_cache(maxsize=None)
def rt_basis(k):
    return RTLocalBasis(k)


class PiolaMap(object):
    """ Affine map x = B xi + b of the reference triangle onto `vertices` """

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float)
        self.vertices = v
        self.B = np.column_stack([v[1] - v[0], v[2] - v[0]])
        self.b = v[0].copy()
        self.detB = float(np.linalg.det(self.B))
        if self.detB <= 0.:
            raise ValueError('Degenerate or clockwise triangle '
                             '(detB = {:.3e})'.format(self.detB))
        self.Binv = np.linalg.inv(self.B)

    def to_physical(self, xi):
        return np.atleast_2d(xi) @ self.B.T + self.b

    def to_reference(self, x):
        return (np.atleast_2d(x) - self.b) @ self.Binv.T

    @property
    def area(self):
        return 0.5 * self.detB


def piola_push(ref_values, pmap):
    """ q = B q_ref / detB, vectorized over leading axes """
    return ref_values @ pmap.B.T / pmap.detB


def piola_push_div(ref_div, pmap):
    return ref_div / pmap.detB


def local_dofs(field, pmap, k, edge_points_n=None, interior_degree=None):
    """ Canonical RT_k DOFs of a physical vector field in local orientation.

        # Arguments
            field: callable mapping an (n, 2) array of points to (n, 2)
            pmap: PiolaMap of the triangle
            k: RT order
    """
    basis = rt_basis(k)
    n = edge_points_n or (k + 4)
    t, w = gauss_legendre(n)
    dofs = np.zeros(basis.dim)
    for i in range(3):
        pts = pmap.to_physical(edge_points(i, t))
        qn = field(pts) @ edge_scaled_normal(i, pmap.vertices)
        for j in range(k + 1):
            dofs[basis.edge_slot(i, j)] = (w * legendre01(j, t)) @ qn
    if k > 0:
        rule = triangle_rule(min(interior_degree or (2 * k + 6), 20))
        vals = field(pmap.to_physical(rule.points))
        # int_T q . B^-T w dx = detB * int_ref q(x(xi)) . B^-T w(xi)
        ww = basis.interior_weights(rule.points) @ pmap.Binv
        mom = pmap.detB * np.einsum('p,pmc,pc->m', rule.weights, ww, vals)
        dofs[3 * (k + 1):] = mom
    return dofs
