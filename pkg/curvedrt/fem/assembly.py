""" Assembly and solution of the mixed Petrov-Galerkin system

        (p_h, q) + (u_h, div q) = 0          for all test fluxes q
        -(div p_h, v)           = (f, v)     for all v in P_k

    Unknowns are ordered [flux; multiplier; (mean multiplier)]. In the
    zero-mean mode a bordering row and column impose int u_h = 0.
"""
from scipy.sparse.linalg import splu
import scipy.sparse as sp
import pandas as pd
import numpy as np
import logging
import attr

from ..errors import SingularSystem, GeometryError, ConfigError
from ..geometry import GAMMA0
from ..utils import element_map
from .core import PiolaMap, REF_CENTROID
from .quadrature import triangle_rule, load_degree


logger = logging.getLogger(__name__)

RHS_MODES = ('exact_quadrature', 'Fh')
DEFAULT_CHI = 0.75


@attr.s
class MixedSystem(object):
    A = attr.ib()
    B = attr.ib()
    D = attr.ib()
    rhs_flux = attr.ib()
    rhs_pressure = attr.ib()
    mean_constraint = attr.ib()
    spaces = attr.ib()
    rhs_mode = attr.ib(default='exact_quadrature')

    @property
    def n_flux(self):
        return self.A.shape[1]

    @property
    def n_pressure(self):
        return self.B.shape[1]

    @property
    def size(self):
        return self.n_flux + self.n_pressure + \
            (0 if self.mean_constraint is None else 1)

    @property
    def matrix(self):
        if self.mean_constraint is None:
            return sp.bmat([[self.A, self.B], [self.D, None]], format='csc')
        r = sp.csr_matrix(self.mean_constraint[:, None])
        return sp.bmat([[self.A, self.B, None],
                        [self.D, None, r],
                        [None, r.T, None]], format='csc')

    @property
    def rhs(self):
        parts = [self.rhs_flux, self.rhs_pressure]
        if self.mean_constraint is not None:
            parts.append(np.zeros(1))
        return np.concatenate(parts)


@attr.s
class SolutionFields(object):
    flux = attr.ib()
    pressure = attr.ib()
    multiplier = attr.ib()
    residual_norm = attr.ib()
    system = attr.ib()

    @property
    def spaces(self):
        return self.system.spaces


def _lagrange_shrunk(pbasis, xi, chi):
    # nodal basis of the lattice shrunk towards the centroid by chi
    return pbasis.values(REF_CENTROID + (np.atleast_2d(xi) - REF_CENTROID) /
                         chi)


def element_blocks(spaces, t, f, rhs_mode='exact_quadrature', chi=DEFAULT_CHI,
                   domain=None):
    """ Local A (test x trial), B (test x P_k), D (P_k x trial), load, mean """
    test, trial = spaces.test, spaces.trial
    k = test.k
    mesh = test.mesh
    pmap = PiolaMap(mesh.triangle_vertices(t))
    rule = triangle_rule(load_degree(k))
    w = pmap.detB * rule.weights
    tv, tdiv = test.local_fields(t, rule.points, pmap)
    if trial is test:
        rv, rdiv = tv, tdiv
    else:
        rv, rdiv = trial.local_fields(t, rule.points, pmap)
    phi = test.pbasis.values(rule.points)

    A = np.einsum('p,pac,pbc->ab', w, tv, rv)
    B = np.einsum('p,pa,pm->am', w, tdiv, phi)
    D = -np.einsum('p,pb,pm->mb', w, rdiv, phi)
    r = phi.T @ w
    if rhs_mode == 'exact_quadrature':
        F = phi.T @ (w * f(pmap.to_physical(rule.points)))
    elif rhs_mode == 'Fh':
        nodes = REF_CENTROID + chi * (test.pbasis.nodes - REF_CENTROID)
        xs = pmap.to_physical(nodes)
        if domain is not None and not np.all(domain.contains(xs)):
            raise GeometryError('Shrunken lattice of triangle {} leaves the '
                                'domain (chi={})'.format(t, chi))
        fh = _lagrange_shrunk(test.pbasis, rule.points, chi) @ f(xs)
        F = phi.T @ (w * fh)
    else:
        raise TypeError('Unrecognized rhs mode: ', rhs_mode)
    return A, B, D, F, r


def assemble(mesh, spaces, k, f, rhs_mode='exact_quadrature', domain=None,
             chi=DEFAULT_CHI, threads=None):
    """ Assemble the mixed system.

        # Arguments
            mesh: Mesh the spaces live on
            spaces: SpacePair from build_spaces
            k: RT order, must match the spaces
            f: callable on (n, 2) points, evaluated on the polygon
                ('exact_quadrature') or on the shrunken lattices ('Fh')
            domain: DomainBoundary, enables the lattice-in-domain guard
    """
    if spaces.k != k:
        raise ConfigError('Spaces are of order {}, asked for {}'.format(
            spaces.k, k))
    if rhs_mode not in RHS_MODES:
        raise TypeError('Unrecognized rhs mode: ', rhs_mode)
    if not 0. < chi <= 1.:
        raise ConfigError('Homothety ratio must lie in (0, 1], '
                          'got {}'.format(chi))
    test, trial = spaces.test, spaces.trial
    nt = mesh.n_triangles
    blocks = element_map(lambda t: element_blocks(spaces, t, f, rhs_mode, chi,
                                                  domain), range(nt), threads)

    Ai, Aj, Av = [], [], []
    Bi, Bj, Bv = [], [], []
    Di, Dj, Dv = [], [], []
    F = np.zeros(test.n_pressure)
    r = np.zeros(test.n_pressure)
    for t, (A_loc, B_loc, D_loc, F_loc, r_loc) in enumerate(blocks):
        tdofs = test.element_dofs[t]
        rdofs = trial.element_dofs[t]
        pdofs = test.pressure_dofs(t)
        ta = np.flatnonzero(tdofs >= 0)
        ra = np.flatnonzero(rdofs >= 0)
        ii, jj = np.meshgrid(tdofs[ta], rdofs[ra], indexing='ij')
        Ai.append(ii.ravel())
        Aj.append(jj.ravel())
        Av.append(A_loc[np.ix_(ta, ra)].ravel())
        ii, jj = np.meshgrid(tdofs[ta], pdofs, indexing='ij')
        Bi.append(ii.ravel())
        Bj.append(jj.ravel())
        Bv.append(B_loc[ta].ravel())
        ii, jj = np.meshgrid(pdofs, rdofs[ra], indexing='ij')
        Di.append(ii.ravel())
        Dj.append(jj.ravel())
        Dv.append(D_loc[:, ra].ravel())
        F[pdofs] += F_loc
        r[pdofs] += r_loc

    nf, npr = test.n_flux, test.n_pressure

    def _coo(i, j, v, shape):
        if not i:
            return sp.csr_matrix(shape)
        return sp.coo_matrix((np.concatenate(v), (np.concatenate(i),
                                                  np.concatenate(j))),
                             shape=shape).tocsr()

    return MixedSystem(A=_coo(Ai, Aj, Av, (nf, nf)),
                       B=_coo(Bi, Bj, Bv, (nf, npr)),
                       D=_coo(Di, Dj, Dv, (npr, nf)),
                       rhs_flux=np.zeros(nf), rhs_pressure=F,
                       mean_constraint=r if test.zero_mean_mode else None,
                       spaces=spaces, rhs_mode=rhs_mode)


def solve(system):
    """ Direct sparse LU solve of an assembled MixedSystem """
    mat = system.matrix
    rhs = system.rhs
    try:
        lu = splu(mat)
    except RuntimeError as err:
        raise SingularSystem('Mixed system is singular: {}'.format(err),
                             pivot=0.)
    pivots = np.abs(lu.U.diagonal())
    pivot = float(pivots.min()) if len(pivots) else 0.
    if len(pivots) and pivot <= 1e-14 * float(pivots.max()):
        raise SingularSystem('Mixed system is numerically singular '
                             '(smallest pivot {:.3e})'.format(pivot),
                             pivot=pivot)
    x = lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        raise SingularSystem('Non-finite solution', pivot=pivot)
    residual = float(np.linalg.norm(mat @ x - rhs))
    if residual > 1e-9 * (1. + np.linalg.norm(rhs)):
        logger.warning('Solve residual {:.3e} above tolerance'.format(residual))
    nf, npr = system.n_flux, system.n_pressure
    mult = float(x[nf + npr]) if system.mean_constraint is not None else None
    return SolutionFields(flux=x[:nf], pressure=x[nf:nf + npr],
                          multiplier=mult, residual_norm=residual,
                          system=system)


def solve_pure_dirichlet(mesh, k, f, domain=None, threads=None):
    """ Classical symmetric RT_k solve; every boundary edge must be Dirichlet """
    from .spaces import build_spaces
    if any(be.tag != GAMMA0 for be in mesh.boundary_edges):
        raise ConfigError('Pure Dirichlet solve needs every boundary edge '
                          'tagged {}'.format(GAMMA0))
    spaces = build_spaces(mesh, domain, k, method='classical', threads=threads)
    return solve(assemble(mesh, spaces, k, f, domain=domain, threads=threads))


def evaluate(fields, element, xi):
    """ Flux and multiplier of a solution at reference points of a triangle.

        Returns p with shape (npts, 2) and u with shape (npts,).
    """
    spaces = fields.spaces
    nt = spaces.trial.mesh.n_triangles
    if element < 0 or element >= nt:
        raise IndexError('Element {} out of range [0, {})'.format(element, nt))
    xi = np.atleast_2d(xi)
    p, _ = spaces.trial.flux_at(element, xi, fields.flux)
    u = spaces.test.pressure_at(element, xi, fields.pressure)
    return p, u


def solution_frame(fields):
    space = fields.spaces.trial
    rows = []
    for dof in range(space.n_flux):
        entity, index, moment = space.entity_of(dof)
        rows.append((entity, index, moment, fields.flux[dof]))
    for t in range(space.mesh.n_triangles):
        for a, dof in enumerate(space.pressure_dofs(t)):
            rows.append(('pressure', t, a, fields.pressure[dof]))
    return pd.DataFrame(rows, columns=['entity', 'index', 'moment', 'value'])


def dump_solution(fields, path):
    solution_frame(fields).to_csv(path, index=False, float_format='%.12e')
