""" Global flux and multiplier spaces.

    The test flux space is the classical RT_k space on the polygon with zero
    normal trace on the Neumann edges. The trial flux space shares its
    numbering; on triangles with a Neumann edge the local basis is replaced
    by fields whose normal component vanishes at the feet N_i on the true
    boundary instead of along the chord.
"""
import numpy as np
import logging
import attr

from ..errors import IllConditioned, MissingModifiedElement, SpaceError
from ..geometry import GAMMA0, GAMMA1, feet_on_edge
from ..utils import element_map
from .core import (rt_basis, lagrange_basis, PiolaMap, piola_push,
                   piola_push_div, local_dofs, legendre01, pk_dim)
from .quadrature import gauss_edge_nodes, triangle_rule, load_degree


logger = logging.getLogger(__name__)

COND_LIMIT = 1e8


@attr.s(frozen=True)
class ModifiedElement(object):
    triangle = attr.ib()
    M = attr.ib()
    N = attr.ib()
    n = attr.ib()
    E_tilde = attr.ib()
    E_tilde_inv = attr.ib()
    cond_estimate = attr.ib()
    # canonical-basis coefficients of the trial fields, one column per slot
    coefficients = attr.ib()
    boundary_slots = attr.ib()
    # size of each DOF functional on a unit field, see slot_scales
    scales = attr.ib()

    @property
    def scaled_E_tilde(self):
        """ E_tilde between DOFs normalized to unit fields """
        return self.E_tilde * self.scales[None, :] / self.scales[:, None]

    def perturbation(self):
        """ ||E_tilde - I|| of the normalized matrix, maximum row-sum norm """
        E = self.scaled_E_tilde
        return float(np.abs(E - np.eye(len(E))).sum(axis=1).max())


class GlobalDofMap(object):
    """ Numbering of a flux space and the multiplier space on one mesh.

        Flux DOF ids: edge E moment j -> E (k+1) + j, then k (k+1) interior
        moments per triangle. Ids on Neumann edges are constrained and get
        no free index. Pressure DOFs are nodal values of P_k per triangle.
    """

    def __init__(self, mesh, k, kind='test', modified=None):
        self.mesh = mesh
        self.k = k
        self.kind = kind
        self.basis = rt_basis(k)
        self.pbasis = lagrange_basis(k)
        self.modified = dict(modified or {})
        ne, nt = mesh.n_edges, mesh.n_triangles
        n_int = k * (k + 1)
        self.n_full = ne * (k + 1) + nt * n_int

        constrained = []
        for be in mesh.edges_with_tag(GAMMA1):
            constrained.extend(be.edge * (k + 1) + j for j in range(k + 1))
        self.constrained_dofs = np.array(sorted(constrained), dtype=int)
        self.free_index = -np.ones(self.n_full, dtype=int)
        mask = np.ones(self.n_full, dtype=bool)
        mask[self.constrained_dofs] = False
        self.free_dofs = np.flatnonzero(mask)
        self.free_index[self.free_dofs] = np.arange(len(self.free_dofs))
        self.n_flux = len(self.free_dofs)

        nk = self.basis.dim
        self.element_dofs = np.zeros((nt, nk), dtype=int)
        self.element_signs = np.ones((nt, nk))
        for t in range(nt):
            for i in range(3):
                E, s = mesh.triangle_edges[t, i], mesh.triangle_signs[t, i]
                for j in range(k + 1):
                    slot = self.basis.edge_slot(i, j)
                    self.element_dofs[t, slot] = self.free_index[E * (k + 1) + j]
                    self.element_signs[t, slot] = float(s) ** (j + 1)
            base = ne * (k + 1) + t * n_int
            for m in range(n_int):
                self.element_dofs[t, self.basis.interior_slot(m)] = \
                    self.free_index[base + m]

        self.n_p = pk_dim(k)
        self.n_pressure = nt * self.n_p
        self.zero_mean_mode = len(mesh.edges_with_tag(GAMMA0)) == 0
        self._local = {}

    def pressure_dofs(self, t):
        return t * self.n_p + np.arange(self.n_p)

    def local_coefficients(self, t):
        """ G with global basis field c on t = sum_a phi_a G[a, c] """
        if t not in self._local:
            G = np.diag(self.element_signs[t])
            if t in self.modified:
                G = self.modified[t].coefficients @ G
            self._local[t] = G
        return self._local[t]

    def local_fields(self, t, xi, pmap=None):
        """ Values (npts, n_k, 2) and divergences (npts, n_k) of the
            element's global basis fields at reference points xi """
        if pmap is None:
            pmap = PiolaMap(self.mesh.triangle_vertices(t))
        G = self.local_coefficients(t)
        vals = piola_push(self.basis.values(xi), pmap)
        divs = piola_push_div(self.basis.divergence(xi), pmap)
        return np.einsum('pac,ab->pbc', vals, G), divs @ G

    def element_vector(self, t, x):
        dofs = self.element_dofs[t]
        c = np.zeros(len(dofs))
        free = dofs >= 0
        c[free] = x[dofs[free]]
        return c

    def flux_at(self, t, xi, x, pmap=None):
        vals, divs = self.local_fields(t, xi, pmap)
        c = self.element_vector(t, x)
        return np.einsum('pbc,b->pc', vals, c), divs @ c

    def pressure_at(self, t, xi, u):
        return self.pbasis.values(xi) @ u[self.pressure_dofs(t)]

    def entity_of(self, dof):
        """ ('edge', E, j) or ('interior', t, m) for a free flux DOF """
        full = int(self.free_dofs[dof])
        k = self.k
        n_edge_dofs = self.mesh.n_edges * (k + 1)
        if full < n_edge_dofs:
            return 'edge', full // (k + 1), full % (k + 1)
        n_int = k * (k + 1)
        rest = full - n_edge_dofs
        return 'interior', rest // n_int, rest % n_int

    def __repr__(self):
        return 'GlobalDofMap({}, k={}, flux={}, pressure={}{})'.format(
            self.kind, self.k, self.n_flux, self.n_pressure,
            ', zero-mean' if self.zero_mean_mode else '')


def build_test_space(mesh, classification, k):
    return GlobalDofMap(mesh, k, kind='test')


def slot_scales(mesh, t, k):
    """ Size of each canonical DOF of t on a unit field: |e| for the edge
        moments, |T| for the interior moments """
    basis = rt_basis(k)
    scales = np.empty(basis.dim)
    for i in range(3):
        length = mesh.edge_lengths[mesh.triangle_edges[t, i]]
        for j in range(k + 1):
            scales[basis.edge_slot(i, j)] = length
    scales[3 * (k + 1):] = PiolaMap(mesh.triangle_vertices(t)).area
    return scales


def build_modified_element(mesh, domain, t, k, cond_limit=COND_LIMIT):
    """ Boundary-modified RT_k element of a triangle with Neumann edges.

        On every Neumann edge the k+1 moment slots are traded for point
        normal values at the Gauss points M_i, then those rows of the DOF
        matrix are moved to the feet N_i with the true normals n(N_i).
        Straight edges give N_i = M_i and leave the matrix the identity.

        # Returns
            ModifiedElement
    """
    basis = rt_basis(k)
    nk = basis.dim
    bes = [be for be in mesh.boundary_edges_of(t) if be.tag == GAMMA1]
    if not bes:
        raise SpaceError('Triangle {} has no Neumann edge'.format(t))
    pmap = PiolaMap(mesh.triangle_vertices(t))
    gx, gw = gauss_edge_nodes(k)
    T = np.eye(nk)
    E = np.eye(nk)
    Ms, Ns, ns, slots = [], [], [], []
    rows = {}
    for be in bes:
        A = mesh.vertices[be.vertices[0]]
        B = mesh.vertices[be.vertices[1]]
        idx = [basis.edge_slot(be.local, j) for j in range(k + 1)]
        # moment_j = sum_i |e| w_i L_j(t_i) (q.n_T)(M_i), exact on RT_k
        W = np.array([[be.length * gw[i] * legendre01(j, gx[i])
                       for i in range(k + 1)] for j in range(k + 1)])
        T[np.ix_(idx, idx)] = W
        feet = feet_on_edge(domain.arcs[be.arc], A, B, be.normal, gx,
                            h_T=mesh.h_T[t])
        for i, ft in enumerate(feet):
            Ms.append(A + gx[i] * (B - A))
            Ns.append(ft.N)
            ns.append(ft.normal_at_N)
            rows[idx[i]] = (ft.N, ft.normal_at_N)
        slots.extend(idx)
    for slot, (N, n) in rows.items():
        xi = pmap.to_reference(N)
        phys = piola_push(basis.values(xi), pmap)[0]
        E[slot] = (phys @ n) @ T

    scales = slot_scales(mesh, t, k)
    scales[slots] = 1.
    cond = float(np.linalg.cond(E * scales[None, :] / scales[:, None]))
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditioned('Modified element on triangle {} has condition '
                             'number {:.3e}; refine the mesh'.format(t, cond),
                             cond=cond)
    if cond > 1e3:
        logger.warning('Modified element on triangle {} is poorly '
                       'conditioned ({:.3e})'.format(t, cond))
    Einv = np.linalg.inv(E)
    C = T @ Einv
    C[:, slots] = 0.
    return ModifiedElement(triangle=t, M=np.array(Ms), N=np.array(Ns),
                           n=np.array(ns), E_tilde=E, E_tilde_inv=Einv,
                           cond_estimate=cond, coefficients=C,
                           boundary_slots=tuple(slots), scales=scales)


def build_modified_elements(mesh, domain, classification, k, threads=None):
    elems = element_map(lambda t: build_modified_element(mesh, domain, t, k),
                        classification.S_1h, threads)
    return {el.triangle: el for el in elems}


def build_trial_space(mesh, classification, k, modified_elements):
    for t in classification.S_1h:
        if t not in modified_elements:
            raise MissingModifiedElement('No modified element for boundary '
                                         'triangle {}'.format(t))
    return GlobalDofMap(mesh, k, kind='trial', modified=modified_elements)


@attr.s
class SpacePair(object):
    test = attr.ib()
    trial = attr.ib()
    classification = attr.ib()
    method = attr.ib(default='pg')

    @property
    def k(self):
        return self.test.k


def build_spaces(mesh, domain, k, method='pg', classification=None,
                 threads=None):
    """ Test and trial spaces; method 'classical' uses the test space twice """
    from ..meshes.mesh import classify_boundary
    if method not in ('pg', 'classical'):
        raise TypeError('Unrecognized method: ', method)
    if classification is None:
        classification = classify_boundary(mesh, domain)
    test = build_test_space(mesh, classification, k)
    if method == 'classical':
        return SpacePair(test=test, trial=test, classification=classification,
                         method=method)
    modified = build_modified_elements(mesh, domain, classification, k,
                                       threads)
    trial = build_trial_space(mesh, classification, k, modified)
    return SpacePair(test=test, trial=trial, classification=classification,
                     method=method)


def interpolate_test(space, field):
    """ Canonical RT_k interpolant: every free DOF is the moment of `field` """
    x = np.zeros(space.n_flux)
    seen = np.zeros(space.n_flux, dtype=bool)
    for t in range(space.mesh.n_triangles):
        pmap = PiolaMap(space.mesh.triangle_vertices(t))
        vals = local_dofs(field, pmap, space.k) * space.element_signs[t]
        dofs = space.element_dofs[t]
        for slot, dof in enumerate(dofs):
            if dof >= 0 and not seen[dof]:
                x[dof] = vals[slot]
                seen[dof] = True
    return x


def interpolate_trial(space, field):
    """ Trial-space interpolant skipping the Neumann edges.

        The free DOFs of both spaces are the same moments (non-Neumann edge
        moments and interior moments), so the coefficient vector equals the
        test interpolant's; it is read through the modified trial basis.
    """
    return interpolate_test(space, field)


def project_multiplier(space, u, mode='l2'):
    """ Multiplier projections onto P_k per triangle.

        mode 'l2': L2 projection (pi_h); 'lattice': nodal interpolation, the
        element mean for k = 0; 'zero_mean': lattice values shifted to zero
        mean over the polygon.
    """
    if mode not in ('l2', 'lattice', 'zero_mean'):
        raise TypeError('Unrecognized projection mode: ', mode)
    mesh, k = space.mesh, space.k
    out = np.zeros(space.n_pressure)
    rule = triangle_rule(load_degree(k))
    phi = space.pbasis.values(rule.points)
    mass_ref = phi.T @ (rule.weights[:, None] * phi)
    for t in range(mesh.n_triangles):
        pmap = PiolaMap(mesh.triangle_vertices(t))
        if mode == 'l2' or k == 0:
            vals = u(pmap.to_physical(rule.points))
            rhs = phi.T @ (rule.weights * vals)
            out[space.pressure_dofs(t)] = np.linalg.solve(mass_ref, rhs)
        else:
            out[space.pressure_dofs(t)] = u(pmap.to_physical(
                space.pbasis.nodes))
    if mode == 'zero_mean':
        out = out - multiplier_mean(space, out)
    return out


def multiplier_mean(space, u):
    rule = triangle_rule(max(2 * space.k, 1))
    phi = space.pbasis.values(rule.points)
    total, area = 0., 0.
    for t in range(space.mesh.n_triangles):
        pmap = PiolaMap(space.mesh.triangle_vertices(t))
        total += pmap.detB * rule.weights @ (phi @ u[space.pressure_dofs(t)])
        area += pmap.area
    return total / area
