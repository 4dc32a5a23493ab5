from collections import defaultdict
import numpy as np
import logging
import attr

from ..errors import InvalidMesh, ThreeBoundaryVertices
from ..geometry import GAMMA0, GAMMA1, foot_of_perpendicular, edge_bracket
from ..fem.core import LOCAL_EDGES


logger = logging.getLogger(__name__)


@attr.s(frozen=True)
class BoundaryEdge(object):
    edge = attr.ib()
    arc = attr.ib()
    tag = attr.ib()
    triangle = attr.ib()
    local = attr.ib()
    # endpoints in the triangle's ccw order, so the domain is on the left
    vertices = attr.ib()
    normal = attr.ib()
    length = attr.ib()


class Mesh(object):
    """ Straight-edged triangulation fitted to a curved domain.

        # Arguments
            vertices: (nv, 2) coordinates
            triangles: (nt, 3) vertex indices, counterclockwise
            boundary: dict {(a, b): (arc index, tag)} keyed by sorted
                vertex pairs; every boundary edge must be listed
    """

    def __init__(self, vertices, triangles, boundary):
        self.vertices = np.asarray(vertices, dtype=float)
        self.triangles = np.asarray(triangles, dtype=int)
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise InvalidMesh('Triangles must be vertex triples')
        for t, tri in enumerate(self.triangles):
            d1 = self.vertices[tri[1]] - self.vertices[tri[0]]
            d2 = self.vertices[tri[2]] - self.vertices[tri[0]]
            if d1[0] * d2[1] - d1[1] * d2[0] <= 0.:
                raise InvalidMesh('Triangle {} is degenerate or clockwise'
                                  ''.format(t))

        pairs = set()
        for tri in self.triangles:
            for a, b in LOCAL_EDGES:
                pairs.add(tuple(sorted((int(tri[a]), int(tri[b])))))
        self.edges = np.array(sorted(pairs), dtype=int).reshape(-1, 2)
        index = {tuple(e): i for i, e in enumerate(self.edges)}
        self.edge_index = index

        nt = len(self.triangles)
        self.triangle_edges = np.zeros((nt, 3), dtype=int)
        self.triangle_signs = np.zeros((nt, 3), dtype=int)
        self.edge_triangles = defaultdict(list)
        for t, tri in enumerate(self.triangles):
            for i, (a, b) in enumerate(LOCAL_EDGES):
                va, vb = int(tri[a]), int(tri[b])
                e = index[tuple(sorted((va, vb)))]
                self.triangle_edges[t, i] = e
                self.triangle_signs[t, i] = 1 if va < vb else -1
                self.edge_triangles[e].append((t, i))

        for e, owners in self.edge_triangles.items():
            if len(owners) > 2:
                raise InvalidMesh('Edge {} is shared by {} triangles'
                                  ''.format(tuple(self.edges[e]), len(owners)))

        self.boundary_edges = []
        self.boundary_of_edge = {}
        free = {e for e, owners in self.edge_triangles.items()
                if len(owners) == 1}
        for key, (arc, tag) in sorted(boundary.items()):
            key = tuple(sorted(key))
            if key not in index:
                raise InvalidMesh('Boundary edge {} is not a mesh edge'
                                  ''.format(key))
            e = index[key]
            if e not in free:
                raise InvalidMesh('Edge {} is interior but tagged as boundary'
                                  ''.format(key))
            if tag not in (GAMMA0, GAMMA1):
                raise TypeError('Unrecognized boundary tag: ', tag)
            t, i = self.edge_triangles[e][0]
            a, b = LOCAL_EDGES[i]
            va, vb = int(self.triangles[t][a]), int(self.triangles[t][b])
            d = self.vertices[vb] - self.vertices[va]
            length = float(np.linalg.norm(d))
            be = BoundaryEdge(edge=e, arc=int(arc), tag=tag, triangle=t,
                              local=i, vertices=(va, vb),
                              normal=np.array([d[1], -d[0]]) / length,
                              length=length)
            self.boundary_of_edge[e] = be
            self.boundary_edges.append(be)
        missing = free - set(self.boundary_of_edge)
        if missing:
            raise InvalidMesh('{} boundary edges carry no arc reference'
                              ''.format(len(missing)))

        lengths = np.linalg.norm(self.vertices[self.edges[:, 1]] -
                                 self.vertices[self.edges[:, 0]], axis=1)
        self.edge_lengths = lengths
        self.h_T = lengths[self.triangle_edges].max(axis=1)
        self.h = float(self.h_T.max())

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    def triangle_vertices(self, t):
        return self.vertices[self.triangles[t]]

    def area(self):
        v = self.vertices[self.triangles]
        d1, d2 = v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]
        return float(0.5 * np.sum(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]))

    def boundary_edges_of(self, t):
        return [self.boundary_of_edge[e] for e in self.triangle_edges[t]
                if e in self.boundary_of_edge]

    def edges_with_tag(self, tag):
        return [be for be in self.boundary_edges if be.tag == tag]

    def min_angle(self):
        v = self.vertices[self.triangles]
        worst = np.pi
        for i in range(3):
            a = v[:, (i + 1) % 3] - v[:, i]
            b = v[:, (i + 2) % 3] - v[:, i]
            cos = np.sum(a * b, axis=1) / (np.linalg.norm(a, axis=1) *
                                           np.linalg.norm(b, axis=1))
            worst = min(worst, float(np.min(np.arccos(np.clip(cos, -1, 1)))))
        return np.degrees(worst)

    def retag(self, tag_of):
        """ New mesh with boundary tags given by `tag_of(BoundaryEdge)` """
        boundary = {tuple(self.edges[be.edge]): (be.arc, tag_of(be))
                    for be in self.boundary_edges}
        return Mesh(self.vertices, self.triangles, boundary)

    def validate(self, domain=None, min_angle=20., tol=1e-10):
        """ Check conformity, orientation, angle floor and boundary fit """
        for e, owners in self.edge_triangles.items():
            n = len(owners)
            if n == 1 and e not in self.boundary_of_edge:
                raise InvalidMesh('Hanging edge {}'.format(tuple(self.edges[e])))
            if n == 2 and e in self.boundary_of_edge:
                raise InvalidMesh('Interior edge {} tagged as boundary'
                                  ''.format(tuple(self.edges[e])))
        angle = self.min_angle()
        if angle < min_angle:
            raise InvalidMesh('Minimum angle {:.2f} below floor {:.2f} deg'
                              ''.format(angle, min_angle))
        if domain is not None:
            for be in self.boundary_edges:
                for v in be.vertices:
                    d = domain.distance_to_arc(be.arc, self.vertices[v])
                    if d > tol:
                        raise InvalidMesh('Boundary vertex {} is {:.3e} off '
                                          'arc {}'.format(v, d, be.arc))
        return True

    def __repr__(self):
        return 'Mesh(nv={}, nt={}, ne={}, h={:.4g})'.format(
            self.n_vertices, self.n_triangles, self.n_edges, self.h)


def fit_boundary(vertices, triangles, domain, tol=1e-10):
    """ Arc reference and tag of every boundary edge of a triangulation """
    counts = defaultdict(int)
    for tri in triangles:
        for a, b in LOCAL_EDGES:
            counts[tuple(sorted((int(tri[a]), int(tri[b]))))] += 1
    boundary = {}
    for key, n in sorted(counts.items()):
        if n != 1:
            continue
        A, B = vertices[key[0]], vertices[key[1]]
        cands = sorted(set(domain.arcs_through(A, tol)) &
                       set(domain.arcs_through(B, tol)))
        if len(cands) == 0:
            raise InvalidMesh('Boundary edge {} has no common arc'.format(key))
        mid = 0.5 * (A + B)
        arc = min(cands, key=lambda i: domain.distance_to_arc(i, mid))
        boundary[key] = (arc, domain.arcs[arc].bc_tag)
    return boundary


@attr.s
class BoundaryClassification(object):
    S_1h = attr.ib(factory=list)
    S_0h = attr.ib(factory=list)
    # +1: arc bulges out of the polygon, -1: arc cuts into it, 0: straight
    sigma = attr.ib(factory=dict)

    @property
    def S_h(self):
        return sorted(set(self.S_1h) | set(self.S_0h))


def chord_offset(mesh, domain, be):
    """ Signed foot offset at the midpoint of a boundary edge """
    arc = domain.arcs[be.arc]
    if arc.is_straight:
        return 0.
    A, B = mesh.vertices[be.vertices[0]], mesh.vertices[be.vertices[1]]
    ft = foot_of_perpendicular(arc, 0.5 * (A + B), be.normal,
                               edge_bracket(arc, A, B), h_T=be.length)
    return ft.signed


def classify_boundary(mesh, domain):
    cls = BoundaryClassification()
    for t in range(mesh.n_triangles):
        bes = mesh.boundary_edges_of(t)
        if not bes:
            continue
        curved = [be for be in bes if not domain.arcs[be.arc].is_straight]
        if len(bes) == 3 or len(curved) > 1:
            raise ThreeBoundaryVertices(
                'Triangle {} has {} boundary edges ({} curved)'.format(
                    t, len(bes), len(curved)))
        if any(be.tag == GAMMA1 for be in bes):
            cls.S_1h.append(t)
        if any(be.tag == GAMMA0 for be in bes):
            cls.S_0h.append(t)
        sigma = 0
        if curved:
            s = chord_offset(mesh, domain, curved[0])
            sigma = int(np.sign(s))
        cls.sigma[t] = sigma
    both = set(cls.S_1h) & set(cls.S_0h)
    if both:
        logger.debug('{} corner triangles touch both boundary portions'
                     ''.format(len(both)))
    return cls
