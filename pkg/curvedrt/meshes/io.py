""" Plain-text mesh files.

    curvedrt-mesh <nv> <nt> <nbe> [<narcs>]
    arc circle|segment|spline ...    (optional, domain file syntax)
    v x y
    t i j k
    be edge arc tag

    Edge indices refer to the deterministic numbering of Mesh (sorted
    vertex pairs), so a file round-trips without storing the edge table.
"""
import numpy as np

from ..errors import InvalidMesh
from ..geometry import parse_domain_lines, format_arc
from .mesh import Mesh


MAGIC = 'curvedrt-mesh'


def write_mesh(mesh, path, domain=None):
    arc_lines = [] if domain is None else [format_arc(a) for a in domain.arcs]
    with open(path, 'w') as mesh_f:
        mesh_f.write('{} {} {} {} {}\n'.format(MAGIC, mesh.n_vertices,
                                               mesh.n_triangles,
                                               len(mesh.boundary_edges),
                                               len(arc_lines)))
        for line in arc_lines:
            mesh_f.write('arc {}\n'.format(line))
        for x, y in mesh.vertices:
            mesh_f.write('v {!r} {!r}\n'.format(float(x), float(y)))
        for i, j, k in mesh.triangles:
            mesh_f.write('t {} {} {}\n'.format(i, j, k))
        for be in mesh.boundary_edges:
            mesh_f.write('be {} {} {}\n'.format(be.edge, be.arc, be.tag))


def read_mesh(path):
    """ Returns (mesh, domain); domain is None when the file has no arcs """
    verts, tris, bes, arcs = [], [], [], []
    with open(path, 'r') as mesh_f:
        header = mesh_f.readline().split()
        if len(header) < 4 or header[0] != MAGIC:
            raise InvalidMesh('{}: not a {} file'.format(path, MAGIC))
        nv, nt, nbe = [int(v) for v in header[1:4]]
        for lineno, line in enumerate(mesh_f, start=2):
            toks = line.split()
            if not toks:
                continue
            try:
                if toks[0] == 'v':
                    verts.append((float(toks[1]), float(toks[2])))
                elif toks[0] == 't':
                    tris.append(tuple(int(v) for v in toks[1:4]))
                elif toks[0] == 'be':
                    bes.append((int(toks[1]), int(toks[2]), toks[3]))
                elif toks[0] == 'arc':
                    arcs.append(' '.join(toks[1:]))
                else:
                    raise ValueError('unknown record {}'.format(toks[0]))
            except (IndexError, ValueError) as err:
                raise InvalidMesh('{}:{}: {}'.format(path, lineno, err))
    if (len(verts), len(tris), len(bes)) != (nv, nt, nbe):
        raise InvalidMesh('{}: header announces {} vertices, {} triangles, '
                          '{} boundary edges; found {}, {}, {}'.format(
                              path, nv, nt, nbe, len(verts), len(tris),
                              len(bes)))
    # the edge table follows from the triangles alone
    edges = sorted({tuple(sorted((tri[a], tri[b])))
                    for tri in tris for a, b in ((1, 2), (2, 0), (0, 1))})
    boundary = {}
    for e, arc, tag in bes:
        if e < 0 or e >= len(edges):
            raise InvalidMesh('{}: edge index {} out of range'.format(path, e))
        boundary[edges[e]] = (arc, tag)
    mesh = Mesh(np.array(verts), np.array(tris, dtype=int), boundary)

    domain = parse_domain_lines(arcs, source=path) if arcs else None
    return mesh, domain
