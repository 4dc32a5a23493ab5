import numpy as np
import pytest

from curvedrt.errors import InvalidMesh, ThreeBoundaryVertices
from curvedrt.geometry import GAMMA0, GAMMA1
from curvedrt.meshes import (Mesh, classify_boundary, generate_quarter_annulus,
                             generate_unit_square, generate_unit_disk,
                             quarter_annulus_domain, unit_square_domain,
                             unit_disk_domain, read_mesh, write_mesh,
                             level_to_L)


@pytest.mark.parametrize('L,nt', [(2, 6), (4, 24), (8, 96)])
def test_quarter_annulus_counts(annulus, L, nt):
    mesh, _ = annulus(L)
    assert mesh.n_triangles == nt == 3 * L * L // 2


def test_curved_vertices_on_circles(annulus):
    mesh, domain = annulus(4)
    for be in mesh.boundary_edges:
        arc = domain.arcs[be.arc]
        if arc.is_straight:
            continue
        r = np.hypot(*mesh.vertices[list(be.vertices)].T)
        assert np.allclose(r, arc.radius, atol=1e-12)
        assert arc.radius in (0.5, 1.)


@pytest.mark.parametrize('L', [2, 4, 8, 16, 32])
def test_quarter_annulus_valid(annulus, L):
    mesh, domain = annulus(L)
    assert mesh.validate(domain, min_angle=20.)


@pytest.mark.parametrize('L', [2, 4, 8])
def test_unit_disk_valid(L):
    domain = unit_disk_domain()
    mesh = generate_unit_disk(L, domain)
    assert mesh.n_triangles == 8 * L * L
    assert mesh.validate(domain, min_angle=20.)


@pytest.mark.parametrize('n,nt,ne', [(1, 2, 5), (2, 8, 16), (4, 32, 56)])
def test_unit_square_counts(n, nt, ne):
    mesh = generate_unit_square(n)
    assert mesh.n_triangles == nt
    assert mesh.n_edges == ne == 2 * n * (n + 1) + n * n
    assert mesh.area() == pytest.approx(1.)


def test_edge_orientation_consistency(annulus):
    mesh, _ = annulus(4)
    for e, owners in mesh.edge_triangles.items():
        if len(owners) == 2:
            (t0, i0), (t1, i1) = owners
            assert mesh.triangle_signs[t0, i0] == -mesh.triangle_signs[t1, i1]


def test_mesh_size_halves(annulus):
    h = [annulus(L)[0].h for L in (8, 16, 32)]
    assert 1.9 <= h[0] / h[1] <= 2.1
    assert 1.9 <= h[1] / h[2] <= 2.1


def test_area_defect_decays(annulus):
    exact = 3. * np.pi / 16.
    defects = [abs(annulus(L)[0].area() - exact) for L in (4, 8, 16)]
    assert defects[0] / defects[1] >= 3.4
    assert defects[1] / defects[2] >= 3.4


def test_clockwise_triangle_rejected():
    with pytest.raises(InvalidMesh):
        Mesh([[0., 0.], [1., 0.], [0., 1.]], [[0, 2, 1]], {})


def test_untagged_boundary_rejected():
    with pytest.raises(InvalidMesh):
        Mesh([[0., 0.], [1., 0.], [0., 1.]], [[0, 1, 2]],
             {(0, 1): (0, GAMMA0)})


def test_classification_annulus(annulus):
    mesh, domain = annulus(4)
    cls = classify_boundary(mesh, domain)
    assert len(cls.S_0h) == 4
    assert not set(cls.S_0h) & set(cls.S_1h)
    for t in cls.S_0h:
        assert cls.sigma[t] == -1
    outer = {be.triangle for be in mesh.boundary_edges if be.arc == 1}
    for t in outer:
        assert cls.sigma[t] == 1
        assert t in cls.S_1h
    assert set(cls.S_h) == {be.triangle for be in mesh.boundary_edges}


def test_classification_square_is_straight():
    domain = unit_square_domain((GAMMA0, GAMMA1, GAMMA0, GAMMA1))
    mesh = generate_unit_square(4, domain)
    cls = classify_boundary(mesh, domain)
    assert set(cls.sigma.values()) == {0}
    assert cls.S_1h and cls.S_0h


def test_three_boundary_edges_rejected():
    domain = unit_square_domain()
    mesh = Mesh([[0., 0.], [1., 0.], [1., 1.]], [[0, 1, 2]],
                {(0, 1): (0, GAMMA1), (1, 2): (1, GAMMA1),
                 (0, 2): (2, GAMMA1)})
    with pytest.raises(ThreeBoundaryVertices):
        classify_boundary(mesh, domain)


def test_retag_all_neumann(annulus):
    mesh, _ = annulus(4)
    neu = mesh.retag(lambda be: GAMMA1)
    assert not neu.edges_with_tag(GAMMA0)
    assert len(neu.edges_with_tag(GAMMA1)) == len(mesh.boundary_edges)


def test_mesh_file_roundtrip(annulus, tmp_path):
    mesh, domain = annulus(4)
    path = str(tmp_path / 'annulus.mesh')
    write_mesh(mesh, path, domain)
    back, back_domain = read_mesh(path)
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.array_equal(back.triangles, mesh.triangles)
    assert [(b.edge, b.arc, b.tag) for b in back.boundary_edges] == \
        [(b.edge, b.arc, b.tag) for b in mesh.boundary_edges]
    assert len(back_domain.arcs) == 4
    assert back.validate(back_domain)


def test_mesh_file_without_domain(tmp_path):
    mesh = generate_unit_square(2)
    path = str(tmp_path / 'square.mesh')
    write_mesh(mesh, path)
    back, domain = read_mesh(path)
    assert domain is None
    assert back.n_edges == mesh.n_edges


def test_bad_mesh_file(tmp_path):
    path = tmp_path / 'bad.mesh'
    path.write_text('not-a-mesh 1 1 1\n')
    with pytest.raises(InvalidMesh):
        read_mesh(str(path))


def test_level_to_L():
    assert [level_to_L(m) for m in (1, 2, 5)] == [2, 4, 32]
    with pytest.raises(ValueError):
        generate_quarter_annulus(6)
