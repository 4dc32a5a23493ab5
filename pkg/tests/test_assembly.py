import numpy as np
import scipy.sparse as sp
import pytest

from curvedrt.errors import ConfigError, SingularSystem
from curvedrt.geometry import GAMMA0, GAMMA1
from curvedrt.cases import zero_source, get_case
from curvedrt.fem.core import PiolaMap
from curvedrt.fem.quadrature import triangle_rule, load_degree
from curvedrt.fem.spaces import (build_spaces, interpolate_test,
                                 project_multiplier, multiplier_mean)
from curvedrt.fem.assembly import (MixedSystem, SolutionFields, assemble,
                                   solve, solve_pure_dirichlet, evaluate,
                                   solution_frame, dump_solution)
from curvedrt.meshes import generate_unit_disk, unit_disk_domain


def _solve(mesh, domain, k, f, method='pg', rhs_mode='exact_quadrature',
           threads=None):
    spaces = build_spaces(mesh, domain, k, method=method, threads=threads)
    return solve(assemble(mesh, spaces, k, f, rhs_mode=rhs_mode,
                          domain=domain, threads=threads))


def test_minimal_system_size(square):
    mesh, domain = square(1, (GAMMA1,) * 4)
    spaces = build_spaces(mesh, domain, 0)
    system = assemble(mesh, spaces, 0, zero_source)
    # one interior edge, two triangles, one mean constraint
    assert system.size == 4
    assert system.matrix.shape == (4, 4)


@pytest.mark.parametrize('method', ['pg', 'classical'])
def test_polygonal_system_is_symmetric(patch, method):
    mesh, domain, case = patch(2)
    spaces = build_spaces(mesh, domain, 1, method=method)
    system = assemble(mesh, spaces, 1, case.f)
    assert abs(system.D + system.B.T).max() <= 1e-12
    assert abs(system.A - system.A.T).max() <= 1e-12


def test_pg_changes_only_boundary_columns(annulus):
    mesh, domain = annulus(4)
    pg = build_spaces(mesh, domain, 1)
    classical = build_spaces(mesh, domain, 1, method='classical')
    f = get_case('annulus-quarter').f
    A_pg = assemble(mesh, pg, 1, f).A.toarray()
    A_cl = assemble(mesh, classical, 1, f).A.toarray()
    touched = set()
    for t in pg.classification.S_1h:
        touched |= {d for d in pg.trial.element_dofs[t] if d >= 0}
    others = [c for c in range(A_pg.shape[1]) if c not in touched]
    assert np.abs(A_pg[:, others] - A_cl[:, others]).max() <= 1e-13
    assert np.abs(A_pg - A_cl).max() > 1e-8


def test_zero_source_gives_zero(square):
    mesh, domain = square(2, (GAMMA1,) * 4)
    fields = _solve(mesh, domain, 1, zero_source)
    assert np.all(fields.flux == 0.)
    assert np.all(fields.pressure == 0.)


@pytest.mark.parametrize('n', [1, 2, 4])
@pytest.mark.parametrize('k', [1, 2])
@pytest.mark.parametrize('method', ['pg', 'classical'])
def test_patch_solution_is_exact(patch, n, k, method):
    mesh, domain, case = patch(n)
    fields = _solve(mesh, domain, k, case.f, method=method)
    test = fields.spaces.test
    assert np.allclose(fields.flux, interpolate_test(test, case.p), atol=1e-9)
    assert np.allclose(fields.pressure,
                       project_multiplier(test, case.u, 'l2'), atol=1e-9)


def test_polygonal_pg_equals_classical(patch):
    mesh, domain, case = patch(4)
    pg = _solve(mesh, domain, 1, case.f)
    cl = _solve(mesh, domain, 1, case.f, method='classical')
    assert np.allclose(pg.flux, cl.flux, atol=1e-10)
    assert np.allclose(pg.pressure, cl.pressure, atol=1e-10)


@pytest.mark.parametrize('k', [0, 1])
def test_elementwise_load_identity(annulus, k):
    mesh, domain = annulus(4)
    f = get_case('annulus-quarter').f
    fields = _solve(mesh, domain, k, f)
    trial, test = fields.spaces.trial, fields.spaces.test
    pif = project_multiplier(test, f, 'l2')
    rule = triangle_rule(load_degree(k))
    for t in range(mesh.n_triangles):
        pmap = PiolaMap(mesh.triangle_vertices(t))
        _, divp = trial.flux_at(t, rule.points, fields.flux, pmap)
        resid = divp + test.pressure_at(t, rule.points, pif)
        assert np.sqrt(pmap.detB * rule.weights @ resid ** 2) <= 1e-9


def test_solution_scales_with_source(annulus):
    mesh, domain = annulus(4)
    f = get_case('annulus-quarter').f
    one = _solve(mesh, domain, 0, f)
    three = _solve(mesh, domain, 0, lambda x: 3. * f(x))
    assert np.allclose(three.flux, 3. * one.flux, rtol=1e-10, atol=1e-14)
    assert np.allclose(three.pressure, 3. * one.pressure, rtol=1e-10,
                       atol=1e-14)


def test_threads_do_not_change_the_system(annulus):
    mesh, domain = annulus(4)
    f = get_case('annulus-quarter').f
    spaces = build_spaces(mesh, domain, 1, threads=1)
    serial = assemble(mesh, spaces, 1, f, threads=1)
    pooled = assemble(mesh, spaces, 1, f, threads=3)
    assert np.array_equal(serial.matrix.toarray(), pooled.matrix.toarray())
    assert np.array_equal(serial.rhs, pooled.rhs)


def test_fh_source_close_to_exact(annulus):
    mesh, domain = annulus(8)
    f = get_case('annulus-quarter').f
    exact = _solve(mesh, domain, 1, f)
    lattice = _solve(mesh, domain, 1, f, rhs_mode='Fh')
    assert lattice.system.rhs_mode == 'Fh'
    scale = np.abs(exact.pressure).max()
    assert np.abs(lattice.pressure - exact.pressure).max() <= 0.05 * scale


def test_bad_assembly_arguments(annulus):
    mesh, domain = annulus(4)
    spaces = build_spaces(mesh, domain, 0)
    with pytest.raises(TypeError):
        assemble(mesh, spaces, 0, zero_source, rhs_mode='midpoint')
    with pytest.raises(ConfigError):
        assemble(mesh, spaces, 0, zero_source, rhs_mode='Fh', chi=0.)
    with pytest.raises(ConfigError):
        assemble(mesh, spaces, 1, zero_source)


def test_singular_system_detected():
    zero = sp.csr_matrix((1, 1))
    system = MixedSystem(A=zero, B=zero, D=zero, rhs_flux=np.zeros(1),
                         rhs_pressure=np.ones(1), mean_constraint=None,
                         spaces=None)
    with pytest.raises(SingularSystem):
        solve(system)


def test_zero_mean_multiplier():
    domain = unit_disk_domain(GAMMA1)
    mesh = generate_unit_disk(4, domain)
    case = get_case('disk-neumann')
    fields = _solve(mesh, domain, 1, case.f)
    assert fields.multiplier is not None
    assert fields.system.size == fields.system.n_flux + \
        fields.system.n_pressure + 1
    assert abs(multiplier_mean(fields.spaces.test, fields.pressure)) <= 1e-10


def test_pure_dirichlet(square):
    mesh, domain = square(2, (GAMMA0,) * 4)
    fields = solve_pure_dirichlet(mesh, 1, zero_source, domain)
    assert fields.spaces.method == 'classical'
    assert np.all(fields.flux == 0.)
    mixed, mixed_domain = square(2, (GAMMA0, GAMMA1, GAMMA0, GAMMA1))
    with pytest.raises(ConfigError):
        solve_pure_dirichlet(mixed, 1, zero_source, mixed_domain)


def test_evaluate_reads_basis_fields(annulus):
    mesh, domain = annulus(4)
    spaces = build_spaces(mesh, domain, 1)
    system = assemble(mesh, spaces, 1, zero_source)
    t = spaces.classification.S_1h[0]
    dofs = spaces.trial.element_dofs[t]
    slot = int(np.flatnonzero(dofs >= 0)[0])
    flux = np.zeros(system.n_flux)
    flux[dofs[slot]] = 1.
    pressure = np.zeros(system.n_pressure)
    pressure[spaces.test.pressure_dofs(t)[0]] = 1.
    fields = SolutionFields(flux=flux, pressure=pressure, multiplier=None,
                            residual_norm=0., system=system)
    xi = np.array([[0.2, 0.3], [0.6, 0.1]])
    p, u = evaluate(fields, t, xi)
    vals, _ = spaces.trial.local_fields(t, xi)
    assert p.shape == (2, 2) and u.shape == (2,)
    assert np.allclose(p, vals[:, slot, :])
    assert np.allclose(u, spaces.test.pbasis.values(xi)[:, 0])
    with pytest.raises(IndexError):
        evaluate(fields, mesh.n_triangles, xi)


def test_solution_dump(annulus, tmp_path):
    mesh, domain = annulus(4)
    fields = _solve(mesh, domain, 0, get_case('annulus-quarter').f)
    df = solution_frame(fields)
    assert list(df.columns) == ['entity', 'index', 'moment', 'value']
    assert len(df) == fields.system.n_flux + fields.system.n_pressure
    path = tmp_path / 'solution.csv'
    dump_solution(fields, str(path))
    assert path.read_text().splitlines()[0] == 'entity,index,moment,value'
