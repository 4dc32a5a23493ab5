import logging
from types import SimpleNamespace

import numpy as np
import pytest

from curvedrt.errors import ConfigError, GramNotPositiveDefinite
from curvedrt.geometry import GAMMA0, GAMMA1
from curvedrt.cases import get_case
from curvedrt.fem.spaces import (build_spaces, interpolate_trial,
                                 interpolate_test)
from curvedrt.fem.assembly import assemble, solve, solve_pure_dirichlet
from curvedrt.analysis import (CSV_COLUMNS, ConvergenceTable, eoc_pairs,
                               fitted_order, fortran_e, compute_errors,
                               flux_dof_errors, convergence_study,
                               flux_interpolation_errors,
                               interpolation_study, dirichlet_residual,
                               dirichlet_residual_probe,
                               generalized_sigma_min, infsup_constant,
                               infsup_probe, geometry_study)


# upper and lower blocks of the published quarter-annulus table, L = 4..32
ANNULUS_K1 = {
    'l2_u': [0.28440E-2, 0.70676E-3, 0.17641E-3, 0.44086E-4],
    'l2_p': [0.38543E-2, 0.97914E-3, 0.24598E-3, 0.61577E-4],
    'l2_div': [0.82685E-2, 0.21250E-2, 0.53575E-3, 0.13424E-3],
    'max_u': [0.12974E-1, 0.31851E-2, 0.79104E-3, 0.19721E-3],
    'max_p': [0.66908E-2, 0.17059E-2, 0.44211E-3, 0.11378E-3],
}


def _published_table():
    table = ConvergenceTable()
    for i, m in enumerate(range(2, 6)):
        table.add(m, 1. / 2 ** m, {c: v[i] for c, v in ANNULUS_K1.items()})
    return table


def test_eoc_of_published_values():
    eoc = _published_table().eoc()
    assert np.isnan(eoc['eoc_u'][0])
    assert eoc['eoc_u'][1] == pytest.approx(2.009, abs=1e-3)
    for name in ('eoc_u', 'eoc_p', 'eoc_div'):
        assert np.all((eoc[name][1:] > 1.9) & (eoc[name][1:] < 2.1))


def test_eoc_power_law():
    h = 0.5 ** np.arange(2, 7)
    e = 3. * h ** 2.5
    assert np.allclose(eoc_pairs(h, e)[1:], 2.5)
    assert fitted_order(h, e) == pytest.approx(2.5)


def test_eoc_non_monotone(caplog):
    table = ConvergenceTable(columns=['l2_u'], eoc_columns={'eoc_u': 'l2_u'})
    for m, e in zip((2, 3, 4), (1e-2, 2e-2, 1e-3)):
        table.add(m, 0.5 ** m, {'l2_u': e})
    with caplog.at_level(logging.WARNING, logger='curvedrt'):
        eoc = table.eoc()
    assert np.all(np.isnan(eoc['eoc_u']))
    assert 'not monotone' in caplog.text


def test_eoc_below_floor_is_nan(caplog):
    table = ConvergenceTable(columns=['l2_u'], eoc_columns={'eoc_u': 'l2_u'})
    for m, e in zip((1, 2), (1e-13, 1e-14)):
        table.add(m, 0.5 ** m, {'l2_u': e})
    with caplog.at_level(logging.WARNING, logger='curvedrt'):
        assert np.all(np.isnan(table.eoc()['eoc_u']))
    assert 'not monotone' not in caplog.text


@pytest.mark.parametrize('x,text', [(0.0028440, '0.28440E-2'),
                                    (0.12974E-1, '0.12974E-1'),
                                    (0.44086E-4, '0.44086E-4'),
                                    (2.5, '0.25000E1'),
                                    (0., '0.00000E0')])
def test_fortran_e(x, text):
    assert fortran_e(x) == text


def test_csv_and_markdown_layout():
    table = _published_table()
    lines = table.to_csv().splitlines()
    assert lines[0] == ','.join(CSV_COLUMNS)
    assert lines[1].endswith('nan,nan,nan')
    md = table.to_markdown()
    assert md.splitlines()[0] == '| h | 1/4 | 1/8 | 1/16 | 1/32 |'
    assert '| ||u_h - u||_{0,h} | 0.28440E-2 | 0.70676E-3 |' in md
    assert '| EOC u | - | 2.009 |' in md


def test_exact_reproduction_errors(patch):
    table = ConvergenceTable()
    for n in (2, 4):
        mesh, domain, case = patch(n)
        spaces = build_spaces(mesh, domain, 2)
        fields = solve(assemble(mesh, spaces, 2, case.f))
        report = compute_errors(fields, case.u, case.p, case.divp,
                                h=1. / n)
        for col in ('l2_u', 'l2_p', 'l2_div', 'max_dof_u', 'max_dof_p'):
            assert getattr(report, col) <= 1e-9
        table.add_report(n, report)
    for vals in table.eoc().values():
        assert np.all(np.isnan(vals))


def test_flux_dof_errors_inside_are_mean_errors(square):
    mesh, domain = square(2, (GAMMA0,) * 4)
    spaces = build_spaces(mesh, domain, 1)

    def field(x):
        return np.stack([x[:, 0] - x[:, 1], 2. * x[:, 0]], axis=-1)

    coeffs = interpolate_test(spaces.test, field)
    errs = flux_dof_errors(spaces, coeffs, lambda x: field(x) + [0.01, 0.])
    nt = mesh.n_triangles
    assert len(errs) == spaces.test.n_flux
    assert np.allclose(errs[-2 * nt:].reshape(nt, 2), [0.01, 0.], atol=1e-14)
    assert errs.max() == pytest.approx(0.01, abs=1e-14)


def test_error_regions(annulus):
    mesh, domain = annulus(8)
    case = get_case('annulus-quarter')
    spaces = build_spaces(mesh, domain, 1)
    fields = solve(assemble(mesh, spaces, 1, case.f))
    on_h = compute_errors(fields, case.u, case.p, case.divp)
    on_prime = compute_errors(fields, case.u, case.p, case.divp,
                              region='omega_prime', domain=domain)
    assert on_h.h == mesh.h
    assert 0. < on_prime.l2_u
    assert on_prime.l2_u == pytest.approx(on_h.l2_u, rel=0.2)
    with pytest.raises(ConfigError):
        compute_errors(fields, case.u, case.p, case.divp,
                       region='omega_prime')


def test_interpolation_error_matches_solution_error(annulus):
    mesh, domain = annulus(4)
    case = get_case('annulus-quarter')
    spaces = build_spaces(mesh, domain, 1)
    coeffs = interpolate_trial(spaces.trial, case.p)
    fake = SimpleNamespace(spaces=spaces, flux=coeffs,
                           pressure=np.zeros(spaces.test.n_pressure))
    report = compute_errors(fake, case.u, case.p, case.divp)
    l2, l2_div = flux_interpolation_errors(spaces.trial, coeffs, case.p,
                                           case.divp)
    assert report.l2_p == pytest.approx(l2, rel=1e-12)
    assert report.l2_div == pytest.approx(l2_div, rel=1e-12)
    assert report.max_dof_p <= 1e-12


def test_rt_field_interpolates_exactly():
    family = get_case('square-dirichlet').family([1, 2])
    table = interpolation_study(lambda x: np.tile([1., 2.], (len(x), 1)),
                                lambda x: np.zeros(len(x)), family, 1,
                                which='test')
    assert np.all(table.frame['hdiv'] <= 1e-12)
    with pytest.raises(TypeError):
        interpolation_study(None, None, family, 1, which='both')


def test_polygonal_dirichlet_residual_vanishes():
    mesh, _, _ = get_case('square-dirichlet').level(2)
    assert dirichlet_residual(mesh, get_case('square-dirichlet').u, 1) <= 1e-12


def test_generalized_sigma_min_permutation():
    rng = np.random.RandomState(0)
    n = 7
    C = rng.randn(n, n)
    X = rng.randn(n, n)
    Y = rng.randn(n, n)
    G1 = X @ X.T + n * np.eye(n)
    G2 = Y @ Y.T + n * np.eye(n)
    perm = rng.permutation(n)
    P = np.eye(n)[perm]
    sigma = generalized_sigma_min(C, G1, G2)
    again = generalized_sigma_min(P @ C @ P.T, P @ G1 @ P.T, P @ G2 @ P.T)
    assert sigma > 0.
    assert again == pytest.approx(sigma, abs=1e-10)
    with pytest.raises(GramNotPositiveDefinite):
        generalized_sigma_min(C, -G1, G2)


def test_infsup_polygonal(patch):
    mesh, domain, _ = patch(2)
    for k in (0, 1):
        pg, size = infsup_constant(mesh, domain, k)
        cl, _ = infsup_constant(mesh, domain, k, method='classical')
        assert pg > 0.
        assert pg == pytest.approx(cl, rel=1e-8)
        assert size > 0


def test_infsup_zero_mean_mode(square):
    mesh, domain = square(2, (GAMMA1,) * 4)
    sigma, _ = infsup_constant(mesh, domain, 0)
    assert sigma > 0.


def test_geometry_study_rates():
    family = get_case('annulus-quarter').family([2, 3, 4])
    frame = geometry_study(family, 1).frame
    assert np.all(frame['gap'] > 0.)
    assert np.all(frame['cond'] < 1e3)
    assert np.all((frame['eoc_gap'][1:] > 1.7) & (frame['eoc_gap'][1:] < 2.3))
    assert np.all((frame['eoc_normal_dev'][1:] > 0.75) &
                  (frame['eoc_normal_dev'][1:] < 1.25))


@pytest.mark.slow
@pytest.mark.parametrize('k,order,tol', [(0, 1., 0.1), (1, 2., 0.15)])
def test_interpolation_rates(k, order, tol):
    case = get_case('annulus-quarter')
    table = interpolation_study(case.p, case.divp, case.family([2, 3, 4, 5]),
                                k, which='trial')
    eoc = table.eoc()['eoc_hdiv'][1:]
    assert np.all(np.abs(eoc - order) <= tol + 0.05)
    assert abs(eoc[-1] - order) <= tol


@pytest.mark.slow
@pytest.mark.parametrize('k', [0, 1])
def test_dirichlet_residual_rate(k):
    case = get_case('annulus-quarter')
    table = dirichlet_residual_probe(case.u, case.family([2, 3, 4, 5]), k)
    frame = table.frame
    assert np.all(frame['residual'] > 0.)
    assert frame['eoc_residual'].iloc[-1] >= 1.4


@pytest.mark.slow
@pytest.mark.parametrize('k', [0, 1])
def test_infsup_uniform(k):
    report = infsup_probe(get_case('annulus-quarter').family([1, 2, 3]), k)
    assert all(s > 0. for s in report.sigma_min)
    assert not report.flagged
    a, b = report.sigma_min[-2:]
    assert abs(a - b) / max(a, b) <= 0.2


@pytest.mark.slow
def test_e_tilde_rate():
    frame = geometry_study(get_case('annulus-quarter').family([3, 4, 5]),
                           1).frame
    ratios = frame['e_tilde_dev'].values[:-1] / frame['e_tilde_dev'].values[1:]
    assert np.all((ratios >= 1.7) & (ratios <= 2.3))
    gaps = frame['gap'].values[:-1] / frame['gap'].values[1:]
    assert np.all((gaps >= 3.4) & (gaps <= 4.6))


@pytest.mark.slow
def test_annulus_k1_orders():
    table = convergence_study(get_case('annulus-quarter'), 1, [2, 3, 4, 5],
                              progress=False)
    for name, vals in table.eoc().items():
        assert np.all((vals[1:] >= 1.9) & (vals[1:] <= 2.1)), name


@pytest.mark.slow
def test_annulus_k1_published_values():
    frame = convergence_study(get_case('annulus-quarter'), 1, [2, 3, 4, 5],
                              progress=False).frame
    for col in ('l2_u', 'l2_p', 'l2_div'):
        assert np.allclose(frame[col], ANNULUS_K1[col], rtol=0.1, atol=0.), col
    assert np.allclose(frame['max_u'], ANNULUS_K1['max_u'], rtol=0.15,
                       atol=0.)
    # flux DOF maxima follow our own normalization, only their order is kept
    assert np.all(frame['max_p'] > 0.)
    assert fitted_order(frame['h'], frame['max_p']) >= 1.5


@pytest.mark.slow
def test_annulus_k0_orders():
    table = convergence_study(get_case('annulus-quarter'), 0, [2, 3, 4, 5],
                              progress=False)
    eoc = table.eoc()
    for name in ('eoc_u', 'eoc_p'):
        assert 0.9 <= eoc[name][-1] <= 1.1, name


@pytest.mark.slow
def test_disk_neumann_k0_order():
    table = convergence_study(get_case('disk-neumann'), 0, [2, 3, 4],
                              progress=False)
    assert 0.8 <= table.eoc()['eoc_u'][-1] <= 1.3


@pytest.mark.slow
def test_disk_pure_dirichlet_k0_order():
    case = get_case('disk-dirichlet')
    table = ConvergenceTable()
    for m in (2, 3, 4):
        mesh, domain, h = case.level(m)
        assert all(be.tag == GAMMA0 for be in mesh.boundary_edges)
        fields = solve_pure_dirichlet(mesh, 0, case.f, domain)
        table.add_report(m, compute_errors(fields, case.u, case.p, case.divp,
                                           h=h))
    # p = -x/2 lies in RT_0, so the flux is exact
    assert np.all(table.frame['l2_p'] <= 1e-10)
    assert 0.8 <= table.eoc()['eoc_u'][-1] <= 1.3


@pytest.mark.slow
def test_square_pure_dirichlet_k0_flux_order():
    case = get_case('square-dirichlet')
    table = ConvergenceTable()
    for m in (2, 3, 4, 5):
        mesh, domain, h = case.level(m)
        fields = solve_pure_dirichlet(mesh, 0, case.f, domain)
        table.add_report(m, compute_errors(fields, case.u, case.p, case.divp,
                                           h=h))
    eoc = table.eoc()
    assert 0.9 <= eoc['eoc_p'][-1] <= 1.1
    assert 0.9 <= eoc['eoc_u'][-1] <= 1.1
