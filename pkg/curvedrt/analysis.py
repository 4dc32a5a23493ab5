""" Error measurement, convergence tables and numerical probes """
from scipy.sparse.linalg import splu
from scipy.stats import linregress
from scipy.linalg import (cholesky, solve_triangular, svdvals, null_space,
                          LinAlgError, block_diag)
from tqdm import tqdm
import scipy.sparse as sp
import pandas as pd
import numpy as np
import logging
import attr

from .errors import GramNotPositiveDefinite, ConfigError
from .geometry import GAMMA0, sliver_rule, max_gap_and_normal_deviation
from .fem.core import PiolaMap, eval_monomials, monomial_exponents
from .fem.quadrature import triangle_rule, gauss_legendre, load_degree
from .fem.spaces import (build_spaces, build_test_space, interpolate_test,
                         interpolate_trial)
from .fem.assembly import assemble, solve
from .utils import element_map


logger = logging.getLogger(__name__)

ERROR_COLUMNS = ['l2_u', 'l2_p', 'l2_div', 'max_u', 'max_p']
EOC_COLUMNS = {'eoc_u': 'l2_u', 'eoc_p': 'l2_p', 'eoc_div': 'l2_div'}
CSV_COLUMNS = ['level', 'h'] + ERROR_COLUMNS + list(EOC_COLUMNS)
EOC_FLOOR = 1e-10

ROW_LABELS = {
    'l2_u': '||u_h - u||_{0,h}',
    'l2_p': '||p_h - p||_{0,h}',
    'l2_div': '||div(p_h - p)||_{0,h}',
    'max_u': '|u_h - u|_{0,inf,h}',
    'max_p': '|p_h - p|_{0,inf,h}',
    'eoc_u': 'EOC u',
    'eoc_p': 'EOC p',
    'eoc_div': 'EOC div p',
}


@attr.s
class ErrorReport(object):
    l2_u = attr.ib()
    l2_p = attr.ib()
    l2_div = attr.ib()
    max_dof_u = attr.ib()
    max_dof_p = attr.ib()
    h = attr.ib()

    def as_row(self):
        return {'l2_u': self.l2_u, 'l2_p': self.l2_p, 'l2_div': self.l2_div,
                'max_u': self.max_dof_u, 'max_p': self.max_dof_p}


def _error_samples(spaces, fields, exact_u, exact_p, exact_divp, region,
                   domain, threads=None):
    """ Weighted samples (w, e_u, e_p, e_div) of the error over the region.

        Concave slivers are given negative weights for region 'omega_prime'.
    """
    trial, test = spaces.trial, spaces.test
    mesh = test.mesh
    rule = triangle_rule(load_degree(test.k))
    n_sliver = test.k + 3

    def _element(t):
        pmap = PiolaMap(mesh.triangle_vertices(t))
        pts = [(rule.points, pmap.detB * rule.weights)]
        if region == 'omega_prime' and \
                spaces.classification.sigma.get(t, 0) < 0:
            for be in mesh.boundary_edges_of(t):
                arc = domain.arcs[be.arc]
                if arc.is_straight:
                    continue
                A = mesh.vertices[be.vertices[0]]
                B = mesh.vertices[be.vertices[1]]
                xs, ws, sign = sliver_rule(arc, A, B, be.normal, n_sliver)
                if sign < 0:
                    pts.append((pmap.to_reference(xs), -ws))
        out = []
        for xi, w in pts:
            x = pmap.to_physical(xi)
            ph, dph = trial.flux_at(t, xi, fields[0], pmap)
            uh = test.pressure_at(t, xi, fields[1])
            out.append((w, exact_u(x) - uh, exact_p(x) - ph,
                        exact_divp(x) - dph))
        return out

    if region not in ('omega_h', 'omega_prime'):
        raise TypeError('Unrecognized error region: ', region)
    if region == 'omega_prime' and domain is None:
        raise ConfigError('Region omega_prime needs the domain boundary')
    chunks = element_map(_element, range(mesh.n_triangles), threads)
    samples = [s for chunk in chunks for s in chunk]
    w = np.concatenate([s[0] for s in samples])
    eu = np.concatenate([s[1] for s in samples])
    ep = np.concatenate([s[2] for s in samples])
    ed = np.concatenate([s[3] for s in samples])
    return w, eu, ep, ed


def _wnorm(w, e):
    if e.ndim > 1:
        e = np.sum(e * e, axis=1)
    else:
        e = e * e
    return float(np.sqrt(max(np.sum(w * e), 0.)))


def flux_dof_errors(spaces, flux, exact_p):
    """ Flux DOF errors brought to the size of point values.

        Edge moments are divided by |e|. Interior moments are taken against
        the P_{k-1} monomials of the reference coordinates and divided by
        |T|, so for k = 1 they are the mean errors of both components.
    """
    test, trial = spaces.test, spaces.trial
    mesh, k = test.mesh, test.k
    dof_p = interpolate_test(test, exact_p)
    errs = []
    for dof in range(test.n_flux):
        entity, index, _ = test.entity_of(dof)
        if entity == 'edge':
            errs.append(abs(dof_p[dof] - flux[dof]) / mesh.edge_lengths[index])
    if k > 0:
        rule = triangle_rule(load_degree(k))
        phi = eval_monomials(monomial_exponents(k - 1), rule.points)
        # detB w / |T| = w / sum(w)
        w = rule.weights / rule.weights.sum()
        for t in range(mesh.n_triangles):
            pmap = PiolaMap(mesh.triangle_vertices(t))
            ph, _ = trial.flux_at(t, rule.points, flux, pmap)
            e = exact_p(pmap.to_physical(rule.points)) - ph
            errs.extend(np.abs(np.einsum('p,pm,pc->mc', w, phi, e)).ravel())
    return np.array(errs)


def compute_errors(solution, exact_u, exact_p, exact_divp, mesh=None,
                   zero_mean_shift=None, region='omega_h', domain=None,
                   h=None, threads=None):
    """ L2 and DOF-wise errors of a discrete solution.

        # Arguments
            solution: SolutionFields (or anything with .spaces, .flux and
                .pressure)
            exact_u, exact_p, exact_divp: callables on (n, 2) points
            zero_mean_shift: subtract the mean of u - u_h; defaults to the
                space's zero-mean mode
            region: 'omega_h', or 'omega_prime' to drop concave slivers
            h: mesh size reported in the table, mesh.h by default

        # Returns
            ErrorReport
    """
    spaces = solution.spaces
    test = spaces.test
    mesh = mesh or test.mesh
    if zero_mean_shift is None:
        zero_mean_shift = test.zero_mean_mode
    w, eu, ep, ed = _error_samples(spaces, (solution.flux, solution.pressure),
                                   exact_u, exact_p, exact_divp, region,
                                   domain, threads)
    shift = float(np.sum(w * eu) / np.sum(w)) if zero_mean_shift else 0.
    l2_u = _wnorm(w, eu - shift)

    flux_err = flux_dof_errors(spaces, solution.flux, exact_p)
    max_p = float(flux_err.max()) if len(flux_err) else 0.

    nodes_err = []
    for t in range(mesh.n_triangles):
        pmap = PiolaMap(mesh.triangle_vertices(t))
        x = pmap.to_physical(test.pbasis.nodes)
        nodes_err.append(exact_u(x) - solution.pressure[test.pressure_dofs(t)])
    nodes_err = np.concatenate(nodes_err) - shift
    return ErrorReport(l2_u=l2_u, l2_p=_wnorm(w, ep), l2_div=_wnorm(w, ed),
                       max_dof_u=float(np.abs(nodes_err).max()),
                       max_dof_p=max_p, h=mesh.h if h is None else h)


def eoc_pairs(h, errors, floor=EOC_FLOOR):
    """ Orders log(e_i / e_i+1) / log(h_i / h_i+1) between consecutive levels.

        A column that is not strictly decreasing, or that falls below the
        floor, gets NaN throughout.
    """
    h = np.asarray(h, dtype=float)
    e = np.asarray(errors, dtype=float)
    out = np.full(len(e), np.nan)
    if len(e) < 2:
        return out
    if np.any(~np.isfinite(e)) or np.any(e <= floor) or \
            np.any(np.diff(e) >= 0.):
        return out
    out[1:] = np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])
    return out


def fitted_order(h, errors):
    """ Slope of the least-squares fit of log e against log h """
    fit = linregress(np.log(np.asarray(h, dtype=float)),
                     np.log(np.asarray(errors, dtype=float)))
    return float(fit.slope)


def fortran_e(x, digits=5):
    """ 0.28440E-2 style scientific notation """
    if not np.isfinite(x):
        return 'NaN'
    if x == 0.:
        return '0.{}E0'.format('0' * digits)
    exp = int(np.floor(np.log10(abs(x)))) + 1
    mant = x / 10. ** exp
    if round(abs(mant), digits) >= 1.:
        mant /= 10.
        exp += 1
    return '{}0.{}E{}'.format('-' if mant < 0 else '',
                              '{:.{}f}'.format(abs(mant), digits)[2:], exp)


class ConvergenceTable(object):
    """ Error columns per level plus empirical orders.

        # Arguments
            columns: error columns to keep
            eoc_columns: dict {eoc column: error column}
    """

    def __init__(self, columns=ERROR_COLUMNS, eoc_columns=EOC_COLUMNS,
                 floor=EOC_FLOOR):
        self.columns = list(columns)
        self.eoc_columns = dict(eoc_columns)
        self.floor = floor
        self.rows = []

    def add(self, level, h, values):
        row = {'level': level, 'h': h}
        row.update({c: float(values[c]) for c in self.columns})
        self.rows.append(row)

    def add_report(self, level, report):
        self.add(level, report.h, report.as_row())

    def eoc(self):
        """ Per-column orders, NaN where undefined """
        h = [r['h'] for r in self.rows]
        out = {}
        for name, col in self.eoc_columns.items():
            vals = eoc_pairs(h, [r[col] for r in self.rows], self.floor)
            if len(self.rows) > 1 and np.all(np.isnan(vals)) and \
                    all(r[col] > self.floor for r in self.rows):
                logger.warning('Column {} is not monotone, order '
                               'undefined'.format(col))
            out[name] = vals
        return out

    @property
    def frame(self):
        df = pd.DataFrame(self.rows, columns=['level', 'h'] + self.columns)
        for name, vals in self.eoc().items():
            df[name] = vals
        return df

    def __len__(self):
        return len(self.rows)

    def to_csv(self, path=None):
        return self.frame.to_csv(path, index=False, float_format='%.10e',
                                 na_rep='nan')

    def to_markdown(self):
        """ Quantities as rows and mesh sizes as columns """
        df = self.frame
        heads = []
        for h in df['h']:
            inv = 1. / h
            heads.append('1/{}'.format(int(round(inv)))
                         if abs(inv - round(inv)) < 1e-9 else '{:.4g}'.format(h))
        lines = ['| h | ' + ' | '.join(heads) + ' |',
                 '|---|' + '---|' * len(heads)]
        for col in self.columns + list(self.eoc_columns):
            label = ROW_LABELS.get(col, col)
            if col in self.eoc_columns:
                cells = ['-' if not np.isfinite(v) else '{:.3f}'.format(v)
                         for v in df[col]]
            else:
                cells = [fortran_e(v) for v in df[col]]
            lines.append('| {} | {} |'.format(label, ' | '.join(cells)))
        return '\n'.join(lines) + '\n'


def convergence_study(case, k, levels, method='pg', rhs_mode=None,
                      region='omega_h', threads=None, progress=True):
    """ Solve a built-in case on a level family and tabulate the errors """
    table = ConvergenceTable()
    rhs_mode = rhs_mode or case.rhs_mode
    for level in tqdm(levels, desc=case.name, disable=not progress):
        mesh, domain, h = case.level(level)
        spaces = build_spaces(mesh, domain, k, method=method, threads=threads)
        system = assemble(mesh, spaces, k, case.f, rhs_mode=rhs_mode,
                          domain=domain, threads=threads)
        fields = solve(system)
        report = compute_errors(fields, case.u, case.p, case.divp,
                                region=region, domain=domain, h=h,
                                threads=threads)
        logger.info('{} level {}: l2_u {:.5e} l2_p {:.5e} l2_div {:.5e}'.format(
            case.name, level, report.l2_u, report.l2_p, report.l2_div))
        table.add_report(level, report)
    return table


def flux_interpolation_errors(space, coeffs, field, div_field, threads=None):
    """ (||m - Pi m||, ||div(m - Pi m)||) over the polygon """
    mesh = space.mesh
    rule = triangle_rule(load_degree(space.k))

    def _element(t):
        pmap = PiolaMap(mesh.triangle_vertices(t))
        x = pmap.to_physical(rule.points)
        w = pmap.detB * rule.weights
        ph, dph = space.flux_at(t, rule.points, coeffs, pmap)
        ep = field(x) - ph
        ed = div_field(x) - dph
        return np.sum(w * np.sum(ep * ep, axis=1)), np.sum(w * ed * ed)

    parts = element_map(_element, range(mesh.n_triangles), threads)
    return (float(np.sqrt(sum(p[0] for p in parts))),
            float(np.sqrt(sum(p[1] for p in parts))))


def interpolation_study(field, div_field, family, k, which='trial',
                        threads=None):
    """ H(div) interpolation errors over a family of (level, h, mesh, domain) """
    if which not in ('trial', 'test'):
        raise TypeError('Unrecognized interpolant: ', which)
    table = ConvergenceTable(columns=['l2', 'l2_div', 'hdiv'],
                             eoc_columns={'eoc_l2': 'l2', 'eoc_div': 'l2_div',
                                          'eoc_hdiv': 'hdiv'})
    for level, h, mesh, domain in family:
        if which == 'trial':
            space = build_spaces(mesh, domain, k, threads=threads).trial
            coeffs = interpolate_trial(space, field)
        else:
            space = build_test_space(mesh, None, k)
            coeffs = interpolate_test(space, field)
        l2, l2_div = flux_interpolation_errors(space, coeffs, field,
                                               div_field, threads)
        table.add(level, h, {'l2': l2, 'l2_div': l2_div,
                             'hdiv': np.hypot(l2, l2_div)})
    return table


def hdiv_gram(space, threads=None):
    """ Sparse Gram matrix of (p, q) + (div p, div q) on the free DOFs """
    mesh = space.mesh
    rule = triangle_rule(2 * space.k + 2)

    def _element(t):
        pmap = PiolaMap(mesh.triangle_vertices(t))
        w = pmap.detB * rule.weights
        vals, divs = space.local_fields(t, rule.points, pmap)
        return (np.einsum('p,pac,pbc->ab', w, vals, vals) +
                np.einsum('p,pa,pb->ab', w, divs, divs))

    rows, cols, data = [], [], []
    for t, G in enumerate(element_map(_element, range(mesh.n_triangles),
                                      threads)):
        dofs = space.element_dofs[t]
        a = np.flatnonzero(dofs >= 0)
        ii, jj = np.meshgrid(dofs[a], dofs[a], indexing='ij')
        rows.append(ii.ravel())
        cols.append(jj.ravel())
        data.append(G[np.ix_(a, a)].ravel())
    n = space.n_flux
    if not rows:
        return sp.csr_matrix((n, n))
    return sp.coo_matrix((np.concatenate(data), (np.concatenate(rows),
                                                 np.concatenate(cols))),
                         shape=(n, n)).tocsr()


def pressure_gram(space):
    rule = triangle_rule(2 * space.k)
    phi = space.pbasis.values(rule.points)
    ref = phi.T @ (rule.weights[:, None] * phi)
    blocks = [PiolaMap(space.mesh.triangle_vertices(t)).detB * ref
              for t in range(space.mesh.n_triangles)]
    return block_diag(*blocks)


def dirichlet_residual(mesh, exact_u, k, threads=None):
    """ sup over test fluxes of |(u, q.n)_{Gamma_0h}| / [|q|] """
    space = build_test_space(mesh, None, k)
    b = np.zeros(space.n_flux)
    s, ws = gauss_legendre(k + 4)
    for be in mesh.edges_with_tag(GAMMA0):
        t = be.triangle
        pmap = PiolaMap(mesh.triangle_vertices(t))
        A = mesh.vertices[be.vertices[0]]
        B = mesh.vertices[be.vertices[1]]
        x = A + s[:, None] * (B - A)
        vals, _ = space.local_fields(t, pmap.to_reference(x), pmap)
        qn = vals @ be.normal
        loc = (ws * be.length * exact_u(x)) @ qn
        dofs = space.element_dofs[t]
        free = dofs >= 0
        np.add.at(b, dofs[free], loc[free])
    if not np.any(b):
        return 0.
    gram = hdiv_gram(space, threads).tocsc()
    y = splu(gram).solve(b)
    return float(np.sqrt(max(b @ y, 0.)))


def dirichlet_residual_probe(exact_u, family, k, threads=None):
    table = ConvergenceTable(columns=['residual'],
                             eoc_columns={'eoc_residual': 'residual'},
                             floor=1e-13)
    for level, h, mesh, _ in family:
        table.add(level, h, {'residual': dirichlet_residual(mesh, exact_u, k,
                                                            threads)})
    return table


def generalized_sigma_min(C, G_trial, G_test):
    """ min over x of max over y of y'Cx / (|y|_{G_test} |x|_{G_trial}) """
    try:
        Lp = cholesky(G_trial, lower=True)
        Lt = cholesky(G_test, lower=True)
    except LinAlgError as err:
        raise GramNotPositiveDefinite('Gram matrix is not positive definite: '
                                      '{}'.format(err))
    X = solve_triangular(Lt, C, lower=True)
    X = solve_triangular(Lp, X.T, lower=True).T
    return float(svdvals(X).min())


@attr.s
class InfSupReport(object):
    levels = attr.ib(factory=list)
    h = attr.ib(factory=list)
    sigma_min = attr.ib(factory=list)
    size = attr.ib(factory=list)
    flagged = attr.ib(default=False)

    @property
    def frame(self):
        return pd.DataFrame({'level': self.levels, 'h': self.h,
                             'sigma_min': self.sigma_min, 'size': self.size})

    def to_csv(self, path=None):
        return self.frame.to_csv(path, index=False, float_format='%.10e')


def infsup_constant(mesh, domain, k, method='pg', threads=None):
    """ Discrete inf-sup constant of the mixed form, dense """
    spaces = build_spaces(mesh, domain, k, method=method, threads=threads)
    system = assemble(mesh, spaces, k, lambda x: np.zeros(len(x)),
                      domain=domain, threads=threads)
    C = sp.bmat([[system.A, system.B], [system.D, None]]).toarray()
    Gp = pressure_gram(spaces.test)
    G_trial = block_diag(hdiv_gram(spaces.trial, threads).toarray(), Gp)
    G_test = block_diag(hdiv_gram(spaces.test, threads).toarray(), Gp)
    if spaces.test.zero_mean_mode:
        # restrict both multiplier spaces to zero mean
        Z = null_space(system.mean_constraint[None, :])
        P = block_diag(np.eye(system.n_flux), Z)
        C = P.T @ C @ P
        G_trial = P.T @ G_trial @ P
        G_test = P.T @ G_test @ P
    return generalized_sigma_min(C, G_trial, G_test), C.shape[0]


def infsup_probe(family, k, method='pg', drop_factor=0.5, threads=None):
    report = InfSupReport()
    for level, h, mesh, domain in family:
        sigma, size = infsup_constant(mesh, domain, k, method, threads)
        logger.info('level {}: sigma_min {:.6e} ({} unknowns)'.format(
            level, sigma, size))
        if report.sigma_min and sigma < drop_factor * report.sigma_min[-1]:
            logger.warning('sigma_min dropped from {:.3e} to {:.3e}'.format(
                report.sigma_min[-1], sigma))
            report.flagged = True
        report.levels.append(level)
        report.h.append(h)
        report.sigma_min.append(sigma)
        report.size.append(size)
    return report


def max_e_tilde_perturbation(mesh, domain, k, threads=None):
    """ (max ||E_tilde - I||, max condition estimate) over the mesh """
    spaces = build_spaces(mesh, domain, k, threads=threads)
    elems = spaces.trial.modified.values()
    if not elems:
        return 0., 1.
    return (max(el.perturbation() for el in elems),
            max(el.cond_estimate for el in elems))


def geometry_study(family, k, threads=None):
    """ Gap, normal deviation and E_tilde perturbation per level """
    table = ConvergenceTable(columns=['gap', 'normal_dev', 'e_tilde_dev',
                                      'cond'],
                             eoc_columns={'eoc_gap': 'gap',
                                          'eoc_normal_dev': 'normal_dev',
                                          'eoc_e_tilde': 'e_tilde_dev'},
                             floor=1e-14)
    for level, h, mesh, domain in family:
        gap, dev = max_gap_and_normal_deviation(mesh, domain)
        pert, cond = max_e_tilde_perturbation(mesh, domain, k, threads)
        table.add(level, h, {'gap': gap, 'normal_dev': dev,
                             'e_tilde_dev': pert, 'cond': cond})
    return table