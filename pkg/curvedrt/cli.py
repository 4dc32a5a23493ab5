import argparse
import timeit
import json
import sys
import numpy as np
import logging
import attr

from .errors import CurvedRTError, ConfigError, exit_code_for
from .geometry import GAMMA0, GAMMA1, read_domain_file
from .utils import setup_logging, num_threads, parse_levels, save_opts
from .cases import CASES, get_case, zero_source
from .meshes.io import read_mesh, write_mesh
from .fem.quadrature import MAX_TRIANGLE_DEGREE
from .fem.spaces import build_spaces
from .fem.assembly import assemble, solve, solution_frame
from .analysis import (convergence_study, compute_errors, infsup_probe,
                       interpolation_study, geometry_study)


logger = logging.getLogger(__name__)

COMMANDS = ('convergence', 'solve', 'mesh-gen', 'infsup', 'interp',
            'geometry')
BC_CHOICES = ('as-is', 'neumann-all', 'dirichlet-all')


@attr.s
class RunConfig(object):
    command = attr.ib()
    k = attr.ib(default=1)
    levels = attr.ib(factory=lambda: [2, 3, 4, 5])
    case = attr.ib(default=None)
    domain = attr.ib(default=None)
    mesh = attr.ib(default=None)
    L = attr.ib(default=None)
    bc = attr.ib(default='as-is')
    f = attr.ib(default='case')
    rhs_mode = attr.ib(default=None)
    method = attr.ib(default='pg')
    region = attr.ib(default='omega_h')
    which = attr.ib(default='trial')
    out = attr.ib(default=None)
    format = attr.ib(default='csv')
    save_path = attr.ib(default=None)
    seed = attr.ib(default=0)
    threads = attr.ib(default=None)
    dry_run = attr.ib(default=False)
    verbose = attr.ib(default=False)

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError('Unknown command {}'.format(self.command))
        # error quadrature needs degree 2k+4
        if self.k < 0 or 2 * self.k + 4 > MAX_TRIANGLE_DEGREE:
            raise ConfigError('Order k must lie in [0, {}], got {}'.format(
                (MAX_TRIANGLE_DEGREE - 4) // 2, self.k))
        if self.case is not None and self.case not in CASES:
            raise ConfigError('Unknown case {}; choose from {}'.format(
                self.case, ', '.join(sorted(CASES))))
        if self.command in ('convergence', 'infsup', 'interp', 'geometry'):
            if self.case is None:
                raise ConfigError('--case is required for {}'.format(
                    self.command))
            if min(self.levels) < 1:
                raise ConfigError('Levels are exponents m >= 1 of L = 2^m, '
                                  'got {}'.format(self.levels))
        if self.command == 'mesh-gen':
            if self.case is None or self.L is None or self.out is None:
                raise ConfigError('mesh-gen needs --case, --L and --out')
        if self.L is not None and (self.L < 2 or self.L & (self.L - 1)):
            raise ConfigError('--L must be a power of two >= 2, '
                              'got {}'.format(self.L))
        if self.command == 'solve':
            if self.mesh is None and (self.case is None or self.L is None):
                raise ConfigError('solve needs --mesh or --case with --L')
            if self.f == 'case' and self.case is None:
                raise ConfigError('--f case needs --case')
        if self.bc not in BC_CHOICES:
            raise ConfigError('Unknown --bc {}'.format(self.bc))
        if self.f not in ('case', 'zero'):
            raise ConfigError('Unknown --f {}'.format(self.f))
        if self.rhs_mode not in (None, 'exact_quadrature', 'Fh'):
            raise ConfigError('Unknown --rhs_mode {}'.format(self.rhs_mode))
        if self.method not in ('pg', 'classical'):
            raise ConfigError('Unknown --method {}'.format(self.method))
        if self.region not in ('omega_h', 'omega_prime'):
            raise ConfigError('Unknown --region {}'.format(self.region))
        if self.which not in ('trial', 'test'):
            raise ConfigError('Unknown --which {}'.format(self.which))
        if self.format not in ('csv', 'md'):
            raise ConfigError('Unknown --format {}'.format(self.format))
        if self.threads is not None and self.threads < 1:
            raise ConfigError('--threads must be positive')
        return self


def build_parser():
    parser = argparse.ArgumentParser(
        prog='curvedrt',
        description='Petrov-Galerkin Raviart-Thomas solver for curved '
                    'domains')
    parser.add_argument('command', choices=COMMANDS)
    parser.add_argument('--k', type=int, default=1,
                        help='RT order (Def: 1).')
    parser.add_argument('--levels', type=str, default='2..5',
                        help='Exponents m of L = 2^m, as a..b or a '
                             'comma list (Def: 2..5).')
    parser.add_argument('--case', type=str, default=None,
                        help='Built-in case: {}.'.format(
                            ', '.join(sorted(CASES))))
    parser.add_argument('--domain', type=str, default=None,
                        help='Domain description file, overrides the '
                             'domain stored in --mesh.')
    parser.add_argument('--mesh', type=str, default=None,
                        help='Mesh file written by mesh-gen.')
    parser.add_argument('--L', type=int, default=None,
                        help='Mesh parameter for solve/mesh-gen.')
    parser.add_argument('--bc', type=str, default='as-is',
                        help='as-is/neumann-all/dirichlet-all (Def: as-is).')
    parser.add_argument('--f', type=str, default='case',
                        help='Source: case or zero (Def: case).')
    parser.add_argument('--rhs_mode', type=str, default=None,
                        help='exact_quadrature/Fh (Def: per case).')
    parser.add_argument('--method', type=str, default='pg',
                        help='pg or classical (Def: pg).')
    parser.add_argument('--region', type=str, default='omega_h',
                        help='Error region omega_h/omega_prime '
                             '(Def: omega_h).')
    parser.add_argument('--which', type=str, default='trial',
                        help='Interpolant for interp: trial/test '
                             '(Def: trial).')
    parser.add_argument('--out', type=str, default=None,
                        help='Output file (Def: stdout).')
    parser.add_argument('--format', type=str, default='csv',
                        help='csv or md (Def: csv).')
    parser.add_argument('--save_path', type=str, default=None,
                        help='Directory receiving run.opts.')
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--threads', type=int, default=None,
                        help='Element-loop threads (Def: $CURVEDRT_THREADS '
                             'or 1).')
    parser.add_argument('--dry-run', dest='dry_run', action='store_true',
                        default=False)
    parser.add_argument('--verbose', action='store_true', default=False)
    return parser


def parse_config(argv=None):
    opts = build_parser().parse_args(argv)
    cfg = vars(opts)
    cfg['levels'] = parse_levels(cfg['levels'])
    return RunConfig(**cfg).validate()


def _emit(text, cfg):
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        with open(cfg.out, 'w') as out_f:
            out_f.write(text)
        logger.info('Wrote {}'.format(cfg.out))


def _table_text(table, cfg):
    if cfg.format == 'md':
        return table.to_markdown()
    return table.to_csv()


def _retag(mesh, bc):
    if bc == 'neumann-all':
        return mesh.retag(lambda be: GAMMA1)
    if bc == 'dirichlet-all':
        return mesh.retag(lambda be: GAMMA0)
    return mesh


def cmd_convergence(cfg):
    case = get_case(cfg.case)
    table = convergence_study(case, cfg.k, cfg.levels, method=cfg.method,
                              rhs_mode=cfg.rhs_mode, region=cfg.region,
                              threads=cfg.threads, progress=cfg.verbose)
    _emit(_table_text(table, cfg), cfg)
    return 0


def cmd_solve(cfg):
    case = get_case(cfg.case) if cfg.case is not None else None
    if cfg.mesh is not None:
        mesh, domain = read_mesh(cfg.mesh)
    else:
        mesh, domain, _ = case.level(int(np.log2(cfg.L)))
    if cfg.domain is not None:
        domain = read_domain_file(cfg.domain)
    elif domain is None and case is not None:
        domain = case.domain()
    if domain is None:
        raise ConfigError('The mesh carries no domain; pass --domain')
    mesh = _retag(mesh, cfg.bc)
    f = case.f if cfg.f == 'case' else zero_source
    rhs_mode = cfg.rhs_mode or (case.rhs_mode if case else 'exact_quadrature')
    spaces = build_spaces(mesh, domain, cfg.k, method=cfg.method,
                          threads=cfg.threads)
    fields = solve(assemble(mesh, spaces, cfg.k, f, rhs_mode=rhs_mode,
                            domain=domain, threads=cfg.threads))
    logger.info('Solved {} flux + {} multiplier unknowns, residual '
                '{:.3e}'.format(spaces.trial.n_flux, spaces.test.n_pressure,
                                fields.residual_norm))
    if case is not None and cfg.f == 'case' and cfg.bc == 'as-is':
        rep = compute_errors(fields, case.u, case.p, case.divp,
                             region=cfg.region, domain=domain)
        logger.info('l2_u {:.5e} l2_p {:.5e} l2_div {:.5e}'.format(
            rep.l2_u, rep.l2_p, rep.l2_div))
    _emit(solution_frame(fields).to_csv(index=False, float_format='%.12e'),
          cfg)
    return 0


def cmd_mesh_gen(cfg):
    case = get_case(cfg.case)
    mesh, domain, _ = case.level(int(np.log2(cfg.L)))
    mesh = _retag(mesh, cfg.bc)
    write_mesh(mesh, cfg.out, domain)
    logger.info('{} with {} triangles written to {}'.format(
        cfg.case, mesh.n_triangles, cfg.out))
    return 0


def cmd_infsup(cfg):
    family = get_case(cfg.case).family(cfg.levels)
    report = infsup_probe(family, cfg.k, method=cfg.method,
                          threads=cfg.threads)
    _emit(report.to_csv(), cfg)
    return 0


def cmd_interp(cfg):
    case = get_case(cfg.case)
    table = interpolation_study(case.p, case.divp, case.family(cfg.levels),
                                cfg.k, which=cfg.which, threads=cfg.threads)
    _emit(_table_text(table, cfg), cfg)
    return 0


def cmd_geometry(cfg):
    table = geometry_study(get_case(cfg.case).family(cfg.levels), cfg.k,
                           threads=cfg.threads)
    _emit(_table_text(table, cfg), cfg)
    return 0


HANDLERS = {
    'convergence': cmd_convergence,
    'solve': cmd_solve,
    'mesh-gen': cmd_mesh_gen,
    'infsup': cmd_infsup,
    'interp': cmd_interp,
    'geometry': cmd_geometry,
}


def main(argv=None):
    setup_logging()
    try:
        cfg = parse_config(argv)
        setup_logging(verbose=cfg.verbose)
        if cfg.threads is None:
            cfg.threads = num_threads()
        resolved = json.dumps(attr.asdict(cfg), indent=2, sort_keys=True)
        if cfg.dry_run:
            sys.stdout.write(resolved + '\n')
            return 0
        logger.debug('Resolved configuration: {}'.format(resolved))
        if cfg.save_path is not None:
            save_opts(attr.asdict(cfg), cfg.save_path)
        np.random.seed(cfg.seed)
        beg_t = timeit.default_timer()
        code = HANDLERS[cfg.command](cfg)
        end_t = timeit.default_timer()
        logger.info('{} done in {:.2f} s'.format(cfg.command, end_t - beg_t))
        return code
    except CurvedRTError as err:
        logger.error('{}: {}'.format(err.__class__.__name__, err))
        return exit_code_for(err)
    except ValueError as err:
        # invalid scalar arguments reaching the library
        logger.error(str(err))
        return 2
