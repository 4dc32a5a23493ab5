""" Built-in manufactured problems.

    Every callable takes an (n, 2) array of points. Exact fields are
    analytic, so they extend across the slivers between chords and arcs.
"""
import numpy as np
import attr

from .geometry import GAMMA0, GAMMA1
from .meshes.generators import (generate_quarter_annulus, generate_unit_square,
                                generate_unit_disk, quarter_annulus_domain,
                                unit_square_domain, unit_disk_domain,
                                level_to_L)


def _r(x):
    return np.hypot(x[:, 0], x[:, 1])


@attr.s(frozen=True)
class Case(object):
    name = attr.ib()
    make_domain = attr.ib()
    make_mesh = attr.ib()
    u = attr.ib()
    p = attr.ib()
    divp = attr.ib()
    f = attr.ib()
    rhs_mode = attr.ib(default='exact_quadrature')

    def domain(self):
        return self.make_domain()

    def level(self, m):
        """ (mesh, domain, nominal h) for L = 2^m """
        L = level_to_L(m)
        domain = self.make_domain()
        return self.make_mesh(L, domain), domain, 1. / L

    def family(self, levels):
        out = []
        for m in levels:
            mesh, domain, h = self.level(m)
            out.append((m, h, mesh, domain))
        return out


def _annulus_u(x):
    r = _r(x)
    return 0.5 * ((r - 1.) ** 2 - 0.25)


def _annulus_p(x):
    r = _r(x)
    return ((r - 1.) / r)[:, None] * x


def _annulus_divp(x):
    return 2. - 1. / _r(x)


def _annulus_f(x):
    return 1. / _r(x) - 2.


def _patch_u(x):
    y = x[:, 1]
    return y - y * y


def _patch_p(x):
    return np.stack([np.zeros(len(x)), 1. - 2. * x[:, 1]], axis=-1)


def _const(c):
    def _fn(x):
        return np.full(len(x), float(c))
    return _fn


def _zero_vec(x):
    return np.zeros((len(x), 2))


def _cos_u(x):
    return np.cos(np.pi * x[:, 0]) * np.cos(np.pi * x[:, 1])


def _cos_p(x):
    px, py = np.pi * x[:, 0], np.pi * x[:, 1]
    return -np.pi * np.stack([np.sin(px) * np.cos(py),
                              np.cos(px) * np.sin(py)], axis=-1)


def _sin_u(x):
    return np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1])


def _sin_p(x):
    px, py = np.pi * x[:, 0], np.pi * x[:, 1]
    return np.pi * np.stack([np.cos(px) * np.sin(py),
                             np.sin(px) * np.cos(py)], axis=-1)


def _disk_dir_u(x):
    return 0.25 * (1. - _r(x) ** 2)


def _disk_neu_u(x):
    r2 = _r(x) ** 2
    return r2 - 0.5 * r2 * r2 - 1. / 3.


def _disk_neu_p(x):
    r2 = _r(x) ** 2
    return (2. - 2. * r2)[:, None] * x


def _disk_neu_divp(x):
    return 4. - 8. * _r(x) ** 2


def _disk_neu_f(x):
    return 8. * _r(x) ** 2 - 4.


CASES = {
    # |grad u| = 0 on the radial cuts, so they are Neumann
    'annulus-quarter': Case(
        name='annulus-quarter', make_domain=quarter_annulus_domain,
        make_mesh=generate_quarter_annulus, u=_annulus_u, p=_annulus_p,
        divp=_annulus_divp, f=_annulus_f),
    'square-patch': Case(
        name='square-patch',
        make_domain=lambda: unit_square_domain((GAMMA0, GAMMA1, GAMMA0,
                                                GAMMA1)),
        make_mesh=generate_unit_square, u=_patch_u, p=_patch_p,
        divp=_const(-2.), f=_const(2.)),
    'square-neumann': Case(
        name='square-neumann',
        make_domain=lambda: unit_square_domain((GAMMA1,) * 4),
        make_mesh=generate_unit_square, u=_cos_u, p=_cos_p,
        divp=lambda x: -2. * np.pi ** 2 * _cos_u(x),
        f=lambda x: 2. * np.pi ** 2 * _cos_u(x)),
    'square-dirichlet': Case(
        name='square-dirichlet',
        make_domain=lambda: unit_square_domain((GAMMA0,) * 4),
        make_mesh=generate_unit_square, u=_sin_u, p=_sin_p,
        divp=lambda x: -2. * np.pi ** 2 * _sin_u(x),
        f=lambda x: 2. * np.pi ** 2 * _sin_u(x)),
    'disk-dirichlet': Case(
        name='disk-dirichlet', make_domain=lambda: unit_disk_domain(GAMMA0),
        make_mesh=generate_unit_disk, u=_disk_dir_u,
        p=lambda x: -0.5 * x, divp=_const(-1.), f=_const(1.)),
    'disk-neumann': Case(
        name='disk-neumann', make_domain=lambda: unit_disk_domain(GAMMA1),
        make_mesh=generate_unit_disk, u=_disk_neu_u, p=_disk_neu_p,
        divp=_disk_neu_divp, f=_disk_neu_f),
}


def get_case(name):
    if name not in CASES:
        raise TypeError('Unrecognized case: ', name)
    return CASES[name]


def zero_source(x):
    return np.zeros(len(x))
