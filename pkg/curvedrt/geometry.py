""" Smooth boundary pieces and the geometric queries of the curved-boundary
    Raviart-Thomas construction.

    Every arc is traversed counterclockwise along the domain boundary (the
    domain on its left), so the outward normal is the tangent rotated
    clockwise. Arcs are pure descriptions: all queries are side-effect free.
"""
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize_scalar
from matplotlib.path import Path
import numpy as np
import logging
import attr

from .errors import GeometryError, NoIntersection, NonConvergence


logger = logging.getLogger(__name__)

GAMMA0 = 'Gamma0'
GAMMA1 = 'Gamma1'
BC_TAGS = (GAMMA0, GAMMA1)

CONVEX = 'convex'
CONCAVE = 'concave'
STRAIGHT = 'straight'


def _check_tag(tag):
    if tag not in BC_TAGS:
        raise TypeError('Unrecognized boundary tag: ', tag)
    return tag


def rotate_cw(v):
    v = np.asarray(v, dtype=float)
    return np.stack([v[..., 1], -v[..., 0]], axis=-1)


class BoundaryArc(object):
    """ Parametric boundary piece with a boundary-condition tag.

        Subclasses provide `_position(t)` and `_derivative(t)`; `reverse`
        flags arcs whose parameter runs against the boundary orientation.
    """
    kind = 'arc'

    def __init__(self, param_range, bc_tag, reverse=False):
        t0, t1 = float(param_range[0]), float(param_range[1])
        if not t1 > t0:
            raise ValueError('Degenerate parameter range: '
                             '[{}, {}]'.format(t0, t1))
        self.param_range = (t0, t1)
        self.bc_tag = _check_tag(bc_tag)
        self.reverse = reverse

    def position(self, t):
        return self._position(np.asarray(t, dtype=float))

    def derivative(self, t):
        return self._derivative(np.asarray(t, dtype=float))

    def tangent(self, t):
        d = self.derivative(t)
        d = d / np.linalg.norm(d, axis=-1, keepdims=True)
        return -d if self.reverse else d

    def outward_normal(self, t):
        return rotate_cw(self.tangent(t))

    @property
    def start_point(self):
        t = self.param_range[1] if self.reverse else self.param_range[0]
        return self.position(t)

    @property
    def end_point(self):
        t = self.param_range[0] if self.reverse else self.param_range[1]
        return self.position(t)

    @property
    def is_straight(self):
        return False

    @property
    def convexity(self):
        if self.is_straight:
            return STRAIGHT
        t0, t1 = self.param_range
        ts = np.linspace(t0, t1, 9)[1:-1]
        tau = self.tangent(ts)
        dtau = np.gradient(tau, axis=0)
        turn = np.mean(tau[:, 0] * dtau[:, 1] - tau[:, 1] * dtau[:, 0])
        if self.reverse:
            turn = -turn
        # tangent turning left along a ccw boundary: domain is locally convex
        return CONVEX if turn > 0 else CONCAVE

    def parameter_of(self, point):
        """ Curve parameter of a point lying on the arc """
        point = np.asarray(point, dtype=float)
        t0, t1 = self.param_range
        ts = np.linspace(t0, t1, 257)
        d2 = np.sum((self.position(ts) - point) ** 2, axis=-1)
        i = int(np.argmin(d2))
        lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, len(ts) - 1)]
        if hi <= lo:
            return float(ts[i])
        res = minimize_scalar(lambda t: np.sum((self.position(t) - point) ** 2),
                              bounds=(lo, hi), method='bounded',
                              options={'xatol': 1e-15})
        return float(res.x)

    def sample(self, n):
        t0, t1 = self.param_range
        ts = np.linspace(t0, t1, n)
        if self.reverse:
            ts = ts[::-1]
        return self.position(ts)

    def __repr__(self):
        return '{}({}, {})'.format(self.__class__.__name__,
                                   self.param_range, self.bc_tag)


class CircleArc(BoundaryArc):
    kind = 'circle'

    def __init__(self, center, radius, angle_range, bc_tag, inward=False):
        if not radius > 0:
            raise ValueError('Circle radius must be positive, '
                             'got {}'.format(radius))
        super().__init__(angle_range, bc_tag, reverse=inward)
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.inward = inward

    def _position(self, t):
        return self.center + self.radius * np.stack([np.cos(t), np.sin(t)],
                                                    axis=-1)

    def _derivative(self, t):
        return self.radius * np.stack([-np.sin(t), np.cos(t)], axis=-1)

    @property
    def convexity(self):
        return CONCAVE if self.inward else CONVEX

    def parameter_of(self, point):
        d = np.asarray(point, dtype=float) - self.center
        t = np.arctan2(d[1], d[0])
        t0, t1 = self.param_range
        mid = 0.5 * (t0 + t1)
        # pick the branch closest to the arc's own range
        return float(t + 2. * np.pi * np.round((mid - t) / (2. * np.pi)))


class SegmentArc(BoundaryArc):
    kind = 'segment'

    def __init__(self, p0, p1, bc_tag):
        super().__init__((0., 1.), bc_tag)
        self.p0 = np.asarray(p0, dtype=float)
        self.p1 = np.asarray(p1, dtype=float)
        if np.linalg.norm(self.p1 - self.p0) == 0.:
            raise ValueError('Degenerate segment at {}'.format(self.p0))

    def _position(self, t):
        return self.p0 + t[..., None] * (self.p1 - self.p0)

    def _derivative(self, t):
        return np.broadcast_to(self.p1 - self.p0, t.shape + (2,)).copy()

    @property
    def is_straight(self):
        return True

    def parameter_of(self, point):
        d = self.p1 - self.p0
        return float(np.dot(np.asarray(point, dtype=float) - self.p0, d) /
                     np.dot(d, d))


class SplineArc(BoundaryArc):
    """ C2 cubic spline through points given in boundary order """
    kind = 'spline'

    def __init__(self, points, bc_tag):
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[0] < 3:
            raise ValueError('Spline arcs need at least 3 points')
        seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
        if np.any(seg == 0.):
            raise ValueError('Repeated spline points')
        s = np.concatenate([[0.], np.cumsum(seg)])
        super().__init__((0., s[-1]), bc_tag)
        self.points = points
        self._spline = CubicSpline(s, points, axis=0, bc_type='natural')
        self._dspline = self._spline.derivative()

    def _position(self, t):
        return self._spline(t)

    def _derivative(self, t):
        return self._dspline(t)


def circle_arc(center, radius, angle_range, tag, inward=False):
    return CircleArc(center, radius, angle_range, tag, inward=inward)


def segment_arc(p0, p1, tag):
    return SegmentArc(p0, p1, tag)


def spline_arc(points, tag):
    return SplineArc(points, tag)


class DomainBoundary(object):

    def __init__(self, arcs, tol=1e-12, samples=512):
        if len(arcs) == 0:
            raise GeometryError('Empty domain boundary')
        self.arcs = list(arcs)
        self.tol = tol
        for i, arc in enumerate(self.arcs):
            nxt = self.arcs[(i + 1) % len(self.arcs)]
            gap = np.linalg.norm(arc.end_point - nxt.start_point)
            if gap > tol:
                raise GeometryError('Boundary loop is open between arcs '
                                    '{} and {} (gap {:.3e})'.format(
                                        i, (i + 1) % len(self.arcs), gap))
        self.convexity_flags = [arc.convexity for arc in self.arcs]
        self.transition_points = []
        for i, arc in enumerate(self.arcs):
            nxt = self.arcs[(i + 1) % len(self.arcs)]
            if arc.bc_tag != nxt.bc_tag:
                self.transition_points.append(arc.end_point)
        poly = [arc.sample(2 if arc.is_straight else samples)[:-1]
                for arc in self.arcs]
        self.polygon = np.concatenate(poly, axis=0)
        self._path = Path(np.concatenate([self.polygon, self.polygon[:1]]),
                          closed=True)

    @property
    def is_polygonal(self):
        return all(arc.is_straight for arc in self.arcs)

    def length(self, tag=None):
        total = 0.
        for arc in self.arcs:
            if tag is not None and arc.bc_tag != tag:
                continue
            pts = arc.sample(2 if arc.is_straight else 2049)
            total += np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1))
        return total

    @property
    def zero_mean_mode(self):
        return self.length(GAMMA0) == 0.

    def contains(self, points, radius=0.):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        # the ccw polygon needs a negative radius to grow the region
        return self._path.contains_points(points, radius=-abs(radius))

    def distance_to_arc(self, i, point):
        arc = self.arcs[i]
        point = np.asarray(point, dtype=float)
        t = arc.parameter_of(point)
        t0, t1 = arc.param_range
        span = t1 - t0
        if t < t0 - 1e-9 * span or t > t1 + 1e-9 * span:
            return np.inf
        return float(np.linalg.norm(arc.position(np.clip(t, t0, t1)) - point))

    def arcs_through(self, point, tol=1e-10):
        return [i for i in range(len(self.arcs))
                if self.distance_to_arc(i, point) <= tol]

    def locate(self, point, tol=1e-10):
        """ Index of the closest arc passing through `point`, or None """
        dists = [self.distance_to_arc(i, point) for i in range(len(self.arcs))]
        best = int(np.argmin(dists))
        if dists[best] > tol:
            return None
        return best

    def distance(self, point):
        return min(self.distance_to_arc(i, point)
                   for i in range(len(self.arcs)))

    def with_tags(self, tags):
        """ Copy of the boundary with per-arc tags replaced """
        if len(tags) != len(self.arcs):
            raise ValueError('Expected {} tags, got {}'.format(len(self.arcs),
                                                              len(tags)))
        arcs = []
        for arc, tag in zip(self.arcs, tags):
            if isinstance(arc, CircleArc):
                arcs.append(CircleArc(arc.center, arc.radius, arc.param_range,
                                      tag, inward=arc.inward))
            elif isinstance(arc, SegmentArc):
                arcs.append(SegmentArc(arc.p0, arc.p1, tag))
            else:
                arcs.append(SplineArc(arc.points, tag))
        return DomainBoundary(arcs, tol=self.tol)


@attr.s(frozen=True)
class FootResult(object):
    N = attr.ib()
    t_N = attr.ib()
    distance = attr.ib()
    normal_at_N = attr.ib()
    # signed offset along n_T: > 0 when the arc bulges out of the polygon
    signed = attr.ib(default=0.)


def circle_line_intersection(center, radius, M, direction):
    """ Closest intersection of the line M + s*direction with a circle """
    center = np.asarray(center, dtype=float)
    M = np.asarray(M, dtype=float)
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    w = M - center
    b = np.dot(d, w)
    c = np.dot(w, w) - radius ** 2
    disc = b * b - c
    if disc < 0:
        raise NoIntersection('Line misses circle of radius {}'.format(radius))
    sq = np.sqrt(disc)
    # stable roots of s^2 + 2bs + c = 0
    q = -b - sq if b >= 0 else -b + sq
    roots = [q] if q == 0. else [q, c / q]
    s = min(roots, key=abs)
    return M + s * d, s


def foot_of_perpendicular(arc, M, n_T, param_bracket, h_T=0., samples=8,
                          maxiter=100):
    """ Nearest intersection of the line M + s*n_T with `arc`.

        # Arguments
            arc: BoundaryArc
            M: point on the boundary edge
            n_T: unit outer normal of the edge
            param_bracket: parameter interval holding both edge endpoints
            h_T: element size, scales the root tolerance

        # Returns
            FootResult
    """
    M = np.asarray(M, dtype=float)
    n_T = np.asarray(n_T, dtype=float)
    tau = np.array([-n_T[1], n_T[0]])
    a, b = float(min(param_bracket)), float(max(param_bracket))
    if not b > a:
        raise GeometryError('Degenerate parameter bracket '
                            '[{}, {}]'.format(a, b))

    def g(t):
        return float(np.dot(arc.position(t) - M, tau))

    xtol = 1e-14 * (1. + h_T)
    ts = np.linspace(a, b, samples + 1)
    gs = np.array([g(t) for t in ts])
    roots = []
    for i in range(samples):
        if gs[i] == 0.:
            roots.append(ts[i])
        elif gs[i] * gs[i + 1] < 0.:
            try:
                t, res = brentq(g, ts[i], ts[i + 1], xtol=xtol,
                                maxiter=maxiter, full_output=True)
            except RuntimeError as err:
                raise NonConvergence('Foot solver failed on [{}, {}]: '
                                     '{}'.format(ts[i], ts[i + 1], err))
            if not res.converged:
                raise NonConvergence('Foot solver did not converge in '
                                     '{} iterations'.format(maxiter))
            roots.append(t)
    if gs[-1] == 0.:
        roots.append(ts[-1])
    if len(roots) == 0:
        raise NoIntersection('No intersection of the perpendicular through '
                             '{} with {}'.format(M, arc))
    cands = []
    for t in sorted(set(roots)):
        s = float(np.dot(arc.position(t) - M, n_T))
        cands.append((abs(s), t, s))
    cands.sort()
    if len(cands) > 1 and abs(cands[1][0] - cands[0][0]) <= 1e-14:
        logger.warning('Equidistant intersections at t={} and t={}, keeping '
                       'the smaller parameter'.format(cands[0][1],
                                                      cands[1][1]))
        cands[:2] = sorted(cands[:2], key=lambda c: c[1])
    dist, t_N, s = cands[0]
    # snap onto the perpendicular line; the arc residual is |g(t_N)|
    N = M + s * n_T
    return FootResult(N=N, t_N=float(t_N), distance=dist,
                      normal_at_N=arc.outward_normal(t_N), signed=s)


def edge_bracket(arc, A, B):
    ta, tb = arc.parameter_of(A), arc.parameter_of(B)
    return (min(ta, tb), max(ta, tb))


def feet_on_edge(arc, A, B, n_T, ts, h_T=None):
    """ Feet of the perpendiculars through the points A + t(B - A) """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if h_T is None:
        h_T = np.linalg.norm(B - A)
    bracket = edge_bracket(arc, A, B)
    feet = []
    for t in ts:
        M = A + t * (B - A)
        if arc.is_straight:
            tm = arc.parameter_of(M)
            feet.append(FootResult(N=M, t_N=tm, distance=0.,
                                   normal_at_N=np.asarray(n_T, dtype=float),
                                   signed=0.))
        else:
            feet.append(foot_of_perpendicular(arc, M, n_T, bracket, h_T=h_T))
    return feet


def sliver_rule(arc, A, B, n_T, n=4):
    """ Quadrature over the sliver between the chord AB and the arc.

        Points are M(t) + lambda * s(t) * n_T with s(t) the signed foot
        offset; weights are positive. Also returns the mean sign of s.
    """
    from .fem.quadrature import gauss_legendre
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    x, w = gauss_legendre(n)
    feet = feet_on_edge(arc, A, B, n_T, x)
    length = np.linalg.norm(B - A)
    pts, wts, signs = [], [], []
    for t, wt, ft in zip(x, w, feet):
        M = A + t * (B - A)
        for lam, wl in zip(x, w):
            pts.append(M + lam * ft.signed * np.asarray(n_T))
            wts.append(wt * wl * abs(ft.signed) * length)
        signs.append(ft.signed)
    sign = float(np.sign(np.mean(signs))) if len(signs) else 0.
    return np.array(pts), np.array(wts), sign


def max_gap_and_normal_deviation(mesh, domain, npts=3):
    """ Largest |MN| and |n(N) - n_T| over all boundary edges.

        M runs over `npts` Gauss points of every boundary edge.
    """
    if domain.is_polygonal:
        return 0., 0.
    from .fem.quadrature import gauss_legendre
    ts, _ = gauss_legendre(npts)
    gap, dev = 0., 0.
    for be in mesh.boundary_edges:
        arc = domain.arcs[be.arc]
        A, B = mesh.vertices[be.vertices[0]], mesh.vertices[be.vertices[1]]
        feet = feet_on_edge(arc, A, B, be.normal, ts)
        for ft in feet:
            gap = max(gap, ft.distance)
            dev = max(dev, float(np.linalg.norm(ft.normal_at_N - be.normal)))
    return gap, dev


def parse_domain_lines(lines, source='<domain>'):
    """ Parse a domain description.

        One arc per line, in boundary order:
            circle cx cy r t0 t1 tag inward|outward
            segment x0 y0 x1 y1 tag
            spline tag x0 y0 x1 y1 x2 y2 ...
    """
    arcs = []
    for lineno, line in enumerate(lines, start=1):
        line = line.split('#')[0].strip()
        if line == '':
            continue
        toks = line.split()
        try:
            if toks[0] == 'circle':
                cx, cy, r, t0, t1 = [float(v) for v in toks[1:6]]
                side = toks[7]
                if side not in ('inward', 'outward'):
                    raise ValueError('bad side {}'.format(side))
                arcs.append(circle_arc((cx, cy), r, (t0, t1), toks[6],
                                       inward=(side == 'inward')))
            elif toks[0] == 'segment':
                x0, y0, x1, y1 = [float(v) for v in toks[1:5]]
                arcs.append(segment_arc((x0, y0), (x1, y1), toks[5]))
            elif toks[0] == 'spline':
                vals = [float(v) for v in toks[2:]]
                if len(vals) % 2 != 0:
                    raise ValueError('odd coordinate count')
                arcs.append(spline_arc(np.reshape(vals, (-1, 2)), toks[1]))
            else:
                raise ValueError('unknown arc kind {}'.format(toks[0]))
        except (IndexError, ValueError, TypeError) as err:
            raise GeometryError('{}:{}: cannot parse "{}" ({})'.format(
                source, lineno, line, err))
    return DomainBoundary(arcs)


def read_domain_file(path):
    with open(path, 'r') as dom_f:
        return parse_domain_lines(dom_f, source=path)


def _num(v):
    return repr(float(v))


def format_arc(arc):
    if isinstance(arc, CircleArc):
        return 'circle {} {} {} {} {} {} {}'.format(
            _num(arc.center[0]), _num(arc.center[1]), _num(arc.radius),
            _num(arc.param_range[0]), _num(arc.param_range[1]), arc.bc_tag,
            'inward' if arc.inward else 'outward')
    if isinstance(arc, SegmentArc):
        return 'segment {} {} {} {} {}'.format(
            _num(arc.p0[0]), _num(arc.p0[1]), _num(arc.p1[0]),
            _num(arc.p1[1]), arc.bc_tag)
    coords = ' '.join(_num(v) for v in arc.points.reshape(-1))
    return 'spline {} {}'.format(arc.bc_tag, coords)


def write_domain_file(domain, path):
    with open(path, 'w') as dom_f:
        for arc in domain.arcs:
            dom_f.write(format_arc(arc) + '\n')
