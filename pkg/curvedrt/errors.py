""" Exceptions raised across curvedrt.

    The CLI maps each family to an exit code, see EXIT_CODES.
"""


class CurvedRTError(Exception):
    pass


class ConfigError(CurvedRTError, ValueError):
    pass


class GeometryError(CurvedRTError):
    pass


class NoIntersection(GeometryError):
    """ The perpendicular to a boundary edge misses its arc (mesh too coarse) """
    pass


class NonConvergence(GeometryError):
    pass


class IllConditioned(GeometryError):
    """ Modified-element matrix too close to singular for this mesh size """

    def __init__(self, msg, cond=None):
        super().__init__(msg)
        self.cond = cond


class MeshError(CurvedRTError):
    pass


class InvalidMesh(MeshError):
    pass


class ThreeBoundaryVertices(MeshError):
    pass


class SpaceError(CurvedRTError):
    pass


class MissingModifiedElement(SpaceError):
    pass


class SolverError(CurvedRTError):
    pass


class SingularSystem(SolverError):

    def __init__(self, msg, pivot=None):
        super().__init__(msg)
        self.pivot = pivot


class GramNotPositiveDefinite(SolverError):
    pass


EXIT_CODES = [
    (ConfigError, 2),
    (GeometryError, 3),
    (MeshError, 3),
    (SpaceError, 4),
    (SolverError, 4),
]


def exit_code_for(err):
    for etype, code in EXIT_CODES:
        if isinstance(err, etype):
            return code
    return 1
