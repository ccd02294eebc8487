"""Exception types shared across the package."""


class LevelsheafError(Exception):
    """Base class for all errors raised by this package."""


class MeshFormatError(LevelsheafError):
    """A mesh or function file failed to parse; carries the offending line."""

    def __init__(self, path, line_no, message):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class NotPseudomanifold(LevelsheafError):
    """Top-dimensional structure is not a closed pseudomanifold."""


class NotOrientable(LevelsheafError):
    """No consistent orientation of the top-dimensional simplices exists."""


class XHitsVertexValue(LevelsheafError):
    """A sample point collides with a vertex value of the map."""


class AmbiguousGeodesic(LevelsheafError):
    """Two circle values are antipodal; the shorter arc is undefined."""


class NoRegularSample(LevelsheafError):
    """No admissible sample point exists inside the region."""


class NotACycle(LevelsheafError):
    """The intersection chain failed its cycle check; the mesh is too
    coarse near the sampled level."""


class NotEquidimensional(LevelsheafError):
    """Degree requires a circle-valued map on a triangulated circle."""


class NotNested(LevelsheafError):
    """Expected one region to contain the other."""


class InvalidDilation(LevelsheafError):
    """A dilated region is not a valid region of the target."""


class NotNestedPreimages(LevelsheafError):
    """The perturbed preimage escapes the dilated preimage at simplex level."""


class StabilizationFailed(LevelsheafError):
    """Refinement or shrinking hit its cap before two rounds agreed."""


class DilationExceedsTarget(LevelsheafError):
    """A dilation left the working range of a real-valued target."""


class DomainMismatch(LevelsheafError):
    """Two maps were expected to share a domain complex and target kind."""
