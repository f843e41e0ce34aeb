"""Error types shared across the package.

Every failure that a caller can act on carries a stable ``code`` string so the
CLI and the HTTP service can map it without string-matching messages.
"""


class OrgbError(Exception):
    """Base class for all domain errors.

    Attributes:
        code: stable machine-readable identifier, e.g. "flat-region".
    """

    code = "error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class FormatError(OrgbError):
    """Unreadable or unsupported file content."""

    code = "format"


class EmptyRegionError(OrgbError):
    """A mask or rect selects zero pixels."""

    code = "empty-region"


class FlatRegionError(OrgbError):
    """Selected pixels carry no usable brightness variation."""

    code = "flat-region"


class InvalidEpsilonError(OrgbError):
    """An offset estimate that cannot be applied (component >= 1, or not finite)."""

    code = "invalid-epsilon"


class DegenerateBundleError(OrgbError):
    """A line bundle with no well-conditioned convergence point."""

    code = "degenerate-bundle"


class DegenerateKError(OrgbError):
    """Fewer distinct feature points than requested clusters."""

    code = "degenerate-k"


class DimensionMismatchError(OrgbError):
    """Operands whose shapes or grids do not agree."""

    code = "dimension-mismatch"


class GridMismatchError(OrgbError):
    """Spectra defined on different wavelength grids."""

    code = "grid-mismatch"


class SceneError(OrgbError):
    """A scene description that cannot be rendered."""

    code = "scene"


class ParameterError(OrgbError):
    """An argument outside its documented range."""

    code = "invalid-parameter"
