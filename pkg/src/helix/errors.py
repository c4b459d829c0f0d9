"""Exception hierarchy shared by all modules."""


class HelixError(Exception):
    """Base class for all library errors."""


class ParameterError(HelixError, ValueError):
    """A numeric parameter lies outside its admissible range."""


class GridError(HelixError, ValueError):
    """The grid is too coarse for the requested object or index is invalid."""


class MeasureError(HelixError, ValueError):
    """A vorticity measure violates containment or disjointness."""


class RegimeError(HelixError):
    """A builder refuses parameters outside the regime it is designed for."""


class GeometryError(HelixError, ValueError):
    """Inconsistent geometric input (overlapping balls, crowded vortices, ...)."""


class DegeneratePairError(HelixError, ValueError):
    """Adjacent spins are antipodal, so the signed angle is undefined."""

    def __init__(self, sites):
        self.sites = list(sites)
        super().__init__(f"antipodal neighbouring spins at {len(self.sites)} site pair(s): {self.sites[:10]}")


class ConsistencyError(HelixError):
    """An internal identity that must hold exactly was violated."""


class AdmissibilityError(HelixError, ValueError):
    """A field does not carry the curl prescribed by its vorticity measure."""


class DataError(HelixError, ValueError):
    """Records cannot be fitted or serialised (too few, nonpositive, ...)."""
