"""Exception hierarchy shared across the library.

The CLI maps these onto exit codes: configuration problems exit with 2,
mesh-assumption violations with 3, solver failures with 4.
"""


class FitStokesError(Exception):
    """Base class for all library errors."""


class ConfigError(FitStokesError):
    """Invalid or inconsistent run configuration."""


# --- geometry / level set ----------------------------------------------------

class TangentialContact(FitStokesError):
    """The interface touches a mesh edge tangentially (double root).

    The fitted-mesh construction assumes transversal intersections; the
    caller should refine the background mesh.
    """


class OnInterface(FitStokesError):
    """A point classified by region_of lies on the interface."""


# --- mesh construction -------------------------------------------------------

class MeshAssumptionError(FitStokesError):
    """The interface violates the two-intersection-points-per-element assumption."""


class ThreeEdgeCut(MeshAssumptionError):
    """More than two boundary intersections on a single background triangle."""


class IsolatedVertexTouch(MeshAssumptionError):
    """Inconsistent cut topology around a vertex lying on the interface."""


class NonClosedInterfacePolyline(MeshAssumptionError):
    """The polygonal interface approximation does not form closed loops."""


# --- elements ----------------------------------------------------------------

class DegenerateTriangle(FitStokesError):
    """Triangle area is numerically zero."""


class IllConditionedBasis(FitStokesError):
    """Local Vandermonde system is too ill-conditioned to invert reliably."""


class UnsupportedDegree(FitStokesError):
    """No quadrature rule available for the requested polynomial degree."""


# --- assembly / solve --------------------------------------------------------

class NonPositiveViscosity(FitStokesError):
    """Viscosity coefficients must be strictly positive."""


class SolverError(FitStokesError):
    """Base class for linear-solver failures."""


class SingularSystem(SolverError):
    """The saddle-point system is singular (inf-sup failure or bad constraints)."""


class NoConvergence(SolverError):
    """Iterative solver failed to reach the requested tolerance."""

    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = residual_history or []


class EigensolveFailure(SolverError):
    """Generalized eigenvalue solve for the inf-sup estimate failed."""
