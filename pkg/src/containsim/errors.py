"""Exception hierarchy shared by every pipeline stage."""


class ContainsimError(Exception):
    """Base class for all library errors."""


class ScenarioError(ContainsimError):
    """Malformed or inconsistent scenario input."""


class AssumptionError(ContainsimError):
    """A structural assumption on the network or the agents does not hold.

    ``assumption`` is the assumption number (1-7) that failed.
    """

    def __init__(self, assumption, detail):
        self.assumption = assumption
        self.detail = detail
        super().__init__(f"Assumption {assumption} violated: {detail}")


class SingularMatrixError(ContainsimError):
    """LU factorization met a pivot below the singularity threshold."""


class SpectraOverlapError(SingularMatrixError):
    """Sylvester operator is numerically singular (shared eigenvalues)."""


class SynthesisError(ContainsimError):
    """Gain synthesis failed (regulator equations, pole placement, ...)."""


class AssemblyError(ContainsimError):
    """Closed-loop certificate residuals exceed tolerance."""


class DivergenceError(ContainsimError):
    """Simulation state became non-finite or exceeded the divergence bound."""

    def __init__(self, time, norm):
        self.time = time
        self.norm = norm
        super().__init__(f"state diverged at t={time:.6g} (norm {norm:.3g})")
