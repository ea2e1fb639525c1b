"""Exception types shared across the package."""


class DetonaError(Exception):
    """Base class for all package errors."""


class NonPhysical(DetonaError):
    """State left the physical domain (tau <= 0 or internal energy e <= 0)."""


class PoleAt(DetonaError):
    """Hugoniot curve evaluated too close to its pole tau0."""

    def __init__(self, tau0, tau):
        self.tau0 = tau0
        self.tau = tau
        super().__init__(f"Hugoniot pole: tau={tau} within tolerance of tau0={tau0}")


class NoIntersection(DetonaError):
    """Rayleigh line and Hugoniot curve do not intersect on the admissible branch."""


class ConstraintViolated(DetonaError):
    """A Rankine-Hugoniot side constraint failed; `which` names the inequality."""

    def __init__(self, which, detail=""):
        self.which = which
        super().__init__(f"constraint {which} violated{': ' + detail if detail else ''}")


class RegimeViolated(DetonaError):
    """Large-speed regime inequality failed; `which` names it."""

    def __init__(self, which, detail=""):
        self.which = which
        super().__init__(f"regime inequality {which} violated{': ' + detail if detail else ''}")


class NoConvergence(DetonaError):
    """Iterative solve failed; carries solver diagnostics."""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class TruncationTooShort(DetonaError):
    """Endpoint mismatch exceeds tolerance at the truncated boundary."""


class IllConditioned(DetonaError):
    """Subspace basis angles degenerated below tolerance."""


class StiffnessFailure(DetonaError):
    """ODE integrator failed to propagate a subspace frame."""


class NeutralMode(DetonaError):
    """An asymptotic matrix has an eigenvalue on (or numerically on) the imaginary axis."""


class RefinementLimit(DetonaError):
    """Adaptive refinement hit its budget without meeting the resolution target."""


class DegenerateEigenvector(DetonaError):
    """Eigenvector construction for the inviscid convection matrix degenerated."""


class InconsistentSign(DetonaError):
    """Recorded sign conventions disagree (reported, not fatal)."""


class TrackingLost(DetonaError):
    """Root tracking lost the conjugate pair at some sweep value."""

    def __init__(self, eps, detail=""):
        self.eps = eps
        super().__init__(f"tracking lost at eps={eps}{': ' + detail if detail else ''}")


class Degenerate(DetonaError):
    """A Hopf nondegeneracy condition failed; `which` names it."""

    def __init__(self, which, detail=""):
        self.which = which
        super().__init__(f"degenerate crossing: {which}{': ' + detail if detail else ''}")


class CFLViolation(DetonaError):
    """Requested time step exceeds the CFL bound."""


class BlowUp(DetonaError):
    """Simulation norms exceeded the blow-up threshold at time `t`."""

    def __init__(self, t, detail=""):
        self.t = t
        super().__init__(f"blow-up at t={t}{': ' + detail if detail else ''}")


class TooShort(DetonaError):
    """Time series too short for oscillation analysis."""


class SchemaMismatch(DetonaError):
    """Artifact file does not match the documented schema."""


class MissingArtifact(DetonaError):
    """Expected artifact file absent or empty."""


class ConfigError(DetonaError):
    """Run configuration failed schema validation; `key` names the offender."""

    def __init__(self, key, detail=""):
        self.key = key
        super().__init__(f"config key '{key}' invalid{': ' + detail if detail else ''}")
