"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A user-supplied parameter, box, or schedule is malformed."""


class ContractViolationError(ValueError):
    """An operation was called with arguments violating its contract
    (dimension mismatch, non-PD objective, off-grid sample time, ...)."""


class OracleScopeError(ValueError):
    """The brute-force QP oracle was asked for a problem outside its
    enumeration budget."""


class QpInfeasibleError(RuntimeError):
    """A controller QP had an empty feasible set and the configured policy
    is to abort. Carries the time and state at which it happened."""

    def __init__(self, message: str, t: float | None = None, x=None):
        super().__init__(message)
        self.t = t
        self.x = x


class AdmissibleSetExit(RuntimeError):
    """The simulated state left the admissible box. Carries the partial
    trace accumulated up to (and including) the exit sample."""

    def __init__(self, message: str, t: float | None = None, x=None, trace=None):
        super().__init__(message)
        self.t = t
        self.x = x
        self.trace = trace


class InvariantViolation(AssertionError):
    """One or more post-run trace invariants failed. `violations` lists one
    human-readable string per failed check."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("\n".join(self.violations))
