"""Exception types shared across the package."""


class DomainError(ValueError):
    """A density or pressure value outside the admissible range."""


class SolverError(RuntimeError):
    """A linear or nonlinear solve failed."""


class NewtonError(SolverError):
    """Newton iteration did not converge.

    ``x`` is the last iterate and ``residual_norm`` its max-norm residual.
    """

    def __init__(self, message, x=None, residual_norm=float("nan")):
        super().__init__(message)
        self.x = x
        self.residual_norm = residual_norm


class InteractionError(RuntimeError):
    """Neighbouring Riemann problems have started to interact."""

    def __init__(self, message, interaction_time):
        super().__init__(message)
        self.interaction_time = interaction_time
