class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


class InfeasibleError(ValidationError):
    """No complete alignment exists (more inputs than output steps)."""
