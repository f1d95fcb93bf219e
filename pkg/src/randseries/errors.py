"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid model, grid, or run configuration."""


class PreconditionError(ValueError):
    """An operation's mathematical precondition does not hold for the input."""


class WitnessImpossibleError(ValueError):
    """No positive witness can exist for this coefficient set (max D <= 0)."""


class BudgetExceededError(RuntimeError):
    """A computation would need more terms (or words) than the configured budget.

    Raised instead of silently truncating; ``required`` reports how large the
    computation would have to be.
    """

    def __init__(self, required: int, budget: int, context: str = ""):
        self.required = required
        self.budget = budget
        self.context = context
        where = f" ({context})" if context else ""
        super().__init__(
            f"budget exceeded{where}: required {required} > budget {budget}"
        )
