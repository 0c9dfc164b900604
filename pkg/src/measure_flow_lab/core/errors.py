"""Exception hierarchy shared by every service."""


class LabError(Exception):
    """Base class for all measure-flow-lab failures."""


class InvalidArgumentError(LabError, ValueError):
    """An argument violates a documented precondition."""


class NumericFailureError(LabError, ArithmeticError):
    """A computation produced a non-finite value or failed to converge."""

    def __init__(
        self,
        message: str,
        *,
        path: int | None = None,
        step: int | None = None,
        term: str | None = None,
        time_index: int | None = None,
    ) -> None:
        self.path = path
        self.step = step
        self.term = term
        self.time_index = time_index
        location = []
        if path is not None:
            location.append(f"path={path}")
        if step is not None:
            location.append(f"step={step}")
        if term is not None:
            location.append(f"term={term}")
        if time_index is not None:
            location.append(f"time_index={time_index}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)


class CapacityExceededError(LabError):
    """An exact solver or atom expansion would exceed its configured cap."""


class IndependenceViolationError(LabError):
    """Two ensembles that must be independent share a seed."""


class HypothesisViolationError(InvalidArgumentError):
    """Exponents or declared bounds fall outside the range an estimate holds for."""


class ConfigError(InvalidArgumentError):
    """An experiment config failed validation.

    ``problems`` lists every offending key with its dotted location.
    """

    def __init__(self, problems: list[str]) -> None:
        self.problems = list(problems)
        super().__init__("invalid config:\n  " + "\n  ".join(self.problems))
