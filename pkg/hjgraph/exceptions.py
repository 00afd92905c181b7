from typing import Any


class HJGraphError(Exception):
    """Base error. Carries the process exit code the CLI should use."""

    exit_code: int = 1

    def __init__(self, detail: str, **context: Any) -> None:
        super().__init__(detail)
        self.detail = detail
        self.context = context


class ConfigError(HJGraphError):
    """Run document failed to parse or validate."""

    def __init__(self, detail: str, key_path: str | None = None) -> None:
        super().__init__(detail, key_path=key_path)
        self.key_path = key_path


class DomainError(HJGraphError, ValueError):
    pass


class LatticeMismatchError(HJGraphError, ValueError):
    pass


class SiteBudgetError(HJGraphError):
    pass


class DivergenceError(HJGraphError):
    exit_code = 2

    def __init__(self, detail: str, step: int) -> None:
        super().__init__(detail, step=step)
        self.step = step


class CFLViolationError(DivergenceError):
    pass


class NegativeMassError(DivergenceError):
    pass


class InvariantViolation(HJGraphError):
    exit_code = 3
