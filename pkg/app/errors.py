from typing import Optional


class ScirsError(Exception):
    pass


class ConfigError(ScirsError):
    """Ошибка во входном файле или флаге командной строки."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class InvalidParameters(ConfigError, ValueError):
    pass


class NoEndemicEquilibrium(ScirsError):
    def __init__(self, r0: float):
        super().__init__(f"endemic equilibrium requires R0 > 1, got R0 = {r0:.6g}")
        self.r0 = r0


class DomainError(ScirsError, ValueError):
    pass


class NotSymmetric(ScirsError, ValueError):
    pass


class NonFiniteState(ScirsError, ArithmeticError):
    def __init__(self, time: float, run: Optional[int] = None):
        where = f" in run {run}" if run is not None else ""
        super().__init__(f"non-finite state at t = {time:.6g}{where}")
        self.time = time
        self.run = run


class InternalConsistencyError(ScirsError, RuntimeError):
    pass
