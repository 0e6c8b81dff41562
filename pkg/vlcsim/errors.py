"""Exception hierarchy shared by every vlcsim module."""
from typing import Optional


class VlcSimError(Exception):
    """root of all errors raised deliberately by vlcsim."""


class ConfigError(VlcSimError, ValueError):
    """invalid configuration; `key_path` names the offending key."""

    def __init__(
        self,
        message: str,
        key_path: str = "",
        line: Optional[int] = None,
        column: Optional[int] = None,
    ):
        self.key_path = key_path
        self.line = line
        self.column = column

        where = f"{key_path}: " if key_path else ""
        if line is not None:
            where += f"(line {line}, column {column}) "
        super().__init__(f"{where}{message}")


class OutOfApertureError(VlcSimError, ValueError):
    pass


class TotalInternalReflection(VlcSimError, ArithmeticError):
    pass


class DegenerateConeError(VlcSimError, ValueError):
    pass


class InfeasibleLensError(VlcSimError, ValueError):
    pass


class NonSquareChannelError(VlcSimError, ValueError):
    pass


class EmptySubsetError(VlcSimError, ValueError):
    """a transmitter reaches no receiver at all."""


class CalibrationError(VlcSimError, RuntimeError):
    pass
