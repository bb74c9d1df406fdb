"""Exception types raised across the library.

Every error carries enough context (column name, group value, seed/fold)
to locate the offending input without a debugger.
"""


class FairContextError(Exception):
    """Base class for all library errors."""


class UsageError(FairContextError):
    """Invalid flag combination or malformed CLI input."""


# --- tabular ---------------------------------------------------------------

class MissingColumn(FairContextError):
    def __init__(self, name: str):
        super().__init__(f"column {name!r} not found in CSV header")
        self.name = name


class NonBinaryColumn(FairContextError):
    def __init__(self, name: str, values):
        super().__init__(
            f"column {name!r} must have at most 2 distinct values, got {sorted(values)!r}"
        )
        self.name = name


class EmptyDataset(FairContextError):
    pass


class DegenerateStratum(FairContextError):
    pass


class DegenerateStratumWarning(UserWarning):
    """A (target, sensitive) cell is empty; splits proceed without it."""


class TooFewRows(FairContextError):
    pass


# --- metrics ---------------------------------------------------------------

class EmptyGroup(FairContextError):
    def __init__(self, s_value: int):
        super().__init__(f"no rows with sensitive value {s_value}")
        self.s_value = s_value


class EmptyConditionCell(FairContextError):
    def __init__(self, s_value: int, y_value: int):
        super().__init__(f"no rows with sensitive={s_value}, target={y_value}")
        self.s_value = s_value
        self.y_value = y_value


# --- correlation remover ---------------------------------------------------

class ConstantSensitive(FairContextError):
    pass


class DimensionMismatch(FairContextError):
    pass


# --- conformal / selection -------------------------------------------------

class EmptyCalibration(FairContextError):
    pass


class EmptySelection(FairContextError):
    pass


# --- predictors ------------------------------------------------------------

class EmptyContext(FairContextError):
    pass


class NonFiniteLoss(FairContextError):
    pass


# --- adapter protocol --------------------------------------------------------

class AdapterUnavailable(FairContextError):
    pass


class ProtocolError(FairContextError):
    def __init__(self, line: str, reason: str):
        super().__init__(f"protocol violation: {reason} (line: {line[:200]!r})")
        self.line = line
        self.reason = reason


class AdapterError(FairContextError):
    """Error message passed through from the adapter process."""


class AdapterTimeout(FairContextError):
    pass


# --- harness ---------------------------------------------------------------

class EmptyInput(FairContextError):
    pass


class PipelineError(FairContextError):
    """Wraps a module error with the (seed, fold) cell it occurred in."""

    def __init__(self, seed_index: int, fold_index, cause: Exception):
        where = f"seed {seed_index}" + ("" if fold_index is None else f", fold {fold_index}")
        super().__init__(f"{cause} [{where}]")
        self.seed_index = seed_index
        self.fold_index = fold_index
        self.cause = cause
