"""Exception types raised across the package.

Everything derives from :class:`CrpSyncError`. Data and usage problems
subclass :class:`DataError` (the CLI maps them to exit code 2); numeric
failures during training subclass :class:`NumericError` (exit code 1).
"""


class CrpSyncError(Exception):
    pass


class DataError(CrpSyncError, ValueError):
    pass


class NumericError(CrpSyncError, ArithmeticError):
    pass


# --- ingestion -------------------------------------------------------------

class MissingColumn(DataError):
    def __init__(self, column, path=None):
        self.column = column
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(f"missing required column {column!r}{where}")


class UnparsableRow(DataError):
    def __init__(self, line, detail="", path=None):
        self.line = line
        self.path = path
        where = f"{path}:" if path else "line "
        super().__init__(f"{where}{line}: cannot parse row {detail}".rstrip())


class NonFiniteValue(DataError):
    def __init__(self, line, column="", path=None):
        self.line = line
        self.column = column
        self.path = path
        where = f"{path}:" if path else "line "
        super().__init__(f"{where}{line}: missing or non-finite value in {column!r}")


class DuplicateDate(DataError):
    def __init__(self, date, path=None):
        self.date = date
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(f"duplicate date {date}{where}")


class EmptyOverlap(DataError):
    pass


class GapInCommonDomain(DataError):
    def __init__(self, gaps):
        self.gaps = list(gaps)
        shown = ", ".join(str(g[0]) for g in self.gaps[:5])
        more = "" if len(self.gaps) <= 5 else f" (+{len(self.gaps) - 5} more)"
        super().__init__(f"common domain is not contiguous; missing {shown}{more}")


# --- numerics / shapes -----------------------------------------------------

class ZeroVariance(DataError):
    def __init__(self, channel, window=None):
        self.channel = channel
        self.window = window
        where = "" if window is None else f" in window {window}"
        super().__init__(f"channel {channel!r} has zero variance{where}")


class SeriesTooShort(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class NotSquare(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class LengthMismatch(DataError):
    pass


class TooFewExamples(DataError):
    pass


class SingleClass(DataError):
    pass


class WindowTooSmall(DataError):
    pass


class NonFiniteLoss(NumericError):
    pass
