"""Exception hierarchy shared across the package."""


class QvregError(Exception):
    """Base class for all package errors."""


# --- grid / series construction ---


class GridError(QvregError):
    pass


class NonMonotoneTime(GridError):
    pass


class NonFiniteTime(GridError):
    pass


class TooFewPoints(GridError):
    pass


class FirstTimeNonzero(GridError):
    pass


class LengthMismatch(QvregError):
    pass


class NoOverlap(QvregError):
    pass


# --- simulation ---


class DegenerateModel(QvregError):
    pass


class GridBeyondHorizon(QvregError):
    pass


# --- estimation ---


class BandwidthOutOfRange(QvregError):
    pass


class NoValidWindow(QvregError):
    pass


class AlphaOutOfRange(QvregError):
    pass


class LevelOutOfRange(QvregError):
    pass


class DegenerateTau(QvregError):
    pass


class DegenerateTotalSS(QvregError):
    pass


class DegenerateRegressor(QvregError):
    pass


# --- harness ---


class InsufficientCells(QvregError):
    pass


class InsufficientReplications(QvregError):
    pass


class PlanError(QvregError):
    pass


# --- cli ---


class ConfigError(QvregError):
    pass


class FormatError(QvregError):
    pass
