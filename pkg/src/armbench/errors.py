"""
Error hierarchy for armbench.

Every failure raised by the bench derives from `ArmbenchError`, itself a
`ValueError`, so callers that only care about "bad input" can keep catching
`ValueError` the way the rest of the code base does.
"""


class ArmbenchError(ValueError):
    pass


# kinematics
class UnreachableError(ArmbenchError):
    pass


class DegenerateTargetError(ArmbenchError):
    pass


class TargetOutOfBoundsError(ArmbenchError):
    pass


class UnknownCharacterError(ArmbenchError):
    pass


class OutOfScreenError(ArmbenchError):
    pass


# camera
class BehindCameraError(ArmbenchError):
    pass


class InsufficientViewsError(ArmbenchError):
    pass


class DegenerateConfigurationError(ArmbenchError):
    pass


class DegeneratePointsError(ArmbenchError):
    pass


class QuadOutOfBoundsError(ArmbenchError):
    pass


class DegenerateQuadError(ArmbenchError):
    pass


# vision
class NoScreenFoundError(ArmbenchError):
    pass


# simbench
class ModelError(ArmbenchError):
    """An app model or device profile is internally inconsistent."""


class UnknownScreenError(ArmbenchError):
    pass


class DeviceOutOfFrameError(ArmbenchError):
    pass


# explorer
class NoWidgetsError(ArmbenchError):
    pass


# compat
class EmptyImageError(ArmbenchError):
    pass


class MismatchedScreensError(ArmbenchError):
    pass


class ProfileMismatchError(ArmbenchError):
    pass


# harness
class MissingRunsError(ArmbenchError):
    pass
