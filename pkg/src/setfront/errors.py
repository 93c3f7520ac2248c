"""Exception types raised across the package.

Every failure mode has its own class so callers (and the command-line
driver) can map it to a distinct outcome.
"""


class SetFrontError(Exception):
    """Base class for all package errors."""


class DegenerateDirection(SetFrontError):
    pass


class EmptySet(SetFrontError):
    pass


class ZeroEdge(SetFrontError):
    pass


class NonFinite(SetFrontError):
    pass


class SingularJacobian(SetFrontError):
    pass


class NoConvergence(SetFrontError):
    pass


class ValidationFailed(SetFrontError):
    def __init__(self, check, report=None):
        super().__init__(f"scenario validation failed: {check}")
        self.check = check
        self.report = report


class WindowEscape(SetFrontError):
    pass


class NoStabilization(SetFrontError):
    pass


class CertificateFailed(SetFrontError):
    def __init__(self, certificate, covering=None):
        super().__init__(
            f"minimality certificate failed: max defect {certificate.max_defect:.4g}"
        )
        self.certificate = certificate
        self.covering = covering


class NotInvariant(SetFrontError):
    pass


class SelfIntersecting(SetFrontError):
    pass


class TooFewVertices(SetFrontError):
    pass


class NonLegendrian(SetFrontError):
    pass


class SingularFront(SetFrontError):
    def __init__(self, message, report=None, loop=None):
        super().__init__(message)
        self.report = report
        self.loop = loop


class ContactDrift(SetFrontError):
    pass


class NonConvergent(SetFrontError):
    def __init__(self, message, loop=None):
        super().__init__(message)
        self.loop = loop


class RasterTooCoarse(SetFrontError):
    pass


class NotInvariantLoop(SetFrontError):
    pass


class BaseNotAttracting(SetFrontError):
    pass


class ConfigError(SetFrontError):
    pass
