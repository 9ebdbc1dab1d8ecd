"""Exception types shared across the package."""


class EmgPipeError(Exception):
    """Base class for all package-specific errors."""


# command/weight-file codecs
class InvalidConfig(EmgPipeError):
    pass


class BadMagic(EmgPipeError):
    pass


class ChecksumMismatch(EmgPipeError):
    pass


class UnsupportedVersion(EmgPipeError):
    pass


class TruncatedFile(EmgPipeError):
    pass


# emulator / recordings
class InvalidClass(EmgPipeError):
    pass


class MalformedRecording(EmgPipeError):
    pass


# bridge
class ConnectFailed(EmgPipeError):
    pass


class HandshakeFailed(EmgPipeError):
    pass


class ChannelMismatch(EmgPipeError):
    pass


class StreamClosed(EmgPipeError):
    pass


# link
class LinkClosed(EmgPipeError):
    pass


class OfferWhileBusy(EmgPipeError):
    pass


class LengthMismatch(EmgPipeError):
    pass


# nn
class ShapeMismatch(EmgPipeError):
    pass


class ModelInvalid(EmgPipeError):
    pass


class EmptyCalibration(EmgPipeError):
    pass


# evaluation / reporting
class EmptyLog(EmgPipeError):
    pass


class EmptyReport(EmgPipeError):
    pass
