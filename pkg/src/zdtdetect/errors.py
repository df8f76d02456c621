"""Exception hierarchy shared across the package."""


class ZDTError(Exception):
    """Base class for all package errors."""


class MalformedRow(ZDTError):
    pass


class RangeError(ZDTError):
    pass


class SchemaError(ZDTError):
    pass


class EmptyDataset(ZDTError):
    pass


class UnknownNode(ZDTError):
    pass


class EmptyMatrix(ZDTError):
    pass


class DimensionMismatch(ZDTError):
    pass


class SchemaMismatch(DimensionMismatch):
    """Feature matrix / model schemas disagree."""


class InsufficientData(ZDTError):
    pass


class NonFiniteLoss(ZDTError):
    def __init__(self, epoch, loss):
        super().__init__(f"non-finite training loss {loss!r} at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss


class VersionMismatch(ZDTError):
    pass


class ChecksumMismatch(ZDTError):
    pass


class LengthMismatch(ZDTError):
    pass


class SingleClass(ZDTError):
    pass


class UnknownTemplate(ZDTError):
    pass


class LabelContamination(ZDTError):
    pass


class ConvergenceWarning(UserWarning):
    pass


class NoFeasibleThreshold(UserWarning):
    """No candidate threshold reaches the recall floor; a fallback was used."""
