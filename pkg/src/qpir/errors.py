"""Exception hierarchy shared by every qpir module."""


class QPIRError(Exception):
    """Base class for all errors raised by qpir."""


class DimensionError(QPIRError, ValueError):
    """Operands have incompatible widths or dimensions."""


class FormatError(QPIRError, ValueError):
    """A textual database could not be parsed."""


class RangeError(QPIRError, IndexError):
    """An index (qubit, register, database position) is out of range."""


class CapacityError(QPIRError):
    """A simulation would exceed a configured size limit."""


class ProtocolStateError(QPIRError):
    """Protocol steps were invoked out of order."""


class CustodyError(ProtocolStateError):
    """A party touched a register it does not currently hold."""
