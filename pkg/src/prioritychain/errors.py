"""Exception hierarchy shared by every layer of the package."""


class PriorityChainError(Exception):
    """Base class for all package errors."""


class ContractViolation(PriorityChainError, ValueError):
    """A precondition of an operation was breached by the caller."""


class ChainAppendError(PriorityChainError):
    """A block could not be appended to the chain."""


class DuplicateTransaction(PriorityChainError):
    pass


class EmptyPoolError(PriorityChainError):
    """Drain or build was requested on an empty mempool."""


class TrainingError(PriorityChainError):
    pass


class DegenerateSignalError(PriorityChainError):
    """The reviewer's observed signal has probability zero under its own model."""


class NoQuorumError(PriorityChainError):
    """No trustworthy follower is available to decide on a block."""


class ProtocolError(PriorityChainError):
    """An event arrived that is illegal in the current consensus phase."""


class ConfigError(PriorityChainError):
    pass
