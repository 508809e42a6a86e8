"""Exception hierarchy shared by all msda modules."""


class MsdaError(Exception):
    """Base class for all package errors."""


class ContractError(MsdaError):
    """A caller violated an operation's precondition (shape mismatch, bad mode, ...)."""


class ConfigError(MsdaError):
    """A configuration value is out of its legal range or inconsistent."""


class NumericError(MsdaError):
    """A numeric operation produced or received non-finite values."""


class CheckpointError(MsdaError):
    """A checkpoint file is malformed or incompatible with the requested use."""
