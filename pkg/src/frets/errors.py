"""Exception hierarchy. Each class carries the CLI exit status for its class."""


class FretsError(Exception):
    exit_code = 1


class DimensionError(FretsError, ValueError):
    exit_code = 4


class ConfigError(FretsError, ValueError):
    exit_code = 2


class IngestionError(FretsError, ValueError):
    exit_code = 3


class TrainingError(FretsError, RuntimeError):
    exit_code = 6


class CheckpointError(FretsError, ValueError):
    exit_code = 3
