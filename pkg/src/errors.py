"""Exception hierarchy shared by the toolkit modules."""

from typing import Optional


class MlpgError(Exception):
    """Base class for every error raised by the toolkit."""


class DatasetError(MlpgError, ValueError):
    """Invalid dataset contents, indices or empty corpora."""


class ParseError(MlpgError):
    """Malformed ARFF, MULAN XML or CSV input."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(f"{where}{message}")


class PartitionError(MlpgError):
    """Space partitioning called with impossible parameters."""


class TerminalClusterError(PartitionError):
    """A cluster with zero diameter cannot be divided."""


class ClassifierError(MlpgError):
    """Neighbour queries or model fits that the reference set cannot satisfy."""


class EvaluationError(MlpgError):
    """Metric and significance-test preconditions not met."""


class ConfigError(MlpgError):
    """Invalid experiment configuration."""
