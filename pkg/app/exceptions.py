"""
Laboratory Exceptions
=====================

Exception hierarchy shared by services, controllers and the CLI. Each class
carries the process exit code the CLI reports for it.
"""


class LabError(Exception):
    """Base class for every error raised by the laboratory."""

    exit_code = 1

    def __init__(self, message, details=None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self):
        return {
            'error': type(self).__name__,
            'message': self.message,
            'exit_code': self.exit_code,
            'details': self.details
        }


class UsageError(LabError, ValueError):
    """Invalid arguments or a violated operation precondition."""

    exit_code = 2


class ResourceLimitError(LabError):
    """A configured budget (table size, partitions, brute force, memory) would be exceeded."""

    exit_code = 3


class CheckFailure(LabError):
    """One or more verification checks failed."""

    exit_code = 1
