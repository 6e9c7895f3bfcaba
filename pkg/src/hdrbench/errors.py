"""Exception bases shared across the package.

The split mirrors the CLI exit-code contract: validation problems (bad
arguments, malformed files, violated preconditions) exit 1, runtime
failures (child processes, I/O) exit 2.
"""


class ValidationError(Exception):
    """Input or precondition violation; maps to CLI exit code 1."""


class ExecutionError(Exception):
    """Failure while running external commands or doing I/O; exit code 2."""
