"""Exception hierarchy shared by every module.

Each class carries an ``exit_code`` so the command-line front end can map
failures to a category without inspecting messages.
"""


class ArtifactError(Exception):
    exit_code = 1


class DomainError(ArtifactError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""

    exit_code = 3


class ScenarioParseError(ArtifactError):
    """A scenario file could not be parsed or validated."""

    exit_code = 2

    def __init__(self, message, key=None, line=None):
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
        self.key = key
        self.line = line


class SolverError(ArtifactError, RuntimeError):
    """A solver failed to bracket, converge or meet its preconditions."""

    exit_code = 3

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class UndefinedContinuation(ArtifactError, ValueError):
    """The agent's continuation value is requested where no mass is engaged."""

    exit_code = 3


class VerificationFailure(ArtifactError):
    """An oracle report did not meet its pass thresholds."""

    exit_code = 4
