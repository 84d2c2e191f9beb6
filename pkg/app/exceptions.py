from typing import Optional, Sequence


class SubgradError(Exception):
    """Base class for every error raised by the engine, the oracles and the CLI."""


class ProgramError(SubgradError):
    """A program is malformed or was called with the wrong number of arguments."""


class DimensionMismatchError(SubgradError):
    """An input point or direction does not match the program's input arity."""


class DSLParseError(SubgradError):
    def __init__(self, message: str, line: int, column: int = 1):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class LibraryDefinitionError(SubgradError):
    def __init__(self, name: str, violations: Sequence[str]):
        self.name = name
        self.violations = list(violations)
        super().__init__(f"invalid library function '{name}': " + "; ".join(self.violations))


class PiecewiseDefinitionError(LibraryDefinitionError):
    """Non-monotone breakpoints or a discontinuity between adjacent pieces."""


class PieceEnumerationError(SubgradError):
    """Symbolic piece extraction exceeded its configured bound."""


class PolynomialBlowupError(PieceEnumerationError):
    def __init__(self, terms: int, limit: int):
        self.terms = terms
        self.limit = limit
        super().__init__(f"polynomial expansion produced {terms} terms (limit {limit})")


class PieceSelectionError(SubgradError):
    """No piece, or more than one, matched the limiting signs: the piece set is corrupted."""


class MalformedTapeError(SubgradError):
    pass


class OracleError(SubgradError):
    pass


class MissingConventionError(SubgradError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"no naive kink convention for library function '{name}'")


class CommandError(SubgradError):
    """Raised by command handlers; carries the process exit code.

    Plays the role of an HTTP error with a status code: the handler decides the
    code, the application entry point turns it into an exit status.
    """

    def __init__(self, exit_code: int, detail: str, witness: Optional[str] = None):
        self.exit_code = exit_code
        self.detail = detail
        self.witness = witness
        super().__init__(detail)
