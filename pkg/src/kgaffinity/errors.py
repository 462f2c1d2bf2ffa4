"""Exception hierarchy shared by every subsystem."""


class AffinityError(Exception):
    """Base class for all errors raised by kgaffinity."""


class DimensionError(AffinityError, ValueError):
    """Operand shapes do not conform to an operation's signature."""


class DegenerateInputError(AffinityError, ValueError):
    """A reduction was asked to run over zero valid positions."""


class ContractError(AffinityError, ValueError):
    """A precondition of an operation was violated by the caller."""


class TapeError(AffinityError, RuntimeError):
    """Misuse of a compute tape (replay, missing tape, foreign tensors)."""


class ParseError(AffinityError, ValueError):
    """SMILES text could not be turned into a molecular graph.

    ``offset`` is the 0-based byte position where the problem was detected.
    """

    def __init__(self, message: str, offset: int | None = None, text: str | None = None):
        self.offset = offset
        self.text = text
        where = f" at offset {offset}" if offset is not None else ""
        super().__init__(f"{message}{where}" + (f" in {text!r}" if text else ""))


class InputError(AffinityError, ValueError):
    """Model input outside the supported alphabet or size limits."""


class EntityLookupError(AffinityError, KeyError):
    """An entity, relation, or embedding id could not be resolved."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class FormatError(AffinityError, ValueError):
    """A data file is malformed. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        loc = ""
        if path is not None:
            loc += f"{path}"
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)


class TypeRuleError(FormatError):
    """A knowledge-graph triple violates the head/tail entity type rules."""


class ProtocolError(AffinityError, RuntimeError):
    """A split protocol could not satisfy its guarantees on this dataset."""


class DivergenceError(AffinityError, FloatingPointError):
    """Training produced a non-finite loss."""
