"""Exception types shared across the package."""


class OtqError(Exception):
    """Base class for errors raised by this package."""


class RleError(OtqError):
    """Malformed or non-canonical run-length encoding."""


class MaskError(OtqError):
    """Invalid mask operation: dimension mismatch, empty operand, bad ratio."""


class SchemaError(OtqError):
    """Document does not parse as the expected JSON shape."""


class ValidationError(OtqError):
    """A structural invariant of a tree is violated."""


class CorpusError(OtqError):
    """Corpus-level problem: duplicate or unpaired image ids."""


class SimilarityError(OtqError):
    """Label-similarity table or lookup problem."""


class PipelineError(OtqError):
    """Proposer or grounder failure inside the decomposition driver."""


class ConfigError(OtqError):
    """Invalid run configuration (CLI flags, parameter ranges)."""
