"""Exception hierarchy.

Every error raised by the harness derives from VcmError. InputError covers
bad files, bad arguments, and contract violations (CLI exit code 2);
ExternalToolError covers failures of user-supplied codec/prediction
commands (CLI exit code 3).
"""


class VcmError(Exception):
    """Base class for all harness errors."""

    exit_code = 2


class InputError(VcmError):
    """Invalid input file, argument, or contract violation."""

    exit_code = 2


class ExternalToolError(VcmError):
    """An external command failed or misbehaved."""

    exit_code = 3


# --- core model / file formats ---

class BadMagic(InputError):
    pass


class TruncatedFile(InputError):
    pass


class DimOverflow(InputError):
    pass


class IoFailure(InputError):
    pass


class ParseError(InputError):
    """Malformed record; carries the 1-based line number."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class InvariantViolation(InputError):
    """Record violates a type invariant; carries the 0-based record index."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


# --- metrics ---

class EmptyGroundTruth(InputError):
    pass


class DimMismatch(InputError):
    pass


class DomainError(InputError):
    pass


# --- rate-distortion analysis ---

class ZeroPixels(InputError):
    pass


class ZeroFrames(InputError):
    pass


class EmptyCurve(InputError):
    pass


class EmptyAfterCutoff(InputError):
    pass


class NoOverlap(InputError):
    pass


class DegenerateCurve(InputError):
    pass


class UnitMismatch(InputError):
    pass


# --- feature codec ---

class DegenerateRange(InputError):
    pass


class BadParams(InputError):
    pass


class WrongChannelCount(InputError):
    pass


class CorruptStream(InputError):
    pass


# --- pipeline ---

class CommandFailed(ExternalToolError):
    """External command exited nonzero; carries argv and captured stderr."""

    def __init__(self, message, argv=None, stderr=None):
        super().__init__(message)
        self.argv = argv
        self.stderr = stderr


class OutputMissing(ExternalToolError):
    pass


class DimChanged(ExternalToolError):
    pass


class StageError(VcmError):
    """Wraps a per-stage pipeline failure with (item, qp, scale) context."""

    def __init__(self, stage, item_id, qp, scale, cause):
        super().__init__(
            f"{stage} failed for item={item_id!r} qp={qp} scale={scale}: {cause}"
        )
        self.stage = stage
        self.item_id = item_id
        self.qp = qp
        self.scale = scale
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 2)
