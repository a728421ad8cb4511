"""Exception hierarchy shared by every module.

Two broad families matter for the CLI exit-code contract: ``InputError``
covers malformed data, files, and configs (exit 2); ``NumericDomainError``
covers mathematically undefined requests on well-formed data (exit 3).
Provider errors map to exits 4 and 5.
"""

from __future__ import annotations


class BlendKitError(Exception):
    """Base class for all errors raised by this package."""


class InputError(BlendKitError, ValueError):
    """Malformed input data, file, or configuration."""


class NumericDomainError(BlendKitError, ArithmeticError):
    """Operation is mathematically undefined for the given values."""


class DimensionMismatch(InputError):
    """Operands do not share the required dimension."""


class ChannelMismatch(InputError):
    """Feature maps do not share the same channel count."""


class InvalidShape(InputError):
    """Array shape outside the supported 1-D/2-D, size >= 1 envelope."""


class EmptySet(InputError):
    """An operation that needs at least one element got none."""


class AllZeroWeights(InputError):
    """Every weight is zero, so no normalization or blend exists."""


class ZeroVector(NumericDomainError):
    """A direction-dependent operation received a zero-norm vector."""


class AntipodalVectors(NumericDomainError):
    """Vectors are (numerically) opposite; the geodesic is undefined."""


class NpyFormatError(InputError):
    """A vector file violates the supported NPY v1.0 subset.

    ``offset`` is the byte position at which the problem was detected.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class BadMagic(NpyFormatError):
    pass


class UnsupportedVersion(NpyFormatError):
    pass


class UnsupportedDtype(NpyFormatError):
    pass


class UnsupportedOrder(NpyFormatError):
    pass


class TruncatedPayload(NpyFormatError):
    pass


class IoFailure(BlendKitError):
    """Filesystem write/read failed outside of format validation."""


class ProviderError(BlendKitError):
    """Base for failures of an external text provider."""

    def __init__(self, message: str, modality: str | None = None):
        if modality is not None:
            message = f"[modality={modality}] {message}"
        super().__init__(message)
        self.modality = modality


class ProviderUnavailable(ProviderError):
    """Provider locator is missing, unreadable, or not executable."""


class ProviderFailure(ProviderError):
    """Provider was reachable but returned a malformed or failed result."""
