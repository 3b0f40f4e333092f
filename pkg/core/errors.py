"""Exception hierarchy shared by the library and the command-line front end."""


class EntanglerError(Exception):
    """Root of every error raised on purpose by this package."""


class DomainError(EntanglerError, ValueError):
    """Mathematically invalid input: |m| > j, zero-norm factor, |λ| > σ, non-PSD ρ, ..."""


class UsageError(EntanglerError, ValueError):
    """The caller used an operation the wrong way (wrong basis, σ mismatch, malformed input)."""
