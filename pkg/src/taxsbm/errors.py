"""Exception types shared across the package."""


class TaxsbmError(Exception):
    """Base class for package-specific failures."""


class ParseError(TaxsbmError, ValueError):
    """A file could not be parsed. Carries the 1-based data row number."""

    def __init__(self, message: str, row: int | None = None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class ValidationError(TaxsbmError, ValueError):
    """Input data or configuration violates a documented contract."""


class CoverageError(ValidationError):
    """A taxonomy map does not cover all required taxa."""

    def __init__(self, missing):
        self.missing = sorted(missing)
        shown = ", ".join(self.missing[:10])
        more = " ..." if len(self.missing) > 10 else ""
        super().__init__(
            f"taxonomy missing {len(self.missing)} required taxa: {shown}{more}"
        )


class UndefinedCorrelationError(TaxsbmError, ValueError):
    """Rank correlation is undefined because an input vector is constant."""


class GenerationError(TaxsbmError):
    """Synthetic data generation could not satisfy its constraints."""

    def __init__(self, message: str, best_ari: float | None = None):
        super().__init__(message)
        self.best_ari = best_ari
