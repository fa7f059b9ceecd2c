"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid instance, selection or parameter."""


class InstanceFormatError(ValidationError):
    """Malformed or inconsistent instance file."""


class CapacityError(RuntimeError):
    """An enumeration would exceed its configured size cap."""
