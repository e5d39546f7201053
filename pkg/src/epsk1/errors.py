class ResourceCapError(Exception):
    """An enumeration would exceed the configured cap."""


class MathCheckError(Exception):
    """A constructed object failed one of its mandatory consistency checks."""


class SchemaError(Exception):
    """Malformed or invalid input data."""
