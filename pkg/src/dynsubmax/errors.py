"""Exception types shared across the package."""


class DynSubmaxError(Exception):
    pass


class UnknownElementError(DynSubmaxError, KeyError):
    """An element id was used that the function instance never registered."""


class DuplicateElementError(DynSubmaxError, ValueError):
    """Insertion of an id that is already live (ids are never reused)."""


class InvariantViolation(DynSubmaxError, RuntimeError):
    """A runtime-checkable structural invariant failed."""


class InstanceTooLargeError(DynSubmaxError, ValueError):
    """Brute-force enumeration refused: the instance exceeds its size guard."""
