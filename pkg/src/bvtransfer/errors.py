"""Exception types shared across the package."""


class StructuralError(ValueError):
    """Malformed or mismatched data: wrong basis, wrong window, bad matrix shape."""


class PreconditionError(ValueError):
    """An operation was called on input that violates its contract."""


class DivergenceError(RuntimeError):
    """A geometric operator series failed to stabilize within its iteration bound."""


class InternalError(RuntimeError):
    """A postcondition that should be mathematically guaranteed failed; indicates a bug."""
