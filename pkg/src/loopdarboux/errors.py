"""Exception types shared across the package."""


class DomainError(ValueError):
    """A probe point, loop sample or trajectory left the certified ball."""


class DegenerateFormError(ValueError):
    """A 2-form matrix was singular where a linear solve required it not to be."""


class PartitionError(ValueError):
    """A partition of unity failed its sum-to-one certification."""
