class ExportError(Exception):
    pass


class WeightsNotFound(ExportError):
    """Weights path missing or not loadable for the requested model."""


class RepresentationMismatch(ExportError):
    """Requested input representation contradicts the model's default
    mapping and no override was given."""


class ManifestError(ExportError):
    """Dataset manifest missing, malformed, or inconsistent."""
