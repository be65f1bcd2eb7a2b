class KineticsError(Exception):
    """Base class of every domain error raised by the suite."""
