from django.conf import settings


def knob(name, value=None):
    """Return ``value`` if given, else the ``KINETICS`` setting ``name``."""
    if value is not None:
        return value
    return settings.KINETICS[name]
