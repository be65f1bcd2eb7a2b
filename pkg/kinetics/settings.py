"""
Django settings for the kinetics project.

The project is a batch suite: apps hold the numerical modules, the only entry point is
the ``run_experiment`` management command. Numerical knobs live in ``KINETICS`` below.

For more information on this file, see
https://docs.djangoproject.com/en/4.2/topics/settings/

For the full list of settings and their values, see
https://docs.djangoproject.com/en/4.2/ref/settings/
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get("KINETICS_SECRET_KEY", "kinetics-batch-suite-no-http-surface")

DEBUG = False

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    "physics.apps.PhysicsConfig",
    "geometry.apps.GeometryConfig",
    "kernels.apps.KernelsConfig",
    "boltzmann.apps.BoltzmannConfig",
    "wigner.apps.WignerConfig",
    "quantum.apps.QuantumConfig",
    "diagrams.apps.DiagramsConfig",
    "experiments.apps.ExperimentsConfig",
]

MIDDLEWARE = []


# Database
# https://docs.djangoproject.com/en/4.2/ref/settings/#databases

DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": BASE_DIR / "db.sqlite3",
    }
}


# Internationalization
# https://docs.djangoproject.com/en/4.2/topics/i18n/

LANGUAGE_CODE = "ja"

TIME_ZONE = "Asia/Tokyo"

USE_I18N = True

USE_TZ = True


# Default primary key field type
# https://docs.djangoproject.com/en/4.2/ref/settings/#default-auto-field

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# Logging
# https://docs.djangoproject.com/en/4.2/topics/logging/

LOG_LEVEL = os.environ.get("KINETICS_LOG_LEVEL", "INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{asctime} {levelname} {name} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "loggers": {
        app: {"handlers": ["console"], "level": LOG_LEVEL, "propagate": False}
        for app in ("physics", "geometry", "kernels", "boltzmann", "wigner", "quantum", "diagrams", "experiments")
    },
}


# Numerical configuration shared by the apps.
# Every routine takes these as defaults; explicit keyword arguments win.

KINETICS = {
    # assumption constants (Hessian bounds, bath gap)
    "C3": 0.2,
    "C4": 10.0,
    "C6": 0.1,
    # validation grid [-k_max, k_max]^d
    "K_MAX": 6.0,
    "GRID_POINTS": 13,
    "FD_STEP": 1e-2,
    "MAX_DERIVATIVE_ORDER": 4,
    # geometry
    "RHO_TILDE": 0.25,
    "MOLLIFIER_WIDTHS": (0.08, 0.04, 0.02),
    "EXTRAPOLATION_RTOL": 1e-3,
    "SPHERE_RESOLUTION": 48,
    "GRADIENT_FLOOR": 1e-6,
    "MC_SAMPLES": 1_000_000,
    # kernels
    "ETA_LADDER": (0.1, 0.05, 0.025),
    "SHELL_TOLERANCE": 1e-3,
    "ROUTE_RTOL": 1e-2,
    "SPECTRUM_NODES": 256,
    "RESOLVENT_GRID": 0.05,
    "QUADRATURE_LIMIT": 2000,
    # quantum
    "DENSE_DIMENSION": 4000,
    "DIMENSION_CAP": 200_000,
    "KRYLOV_BUDGET": 1e-10,
    # wigner
    "JEPS_CAP": 1e6,
    "PAIRING_RTOL": 1e-9,
    # diagrams
    "EXHAUSTIVE_N": 10,
    "SAMPLING_COUNT": 100_000,
    # runs
    "BLOCK_SIZE": 4096,
    "SEED": 20240229,
}
