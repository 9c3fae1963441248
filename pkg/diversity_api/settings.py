from pathlib import Path
import os

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.environ.get("DJANGO_SECRET_KEY", "diversity-local-only-not-a-secret")
DEBUG = os.environ.get("DJANGO_DEBUG", "0") == "1"

ALLOWED_HOSTS = []

INSTALLED_APPS = [
    "diversity",
]

# No persistence: every run writes its report bundle to disk.
DATABASES = {}

LANGUAGE_CODE = "en-us"
TIME_ZONE = "UTC"
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


def _env(name, default, cast=str):
    raw = os.environ.get(f"DIVERSITY_{name}")
    if raw is None or raw == "":
        return default
    return cast(raw)


# --- Analysis defaults (command flags override these) ---
DIVERSITY = {
    "TIMEPOINTS": _env("TIMEPOINTS", 100, int),
    "T1": _env("T1", 75, int),
    "SIG_LEVEL": _env("SIG_LEVEL", 0.05, float),
    "RANK_R": _env("RANK_R", 50, int),
    "RW_STEPS": _env("RW_STEPS", 4, int),
    "DIAMETER_SAMPLES": _env("DIAMETER_SAMPLES", 500, int),
    "DIAMETER_PERCENTILE": _env("DIAMETER_PERCENTILE", 0.9, float),
    "SEED": _env("SEED", 0, int),
    "REL_TOLERANCE": _env("REL_TOLERANCE", 1e-9, float),
    "MAX_ITERATIONS": _env("MAX_ITERATIONS", 10000, int),
    "DENSE_FALLBACK_THRESHOLD": _env("DENSE_FALLBACK_THRESHOLD", 512, int),
    "JOBS": _env("JOBS", 1, int),
    "OUTPUT_DIR": _env("OUTPUT_DIR", str(BASE_DIR / "reports")),
}

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {"format": "%(asctime)s %(levelname)s %(name)s: %(message)s"},
    },
    "handlers": {
        "console": {"class": "logging.StreamHandler", "formatter": "plain"},
    },
    "loggers": {
        "diversity": {
            "handlers": ["console"],
            "level": _env("LOG_LEVEL", "INFO"),
            "propagate": False,
        },
    },
}
