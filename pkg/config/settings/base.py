import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent.parent


def generate_secret_key():
    from django.core.management.utils import get_random_secret_key
    return get_random_secret_key()


SECRET_KEY = os.environ.get('SECRET_KEY') or generate_secret_key()

DEBUG = False

INSTALLED_APPS = [
    'caputo.apps.CaputoConfig',
    'oracle.apps.OracleConfig',
    'compactness.apps.CompactnessConfig',
    'spectral.apps.SpectralConfig',
    'solver.apps.SolverAppConfig',
    'cli.apps.CliConfig',
]

# Numerics only; nothing is persisted through the ORM.
DATABASES = {}

USE_TZ = True
TIME_ZONE = 'UTC'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name, '').strip()
    try:
        return int(raw) if raw else default
    except ValueError:
        return default


# Run artifacts (ledger CSV, FLD1 snapshots, verification summaries)
FRACPME_OUTPUT_DIR = Path(os.environ.get('FRACPME_OUTPUT_DIR', '') or BASE_DIR / 'runs')

# Seed of the random verification suites (PCG64)
FRACPME_SEED = _env_int('FRACPME_SEED', 42)

# The weight recurrence is O(N^2); larger tables must be requested explicitly
FRACPME_MAX_WEIGHTS = _env_int('FRACPME_MAX_WEIGHTS', 100_000)

# Graded composite Gauss-Legendre quadrature used by the continuous operators
FRACPME_QUADRATURE_CELLS = _env_int('FRACPME_QUADRATURE_CELLS', 256)
FRACPME_GAUSS_POINTS = _env_int('FRACPME_GAUSS_POINTS', 8)

FRACPME_LOG_LEVEL = os.environ.get('FRACPME_LOG_LEVEL', 'INFO').upper()

FRACPME_APP_LOGGERS = ('caputo', 'oracle', 'compactness', 'spectral', 'solver', 'cli')
