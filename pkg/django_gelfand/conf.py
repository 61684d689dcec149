import logging
import math

from pathlib import Path

from django.conf import settings as django_settings
from django.core.exceptions import ImproperlyConfigured


logger = logging.getLogger(__name__)


def _get_django_setting(name, default):
    # Library use without a configured project falls back to the defaults.
    if not django_settings.configured:
        return default
    return getattr(django_settings, name, default)


class Settings:
    """
    Settings for django_gelfand app
    """

    TOLERANCES = {
        'GELFAND_SOLVE_TOL': 1e-12,
        'GELFAND_LAMBDA_TOL': 1e-7,
        'GELFAND_STAB_TOL': 1e-9,
        'GELFAND_NEWTON_TOL': 1e-11,
        'GELFAND_DIVERGENCE_CAP': 1e8,
        'GELFAND_CONTINUATION_STEP': 0.05,
        'GELFAND_CONTINUATION_MIN_STEP': 1e-6,
        'GELFAND_NORM_CAP': 1e3,
        'GELFAND_DEDUP_TOL': 1e-6,
        'GELFAND_FOLD_TOL': 1e-6,
        'GELFAND_JACOBI_TOL': 1e-13,
    }
    COUNTS = {
        'GELFAND_MAX_ITER': 100000,
        'GELFAND_NEWTON_MAX_ITER': 100,
        'GELFAND_CONTINUATION_MAX_POINTS': 2000,
    }

    def __init__(self):
        self._values = {}
        for name, default in self.TOLERANCES.items():
            self._values[name] = _get_django_setting(name, default)
        for name, default in self.COUNTS.items():
            self._values[name] = _get_django_setting(name, default)
        self._GELFAND_GRAPH_DIR = self._get_graph_dir()
        self.__post_init__()

    def __post_init__(self):
        for name in self.TOLERANCES:
            value = self._values[name]
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
                raise ImproperlyConfigured(f"{name} must be a positive finite number, got {value!r}.")
        for name in self.COUNTS:
            value = self._values[name]
            if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
                raise ImproperlyConfigured(f"{name} must be a positive integer, got {value!r}.")
        if self._GELFAND_GRAPH_DIR is not None and not self._GELFAND_GRAPH_DIR.is_dir():
            raise ImproperlyConfigured(f"GELFAND_GRAPH_DIR directory does not exist: {self._GELFAND_GRAPH_DIR}.\n\tHINT: settings.BASE_DIR is used to resolve relative paths, but fallback to cwd: {Path.cwd()}")

    @property
    def GELFAND_SOLVE_TOL(self) -> float:
        return float(self._values['GELFAND_SOLVE_TOL'])

    @property
    def GELFAND_MAX_ITER(self) -> int:
        return self._values['GELFAND_MAX_ITER']

    @property
    def GELFAND_LAMBDA_TOL(self) -> float:
        return float(self._values['GELFAND_LAMBDA_TOL'])

    @property
    def GELFAND_STAB_TOL(self) -> float:
        return float(self._values['GELFAND_STAB_TOL'])

    @property
    def GELFAND_NEWTON_TOL(self) -> float:
        return float(self._values['GELFAND_NEWTON_TOL'])

    @property
    def GELFAND_NEWTON_MAX_ITER(self) -> int:
        return self._values['GELFAND_NEWTON_MAX_ITER']

    @property
    def GELFAND_DIVERGENCE_CAP(self) -> float:
        return float(self._values['GELFAND_DIVERGENCE_CAP'])

    @property
    def GELFAND_CONTINUATION_STEP(self) -> float:
        return float(self._values['GELFAND_CONTINUATION_STEP'])

    @property
    def GELFAND_CONTINUATION_MIN_STEP(self) -> float:
        return float(self._values['GELFAND_CONTINUATION_MIN_STEP'])

    @property
    def GELFAND_CONTINUATION_MAX_POINTS(self) -> int:
        return self._values['GELFAND_CONTINUATION_MAX_POINTS']

    @property
    def GELFAND_NORM_CAP(self) -> float:
        return float(self._values['GELFAND_NORM_CAP'])

    @property
    def GELFAND_DEDUP_TOL(self) -> float:
        return float(self._values['GELFAND_DEDUP_TOL'])

    @property
    def GELFAND_FOLD_TOL(self) -> float:
        return float(self._values['GELFAND_FOLD_TOL'])

    @property
    def GELFAND_JACOBI_TOL(self) -> float:
        return float(self._values['GELFAND_JACOBI_TOL'])

    @property
    def GELFAND_GRAPH_DIR(self):
        return self._GELFAND_GRAPH_DIR

    def _get_graph_dir(self):
        dir_path = _get_django_setting('GELFAND_GRAPH_DIR', None)
        if dir_path is None:
            return None

        dir_path = Path(dir_path)
        # Check is is universal path
        if not dir_path.is_absolute():
            dir_path = Path(_get_django_setting('BASE_DIR', Path.cwd())) / dir_path
        return dir_path

    def resolve_graph_path(self, path) -> Path:
        """Resolve a graph file path against GELFAND_GRAPH_DIR, BASE_DIR and cwd, in that order."""
        path = Path(path)
        if path.is_absolute():
            return path
        candidates = []
        if self._GELFAND_GRAPH_DIR is not None:
            candidates.append(self._GELFAND_GRAPH_DIR / path)
        base_dir = _get_django_setting('BASE_DIR', None)
        if base_dir is not None:
            candidates.append(Path(base_dir) / path)
        candidates.append(Path.cwd() / path)
        for candidate in candidates:
            if candidate.is_file():
                return candidate
        logger.debug(f"Graph file {path} not found in {candidates}, using it as given")
        return path

# Initialize settings instance
gelfand_settings = Settings()

# Export the settings instance
__all__ = ['gelfand_settings', 'Settings']
