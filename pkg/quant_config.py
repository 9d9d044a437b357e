"""
Configuration and constants for the quantum intersection toolkit
"""

import os
import logging
from typing import ClassVar, Dict, Optional

from pydantic import BaseModel, Field, ValidationError

logger = logging.getLogger(__name__)


class SuiteBounds(BaseModel):
    """Instance bounds for the cross-check suites, overridable from QINT_* variables"""

    max_genus: int = Field(2, ge=0, le=6)
    max_points: int = Field(3, ge=1, le=6)
    max_parts: int = Field(3, ge=1, le=5)
    cap: int = Field(8, ge=1, le=12)
    window: int = Field(6, ge=1, le=16)
    hurwitz_degree: int = Field(5, ge=1, le=7)
    word_length: int = Field(4, ge=1, le=5)
    energy: int = Field(3, ge=1, le=4)
    eval_budget: int = Field(400, ge=2)
    progress: bool = True

    ENV_VARS: ClassVar[Dict[str, str]] = {
        'max_genus': 'QINT_MAX_GENUS',
        'max_points': 'QINT_MAX_POINTS',
        'max_parts': 'QINT_MAX_PARTS',
        'cap': 'QINT_CAP',
        'window': 'QINT_WINDOW',
        'hurwitz_degree': 'QINT_HURWITZ_DEGREE',
        'word_length': 'QINT_WORD_LENGTH',
        'energy': 'QINT_ENERGY',
        'eval_budget': 'QINT_EVAL_BUDGET',
        'progress': 'QINT_PROGRESS',
    }

    @classmethod
    def from_env(cls, environ: Optional[Dict[str, str]] = None) -> "SuiteBounds":
        """Build bounds from the environment; raises ValidationError on malformed values"""
        environ = os.environ if environ is None else environ
        values = {}
        for field, var in cls.ENV_VARS.items():
            raw = environ.get(var)
            if raw is not None and raw != '':
                values[field] = raw
        if values:
            logger.debug(f"Suite bounds from environment: {values}")
        return cls(**values)


class QuantConfig:
    """Configuration class for the toolkit"""

    # Series and window defaults
    DEFAULT_CAP = 6
    WINDOW_MARGIN = 4
    STABILITY_STEP = 2
    HURWITZ_DEGREE = 6

    # Cross-check suites, in the order `crosscheck all` runs them
    SUITES = [
        'closed-forms',
        'gw-bridge',
        'hurwitz',
        'wedge-oracle',
        'moyal',
        'degeneration',
        'string',
        'quantum-table',
    ]
    SUITE_ALIASES = {
        'formula2': 'closed-forms',
        'theorem1-l0': 'gw-bridge',
    }

    # eps and hbar orders on which [Hbar_1, Hbar_2] = 0 is checked
    MOYAL_MAX_EPS = 4
    MOYAL_MAX_HBAR = 4

    TABLE_KINDS = ['qint', 'hurwitz', 'gw']
    OUTPUT_FORMATS = ['text', 'json', 'csv']

    # Exit codes
    EXIT_OK = 0
    EXIT_CHECK_FAILED = 1
    EXIT_USAGE = 2

    # Conventions recorded in table headers
    LABELING_CONVENTION = 'both'
    NORMALIZATION = 'i^(sum d - 3g - n + 3) * Coef_{eps^2l hbar^h}'

    # Data file paths
    DATA_PATHS = {
        'golden': 'data/golden.yaml',
        'densities': 'data/densities',
        'tables': 'data/tables',
    }

    @classmethod
    def bounds(cls) -> SuiteBounds:
        """Suite bounds with environment overrides applied"""
        try:
            return SuiteBounds.from_env()
        except ValidationError as e:
            logger.error(f"Invalid QINT_* override: {e}")
            raise

    @classmethod
    def is_suite(cls, name: str) -> bool:
        return name == 'all' or name in cls.SUITES or name in cls.SUITE_ALIASES

    @classmethod
    def suite_name(cls, name: str) -> str:
        """Registered suite name for a name or alias"""
        return cls.SUITE_ALIASES.get(name, name)

    @classmethod
    def table_header(cls, kind: str) -> list:
        """Comment lines written above a table"""
        header = [f"table: {kind}"]
        if kind == 'hurwitz':
            header.append(f"labeling: {cls.LABELING_CONVENTION}")
        if kind == 'qint':
            header.append(f"normalization: {cls.NORMALIZATION}")
        if kind == 'gw':
            header.append("invariant: connected <A, prod tau_d(omega), a>")
        header.append("values: exact rationals p/q")
        return header
