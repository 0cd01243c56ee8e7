"""Utilities for surplus_sharing, should be importable from anywhere in the
project (except `types` module)."""
from __future__ import annotations

import contextlib
import copy
import fractions
import logging
import math
import os
import pathlib
from typing import Any, Generator, Mapping, Optional

import yaml

from surplus_sharing.types import NumberLike

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = pathlib.Path(__file__).with_name('config.yaml')
"""Packaged defaults."""

CONFIG_ENV_VAR = 'SURPLUS_SHARING_CONFIG'
"""Optional path to a YAML file overriding any subset of the defaults."""


def merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> dict[str, Any]:
    """Deep-merge `override` into a copy of `base`.

    >>> merge({'a': {'b': 1, 'c': 2}}, {'a': {'c': 3}})
    {'a': {'b': 1, 'c': 3}}
    """
    merged = copy.deepcopy(dict(base))
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def fetch_config(path: Optional[str | pathlib.Path] = None) -> dict[str, Any]:
    """Packaged defaults, updated from `path` or `$SURPLUS_SHARING_CONFIG`.

    >>> fetch_config()['tolerance']['atol']
    1e-09
    """
    config = yaml.safe_load(DEFAULT_CONFIG_PATH.read_text())
    path = path or os.environ.get(CONFIG_ENV_VAR)
    if path:
        logger.debug('Updating config from %s', path)
        config = merge(config, yaml.safe_load(pathlib.Path(path).read_text()) or {})
    return config


CONFIG: dict[str, Any] = fetch_config()

ATOL: float = float(CONFIG['tolerance']['atol'])
"""Absolute tolerance for equality of money amounts and probabilities, for
verdict gaps and for grouping tied values."""

PROB_SUM_TOL: float = float(CONFIG['tolerance']['prob_sum'])
"""Probabilities and measure weights must sum to 1 within this."""

DOMINANCE_TOL: float = float(CONFIG['tolerance']['dominance'])
"""Slack allowed when checking `f_lo <= f_hi` pointwise."""

DOMINANCE_GRID: int = int(CONFIG['grid']['dominance'])
"""Default number of grid intervals on [0, 1] for distortion checks."""

MAX_ORACLE_ATOMS: int = int(CONFIG['oracle']['max_atoms'])
"""Guard on factorial enumeration of core extreme points."""

MAX_ORACLE_AGENTS: int = int(CONFIG['oracle']['max_agents'])

BISECTION_WIDTH: float = float(CONFIG['oracle']['bisection_width'])

SIGNIFICANT_DIGITS: int = int(CONFIG['report']['significant_digits'])
"""Reports round every number to this many significant digits."""


class SurplusSharingError(Exception):
    """Base class for errors raised by this package."""


class InputError(SurplusSharingError, ValueError):
    """Invalid input. `field` is a dotted path into the portfolio document
    when the error can be pinned to one, e.g. `space.probs`."""

    def __init__(self, message: str, field: Optional[str] = None) -> None:
        self.message = message
        self.field = field
        super().__init__(f'{field}: {message}' if field else message)


class DistortionError(InputError):
    """Invalid distortion function or distortion grammar string."""


class PortfolioError(InputError):
    """Portfolio invariant violated."""


class GuardError(InputError):
    """Problem too large for brute-force enumeration."""


@contextlib.contextmanager
def field_context(field: str) -> Generator[None, None, None]:
    """Re-raise errors from inside the block as `InputError` naming `field`.

    Errors that already name a field keep the innermost one.

    >>> with field_context('space.probs'):
    ...     parse_number('one half')
    Traceback (most recent call last):
    ...
    InputError: space.probs: ...
    """
    try:
        yield
    except InputError as exc:
        if exc.field is not None:
            raise
        raise exc.__class__(exc.message, field) from exc
    except (ValueError, TypeError, KeyError, ZeroDivisionError) as exc:
        logger.debug('Invalid input at %s: %r', field, exc)
        raise InputError(str(exc) or exc.__class__.__name__, field) from exc


def parse_number(value: NumberLike) -> float:
    """Parse a decimal or an exact fraction string into a finite float.

    >>> parse_number('29/9') == 29 / 9
    True
    >>> parse_number(' 1/4 ')
    0.25
    >>> parse_number(3)
    3.0
    """
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise InputError(f'expected a number or fraction string, got {value!r}')
    try:
        number = float(fractions.Fraction(value.strip()) if isinstance(value, str) else value)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f'not a number: {value!r}') from exc
    if not math.isfinite(number):
        raise InputError(f'not finite: {value!r}')
    return number


def format_number(x: float, digits: int = SIGNIFICANT_DIGITS) -> float:
    """Round to `digits` significant digits, for byte-stable reports.

    >>> format_number(29 / 9)
    3.22222222222
    >>> format_number(-0.0)
    0.0
    """
    return float(f'{x:.{digits}g}') + 0.0


def isclose(a: float, b: float, atol: float = ATOL) -> bool:
    """Absolute-tolerance comparison used for all money and probability
    equalities.

    >>> isclose(0.1 + 0.2, 0.3)
    True
    """
    return abs(a - b) <= atol


if __name__ == '__main__':
    import doctest

    doctest.testmod()
