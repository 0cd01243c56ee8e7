"""
Protocols (interfaces) that define the required methods for distortions and
utilities, and types for static analysis (mypy).
"""
from __future__ import annotations

import abc
import typing
from typing import TYPE_CHECKING, Protocol, TypeVar, Union

import numpy as np
import numpy.typing as npt
from typing_extensions import Literal, TypeAlias

if TYPE_CHECKING:
    from surplus_sharing.prob_core import RandomVar

FloatArray: TypeAlias = npt.NDArray[np.float64]
"""Per-atom values or weights."""
Real: TypeAlias = Union[int, float]
NumberLike: TypeAlias = Union[int, float, str]
"""Any valid input for a number in a portfolio file: decimals or exact
fractions such as `'29/9'`."""
ModelId: TypeAlias = Literal[1, 2, 3, 4]
"""The four surplus-sharing models."""
OutputFormat: TypeAlias = Literal['json', 'csv', 'text']
PremiaPrinciple: TypeAlias = Literal['charged', 'insurer-sup', 'reinsurer-sup']
"""Where the charged premia of a run come from: the portfolio file, or the
`sup E_Q[X_i]` principle under the insurer's or the reinsurer's scenario set."""

DistortionT = TypeVar('DistortionT', bound='Distortion')
"""TypeVar with upper-bound `Distortion`."""


@typing.runtime_checkable
class Distortion(Protocol):
    """A function `f: [0, 1] -> [0, 1]`; convex, non-decreasing, `f(0) = 0`,
    `f(1) = 1` when valid (see `coherent.validate_distortion`)."""

    @abc.abstractmethod
    def __call__(
        self, x: float | FloatArray
    ) -> float | FloatArray:
        """Evaluate pointwise; scalars in, scalars out."""

    @property
    @abc.abstractmethod
    def spec(self) -> str:
        """Grammar string that parses back to an equal distortion, e.g.
        `power:2.0`, `es:0.5`, `pwl:0,0;0.5,0.2;1,1`."""

    @property
    @abc.abstractmethod
    def knots(self) -> tuple[float, ...]:
        """Points of [0, 1] where the function may bend. Ordering checks
        always include them."""


@typing.runtime_checkable
class Utility(Protocol):
    """A coherent utility: `u(x) = min over a scenario set of E_Q[x]`."""

    @abc.abstractmethod
    def __call__(self, x: RandomVar) -> float:
        """Risk-adjusted value of the position `x`, in money units."""
