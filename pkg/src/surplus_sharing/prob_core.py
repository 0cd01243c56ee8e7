"""
Finite probability spaces, random variables, measures and comonotone
orderings.

All values are immutable after construction (arrays are flagged read-only).

>>> space = ProbSpace.uniform(['w1', 'w2', 'w3', 'w4'])
>>> s = RandomVar([0, 1, 2, 4])
>>> expectation(space, s, space.measure)
1.75
>>> survival(space, s, 1, space.measure)
0.5
>>> comonotone_order(space, s).permutation
(3, 2, 1, 0)
"""
from __future__ import annotations

import dataclasses
import logging
import math
from typing import Iterable, Iterator, Sequence, Union

import numpy as np
import numpy.typing as npt
from typing_extensions import Self

from surplus_sharing.types import FloatArray, Real
from surplus_sharing.utils import ATOL, PROB_SUM_TOL, InputError

logger = logging.getLogger(__name__)


def _frozen_array(values: npt.ArrayLike) -> FloatArray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclasses.dataclass(frozen=True, eq=False)
class ProbSpace:
    """Finite sample space with strictly positive atom probabilities.

    >>> ProbSpace(('a', 'b'), (0.5, 0.49))
    Traceback (most recent call last):
    ...
    InputError: space.probs: probabilities sum to 0.99, expected 1
    """

    atoms: tuple[str, ...]
    probs: FloatArray

    def __post_init__(self) -> None:
        atoms = tuple(str(atom) for atom in self.atoms)
        probs = _frozen_array(self.probs)
        if not atoms:
            raise InputError('at least one atom is required', 'space.atoms')
        if len(set(atoms)) != len(atoms):
            raise InputError(f'atom ids must be unique: {atoms}', 'space.atoms')
        if probs.shape != (len(atoms),):
            raise InputError(
                f'expected {len(atoms)} probabilities, got {probs.size}', 'space.probs'
            )
        if not np.all(np.isfinite(probs)) or np.any(probs <= 0):
            raise InputError('probabilities must be finite and strictly positive', 'space.probs')
        total = math.fsum(probs)
        if abs(total - 1) > PROB_SUM_TOL:
            raise InputError(f'probabilities sum to {total:.12g}, expected 1', 'space.probs')
        object.__setattr__(self, 'atoms', atoms)
        object.__setattr__(self, 'probs', probs)

    @classmethod
    def uniform(cls, atoms: Sequence[str]) -> Self:
        return cls(tuple(atoms), np.full(len(atoms), 1 / len(atoms)))

    def __len__(self) -> int:
        return len(self.atoms)

    def index(self, atom: str) -> int:
        return self.atoms.index(atom)

    @property
    def measure(self) -> Measure:
        """The physical measure P itself."""
        return Measure(self.probs)

    def point_mass(self, atom: str) -> Measure:
        weights = np.zeros(len(self))
        weights[self.index(atom)] = 1.0
        return Measure(weights)

    def cumulative(self, permutation: Sequence[int]) -> FloatArray:
        """Cumulative P-probability of the first k atoms along `permutation`.
        The last entry is exactly 1."""
        cumulative = np.cumsum(self.probs[list(permutation)])
        cumulative[-1] = 1.0
        return cumulative

    def check(self, *items: RandomVar | Measure) -> None:
        """Raise if any random variable or measure lives on another number of
        atoms."""
        for item in items:
            if len(item) != len(self):
                raise InputError(
                    f'dimension mismatch: {item.__class__.__name__} has {len(item)} '
                    f'entries, space has {len(self)} atoms'
                )


@dataclasses.dataclass(frozen=True, eq=False)
class RandomVar:
    """One real value per atom (money units, already discounted).

    Arithmetic with scalars and other random variables is pointwise:

    >>> s = RandomVar([0, 1, 2, 4])
    >>> s.minimum(3).values.tolist(), s.excess(3).values.tolist()
    ([0.0, 1.0, 2.0, 3.0], [0.0, 0.0, 0.0, 1.0])
    >>> (2 * s - 1).values.tolist()
    [-1.0, 1.0, 3.0, 7.0]
    """

    values: FloatArray

    def __post_init__(self) -> None:
        values = _frozen_array(self.values)
        if values.ndim != 1:
            raise InputError(f'expected a flat vector of values, got shape {values.shape}')
        if not np.all(np.isfinite(values)):
            raise InputError('random variable values must be finite')
        object.__setattr__(self, 'values', values)

    @classmethod
    def constant(cls, c: Real, size: int) -> Self:
        return cls(np.full(size, float(c)))

    @classmethod
    def total(cls, variables: Iterable[RandomVar]) -> Self:
        """Atomwise sum, e.g. aggregate claims `S = sum_i X_i`."""
        variables = tuple(variables)
        if not variables:
            raise InputError('cannot sum an empty collection of random variables')
        _check_same_size(*variables)
        return cls(np.sum([v.values for v in variables], axis=0))

    def __len__(self) -> int:
        return self.values.size

    def __iter__(self) -> Iterator[float]:
        return iter(self.values.tolist())

    def __getitem__(self, index: int) -> float:
        return float(self.values[index])

    def __repr__(self) -> str:
        return f'{self.__class__.__name__}({self.values.tolist()})'

    def _other(self, other: RandomVar | Real) -> FloatArray | float:
        if isinstance(other, RandomVar):
            _check_same_size(self, other)
            return other.values
        return float(other)

    def __add__(self, other: RandomVar | Real) -> RandomVar:
        return RandomVar(self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other: RandomVar | Real) -> RandomVar:
        return RandomVar(self.values - self._other(other))

    def __rsub__(self, other: RandomVar | Real) -> RandomVar:
        return RandomVar(self._other(other) - self.values)

    def __neg__(self) -> RandomVar:
        return RandomVar(-self.values)

    def __mul__(self, other: RandomVar | Real) -> RandomVar:
        return RandomVar(self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other: Real) -> RandomVar:
        return RandomVar(self.values / float(other))

    def minimum(self, a: Real) -> RandomVar:
        """`x ∧ a`"""
        return RandomVar(np.minimum(self.values, a))

    def excess(self, a: Real) -> RandomVar:
        """`(x - a)^+`"""
        return RandomVar(np.maximum(self.values - a, 0.0))

    def shortfall(self, a: Real) -> RandomVar:
        """`(a - x)^+`"""
        return RandomVar(np.maximum(a - self.values, 0.0))

    def indicator(self, mask: npt.ArrayLike) -> RandomVar:
        """`x · 1_A` for the event given as a boolean mask over atoms."""
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != self.values.shape:
            raise InputError(f'event mask has shape {mask.shape}, expected {self.values.shape}')
        return RandomVar(np.where(mask, self.values, 0.0))

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())

    def is_constant(self, atol: float = ATOL) -> bool:
        return self.max() - self.min() <= atol

    def allclose(self, other: RandomVar | Real, atol: float = ATOL) -> bool:
        return bool(np.allclose(self.values, self._other(other), rtol=0, atol=atol))


def _check_same_size(*items: Union[RandomVar, Measure]) -> None:
    sizes = {len(item) for item in items}
    if len(sizes) > 1:
        raise InputError(f'dimension mismatch between random variables: sizes {sorted(sizes)}')


@dataclasses.dataclass(frozen=True, eq=False)
class Measure:
    """Probability weights per atom. Absolute continuity with respect to P
    is automatic because every atom has positive P-probability."""

    weights: FloatArray

    def __post_init__(self) -> None:
        weights = np.array(self.weights, dtype=float)
        if weights.ndim != 1 or not np.all(np.isfinite(weights)):
            raise InputError('measure weights must be a flat vector of finite numbers')
        if np.any(weights < -PROB_SUM_TOL):
            raise InputError(f'measure weights must be nonnegative: {weights.tolist()}')
        total = math.fsum(weights)
        if abs(total - 1) > PROB_SUM_TOL:
            raise InputError(f'measure weights sum to {total:.15g}, expected 1')
        weights = np.maximum(weights, 0.0)
        weights.setflags(write=False)
        object.__setattr__(self, 'weights', weights)

    def __len__(self) -> int:
        return self.weights.size

    def __repr__(self) -> str:
        return f'{self.__class__.__name__}({self.weights.tolist()})'

    def allclose(self, other: Measure | npt.ArrayLike, atol: float = ATOL) -> bool:
        weights = other.weights if isinstance(other, Measure) else np.asarray(other, dtype=float)
        return bool(np.allclose(self.weights, weights, rtol=0, atol=atol))


@dataclasses.dataclass(frozen=True)
class ComonotoneOrder:
    """Atoms sorted by a reference variable, descending, ties grouped.

    `tie_groups` partitions the positions `0..n-1` of `permutation` into
    consecutive `(start, stop)` ranges with equal reference value.
    """

    permutation: tuple[int, ...]
    tie_groups: tuple[tuple[int, int], ...]

    def groups(self) -> tuple[tuple[int, ...], ...]:
        """Atom indices of each tie group, in order."""
        return tuple(self.permutation[start:stop] for start, stop in self.tie_groups)

    @property
    def nontrivial_groups(self) -> tuple[tuple[int, ...], ...]:
        return tuple(group for group in self.groups() if len(group) > 1)


def expectation(space: ProbSpace, x: RandomVar, q: Measure) -> float:
    """`E_Q[x]`, accumulated with `math.fsum`.

    >>> space = ProbSpace.uniform('abc')
    >>> expectation(space, RandomVar([1, 2, 3]), space.point_mass('c'))
    3.0
    """
    space.check(x, q)
    return math.fsum(q.weights * x.values)


def survival(space: ProbSpace, x: RandomVar, t: Real, q: Measure) -> float:
    """`Q[x > t]` (strict inequality)."""
    space.check(x, q)
    return math.fsum(q.weights[x.values > t])


def comonotone_order(space: ProbSpace, ref: RandomVar) -> ComonotoneOrder:
    """Descending sort of `ref`, stable by atom index within ties.

    Values within `ATOL` of the first value of a group join that group, and
    atoms of a group are listed by index even when their values differ
    slightly.

    >>> order = comonotone_order(ProbSpace.uniform('abc'), RandomVar([5, 5, 1]))
    >>> order.permutation, order.tie_groups
    ((0, 1, 2), ((0, 2), (2, 3)))
    >>> comonotone_order(ProbSpace.uniform('ab'), RandomVar([1.0, 1.0 + 1e-12])).permutation
    (0, 1)
    """
    space.check(ref)
    permutation = [int(i) for i in np.argsort(-ref.values, kind='stable')]
    ordered = ref.values[permutation]
    tie_groups: list[tuple[int, int]] = []
    start = 0
    for position in range(1, len(ordered) + 1):
        if position == len(ordered) or ordered[start] - ordered[position] > ATOL:
            tie_groups.append((start, position))
            permutation[start:position] = sorted(permutation[start:position])
            start = position
    return ComonotoneOrder(permutation=tuple(permutation), tie_groups=tuple(tie_groups))


def is_comonotonic(x: RandomVar, y: RandomVar) -> bool:
    """Pairwise criterion: `(x(a) - x(b)) (y(a) - y(b)) >= 0` for all atoms,
    with slack `ATOL` relative to the largest possible product.

    >>> is_comonotonic(RandomVar([1, 2, 3]), RandomVar([0, 0, 7]))
    True
    >>> is_comonotonic(RandomVar([1, 2, 3]), RandomVar([3, 2, 1]))
    False
    >>> is_comonotonic(RandomVar([0, 1e-6]), RandomVar([1e-6, 0]))
    False
    """
    _check_same_size(x, y)
    dx = x.values[:, None] - x.values[None, :]
    dy = y.values[:, None] - y.values[None, :]
    scale = np.abs(dx).max(initial=0.0) * np.abs(dy).max(initial=0.0)
    return bool(np.all(dx * dy >= -ATOL * scale))


if __name__ == '__main__':
    import doctest

    doctest.testmod()
