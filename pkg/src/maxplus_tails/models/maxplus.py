"""(max,plus) scalars and dense matrices."""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from typing import Iterator, List, Sequence, Tuple, Union


class _Bottom:
    """The zero element of the semiring, standing for minus infinity."""

    _instance = None

    def __new__(cls) -> _Bottom:
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "BOTTOM"

    def __reduce__(self):
        return (_Bottom, ())

    def __eq__(self, other: object) -> bool:
        return other is self

    def __hash__(self) -> int:
        return hash("maxplus-bottom")

    # Below every real number; comparisons with floats fall back here.
    def __lt__(self, other: object) -> bool:
        if other is self:
            return False
        if isinstance(other, numbers.Real):
            return True
        return NotImplemented

    def __le__(self, other: object) -> bool:
        if other is self:
            return True
        if isinstance(other, numbers.Real):
            return True
        return NotImplemented

    def __gt__(self, other: object) -> bool:
        if other is self or isinstance(other, numbers.Real):
            return False
        return NotImplemented

    def __ge__(self, other: object) -> bool:
        if other is self:
            return True
        if isinstance(other, numbers.Real):
            return False
        return NotImplemented


BOTTOM = _Bottom()

MaxPlusValue = Union[float, _Bottom]

NEG_INF_TOKEN = "-inf"


def is_bottom(value: MaxPlusValue) -> bool:
    return value is BOTTOM


def coerce_value(value: object) -> MaxPlusValue:
    """Turn a float, int, ``"-inf"`` or BOTTOM into a semiring value."""
    if value is BOTTOM or value == NEG_INF_TOKEN:
        return BOTTOM
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise TypeError(f"Not a (max,plus) value: {value!r}")
    number = float(value)
    if math.isnan(number) or math.isinf(number):
        if number == -math.inf:
            return BOTTOM
        raise ValueError(f"Not a finite (max,plus) value: {value!r}")
    return number


def oplus_value(a: MaxPlusValue, b: MaxPlusValue) -> MaxPlusValue:
    """a ⊕ b = max(a, b) with BOTTOM neutral."""
    if a is BOTTOM:
        return b
    if b is BOTTOM:
        return a
    return a if a >= b else b


def otimes_value(a: MaxPlusValue, b: MaxPlusValue) -> MaxPlusValue:
    """a ⊗ b = a + b with BOTTOM absorbing."""
    if a is BOTTOM or b is BOTTOM:
        return BOTTOM
    return a + b


def value_to_json(value: MaxPlusValue) -> Union[float, str]:
    return NEG_INF_TOKEN if value is BOTTOM else value


@dataclass(frozen=True)
class MaxPlusMatrix:
    """Dense row-major matrix over R ∪ {BOTTOM}."""

    rows: int
    cols: int
    entries: Tuple[MaxPlusValue, ...]

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"Matrix shape must be positive, got {self.rows}x{self.cols}")
        if len(self.entries) != self.rows * self.cols:
            raise ValueError(
                f"Expected {self.rows * self.cols} entries, got {len(self.entries)}"
            )

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[object]]) -> MaxPlusMatrix:
        """Build a matrix from nested rows of numbers, ``"-inf"`` or BOTTOM."""
        if not rows or not rows[0]:
            raise ValueError("Matrix needs at least one row and one column")
        width = len(rows[0])
        flat: List[MaxPlusValue] = []
        for index, row in enumerate(rows):
            if len(row) != width:
                raise ValueError(f"Row {index} has {len(row)} entries, expected {width}")
            flat.extend(coerce_value(item) for item in row)
        return cls(len(rows), width, tuple(flat))

    @classmethod
    def identity(cls, size: int) -> MaxPlusMatrix:
        """E: zero on the diagonal, BOTTOM elsewhere."""
        return cls(
            size,
            size,
            tuple(
                0.0 if i == j else BOTTOM for i in range(size) for j in range(size)
            ),
        )

    @classmethod
    def bottom(cls, rows: int, cols: int) -> MaxPlusMatrix:
        return cls(rows, cols, (BOTTOM,) * (rows * cols))

    @classmethod
    def column(cls, values: Sequence[object]) -> MaxPlusMatrix:
        return cls.from_rows([[v] for v in values])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def __getitem__(self, index: Tuple[int, int]) -> MaxPlusValue:
        i, j = index
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"Index {index} outside {self.rows}x{self.cols}")
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> Tuple[MaxPlusValue, ...]:
        return self.entries[i * self.cols : (i + 1) * self.cols]

    def iter_rows(self) -> Iterator[Tuple[MaxPlusValue, ...]]:
        for i in range(self.rows):
            yield self.row(i)

    def column_values(self, j: int = 0) -> Tuple[MaxPlusValue, ...]:
        return tuple(self.entries[i * self.cols + j] for i in range(self.rows))

    def leq(self, other: MaxPlusMatrix) -> bool:
        """Entrywise order, BOTTOM below every real."""
        if self.shape != other.shape:
            return False
        return all(a <= b for a, b in zip(self.entries, other.entries))

    def permuted(self, order: Sequence[int]) -> MaxPlusMatrix:
        """Renumber a square matrix so that new coordinate k is old ``order[k]``."""
        if not self.is_square or sorted(order) != list(range(self.rows)):
            raise ValueError("Permutation must cover every coordinate of a square matrix")
        return MaxPlusMatrix.from_rows(
            [[self[order[i], order[j]] for j in range(self.cols)] for i in range(self.rows)]
        )

    def to_json(self) -> List[List[Union[float, str]]]:
        return [[value_to_json(v) for v in row] for row in self.iter_rows()]

    @classmethod
    def from_json(cls, payload: Sequence[Sequence[object]]) -> MaxPlusMatrix:
        return cls.from_rows(payload)
