"""Matrix arithmetic over the (max,plus) semiring."""

from functools import reduce
from typing import Sequence

from src.maxplus_tails.errors import DimensionError
from src.maxplus_tails.models.maxplus import (
    BOTTOM,
    MaxPlusMatrix,
    MaxPlusValue,
    oplus_value,
    otimes_value,
)


def oplus(a: MaxPlusMatrix, b: MaxPlusMatrix) -> MaxPlusMatrix:
    """
    Entrywise maximum of two matrices of the same shape.

    Raises:
        DimensionError: If the shapes differ
    """
    if a.shape != b.shape:
        raise DimensionError(f"Cannot ⊕ a {a.rows}x{a.cols} and a {b.rows}x{b.cols} matrix")
    return MaxPlusMatrix(
        a.rows, a.cols, tuple(oplus_value(x, y) for x, y in zip(a.entries, b.entries))
    )


def otimes(a: MaxPlusMatrix, b: MaxPlusMatrix) -> MaxPlusMatrix:
    """
    Tropical product: (a ⊗ b)[i, j] = max_k (a[i, k] + b[k, j]).

    Raises:
        DimensionError: If ``a.cols != b.rows``
    """
    if a.cols != b.rows:
        raise DimensionError(
            f"Cannot ⊗ a {a.rows}x{a.cols} by a {b.rows}x{b.cols} matrix"
        )
    entries = []
    for i in range(a.rows):
        row = a.row(i)
        for j in range(b.cols):
            acc: MaxPlusValue = BOTTOM
            for k, left in enumerate(row):
                if left is BOTTOM:
                    continue
                acc = oplus_value(acc, otimes_value(left, b[k, j]))
            entries.append(acc)
    return MaxPlusMatrix(a.rows, b.cols, tuple(entries))


def scale(a: MaxPlusMatrix, c: MaxPlusValue) -> MaxPlusMatrix:
    """A ⊗ c for a scalar c."""
    return MaxPlusMatrix(a.rows, a.cols, tuple(otimes_value(x, c) for x in a.entries))


def product_range(
    matrices: Sequence[MaxPlusMatrix], start: int, stop: int
) -> MaxPlusMatrix:
    """
    Ordered product ``matrices[stop] ⊗ ... ⊗ matrices[start]``.

    Indices follow ``D_{[start, stop]}``: the highest index is leftmost. An empty
    range (``start == stop + 1``) gives the identity.

    Args:
        matrices: Square matrices of one dimension, indexed from 0
        start: Lowest index in the product
        stop: Highest index in the product

    Returns:
        The product, or E for an empty range
    """
    if not matrices:
        raise DimensionError("product_range needs at least one matrix to fix the dimension")
    size = matrices[0].rows
    for index, matrix in enumerate(matrices):
        if not matrix.is_square or matrix.rows != size:
            raise DimensionError(
                f"Matrix {index} is {matrix.rows}x{matrix.cols}, expected {size}x{size}"
            )
    if start > stop + 1:
        raise ValueError(f"Empty or reversed range [{start}, {stop}]")
    if start == stop + 1:
        return MaxPlusMatrix.identity(size)
    if start < 0 or stop >= len(matrices):
        raise IndexError(f"Range [{start}, {stop}] outside 0..{len(matrices) - 1}")
    return reduce(
        lambda acc, matrix: otimes(matrix, acc),
        matrices[start + 1 : stop + 1],
        matrices[start],
    )


def max_entry(a: MaxPlusMatrix) -> MaxPlusValue:
    """⊕ of every entry."""
    return reduce(oplus_value, a.entries, BOTTOM)
