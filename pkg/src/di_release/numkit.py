"""Dense float64 linear algebra and seeded random number generation.

A `Matrix` is a two-dimensional `numpy.ndarray` of dtype float64. Column :math:`j`
holds batch element :math:`j`, so an activation of a layer with :math:`H` cells for a
batch of :math:`B` sequences has shape :code:`(H, B)`. A sequence of matrices is a
three-dimensional array of shape :code:`(T, dim, B)`.

Every public operation checks that its result is finite and raises a `.DomainError`
otherwise.
"""

from __future__ import annotations

from typing import Callable, Literal

import numpy as np
import numpy.typing as npt
from scipy.special import expit, softmax

from di_release.errors import ContractViolationError, DomainError

Matrix = npt.NDArray[np.float64]
ElementwiseFunction = Literal["sigmoid", "tanh", "exp", "log"]
"""Names of the functions accepted by `map_elementwise`."""

__ELEMENTWISE: dict[ElementwiseFunction, Callable[[np.ndarray], np.ndarray]] = {
    "sigmoid": expit,
    "tanh": np.tanh,
    "exp": np.exp,
    "log": np.log,
}


def as_matrix(values: npt.ArrayLike) -> Matrix:
    """Convert to a float64 `Matrix` and validate its shape and entries.

    >>> as_matrix([[1, 2], [3, 4]]).dtype
    dtype('float64')
    >>> as_matrix([1.0, 2.0])
    Traceback (most recent call last):
      ...
    di_release.errors.ContractViolationError: Expected a 2-D matrix, got shape (2,)
    """
    matrix = np.asarray(values, dtype=np.float64)
    if matrix.ndim != 2:  # noqa: PLR2004
        msg = f"Expected a 2-D matrix, got shape {matrix.shape}"
        raise ContractViolationError(msg)
    if matrix.size == 0:
        msg = f"Matrix must have positive dimensions, got shape {matrix.shape}"
        raise ContractViolationError(msg)
    return ensure_finite(matrix)


def ensure_finite(array: np.ndarray, what: str = "result") -> Matrix:
    if not np.isfinite(array).all():
        msg = f"Non-finite entries in {what}"
        raise DomainError(msg)
    return array


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Standard matrix product.

    >>> matmul(np.eye(2), np.array([[1.0, 2.0], [3.0, 4.0]]))
    array([[1., 2.],
           [3., 4.]])
    """
    if a.shape[1] != b.shape[0]:
        msg = f"Cannot multiply {a.shape} by {b.shape}"
        raise ContractViolationError(msg)
    return ensure_finite(a @ b)


def affine(weights: Matrix, x: Matrix, bias: Matrix) -> Matrix:
    """Compute :code:`weights @ x + bias` with the bias broadcast over the columns."""
    if weights.shape[1] != x.shape[0]:
        msg = f"Cannot apply weights of shape {weights.shape} to {x.shape}"
        raise ContractViolationError(msg)
    if bias.shape != (weights.shape[0], 1):
        msg = f"Bias of shape {bias.shape} does not match {weights.shape[0]} outputs"
        raise ContractViolationError(msg)
    return ensure_finite(weights @ x + bias)


def map_elementwise(matrix: Matrix, function: ElementwiseFunction) -> Matrix:
    """Apply one of the supported scalar functions entrywise.

    >>> map_elementwise(np.zeros((1, 2)), "sigmoid")
    array([[0.5, 0.5]])
    """
    if function == "log" and (matrix <= 0).any():
        msg = "Logarithm of a non-positive entry"
        raise DomainError(msg)
    implementation = __ELEMENTWISE.get(function)
    if implementation is None:
        msg = f"Unknown elementwise function {function!r}"
        raise ContractViolationError(msg)
    with np.errstate(over="ignore"):
        return ensure_finite(implementation(matrix), what=f"{function} of matrix")


def softmax_columns(matrix: Matrix) -> Matrix:
    """Normalize every column to a probability vector.

    >>> softmax_columns(np.array([[1000.0], [0.0]]))
    array([[1.],
           [0.]])
    """
    return ensure_finite(softmax(matrix, axis=0))


class SeededRng:
    """Single-owner pseudo-random stream with an explicit 64-bit seed.

    Parallel callers do not share an instance, but derive their own with `fork` or
    `child_seed`.

    >>> SeededRng(7).draw_uniform(1, 3).tolist() == SeededRng(7).draw_uniform(1, 3).tolist()
    True
    """

    def __init__(self, seed: int) -> None:
        if not 0 <= seed < 2**64:
            msg = f"Seed must be a 64-bit unsigned integer, got {seed}"
            raise ContractViolationError(msg)
        self.__seed = seed
        self.__generator = np.random.Generator(np.random.PCG64(seed))

    @property
    def seed(self) -> int:
        return self.__seed

    @property
    def generator(self) -> np.random.Generator:
        return self.__generator

    def draw_uniform(self, rows: int, cols: int) -> Matrix:
        """I.i.d. entries in :math:`[0, 1)`."""
        return self.__generator.random((rows, cols))

    def fork(self, n: int) -> list[SeededRng]:
        """Create independent child streams, deterministically derived from the seed."""
        return [SeededRng(child_seed(self.__seed, i)) for i in range(n)]


def child_seed(*keys: int) -> int:
    """Derive a 64-bit seed from a tuple of non-negative integers.

    >>> child_seed(1, 2) == child_seed(1, 2)
    True
    >>> child_seed(1, 2) == child_seed(2, 1)
    False
    """
    state = np.random.SeedSequence(list(keys)).generate_state(1, dtype=np.uint64)
    return int(state[0])
