"""
Infinitesimal numbers ``(r, n)``, read as r times epsilon to the power n.

Addition keeps the operand of lower order (the larger quantity) and adds
real parts when orders agree; an operand with real part zero never wins
over a nonzero one. Multiplication multiplies real parts and adds orders.
A zero real part is never normalized: ``(0, 1)`` stays ``(0, 1)``.
"""
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from core.exceptions import DivisionByZeroInfNum


@dataclass(frozen=True)
class InfNum:
    real: float
    order: int = 0

    def __add__(self, other: 'InfNum') -> 'InfNum':
        return inf_add(self, other)

    def __mul__(self, other: 'InfNum') -> 'InfNum':
        return inf_mul(self, other)

    def __sub__(self, other: 'InfNum') -> 'InfNum':
        return inf_sub(self, other)

    def __truediv__(self, other: 'InfNum') -> 'InfNum':
        return inf_div(self, other)

    def __neg__(self) -> 'InfNum':
        return InfNum(-self.real, self.order)

    def isclose(self, other: 'InfNum', tolerance: float = 1e-9) -> bool:
        return self.order == other.order and abs(self.real - other.real) <= tolerance

    def __str__(self):
        return f'({self.real:g},{self.order})'


ZERO = InfNum(0.0, 0)
ONE = InfNum(1.0, 0)


def inf_add(a: InfNum, b: InfNum) -> InfNum:
    if a.order == b.order:
        return InfNum(a.real + b.real, a.order)
    # a zero operand is absorbed whatever its order
    if a.real == 0 and b.real != 0:
        return b
    if b.real == 0 and a.real != 0:
        return a
    return a if a.order < b.order else b


def inf_mul(a: InfNum, b: InfNum) -> InfNum:
    return InfNum(a.real * b.real, a.order + b.order)


def inf_sub(a: InfNum, b: InfNum) -> InfNum:
    return inf_add(a, -b)


def reciprocal(a: InfNum) -> InfNum:
    if a.real == 0:
        raise DivisionByZeroInfNum(f'Cannot divide by {a}: its real part is zero')
    return InfNum(1.0 / a.real, -a.order)


def inf_div(a: InfNum, b: InfNum) -> InfNum:
    return inf_mul(a, reciprocal(b))


def inf_sum(values: Iterable[InfNum]) -> InfNum:
    """Left fold of ``inf_add`` starting from the first value"""
    result = None
    for value in values:
        result = value if result is None else inf_add(result, value)
    return ZERO if result is None else result


class InfArray:
    """A vector of infinitesimal numbers, one per sample row"""

    __slots__ = ('reals', 'orders')

    def __init__(self, reals, orders):
        self.reals = np.asarray(reals, dtype=float)
        self.orders = np.asarray(orders, dtype=np.int64)

    @classmethod
    def full(cls, value: InfNum, size: int) -> 'InfArray':
        return cls(np.full(size, value.real), np.full(size, value.order, dtype=np.int64))

    @classmethod
    def of(cls, reals, order: int = 0) -> 'InfArray':
        reals = np.asarray(reals, dtype=float)
        return cls(reals, np.full(reals.shape, order, dtype=np.int64))

    def __len__(self):
        return len(self.reals)

    def add(self, other: 'InfArray') -> 'InfArray':
        same = self.orders == other.orders
        mine = self.orders < other.orders
        left_zero, right_zero = self.reals == 0, other.reals == 0
        mine = np.where(left_zero & ~right_zero, False, np.where(right_zero & ~left_zero, True, mine))
        reals = np.where(same, self.reals + other.reals, np.where(mine, self.reals, other.reals))
        orders = np.where(same | mine, self.orders, other.orders)
        return InfArray(reals, orders)

    def mul(self, other: 'InfArray') -> 'InfArray':
        return InfArray(self.reals * other.reals, self.orders + other.orders)

    __add__ = add
    __mul__ = mul

    def item(self, index: int) -> InfNum:
        return InfNum(float(self.reals[index]), int(self.orders[index]))

    def leading_order(self) -> int:
        """Lowest order among rows with nonzero weight; rows of weight zero never dominate"""
        nonzero = self.reals != 0
        if np.any(nonzero):
            return int(self.orders[nonzero].min())
        return int(self.orders.min()) if len(self) else 0

    def fold(self) -> InfNum:
        """Sum of all rows: the real parts at the leading order"""
        if not len(self):
            return ZERO
        order = self.leading_order()
        return InfNum(float(np.sum(self.reals[self.orders == order])), order)

    def at_order(self, order: int) -> np.ndarray:
        """Real parts of the rows at ``order``, zero elsewhere"""
        return np.where(self.orders == order, self.reals, 0.0)


Number = Union[InfNum, InfArray]
