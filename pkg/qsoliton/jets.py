"""
Truncated Taylor Jets
=====================

A jet of order K at a point p stores the Taylor coefficients c_alpha = d^alpha u(p) / alpha!
for every multi-index |alpha| <= K. Tensor-valued jets keep their tensor indices as leading
array axes and the Taylor coefficients on the last axis, so contractions are plain
``numpy.einsum`` calls with one extra label.

Products truncate to the smaller order and differentiation lowers the order by one, so a
quantity built from k derivatives of the metric automatically lives in the jet space of
order K - k.

Usage:
    space = jet_space(dim=2, order=3)
    x = Jet.variable(space, point=[0.5, 1.0], axis=0)
    u = exp(x * x)
    u.derivative((2, 0))       # d^2 u / dx^2 at the point
"""

from __future__ import annotations

import functools
import itertools
import math
from collections.abc import Sequence

import numpy as np

from qsoliton.errors import JetOrderError

PAIR_LABEL = "Z"


class JetSpace:
    """Multi-index bookkeeping for jets in ``dim`` variables up to ``order``."""

    def __init__(self, dim: int, order: int) -> None:
        if dim < 1 or order < 0:
            raise ValueError(f"Invalid jet space dim={dim}, order={order}")
        self.dim = dim
        self.order = order

        indices: list[tuple[int, ...]] = []
        for degree in range(order + 1):
            for combo in itertools.combinations_with_replacement(range(dim), degree):
                alpha = [0] * dim
                for axis in combo:
                    alpha[axis] += 1
                indices.append(tuple(alpha))
        self.indices = indices
        self.size = len(indices)
        self.position = {alpha: k for k, alpha in enumerate(indices)}
        self.degrees = np.array([sum(alpha) for alpha in indices])
        self.factorials = np.array(
            [math.prod(math.factorial(a) for a in alpha) for alpha in indices], dtype=float
        )

        # pairs (a, b) with |a| + |b| <= order, sorted by the position of a + b
        left, right, target = [], [], []
        for i, a in enumerate(indices):
            for j, b in enumerate(indices):
                if self.degrees[i] + self.degrees[j] <= order:
                    left.append(i)
                    right.append(j)
                    target.append(self.position[tuple(x + y for x, y in zip(a, b))])
        ranking = np.argsort(np.array(target), kind="stable")
        self.left = np.array(left)[ranking]
        self.right = np.array(right)[ranking]
        self.starts = np.searchsorted(np.array(target)[ranking], np.arange(self.size))

        self._derivative_tables = []
        for axis in range(dim):
            source, dest, factor = [], [], []
            for k, alpha in enumerate(indices):
                if alpha[axis] > 0:
                    lowered = list(alpha)
                    lowered[axis] -= 1
                    source.append(k)
                    dest.append(self.position[tuple(lowered)])
                    factor.append(float(alpha[axis]))
            self._derivative_tables.append(
                (np.array(source, dtype=int), np.array(dest, dtype=int), np.array(factor))
            )

    def derivative_table(self, axis: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self._derivative_tables[axis]

    def __repr__(self) -> str:
        return f"JetSpace(dim={self.dim}, order={self.order}, size={self.size})"


@functools.lru_cache(maxsize=None)
def jet_space(dim: int, order: int) -> JetSpace:
    return JetSpace(dim, order)


class Jet:
    """Tensor-valued truncated Taylor series at a point."""

    __slots__ = ("coeffs", "space")

    def __init__(self, coeffs: np.ndarray, space: JetSpace) -> None:
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[-1] != space.size:
            raise ValueError(
                f"Coefficient axis has length {coeffs.shape[-1]}, expected {space.size}"
            )
        self.coeffs = coeffs
        self.space = space

    # ------------------------------------------------------------------
    # Construction
    # ------------------------------------------------------------------

    @classmethod
    def constant(cls, value: float | np.ndarray, space: JetSpace) -> Jet:
        value = np.asarray(value, dtype=float)
        coeffs = np.zeros(value.shape + (space.size,))
        coeffs[..., 0] = value
        return cls(coeffs, space)

    @classmethod
    def variable(cls, space: JetSpace, point: Sequence[float], axis: int) -> Jet:
        coeffs = np.zeros(space.size)
        coeffs[0] = float(point[axis])
        if space.order >= 1:
            unit = [0] * space.dim
            unit[axis] = 1
            coeffs[space.position[tuple(unit)]] = 1.0
        return cls(coeffs, space)

    @classmethod
    def from_partials(cls, partials: np.ndarray, space: JetSpace) -> Jet:
        """Build a jet from partial derivatives ordered like ``space.indices``."""
        return cls(np.asarray(partials, dtype=float) / space.factorials, space)

    @classmethod
    def stack(cls, jets: Sequence[Jet | float], shape: tuple[int, ...]) -> Jet:
        """Assemble scalar jets (or plain numbers) into a tensor jet of ``shape``."""
        orders = [j.order for j in jets if isinstance(j, Jet)]
        spaces = [j.space for j in jets if isinstance(j, Jet)]
        if not spaces:
            raise ValueError("stack needs at least one Jet to fix the jet space")
        space = jet_space(spaces[0].dim, min(orders))
        coeffs = np.zeros((len(jets), space.size))
        for k, item in enumerate(jets):
            if isinstance(item, Jet):
                coeffs[k] = item.truncate(space.order).coeffs
            else:
                coeffs[k, 0] = float(item)
        return cls(coeffs.reshape(shape + (space.size,)), space)

    # ------------------------------------------------------------------
    # Inspection
    # ------------------------------------------------------------------

    @property
    def order(self) -> int:
        return self.space.order

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def ndim(self) -> int:
        return self.coeffs.ndim - 1

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[..., 0]

    def derivative(self, alpha: Sequence[int]) -> np.ndarray:
        """Partial derivative d^alpha at the base point."""
        alpha = tuple(int(a) for a in alpha)
        if sum(alpha) > self.order:
            raise JetOrderError(f"Derivative {alpha} exceeds jet order {self.order}")
        k = self.space.position[alpha]
        return self.coeffs[..., k] * self.space.factorials[k]

    def first_partials(self) -> np.ndarray:
        """Array of shape (dim,) + shape holding d_i at the base point."""
        if self.order < 1:
            raise JetOrderError("First partials need a jet of order >= 1")
        return np.stack([self.coeffs[..., 1 + i] for i in range(self.dim)])

    def truncate(self, order: int) -> Jet:
        if order == self.order:
            return self
        if order > self.order:
            raise JetOrderError(f"Cannot raise jet order from {self.order} to {order}")
        if order < 0:
            raise JetOrderError("Jet order went negative; supply more metric derivatives")
        space = jet_space(self.dim, order)
        return Jet(self.coeffs[..., : space.size], space)

    # ------------------------------------------------------------------
    # Calculus
    # ------------------------------------------------------------------

    def partial(self, axis: int) -> Jet:
        if self.order == 0:
            raise JetOrderError("Cannot differentiate an order-0 jet")
        space = jet_space(self.dim, self.order - 1)
        source, dest, factor = self.space.derivative_table(axis)
        keep = dest < space.size
        coeffs = np.zeros(self.shape + (space.size,))
        coeffs[..., dest[keep]] = self.coeffs[..., source[keep]] * factor[keep]
        return Jet(coeffs, space)

    def grad(self) -> Jet:
        """Coordinate gradient; the derivative index becomes the first axis."""
        parts = [self.partial(axis) for axis in range(self.dim)]
        return Jet(np.stack([p.coeffs for p in parts]), parts[0].space)

    # ------------------------------------------------------------------
    # Algebra
    # ------------------------------------------------------------------

    def _coerce(self, other: Jet | float | np.ndarray) -> tuple[Jet, Jet]:
        if isinstance(other, Jet):
            order = min(self.order, other.order)
            return self.truncate(order), other.truncate(order)
        return self, Jet.constant(other, self.space)

    def __add__(self, other: Jet | float | np.ndarray) -> Jet:
        a, b = self._coerce(other)
        return Jet(a.coeffs + b.coeffs, a.space)

    __radd__ = __add__

    def __sub__(self, other: Jet | float | np.ndarray) -> Jet:
        a, b = self._coerce(other)
        return Jet(a.coeffs - b.coeffs, a.space)

    def __rsub__(self, other: float | np.ndarray) -> Jet:
        return Jet.constant(other, self.space) - self

    def __neg__(self) -> Jet:
        return Jet(-self.coeffs, self.space)

    def __mul__(self, other: Jet | float | np.ndarray) -> Jet:
        if isinstance(other, Jet):
            a, b = self._coerce(other)
            space = a.space
            pairs = a.coeffs[..., space.left] * b.coeffs[..., space.right]
            return Jet(np.add.reduceat(pairs, space.starts, axis=-1), space)
        factor = np.asarray(other, dtype=float)
        return Jet(self.coeffs * factor[..., None], self.space)

    __rmul__ = __mul__

    def __truediv__(self, other: Jet | float | np.ndarray) -> Jet:
        if isinstance(other, Jet):
            return self * other.power(-1)
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other: float | np.ndarray) -> Jet:
        return self.power(-1) * other

    def __pow__(self, exponent: float) -> Jet:
        return self.power(exponent)

    def __getitem__(self, key: int | slice | tuple) -> Jet:
        return Jet(self.coeffs[key], self.space)

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, order={self.order})"

    def compose(self, derivatives: Sequence[np.ndarray | float]) -> Jet:
        """Apply a univariate function given its derivatives at the base value."""
        nilpotent = self - self.value
        result = Jet.constant(np.broadcast_to(derivatives[0], self.shape), self.space)
        power: Jet | None = None
        for k in range(1, self.order + 1):
            power = nilpotent if power is None else power * nilpotent
            result = result + power * (np.asarray(derivatives[k]) / math.factorial(k))
        return result

    def power(self, exponent: float) -> Jet:
        if float(exponent).is_integer() and exponent >= 0:
            n = int(exponent)
            result = Jet.constant(np.ones(self.shape), self.space)
            base = self
            while n:
                if n & 1:
                    result = result * base
                n >>= 1
                if n:
                    base = base * base
            return result
        a0 = self.value
        if not float(exponent).is_integer() and np.any(a0 <= 0):
            raise ValueError(f"Non-integer power {exponent} of a non-positive value")
        if np.any(a0 == 0):
            raise ZeroDivisionError("Negative power of a jet with zero value")
        derivs = []
        falling = 1.0
        for k in range(self.order + 1):
            derivs.append(falling * a0 ** (exponent - k))
            falling *= exponent - k
        return self.compose(derivs)

    def inverse_matrix(self) -> Jet:
        """Matrix inverse of a square-matrix jet via the Neumann series."""
        base_inverse = np.linalg.inv(self.value)
        nilpotent = self - self.value
        step = einsum("ij,jk->ik", base_inverse, nilpotent)
        term = Jet.constant(base_inverse, self.space)
        result = term
        for _ in range(self.order):
            term = -einsum("ij,jk->ik", step, term)
            result = result + term
        return result


# ----------------------------------------------------------------------
# Elementary functions
# ----------------------------------------------------------------------


def exp(u: Jet) -> Jet:
    value = np.exp(u.value)
    return u.compose([value] * (u.order + 1))


def log(u: Jet) -> Jet:
    a0 = u.value
    if np.any(a0 <= 0):
        raise ValueError("log of a non-positive jet value")
    derivs: list[np.ndarray] = [np.log(a0)]
    for k in range(1, u.order + 1):
        derivs.append((-1) ** (k - 1) * math.factorial(k - 1) / a0**k)
    return u.compose(derivs)


def sin(u: Jet) -> Jet:
    a0 = u.value
    return u.compose([np.sin(a0 + k * np.pi / 2) for k in range(u.order + 1)])


def cos(u: Jet) -> Jet:
    a0 = u.value
    return u.compose([np.cos(a0 + k * np.pi / 2) for k in range(u.order + 1)])


def sinh(u: Jet) -> Jet:
    a0 = u.value
    return u.compose([np.sinh(a0) if k % 2 == 0 else np.cosh(a0) for k in range(u.order + 1)])


def cosh(u: Jet) -> Jet:
    a0 = u.value
    return u.compose([np.cosh(a0) if k % 2 == 0 else np.sinh(a0) for k in range(u.order + 1)])


def sqrt(u: Jet) -> Jet:
    return u.power(0.5)


# ----------------------------------------------------------------------
# Contractions
# ----------------------------------------------------------------------


def einsum(subscripts: str, *operands: Jet | np.ndarray | float) -> Jet:
    """``numpy.einsum`` over the tensor axes of at most two jets and any constant arrays.

    Two jet operands are multiplied as truncated series; constant arrays enter linearly.
    """
    inputs, output = subscripts.replace(" ", "").split("->")
    terms = inputs.split(",")
    if len(terms) != len(operands):
        raise ValueError(f"{subscripts!r} names {len(terms)} operands, got {len(operands)}")
    jet_slots = [k for k, op in enumerate(operands) if isinstance(op, Jet)]
    if not jet_slots:
        raise ValueError("einsum needs at least one Jet operand")
    if len(jet_slots) > 2:
        raise ValueError("einsum multiplies at most two jets at once")

    first = operands[jet_slots[0]]
    assert isinstance(first, Jet)
    order = min(op.order for op in operands if isinstance(op, Jet))
    space = jet_space(first.dim, order)
    product = len(jet_slots) == 2

    arrays = []
    labelled = []
    for k, (term, op) in enumerate(zip(terms, operands)):
        if isinstance(op, Jet):
            coeffs = op.truncate(order).coeffs
            if product:
                coeffs = coeffs[..., space.left if k == jet_slots[0] else space.right]
            arrays.append(coeffs)
            labelled.append(term + PAIR_LABEL)
        else:
            arrays.append(np.asarray(op, dtype=float))
            labelled.append(term)

    spec = ",".join(labelled) + "->" + output + PAIR_LABEL
    result = np.einsum(spec, *arrays, optimize=len(arrays) > 2)
    if product:
        result = np.add.reduceat(result, space.starts, axis=-1)
    return Jet(result, space)
