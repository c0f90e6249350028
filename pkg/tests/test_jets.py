"""
Truncated Taylor Jet Tests
==========================

Algebraic identities of the jet arithmetic, checked on random base points.
"""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import settings as hsettings
from hypothesis import strategies as st

from qsoliton import jets
from qsoliton.errors import JetOrderError
from qsoliton.jets import Jet, einsum, jet_space

coordinate = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False)


def _variables(x, y, order=4):
    space = jet_space(2, order)
    return space, Jet.variable(space, [x, y], 0), Jet.variable(space, [x, y], 1)


def _is_constant(jet, value, atol=1e-9):
    expected = np.zeros(jet.space.size)
    expected[0] = value
    np.testing.assert_allclose(jet.coeffs, expected, atol=atol)


# ============================================================================
# Bookkeeping
# ============================================================================


@pytest.mark.parametrize("dim,order,size", [(1, 3, 4), (2, 3, 10), (3, 2, 10), (4, 4, 70)])
def test_jet_space_size(dim, order, size):
    """Number of multi-indices is C(dim + order, order)"""
    assert jet_space(dim, order).size == size == math.comb(dim + order, order)


def test_jet_space_rejects_bad_arguments():
    with pytest.raises(ValueError, match="Invalid jet space"):
        jet_space(0, 2)


def test_second_derivative_of_gaussian_bump():
    """d^2/dx^2 exp(x^2) = (2 + 4x^2) exp(x^2)"""
    _, x, _ = _variables(0.5, 1.0, order=3)
    u = jets.exp(x * x)
    assert u.derivative((2, 0)) == pytest.approx(3.0 * math.exp(0.25), rel=1e-12)
    assert u.derivative((0, 1)) == pytest.approx(0.0, abs=1e-14)


def test_derivative_beyond_order_raises():
    _, x, _ = _variables(0.1, 0.2, order=2)
    with pytest.raises(JetOrderError, match="exceeds jet order"):
        x.derivative((3, 0))


def test_truncate_cannot_raise_order():
    _, x, _ = _variables(0.1, 0.2, order=2)
    assert x.truncate(1).order == 1
    with pytest.raises(JetOrderError, match="Cannot raise"):
        x.truncate(3)


def test_partial_lowers_order():
    _, x, y = _variables(0.3, -0.4, order=3)
    u = x * x * y
    du = u.partial(0)
    assert du.order == 2
    assert du.value == pytest.approx(2 * 0.3 * -0.4)
    assert du.derivative((0, 1)) == pytest.approx(2 * 0.3)


def test_mixed_order_products_truncate():
    space3 = jet_space(2, 3)
    space1 = jet_space(2, 1)
    a = Jet.variable(space3, [1.0, 2.0], 0)
    b = Jet.variable(space1, [1.0, 2.0], 1)
    assert (a * b).order == 1


# ============================================================================
# Identities
# ============================================================================


@given(coordinate, coordinate)
@hsettings(max_examples=25, deadline=None)
def test_pythagorean_identity(x0, y0):
    """sin^2 + cos^2 = 1 holds to every order"""
    _, x, y = _variables(x0, y0)
    u = x * 0.7 + y * y
    _is_constant(jets.sin(u) * jets.sin(u) + jets.cos(u) * jets.cos(u), 1.0)


@given(coordinate, coordinate)
@hsettings(max_examples=25, deadline=None)
def test_hyperbolic_identity(x0, y0):
    _, x, y = _variables(x0, y0)
    u = x * y
    _is_constant(jets.cosh(u) * jets.cosh(u) - jets.sinh(u) * jets.sinh(u), 1.0, atol=1e-7)


@given(coordinate, coordinate)
@hsettings(max_examples=25, deadline=None)
def test_exp_inverts_log(x0, y0):
    _, x, y = _variables(x0, y0)
    u = 1.0 + x * x + y * y
    np.testing.assert_allclose(jets.exp(jets.log(u)).coeffs, u.coeffs, atol=1e-9)


@given(coordinate, coordinate)
@hsettings(max_examples=25, deadline=None)
def test_reciprocal(x0, y0):
    _, x, y = _variables(x0, y0)
    u = 2.0 + jets.sin(x) * y
    _is_constant(u * u.power(-1), 1.0)
    np.testing.assert_allclose((jets.sqrt(u) * jets.sqrt(u)).coeffs, u.coeffs, atol=1e-9)


@given(coordinate, coordinate)
@hsettings(max_examples=25, deadline=None)
def test_matrix_inverse(x0, y0):
    """M times its Neumann-series inverse is the constant identity"""
    _, x, y = _variables(x0, y0, order=3)
    M = Jet.stack([2.0 + x * x, y * 0.25, y * 0.25, jets.exp(x) + 1.0], (2, 2))
    product = einsum("ij,jk->ik", M, M.inverse_matrix())
    expected = np.zeros((2, 2, product.space.size))
    expected[..., 0] = np.eye(2)
    np.testing.assert_allclose(product.coeffs, expected, atol=1e-9)


def test_negative_control_non_identity():
    """sin^2 alone is not constant: the identity checks can fail"""
    _, x, _ = _variables(0.4, 0.0)
    u = jets.sin(x) * jets.sin(x)
    assert abs(u.derivative((1, 0))) > 0.1


# ============================================================================
# Contractions
# ============================================================================


def test_einsum_matches_numpy_on_values():
    space = jet_space(2, 2)
    x = Jet.variable(space, [0.2, 0.3], 0)
    A = Jet.stack([x, 1.0, 2.0, x * x], (2, 2))
    v = np.array([1.0, -1.0])
    result = einsum("ij,j->i", A, v)
    np.testing.assert_allclose(result.value, A.value @ v)


@pytest.mark.parametrize(
    "subscripts,count,message",
    [
        ("i,i->", 3, "names 2 operands"),
        ("i,i,i->", 3, "at most two jets"),
    ],
)
def test_einsum_rejects_bad_calls(subscripts, count, message):
    space = jet_space(1, 1)
    x = Jet.variable(space, [0.5], 0)
    vector = Jet.stack([x, x], (2,))
    with pytest.raises(ValueError, match=message):
        einsum(subscripts, *([vector] * count))


def test_einsum_needs_a_jet():
    with pytest.raises(ValueError, match="at least one Jet"):
        einsum("i,i->", np.ones(2), np.ones(2))


def test_log_of_nonpositive_raises():
    space = jet_space(1, 2)
    x = Jet.variable(space, [-1.0], 0)
    with pytest.raises(ValueError, match="non-positive"):
        jets.log(x)
